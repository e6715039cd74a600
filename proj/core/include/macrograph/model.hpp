#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <map>
#include <optional>
#include <vector>

#include "macrograph/macro_graph.hpp"

namespace macrograph {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

// One attention head: row-vector convention, e*Q etc., all d x d'.
struct AttnTriple {
  Mat Q, K, V;
};

// [input -> hidden... -> 2]; weights are (out x in).
struct Mlp {
  std::vector<Mat> W;
  std::vector<Vec> b;
};

struct AblationFlags {
  bool no_weighting = false;   // uniform macro weights instead of log-softmax
  bool no_recent = false;      // zero both recent readouts
  bool no_highorder = false;   // zero both hop-2 readouts
  bool no_itemgraph = false;   // zero item-side readouts (macro + recent)
  bool no_graph = false;       // zero all six readouts: the trivial baseline

  bool any() const { return no_weighting || no_recent || no_highorder || no_itemgraph || no_graph; }
};

struct ModelConfig {
  int d = 10;        // micro/macro embedding size
  int d_prime = 10;  // attention output size
  std::vector<int> hidden = {200, 80};
  double tau = 1.0;  // macro-weight temperature (not trained)
  double lambda = 1e-5;
  AblationFlags ablation;
};

// Every trainable tensor.  The macro table has (user macros + 1 isolated +
// item macros + 1 isolated) rows, laid out per MacroNodeRegistry.
struct ModelParams {
  ModelConfig cfg;
  Mat micro_user_emb;  // n x d
  Mat micro_item_emb;  // m x d
  Mat macro_emb;       // (ñ+m̃+2) x d
  AttnTriple attn_user, attn_item;
  Mlp mlp;

  std::size_t concat_width() const {
    return 4 * std::size_t(cfg.d_prime) + 2 * std::size_t(cfg.d_prime) + 2 * std::size_t(cfg.d);
  }
};

// Log-smoothed temperature softmax over one hop's macro sums:
// Max-subtracted softmax; invariant under constant shifts of the logits.
Vec stable_softmax(const Vec& logits);

// s_q = ln(sum_q + 1), w_q = exp(s_q/tau) / sum_j exp(s_j/tau).
// Empty input -> empty output (cold hop; caller substitutes a zero readout).
std::vector<std::pair<std::uint32_t, double>> macro_weights(
    const std::vector<std::pair<std::uint32_t, std::uint64_t>>& hop_sums, double tau);

// One attention evaluation inside the forward pass, kept for backward.
struct AttnRecord {
  std::vector<std::size_t> rows;  // rows into the source table
  int table = 0;                  // 0 = macro, 1 = micro_user, 2 = micro_item
  int triple = 0;                 // 0 = attn_user, 1 = attn_item
  Vec anchor_a;                   // e_anchor * K   (d')
  Mat neighbor_c;                 // rows: e_p * Q  (P x d')
  Mat neighbor_z;                 // rows: e_p * V  (P x d')
  Vec alpha;                      // softmax of logits (P)
  std::vector<double> w;          // per-neighbor constant weight applied to z
  int anchor_table = 0;           // 1 = micro_user, 2 = micro_item
  std::size_t anchor_row = 0;
};

// Everything backward needs from one (u,i) evaluation.
struct ForwardTrace {
  std::uint32_t u = 0, i = 0;
  std::vector<AttnRecord> aggs;          // up to 6: u-hop1, u-hop2, i-hop1, i-hop2, rs_u, rs_i
  std::vector<int> agg_slot;             // which concat slot each record feeds
  Vec concat;                            // mlp input
  std::vector<Vec> mlp_pre;              // pre-activations per layer (incl. logits)
  std::vector<Vec> mlp_post;             // post-ReLU activations (hidden only)
  Vec prob;                              // 2-way softmax
  double y_hat = 0.0;                    // prob(1)
};

// alpha over neighbors of one aggregation: softmax of (e_p Q)·(anchor K)/sqrt(d).
// Exposed mostly for tests; forward() uses the same code path.
struct AttnOutput {
  Vec alpha;
  Mat z_tilde;  // P x d', rows alpha_p * (e_p V)
};
AttnOutput attention_aggregate(const Vec& anchor, const Mat& neighbors,
                               const AttnTriple& t, int d);

// Sum of w_q * Z_q over identical key sets; key mismatch is an error.
Vec layer_readout(const std::vector<std::pair<std::uint32_t, double>>& w,
                  const std::vector<std::pair<std::uint32_t, Vec>>& z);

// Inputs bundled for forward(): per-example neighborhood context.
struct ExampleContext {
  std::uint32_t u = 0, i = 0;
  const MacroSubgraph* user_sg = nullptr;  // may be null = cold
  const MacroSubgraph* item_sg = nullptr;
  std::vector<std::uint32_t> recent_items;  // RS_u, chronological
  std::vector<std::uint32_t> recent_users;  // RS_i
};

double forward(const ExampleContext& ex, const ModelParams& p,
               const MacroNodeRegistry& reg, ForwardTrace* trace);

double bce_loss(double y_hat, int y);

// Gradients, embedding tables as touched-rows maps (ordered, deterministic).
struct GradSet {
  std::map<std::size_t, Vec> micro_user, micro_item, macro;
  AttnTriple attn_user, attn_item;
  Mlp mlp;
};

GradSet make_zero_grads(const ModelParams& p);

// Reverse-mode through one example; accumulates dL_bce/dθ * scale into g.
void backward(const ForwardTrace& trace, int y, const ModelParams& p,
              const MacroNodeRegistry& reg, double scale, GradSet& g);

// Batch loss per the training objective: mean BCE + lambda * squared L2 norm
// of every parameter touched by the batch (dense tensors always count;
// embedding rows count when some example used them).
struct BatchResult {
  double bce = 0.0;
  double total = 0.0;
  std::vector<double> y_hat;
};
BatchResult batch_loss(const std::vector<ExampleContext>& batch, const std::vector<int>& labels,
                       const ModelParams& p, const MacroNodeRegistry& reg);
// Loss + gradients of the same objective.
BatchResult batch_backward(const std::vector<ExampleContext>& batch, const std::vector<int>& labels,
                           const ModelParams& p, const MacroNodeRegistry& reg, GradSet& g);

// Versioned binary checkpoint (params + config + registry dims).
void save_checkpoint(const ModelParams& p, const std::string& path);
ModelParams load_checkpoint(const std::string& path);

}  // namespace macrograph
