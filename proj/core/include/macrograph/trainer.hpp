#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "macrograph/metrics.hpp"
#include "macrograph/model.hpp"

namespace macrograph {

// Declared search grids.  Values outside them are accepted only with the
// explicit off-grid marker.
namespace grids {
inline constexpr std::array<double, 3> lr = {1e-2, 5e-3, 1e-3};
inline constexpr std::array<double, 3> lambda = {1e-4, 5e-5, 1e-5};
// 0.1 .. 1.9, step 0.2.
std::vector<double> tau();
inline constexpr int batch_size = 1024;
}  // namespace grids

struct TrainConfig {
  double lr = 1e-3;
  double lambda = 1e-5;
  double tau = 1.0;  // off-grid vs the declared tau grid — needs the marker
  int batch_size = grids::batch_size;
  int epochs = 10;
  std::uint64_t seed = 0;
  int k_user = 20;
  int k_item = 0;                 // used when item_grouping == "kmeans"
  std::string item_grouping = "category";  // "category" | "kmeans"
  int recent_len = 20;
  double train_fraction = 0.8;
  double val_fraction = 0.1;      // tail of the training window, by time
  int d = 10;
  int d_prime = 10;
  std::vector<int> hidden = {200, 80};
  AblationFlags ablation;
  bool allow_off_grid = false;
  int threads = 1;

  // Throws DataError when lr/lambda/tau/batch_size leave their grids without
  // allow_off_grid, or when a value is nonsensical (<=0 etc).
  void validate() const;
};

// key=value lines, '#' comments; unknown keys are errors.
TrainConfig parse_config(std::istream& in);
TrainConfig parse_config_file(const std::string& path);

// Xavier-uniform: every tensor entry in ±sqrt(6/(rows+cols)), biases zero,
// row-major fill from one seeded stream in declaration order.
ModelParams init_params(const ModelConfig& cfg, std::uint32_t n_users, std::uint32_t n_items,
                        const MacroNodeRegistry& reg, std::uint64_t seed);

// Stable split by (timestamp, log order); both sides keep file order.
// Degenerate (empty) sides are errors.
struct SplitResult {
  std::vector<std::size_t> train_idx, test_idx;  // indices into log.records
  std::int64_t cutoff;  // min test timestamp (all train ts <= all test ts)
};
SplitResult chronological_split(const InteractionLog& log, double train_fraction);

struct EpochStats {
  int epoch = 0;
  double train_loss = 0.0;       // mean total loss over batches
  std::optional<double> val_auc;
  std::optional<double> val_gauc;
  double val_logloss = 0.0;
};

struct FitResult {
  ModelParams params;            // best epoch by validation AUC
  std::vector<EpochStats> curve;
  int best_epoch = 0;
};

// Everything fit() needs besides the config: the training examples with
// their neighborhood context providers.
class TrainData;  // defined below

// Adam (0.9, 0.999, 1e-8) over shuffled batches; per-epoch validation; the
// best validation-AUC epoch wins (ties to the earlier epoch).  NaN loss
// aborts with NumericError naming the batch.  on_epoch, when set, observes
// each epoch's stats (progress reporting).
FitResult fit(const TrainConfig& cfg, const TrainData& data,
              const std::function<void(const EpochStats&)>& on_epoch = {});

// Owns the derived structures for one training/evaluation run: split logs,
// train-window micro graph, groupings, registry, cached subgraphs, recent
// index.  Built once, read from many times.
class TrainData {
 public:
  // `categories` maps item id -> dense category index (required for
  // item_grouping == "category").
  static TrainData build(const InteractionLog& log, const TrainConfig& cfg,
                         const std::vector<std::uint32_t>& item_categories,
                         std::uint32_t n_categories);
  // Same pipeline but with groupings computed elsewhere (e.g. loaded from a
  // model directory) instead of re-running the grouping stage.
  static TrainData build_with_groupings(const InteractionLog& log, const TrainConfig& cfg,
                                        Grouping user_grouping, Grouping item_grouping);

  const InteractionLog& log() const { return *log_; }
  const InteractionLog& train_window_log() const { return train_log_; }
  const MicroGraph& graph() const { return graph_; }
  const MacroNodeRegistry& registry() const { return registry_; }
  const Grouping& user_grouping() const { return user_grouping_; }
  const Grouping& item_grouping() const { return item_grouping_; }
  const SplitResult& split() const { return split_; }

  // Train examples exclude the validation tail; cutoffs are per-example
  // timestamps.  Test/validation contexts use the full training history.
  ExampleContext context_for(std::size_t record_idx, bool in_train) const;
  const std::vector<std::size_t>& train_examples() const { return train_examples_; }
  const std::vector<std::size_t>& val_examples() const { return val_examples_; }
  const std::vector<std::size_t>& test_examples() const { return split_.test_idx; }

  const MacroSubgraph* user_subgraph(std::uint32_t u) const;
  const MacroSubgraph* item_subgraph(std::uint32_t i) const;

 private:
  static TrainData build_base(const InteractionLog& log, const TrainConfig& cfg);
  void finish_build(const InteractionLog& log, const TrainConfig& cfg);

  const InteractionLog* log_ = nullptr;
  TrainConfig cfg_;
  SplitResult split_;
  std::vector<std::size_t> train_examples_, val_examples_;
  InteractionLog train_log_;  // records of the training window, file order
  MicroGraph graph_;          // positives of the training window
  Grouping user_grouping_, item_grouping_;
  MacroNodeRegistry registry_;
  std::vector<MacroSubgraph> user_subgraphs_, item_subgraphs_;
  std::unique_ptr<RecentIndex> recents_;
};

// Scores a set of examples against frozen params (optionally threaded;
// scores land at fixed indices so the result is order-independent).
std::vector<double> score_examples(const std::vector<ExampleContext>& examples,
                                   const ModelParams& params, const MacroNodeRegistry& reg,
                                   int threads);

EvalReport evaluate_model(const ModelParams& params, const TrainData& data,
                          const std::vector<std::size_t>& example_indices, int threads);

// One fit+evaluate per grid value; failures are recorded and the sweep
// continues.  `grid_name` is "tau" or "k_user".
struct SweepRow {
  double value = 0.0;
  std::optional<double> auc, gauc;
  double logloss = 0.0;
  std::string status = "ok";
};
std::vector<SweepRow> run_sweep(const TrainConfig& base, const InteractionLog& log,
                                const std::vector<std::uint32_t>& item_categories,
                                std::uint32_t n_categories, const std::string& grid_name,
                                const std::vector<double>& grid_values);

}  // namespace macrograph
