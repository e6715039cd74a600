#include "macrograph/model.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>

namespace macrograph {

Vec stable_softmax(const Vec& v) {
  double m = v.maxCoeff();
  Vec e = (v.array() - m).exp().matrix();
  return e / e.sum();
}

namespace {

constexpr double kClamp = 1e-7;

double clamp_prob(double p) { return std::min(1.0 - kClamp, std::max(kClamp, p)); }

}  // namespace

std::vector<std::pair<std::uint32_t, double>> macro_weights(
    const std::vector<std::pair<std::uint32_t, std::uint64_t>>& hop_sums, double tau) {
  if (tau <= 0.0) throw UsageError("macro_weights: tau must be positive");
  std::vector<std::pair<std::uint32_t, double>> out;
  if (hop_sums.empty()) return out;  // cold hop: caller substitutes a zero readout
  Vec s(hop_sums.size());
  for (std::size_t j = 0; j < hop_sums.size(); ++j) {
    if (hop_sums[j].second == 0) throw UsageError("macro_weights: zero weight entry");
    s[j] = std::log(static_cast<double>(hop_sums[j].second) + 1.0) / tau;
  }
  Vec w = stable_softmax(s);
  out.reserve(hop_sums.size());
  for (std::size_t j = 0; j < hop_sums.size(); ++j) out.emplace_back(hop_sums[j].first, w[j]);
  return out;
}

AttnOutput attention_aggregate(const Vec& anchor, const Mat& neighbors, const AttnTriple& t,
                               int d) {
  if (neighbors.rows() == 0) throw UsageError("attention_aggregate: no neighbors");
  Vec a = t.K.transpose() * anchor;                    // d'
  Mat c = neighbors * t.Q;                             // P x d'
  Vec logits = (c * a) / std::sqrt(static_cast<double>(d));
  AttnOutput out;
  out.alpha = stable_softmax(logits);
  Mat z = neighbors * t.V;                             // P x d'
  out.z_tilde = out.alpha.asDiagonal() * z;
  return out;
}

Vec layer_readout(const std::vector<std::pair<std::uint32_t, double>>& w,
                  const std::vector<std::pair<std::uint32_t, Vec>>& z) {
  if (w.size() != z.size()) throw UsageError("layer_readout: key sets differ in size");
  if (w.empty()) throw UsageError("layer_readout: empty inputs");
  Vec out = Vec::Zero(z.front().second.size());
  for (std::size_t j = 0; j < w.size(); ++j) {
    if (w[j].first != z[j].first) throw UsageError("layer_readout: key mismatch");
    out += w[j].second * z[j].second;
  }
  return out;
}

double bce_loss(double y_hat, int y) {
  if (y != 0 && y != 1) throw UsageError("bce_loss: label must be 0 or 1");
  double p = clamp_prob(y_hat);
  return -(y == 1 ? std::log(p) : std::log(1.0 - p));
}

namespace {

// Concat slots: [u hop1 | u hop2 | i hop1 | i hop2 | rs_u | rs_i | E_u | E_i].
std::size_t slot_offset(int slot, int d, int dp) {
  switch (slot) {
    case 0: return 0;
    case 1: return std::size_t(dp);
    case 2: return 2 * std::size_t(dp);
    case 3: return 3 * std::size_t(dp);
    case 4: return 4 * std::size_t(dp);
    case 5: return 5 * std::size_t(dp);
    case 6: return 6 * std::size_t(dp);
    case 7: return 6 * std::size_t(dp) + d;
    default: throw UsageError("bad concat slot");
  }
}

const Mat& table_of(const ModelParams& p, int table) {
  switch (table) {
    case 0: return p.macro_emb;
    case 1: return p.micro_user_emb;
    case 2: return p.micro_item_emb;
    default: throw UsageError("bad table id");
  }
}

std::map<std::size_t, Vec>& grad_table(GradSet& g, int table) {
  switch (table) {
    case 0: return g.macro;
    case 1: return g.micro_user;
    case 2: return g.micro_item;
    default: throw UsageError("bad table id");
  }
}

// Runs one attention aggregation, records everything backward needs, and
// returns the readout sum_p w_p * alpha_p * (e_p V).
Vec run_aggregation(const ModelParams& p, std::vector<std::size_t> rows, int table, int triple,
                    const Vec& anchor, int anchor_table, std::size_t anchor_row,
                    std::vector<double> w, ForwardTrace* trace, int slot) {
  const AttnTriple& t = triple == 0 ? p.attn_user : p.attn_item;
  const Mat& src = table_of(p, table);
  const std::size_t P = rows.size();
  Mat e(P, p.cfg.d);
  for (std::size_t j = 0; j < P; ++j) e.row(j) = src.row(static_cast<Eigen::Index>(rows[j]));

  Vec a = t.K.transpose() * anchor;
  Mat c = e * t.Q;
  Vec logits = (c * a) / std::sqrt(static_cast<double>(p.cfg.d));
  Vec alpha = stable_softmax(logits);
  Mat z = e * t.V;

  Vec readout = Vec::Zero(p.cfg.d_prime);
  for (std::size_t j = 0; j < P; ++j) readout += w[j] * alpha[j] * z.row(j).transpose();

  if (trace) {
    AttnRecord rec;
    rec.rows = std::move(rows);
    rec.table = table;
    rec.triple = triple;
    rec.anchor_a = std::move(a);
    rec.neighbor_c = std::move(c);
    rec.neighbor_z = std::move(z);
    rec.alpha = std::move(alpha);
    rec.w = std::move(w);
    rec.anchor_table = anchor_table;
    rec.anchor_row = anchor_row;
    trace->aggs.push_back(std::move(rec));
    trace->agg_slot.push_back(slot);
  }
  return readout;
}

struct SlotPlan {
  bool u_hop1, u_hop2, i_hop1, i_hop2, rs_u, rs_i;
};

SlotPlan plan_slots(const AblationFlags& f) {
  SlotPlan s;
  s.u_hop1 = !f.no_graph;
  s.u_hop2 = !f.no_graph && !f.no_highorder;
  s.i_hop1 = !f.no_graph && !f.no_itemgraph;
  s.i_hop2 = !f.no_graph && !f.no_itemgraph && !f.no_highorder;
  s.rs_u = !f.no_graph && !f.no_recent;
  s.rs_i = !f.no_graph && !f.no_recent && !f.no_itemgraph;
  return s;
}

std::vector<double> macro_w_vector(
    const std::vector<std::pair<std::uint32_t, std::uint64_t>>& sums, double tau,
    bool uniform) {
  std::vector<double> w(sums.size());
  if (uniform) {
    std::fill(w.begin(), w.end(), 1.0 / static_cast<double>(sums.size()));
  } else {
    auto pairs = macro_weights(sums, tau);
    for (std::size_t j = 0; j < pairs.size(); ++j) w[j] = pairs[j].second;
  }
  return w;
}

std::vector<std::size_t> macro_rows(const std::vector<std::pair<std::uint32_t, std::uint64_t>>& sums,
                                    const MacroNodeRegistry& reg) {
  std::vector<std::size_t> rows(sums.size());
  for (std::size_t j = 0; j < sums.size(); ++j) rows[j] = reg.embedding_row(sums[j].first);
  return rows;
}

}  // namespace

double forward(const ExampleContext& ex, const ModelParams& p, const MacroNodeRegistry& reg,
               ForwardTrace* trace) {
  const int d = p.cfg.d, dp = p.cfg.d_prime;
  if (static_cast<Eigen::Index>(ex.u) >= p.micro_user_emb.rows())
    throw UsageError("forward: user id out of range");
  if (static_cast<Eigen::Index>(ex.i) >= p.micro_item_emb.rows())
    throw UsageError("forward: item id out of range");
  Vec e_u = p.micro_user_emb.row(ex.u).transpose();
  Vec e_i = p.micro_item_emb.row(ex.i).transpose();

  if (trace) {
    trace->u = ex.u;
    trace->i = ex.i;
    trace->aggs.clear();
    trace->agg_slot.clear();
  }

  SlotPlan plan = plan_slots(p.cfg.ablation);
  const bool uni = p.cfg.ablation.no_weighting;
  Vec concat = Vec::Zero(static_cast<Eigen::Index>(p.concat_width()));
  auto put = [&](int slot, const Vec& v) {
    concat.segment(static_cast<Eigen::Index>(slot_offset(slot, d, dp)), v.size()) = v;
  };

  if (plan.u_hop1 && ex.user_sg && !ex.user_sg->hop1.empty())
    put(0, run_aggregation(p, macro_rows(ex.user_sg->hop1, reg), 0, /*triple=*/1, e_u, 1, ex.u,
                           macro_w_vector(ex.user_sg->hop1, p.cfg.tau, uni), trace, 0));
  if (plan.u_hop2 && ex.user_sg && !ex.user_sg->hop2_sums.empty())
    put(1, run_aggregation(p, macro_rows(ex.user_sg->hop2_sums, reg), 0, /*triple=*/0, e_u, 1,
                           ex.u, macro_w_vector(ex.user_sg->hop2_sums, p.cfg.tau, uni), trace, 1));
  if (plan.i_hop1 && ex.item_sg && !ex.item_sg->hop1.empty())
    put(2, run_aggregation(p, macro_rows(ex.item_sg->hop1, reg), 0, /*triple=*/0, e_i, 2, ex.i,
                           macro_w_vector(ex.item_sg->hop1, p.cfg.tau, uni), trace, 2));
  if (plan.i_hop2 && ex.item_sg && !ex.item_sg->hop2_sums.empty())
    put(3, run_aggregation(p, macro_rows(ex.item_sg->hop2_sums, reg), 0, /*triple=*/1, e_i, 2,
                           ex.i, macro_w_vector(ex.item_sg->hop2_sums, p.cfg.tau, uni), trace, 3));
  if (plan.rs_u && !ex.recent_items.empty()) {
    std::vector<std::size_t> rows(ex.recent_items.begin(), ex.recent_items.end());
    // recent items attend against the target item, with item-type parameters
    put(4, run_aggregation(p, std::move(rows), 2, /*triple=*/1, e_i, 2, ex.i,
                           std::vector<double>(ex.recent_items.size(), 1.0), trace, 4));
  }
  if (plan.rs_i && !ex.recent_users.empty()) {
    std::vector<std::size_t> rows(ex.recent_users.begin(), ex.recent_users.end());
    put(5, run_aggregation(p, std::move(rows), 1, /*triple=*/0, e_u, 1, ex.u,
                           std::vector<double>(ex.recent_users.size(), 1.0), trace, 5));
  }
  put(6, e_u);
  put(7, e_i);

  // MLP with ReLU hidden activations and a 2-way softmax head.
  Vec h = concat;
  std::vector<Vec> pre, post;
  for (std::size_t l = 0; l < p.mlp.W.size(); ++l) {
    Vec z = p.mlp.W[l] * h + p.mlp.b[l];
    pre.push_back(z);
    if (l + 1 < p.mlp.W.size()) {
      h = z.cwiseMax(0.0);
      post.push_back(h);
    } else {
      h = z;
    }
  }
  Vec prob = stable_softmax(h);
  double y_hat = prob[1];

  if (trace) {
    trace->concat = std::move(concat);
    trace->mlp_pre = std::move(pre);
    trace->mlp_post = std::move(post);
    trace->prob = prob;
    trace->y_hat = y_hat;
  }
  return y_hat;
}

GradSet make_zero_grads(const ModelParams& p) {
  GradSet g;
  auto zero_like = [](const Mat& m) { return Mat::Zero(m.rows(), m.cols()).eval(); };
  g.attn_user = {zero_like(p.attn_user.Q), zero_like(p.attn_user.K), zero_like(p.attn_user.V)};
  g.attn_item = {zero_like(p.attn_item.Q), zero_like(p.attn_item.K), zero_like(p.attn_item.V)};
  for (const auto& W : p.mlp.W) g.mlp.W.push_back(zero_like(W));
  for (const auto& b : p.mlp.b) g.mlp.b.push_back(Vec::Zero(b.size()));
  return g;
}

void backward(const ForwardTrace& trace, int y, const ModelParams& p,
              const MacroNodeRegistry& reg, double scale, GradSet& g) {
  (void)reg;
  if (y != 0 && y != 1) throw UsageError("backward: label must be 0 or 1");
  const int d = p.cfg.d, dp = p.cfg.d_prime;
  const double inv_sqrt_d = 1.0 / std::sqrt(static_cast<double>(d));

  // Softmax + cross-entropy head: dL/dlogit = prob - onehot(y).
  Vec dpre = trace.prob * scale;
  dpre[y] -= scale;

  // MLP, last layer to first.
  Vec dinput;
  for (std::size_t l = p.mlp.W.size(); l-- > 0;) {
    const Vec& input = l == 0 ? trace.concat : trace.mlp_post[l - 1];
    g.mlp.W[l].noalias() += dpre * input.transpose();
    g.mlp.b[l] += dpre;
    Vec dprev = p.mlp.W[l].transpose() * dpre;
    if (l == 0) {
      dinput = dprev;
      break;
    }
    // Through the ReLU of the previous hidden layer.
    const Vec& z = trace.mlp_pre[l - 1];
    dpre = dprev;
    for (Eigen::Index j = 0; j < z.size(); ++j)
      if (z[j] <= 0.0) dpre[j] = 0.0;
  }

  auto add_row = [&](int table, std::size_t row, const Vec& v) {
    auto& m = grad_table(g, table);
    auto it = m.find(row);
    if (it == m.end()) m.emplace(row, v);
    else it->second += v;
  };

  // Raw embedding slots.
  add_row(1, trace.u, dinput.segment(slot_offset(6, d, dp), d));
  add_row(2, trace.i, dinput.segment(slot_offset(7, d, dp), d));

  // Attention aggregations.
  for (std::size_t rec_i = 0; rec_i < trace.aggs.size(); ++rec_i) {
    const AttnRecord& rec = trace.aggs[rec_i];
    Vec r = dinput.segment(slot_offset(trace.agg_slot[rec_i], d, dp), dp);
    const AttnTriple& t = rec.triple == 0 ? p.attn_user : p.attn_item;
    AttnTriple& dt = rec.triple == 0 ? g.attn_user : g.attn_item;
    const Mat& src = table_of(p, rec.table);
    const std::size_t P = rec.rows.size();

    // readout = sum_p w_p alpha_p z_p
    Vec dalpha(P), rz(P);
    for (std::size_t j = 0; j < P; ++j) {
      rz[j] = r.dot(rec.neighbor_z.row(j));
      dalpha[j] = rec.w[j] * rz[j];
    }
    double mix = rec.alpha.dot(dalpha);
    Vec dlogit = (rec.alpha.array() * (dalpha.array() - mix)).matrix();

    Vec da = Vec::Zero(dp);
    const Vec anchor = table_of(p, rec.anchor_table)
                           .row(static_cast<Eigen::Index>(rec.anchor_row)).transpose();
    for (std::size_t j = 0; j < P; ++j) {
      Vec e_j = src.row(static_cast<Eigen::Index>(rec.rows[j])).transpose();
      double wa = rec.w[j] * rec.alpha[j];
      Vec dz_j = wa * r;                               // into z_j = V^T e_j
      Vec dc_j = dlogit[j] * rec.anchor_a * inv_sqrt_d;
      dt.V.noalias() += e_j * dz_j.transpose();
      dt.Q.noalias() += e_j * dc_j.transpose();
      da.noalias() += dlogit[j] * rec.neighbor_c.row(j).transpose() * inv_sqrt_d;
      add_row(rec.table, rec.rows[j], t.Q * dc_j + t.V * dz_j);
    }
    dt.K.noalias() += anchor * da.transpose();
    add_row(rec.anchor_table, rec.anchor_row, t.K * da);
  }
}

namespace {

struct TouchedSet {
  std::set<std::size_t> macro, micro_user, micro_item;
  bool attn_user = false, attn_item = false;

  void note(const ForwardTrace& tr) {
    micro_user.insert(tr.u);
    micro_item.insert(tr.i);
    for (std::size_t k = 0; k < tr.aggs.size(); ++k) {
      const auto& rec = tr.aggs[k];
      (rec.triple == 0 ? attn_user : attn_item) = true;
      auto& rows = rec.table == 0 ? macro : (rec.table == 1 ? micro_user : micro_item);
      for (auto rrow : rec.rows) rows.insert(rrow);
      auto& arows = rec.anchor_table == 1 ? micro_user : micro_item;
      arows.insert(rec.anchor_row);
    }
  }
};

double sq(const Mat& m) { return m.squaredNorm(); }

double touched_l2(const ModelParams& p, const TouchedSet& t) {
  double s = 0.0;
  for (auto rw : t.micro_user) s += p.micro_user_emb.row(static_cast<Eigen::Index>(rw)).squaredNorm();
  for (auto rw : t.micro_item) s += p.micro_item_emb.row(static_cast<Eigen::Index>(rw)).squaredNorm();
  for (auto rw : t.macro) s += p.macro_emb.row(static_cast<Eigen::Index>(rw)).squaredNorm();
  if (t.attn_user) s += sq(p.attn_user.Q) + sq(p.attn_user.K) + sq(p.attn_user.V);
  if (t.attn_item) s += sq(p.attn_item.Q) + sq(p.attn_item.K) + sq(p.attn_item.V);
  for (const auto& W : p.mlp.W) s += sq(W);
  for (const auto& b : p.mlp.b) s += b.squaredNorm();
  return s;
}

}  // namespace

BatchResult batch_loss(const std::vector<ExampleContext>& batch, const std::vector<int>& labels,
                       const ModelParams& p, const MacroNodeRegistry& reg) {
  if (batch.size() != labels.size()) throw UsageError("batch_loss: size mismatch");
  if (batch.empty()) throw UsageError("batch_loss: empty batch");
  BatchResult out;
  TouchedSet touched;
  ForwardTrace tr;
  for (std::size_t k = 0; k < batch.size(); ++k) {
    double y_hat = forward(batch[k], p, reg, &tr);
    out.y_hat.push_back(y_hat);
    out.bce += bce_loss(y_hat, labels[k]);
    touched.note(tr);
  }
  out.bce /= static_cast<double>(batch.size());
  out.total = out.bce + p.cfg.lambda * touched_l2(p, touched);
  return out;
}

BatchResult batch_backward(const std::vector<ExampleContext>& batch, const std::vector<int>& labels,
                           const ModelParams& p, const MacroNodeRegistry& reg, GradSet& g) {
  if (batch.size() != labels.size()) throw UsageError("batch_backward: size mismatch");
  if (batch.empty()) throw UsageError("batch_backward: empty batch");
  BatchResult out;
  TouchedSet touched;
  ForwardTrace tr;
  const double inv = 1.0 / static_cast<double>(batch.size());
  for (std::size_t k = 0; k < batch.size(); ++k) {
    double y_hat = forward(batch[k], p, reg, &tr);
    out.y_hat.push_back(y_hat);
    out.bce += bce_loss(y_hat, labels[k]);
    touched.note(tr);
    backward(tr, labels[k], p, reg, inv, g);
  }
  out.bce *= inv;
  out.total = out.bce + p.cfg.lambda * touched_l2(p, touched);

  // L2 term: 2*lambda*theta on exactly the touched parameters.
  const double c = 2.0 * p.cfg.lambda;
  if (c != 0.0) {
    auto add_rows = [&](const std::set<std::size_t>& rows, const Mat& src,
                        std::map<std::size_t, Vec>& dst) {
      for (auto rw : rows) {
        Vec v = c * src.row(static_cast<Eigen::Index>(rw)).transpose();
        auto it = dst.find(rw);
        if (it == dst.end()) dst.emplace(rw, std::move(v));
        else it->second += v;
      }
    };
    add_rows(touched.micro_user, p.micro_user_emb, g.micro_user);
    add_rows(touched.micro_item, p.micro_item_emb, g.micro_item);
    add_rows(touched.macro, p.macro_emb, g.macro);
    if (touched.attn_user) {
      g.attn_user.Q += c * p.attn_user.Q;
      g.attn_user.K += c * p.attn_user.K;
      g.attn_user.V += c * p.attn_user.V;
    }
    if (touched.attn_item) {
      g.attn_item.Q += c * p.attn_item.Q;
      g.attn_item.K += c * p.attn_item.K;
      g.attn_item.V += c * p.attn_item.V;
    }
    for (std::size_t l = 0; l < p.mlp.W.size(); ++l) {
      g.mlp.W[l] += c * p.mlp.W[l];
      g.mlp.b[l] += c * p.mlp.b[l];
    }
  }
  return out;
}

namespace {

constexpr std::uint32_t kMagic = 0x4D47434Bu;  // "MGCK"
constexpr std::uint32_t kVersion = 1;

void put_u32(std::ostream& o, std::uint32_t v) { o.write(reinterpret_cast<const char*>(&v), 4); }
void put_u64(std::ostream& o, std::uint64_t v) { o.write(reinterpret_cast<const char*>(&v), 8); }
void put_f64(std::ostream& o, double v) { o.write(reinterpret_cast<const char*>(&v), 8); }

std::uint32_t get_u32(std::istream& i) {
  std::uint32_t v;
  i.read(reinterpret_cast<char*>(&v), 4);
  return v;
}
std::uint64_t get_u64(std::istream& i) {
  std::uint64_t v;
  i.read(reinterpret_cast<char*>(&v), 8);
  return v;
}
double get_f64(std::istream& i) {
  double v;
  i.read(reinterpret_cast<char*>(&v), 8);
  return v;
}

void put_mat(std::ostream& o, const Mat& m) {
  put_u64(o, static_cast<std::uint64_t>(m.rows()));
  put_u64(o, static_cast<std::uint64_t>(m.cols()));
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) put_f64(o, m(r, c));
}

Mat get_mat(std::istream& i) {
  std::uint64_t rows = get_u64(i), cols = get_u64(i);
  if (rows > (1u << 28) || cols > (1u << 28)) throw DataError("checkpoint: absurd tensor shape");
  Mat m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) m(r, c) = get_f64(i);
  if (!i) throw DataError("checkpoint: truncated tensor");
  return m;
}

void put_vec(std::ostream& o, const Vec& v) {
  put_u64(o, static_cast<std::uint64_t>(v.size()));
  for (Eigen::Index j = 0; j < v.size(); ++j) put_f64(o, v[j]);
}

Vec get_vec(std::istream& i) {
  std::uint64_t n = get_u64(i);
  if (n > (1u << 28)) throw DataError("checkpoint: absurd vector size");
  Vec v(static_cast<Eigen::Index>(n));
  for (Eigen::Index j = 0; j < v.size(); ++j) v[j] = get_f64(i);
  if (!i) throw DataError("checkpoint: truncated vector");
  return v;
}

}  // namespace

void save_checkpoint(const ModelParams& p, const std::string& path) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw DataError("cannot open checkpoint for writing: " + path);
  put_u32(f, kMagic);
  put_u32(f, kVersion);
  put_u32(f, static_cast<std::uint32_t>(p.cfg.d));
  put_u32(f, static_cast<std::uint32_t>(p.cfg.d_prime));
  put_u32(f, static_cast<std::uint32_t>(p.cfg.hidden.size()));
  for (int h : p.cfg.hidden) put_u32(f, static_cast<std::uint32_t>(h));
  put_f64(f, p.cfg.tau);
  put_f64(f, p.cfg.lambda);
  const AblationFlags& a = p.cfg.ablation;
  std::uint8_t flags[5] = {a.no_weighting, a.no_recent, a.no_highorder, a.no_itemgraph, a.no_graph};
  f.write(reinterpret_cast<const char*>(flags), 5);
  put_mat(f, p.micro_user_emb);
  put_mat(f, p.micro_item_emb);
  put_mat(f, p.macro_emb);
  for (const Mat* m : {&p.attn_user.Q, &p.attn_user.K, &p.attn_user.V, &p.attn_item.Q,
                       &p.attn_item.K, &p.attn_item.V})
    put_mat(f, *m);
  put_u32(f, static_cast<std::uint32_t>(p.mlp.W.size()));
  for (std::size_t l = 0; l < p.mlp.W.size(); ++l) {
    put_mat(f, p.mlp.W[l]);
    put_vec(f, p.mlp.b[l]);
  }
  if (!f) throw DataError("checkpoint write failed: " + path);
}

ModelParams load_checkpoint(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw DataError("cannot open checkpoint: " + path);
  if (get_u32(f) != kMagic) throw DataError("not a checkpoint file: " + path);
  if (get_u32(f) != kVersion) throw DataError("unsupported checkpoint version: " + path);
  ModelParams p;
  p.cfg.d = static_cast<int>(get_u32(f));
  p.cfg.d_prime = static_cast<int>(get_u32(f));
  std::uint32_t nh = get_u32(f);
  if (nh > 64) throw DataError("checkpoint: absurd hidden layer count");
  p.cfg.hidden.clear();
  for (std::uint32_t l = 0; l < nh; ++l) p.cfg.hidden.push_back(static_cast<int>(get_u32(f)));
  p.cfg.tau = get_f64(f);
  p.cfg.lambda = get_f64(f);
  std::uint8_t flags[5];
  f.read(reinterpret_cast<char*>(flags), 5);
  p.cfg.ablation = {bool(flags[0]), bool(flags[1]), bool(flags[2]), bool(flags[3]), bool(flags[4])};
  p.micro_user_emb = get_mat(f);
  p.micro_item_emb = get_mat(f);
  p.macro_emb = get_mat(f);
  p.attn_user = {get_mat(f), get_mat(f), get_mat(f)};
  p.attn_item = {get_mat(f), get_mat(f), get_mat(f)};
  std::uint32_t layers = get_u32(f);
  if (layers != nh + 1) throw DataError("checkpoint: layer count does not match config");
  for (std::uint32_t l = 0; l < layers; ++l) {
    p.mlp.W.push_back(get_mat(f));
    p.mlp.b.push_back(get_vec(f));
  }
  // Shape validation against the declared config.
  const auto dcols = static_cast<Eigen::Index>(p.cfg.d);
  if (p.micro_user_emb.cols() != dcols || p.micro_item_emb.cols() != dcols ||
      p.macro_emb.cols() != dcols)
    throw DataError("checkpoint: embedding width does not match d");
  for (const Mat* m : {&p.attn_user.Q, &p.attn_user.K, &p.attn_user.V, &p.attn_item.Q,
                       &p.attn_item.K, &p.attn_item.V})
    if (m->rows() != p.cfg.d || m->cols() != p.cfg.d_prime)
      throw DataError("checkpoint: attention shape mismatch");
  Eigen::Index in_w = static_cast<Eigen::Index>(p.concat_width());
  for (std::size_t l = 0; l < p.mlp.W.size(); ++l) {
    Eigen::Index out_w = l < p.cfg.hidden.size() ? p.cfg.hidden[l] : 2;
    if (p.mlp.W[l].rows() != out_w || p.mlp.W[l].cols() != in_w || p.mlp.b[l].size() != out_w)
      throw DataError("checkpoint: mlp shape mismatch at layer " + std::to_string(l));
    in_w = out_w;
  }
  return p;
}

}  // namespace macrograph
