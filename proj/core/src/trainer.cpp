#include "macrograph/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <thread>

#include "macrograph/rng.hpp"

namespace macrograph {

namespace grids {
std::vector<double> tau() {
  std::vector<double> g;
  for (int k = 0; k < 10; ++k) g.push_back(static_cast<double>(2 * k + 1) / 10.0);
  return g;
}
}  // namespace grids

namespace {

bool on_grid(double v, const double* begin, const double* end) {
  for (const double* p = begin; p != end; ++p)
    if (std::abs(v - *p) <= 1e-9) return true;
  return false;
}

// Distinct deterministic sub-streams of one seed.
std::uint64_t sub_seed(std::uint64_t seed, std::uint64_t tag) {
  return seed ^ (0x9E3779B97F4A7C15ull * (tag + 1));
}
constexpr std::uint64_t kTagGroupUser = 0, kTagGroupItem = 1, kTagInit = 2, kTagShuffle = 3;

}  // namespace

void TrainConfig::validate() const {
  auto need_marker = [&](bool ok, const std::string& what, double v) {
    if (!ok && !allow_off_grid)
      throw DataError(what + "=" + std::to_string(v) +
                      " is outside the declared grid; set allow_off_grid=1 to override");
  };
  need_marker(on_grid(lr, grids::lr.data(), grids::lr.data() + grids::lr.size()), "lr", lr);
  need_marker(on_grid(lambda, grids::lambda.data(), grids::lambda.data() + grids::lambda.size()),
              "lambda", lambda);
  auto tg = grids::tau();
  need_marker(on_grid(tau, tg.data(), tg.data() + tg.size()), "tau", tau);
  need_marker(batch_size == grids::batch_size, "batch_size", batch_size);
  if (lr < 0) throw DataError("lr must be >= 0");
  if (lambda < 0) throw DataError("lambda must be >= 0");
  if (tau <= 0) throw DataError("tau must be > 0");
  if (batch_size < 1) throw DataError("batch_size must be >= 1");
  if (epochs < 1) throw DataError("epochs must be >= 1");
  if (k_user < 1) throw DataError("k_user must be >= 1");
  if (item_grouping != "category" && item_grouping != "kmeans")
    throw DataError("item_grouping must be 'category' or 'kmeans'");
  if (item_grouping == "kmeans" && k_item < 1)
    throw DataError("k_item must be >= 1 for kmeans item grouping");
  if (recent_len < 1) throw DataError("recent_len must be >= 1");
  if (!(train_fraction > 0.0 && train_fraction < 1.0))
    throw DataError("train_fraction must be in (0,1)");
  if (!(val_fraction >= 0.0 && val_fraction < 1.0))
    throw DataError("val_fraction must be in [0,1)");
  if (d < 1 || d_prime < 1) throw DataError("d and d_prime must be >= 1");
  for (int h : hidden)
    if (h < 1) throw DataError("hidden widths must be >= 1");
  if (threads < 1) throw DataError("threads must be >= 1");
}

namespace {

std::string trim(const std::string& s) {
  std::size_t a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  std::size_t b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

double parse_double(const std::string& v, const std::string& key) {
  try {
    std::size_t pos = 0;
    double x = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return x;
  } catch (const std::exception&) {
    throw DataError("config: bad numeric value for " + key + ": '" + v + "'");
  }
}

long long parse_ll(const std::string& v, const std::string& key) {
  try {
    std::size_t pos = 0;
    long long x = std::stoll(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return x;
  } catch (const std::exception&) {
    throw DataError("config: bad integer value for " + key + ": '" + v + "'");
  }
}

bool parse_bool(const std::string& v, const std::string& key) {
  if (v == "1" || v == "true") return true;
  if (v == "0" || v == "false") return false;
  throw DataError("config: bad boolean value for " + key + ": '" + v + "'");
}

}  // namespace

TrainConfig parse_config(std::istream& in) {
  TrainConfig cfg;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::size_t hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    std::size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw DataError("config line " + std::to_string(line_no) + ": expected key=value");
    std::string key = trim(line.substr(0, eq));
    std::string val = trim(line.substr(eq + 1));
    if (key == "lr") cfg.lr = parse_double(val, key);
    else if (key == "lambda") cfg.lambda = parse_double(val, key);
    else if (key == "tau") cfg.tau = parse_double(val, key);
    else if (key == "batch_size") cfg.batch_size = static_cast<int>(parse_ll(val, key));
    else if (key == "epochs") cfg.epochs = static_cast<int>(parse_ll(val, key));
    else if (key == "seed") cfg.seed = static_cast<std::uint64_t>(parse_ll(val, key));
    else if (key == "k_user") cfg.k_user = static_cast<int>(parse_ll(val, key));
    else if (key == "k_item") cfg.k_item = static_cast<int>(parse_ll(val, key));
    else if (key == "item_grouping") cfg.item_grouping = val;
    else if (key == "recent_len") cfg.recent_len = static_cast<int>(parse_ll(val, key));
    else if (key == "train_fraction") cfg.train_fraction = parse_double(val, key);
    else if (key == "val_fraction") cfg.val_fraction = parse_double(val, key);
    else if (key == "d") cfg.d = static_cast<int>(parse_ll(val, key));
    else if (key == "d_prime") cfg.d_prime = static_cast<int>(parse_ll(val, key));
    else if (key == "hidden") {
      cfg.hidden.clear();
      std::stringstream ss(val);
      std::string part;
      while (std::getline(ss, part, ','))
        cfg.hidden.push_back(static_cast<int>(parse_ll(trim(part), key)));
    } else if (key == "ablation") {
      cfg.ablation = {};
      if (val != "none" && !val.empty()) {
        std::stringstream ss(val);
        std::string part;
        while (std::getline(ss, part, ',')) {
          part = trim(part);
          if (part == "no_weighting") cfg.ablation.no_weighting = true;
          else if (part == "no_recent") cfg.ablation.no_recent = true;
          else if (part == "no_highorder") cfg.ablation.no_highorder = true;
          else if (part == "no_itemgraph") cfg.ablation.no_itemgraph = true;
          else if (part == "no_graph") cfg.ablation.no_graph = true;
          else throw DataError("config: unknown ablation flag '" + part + "'");
        }
      }
    } else if (key == "allow_off_grid") cfg.allow_off_grid = parse_bool(val, key);
    else if (key == "threads") cfg.threads = static_cast<int>(parse_ll(val, key));
    else throw DataError("config line " + std::to_string(line_no) + ": unknown key '" + key + "'");
  }
  return cfg;
}

TrainConfig parse_config_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw DataError("cannot open config file: " + path);
  return parse_config(f);
}

namespace {

void xavier_fill(Mat& m, Rng& rng) {
  double bound = std::sqrt(6.0 / static_cast<double>(m.rows() + m.cols()));
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) m(r, c) = uniform_in(rng, -bound, bound);
}

}  // namespace

ModelParams init_params(const ModelConfig& cfg, std::uint32_t n_users, std::uint32_t n_items,
                        const MacroNodeRegistry& reg, std::uint64_t seed) {
  ModelParams p;
  p.cfg = cfg;
  Rng rng(seed);
  p.micro_user_emb.resize(n_users, cfg.d);
  p.micro_item_emb.resize(n_items, cfg.d);
  p.macro_emb.resize(static_cast<Eigen::Index>(reg.embedding_rows()), cfg.d);
  xavier_fill(p.micro_user_emb, rng);
  xavier_fill(p.micro_item_emb, rng);
  xavier_fill(p.macro_emb, rng);
  auto make_triple = [&] {
    AttnTriple t;
    t.Q.resize(cfg.d, cfg.d_prime);
    t.K.resize(cfg.d, cfg.d_prime);
    t.V.resize(cfg.d, cfg.d_prime);
    xavier_fill(t.Q, rng);
    xavier_fill(t.K, rng);
    xavier_fill(t.V, rng);
    return t;
  };
  p.attn_user = make_triple();
  p.attn_item = make_triple();
  Eigen::Index in_w = static_cast<Eigen::Index>(p.concat_width());
  std::vector<int> widths = cfg.hidden;
  widths.push_back(2);
  for (int w : widths) {
    Mat W(w, in_w);
    xavier_fill(W, rng);
    p.mlp.W.push_back(std::move(W));
    p.mlp.b.push_back(Vec::Zero(w));
    in_w = w;
  }
  return p;
}

SplitResult chronological_split(const InteractionLog& log, double train_fraction) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0))
    throw DataError("train_fraction must be in (0,1)");
  const std::size_t n = log.records.size();
  if (n < 2) throw DataError("cannot split a log with fewer than 2 records");
  std::vector<std::size_t> order(n);
  for (std::size_t k = 0; k < n; ++k) order[k] = k;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return log.records[a].timestamp < log.records[b].timestamp;
  });
  std::size_t T = static_cast<std::size_t>(
      std::floor(train_fraction * static_cast<double>(n) + 1e-9));
  if (T == 0 || T >= n) throw DataError("degenerate chronological split");
  SplitResult s;
  s.train_idx.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(T));
  s.test_idx.assign(order.begin() + static_cast<std::ptrdiff_t>(T), order.end());
  s.cutoff = log.records[s.test_idx.front()].timestamp;
  std::sort(s.train_idx.begin(), s.train_idx.end());  // back to file order
  std::sort(s.test_idx.begin(), s.test_idx.end());
  return s;
}

TrainData TrainData::build_base(const InteractionLog& log, const TrainConfig& cfg) {
  cfg.validate();
  TrainData d;
  d.log_ = &log;
  d.cfg_ = cfg;
  d.split_ = chronological_split(log, cfg.train_fraction);

  d.train_log_.n_users = log.n_users;
  d.train_log_.n_items = log.n_items;
  d.train_log_.user_ids = log.user_ids;
  d.train_log_.item_ids = log.item_ids;
  for (std::size_t idx : d.split_.train_idx) d.train_log_.records.push_back(log.records[idx]);
  d.graph_ = MicroGraph::build(d.train_log_);
  return d;
}

void TrainData::finish_build(const InteractionLog& log, const TrainConfig& cfg) {
  registry_ = MacroNodeRegistry::build(user_grouping_, item_grouping_);

  user_subgraphs_.reserve(log.n_users);
  for (std::uint32_t u = 0; u < log.n_users; ++u)
    user_subgraphs_.push_back(build_macro_subgraph(graph_, registry_, user_node(u)));
  item_subgraphs_.reserve(log.n_items);
  for (std::uint32_t i = 0; i < log.n_items; ++i)
    item_subgraphs_.push_back(build_macro_subgraph(graph_, registry_, item_node(i)));

  recents_ = std::make_unique<RecentIndex>(train_log_);

  // Validation tail: the last val_fraction of the training window by time.
  if (cfg.val_fraction > 0.0) {
    std::vector<std::size_t> order = split_.train_idx;
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return log.records[a].timestamp < log.records[b].timestamp;
    });
    std::size_t keep = static_cast<std::size_t>(std::floor(
        (1.0 - cfg.val_fraction) * static_cast<double>(order.size()) + 1e-9));
    if (keep == 0 || keep >= order.size()) {
      train_examples_ = split_.train_idx;  // too small to carve a tail out of
    } else {
      train_examples_.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(keep));
      val_examples_.assign(order.begin() + static_cast<std::ptrdiff_t>(keep), order.end());
      std::sort(train_examples_.begin(), train_examples_.end());
      std::sort(val_examples_.begin(), val_examples_.end());
    }
  } else {
    train_examples_ = split_.train_idx;
  }
}

TrainData TrainData::build(const InteractionLog& log, const TrainConfig& cfg,
                           const std::vector<std::uint32_t>& item_categories,
                           std::uint32_t n_categories) {
  TrainData d = build_base(log, cfg);

  auto user_embs = behavior_embeddings(d.graph_, Side::user);
  d.user_grouping_ = group(user_embs, static_cast<std::uint32_t>(cfg.k_user), log.n_items,
                           sub_seed(cfg.seed, kTagGroupUser));
  auto item_embs = behavior_embeddings(d.graph_, Side::item);
  if (cfg.item_grouping == "category") {
    if (item_categories.size() != log.n_items)
      throw DataError("item category map covers " + std::to_string(item_categories.size()) +
                      " items, log has " + std::to_string(log.n_items));
    d.item_grouping_ = group_by_category(item_embs, item_categories, n_categories, log.n_users);
  } else {
    d.item_grouping_ = group(item_embs, static_cast<std::uint32_t>(cfg.k_item), log.n_users,
                             sub_seed(cfg.seed, kTagGroupItem));
  }

  d.finish_build(log, cfg);
  return d;
}

TrainData TrainData::build_with_groupings(const InteractionLog& log, const TrainConfig& cfg,
                                          Grouping user_grouping, Grouping item_grouping) {
  TrainData d = build_base(log, cfg);
  if (user_grouping.assignments.size() != log.n_users)
    throw DataError("user grouping covers " + std::to_string(user_grouping.assignments.size()) +
                    " nodes, log has " + std::to_string(log.n_users) + " users");
  if (item_grouping.assignments.size() != log.n_items)
    throw DataError("item grouping covers " + std::to_string(item_grouping.assignments.size()) +
                    " nodes, log has " + std::to_string(log.n_items) + " items");
  d.user_grouping_ = std::move(user_grouping);
  d.item_grouping_ = std::move(item_grouping);
  d.finish_build(log, cfg);
  return d;
}

const MacroSubgraph* TrainData::user_subgraph(std::uint32_t u) const {
  if (u >= user_subgraphs_.size()) throw UsageError("user id out of range");
  return &user_subgraphs_[u];
}

const MacroSubgraph* TrainData::item_subgraph(std::uint32_t i) const {
  if (i >= item_subgraphs_.size()) throw UsageError("item id out of range");
  return &item_subgraphs_[i];
}

ExampleContext TrainData::context_for(std::size_t record_idx, bool in_train) const {
  if (record_idx >= log_->records.size()) throw UsageError("record index out of range");
  const Interaction& r = log_->records[record_idx];
  ExampleContext ex;
  ex.u = r.user;
  ex.i = r.item;
  ex.user_sg = &user_subgraphs_[r.user];
  ex.item_sg = &item_subgraphs_[r.item];
  // Training examples may only see history strictly before themselves; test
  // and validation scoring sees the whole training window.
  std::int64_t cutoff =
      in_train ? r.timestamp : std::numeric_limits<std::int64_t>::max();
  std::size_t L = static_cast<std::size_t>(cfg_.recent_len);
  ex.recent_items = recents_->recent(user_node(r.user), L, cutoff);
  ex.recent_users = recents_->recent(item_node(r.item), L, cutoff);
  return ex;
}

namespace {

// Lazy Adam: full-size moments, but only rows touched by the batch advance.
struct AdamState {
  double lr, beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
  long long t = 0;
  Mat m_user, v_user, m_item, v_item, m_macro, v_macro;
  AttnTriple m_au, v_au, m_ai, v_ai;
  Mlp m_mlp, v_mlp;

  explicit AdamState(const ModelParams& p, double lr_in) : lr(lr_in) {
    auto zl = [](const Mat& x) { return Mat::Zero(x.rows(), x.cols()).eval(); };
    m_user = zl(p.micro_user_emb);
    v_user = zl(p.micro_user_emb);
    m_item = zl(p.micro_item_emb);
    v_item = zl(p.micro_item_emb);
    m_macro = zl(p.macro_emb);
    v_macro = zl(p.macro_emb);
    m_au = {zl(p.attn_user.Q), zl(p.attn_user.K), zl(p.attn_user.V)};
    v_au = {zl(p.attn_user.Q), zl(p.attn_user.K), zl(p.attn_user.V)};
    m_ai = {zl(p.attn_item.Q), zl(p.attn_item.K), zl(p.attn_item.V)};
    v_ai = {zl(p.attn_item.Q), zl(p.attn_item.K), zl(p.attn_item.V)};
    for (const auto& W : p.mlp.W) {
      m_mlp.W.push_back(zl(W));
      v_mlp.W.push_back(zl(W));
    }
    for (const auto& b : p.mlp.b) {
      m_mlp.b.push_back(Vec::Zero(b.size()));
      v_mlp.b.push_back(Vec::Zero(b.size()));
    }
  }

  void step_dense(Mat& theta, Mat& m, Mat& v, const Mat& g) {
    m = beta1 * m + (1.0 - beta1) * g;
    v = beta2 * v + (1.0 - beta2) * g.cwiseProduct(g);
    double bc1 = 1.0 - std::pow(beta1, static_cast<double>(t));
    double bc2 = 1.0 - std::pow(beta2, static_cast<double>(t));
    theta -= (lr / bc1) * m.cwiseQuotient(((v / bc2).cwiseSqrt().array() + eps).matrix());
  }

  void step_vec(Vec& theta, Vec& m, Vec& v, const Vec& g) {
    m = beta1 * m + (1.0 - beta1) * g;
    v = beta2 * v + (1.0 - beta2) * g.cwiseProduct(g);
    double bc1 = 1.0 - std::pow(beta1, static_cast<double>(t));
    double bc2 = 1.0 - std::pow(beta2, static_cast<double>(t));
    theta -= (lr / bc1) * m.cwiseQuotient(((v / bc2).cwiseSqrt().array() + eps).matrix());
  }

  void step_rows(Mat& theta, Mat& m, Mat& v, const std::map<std::size_t, Vec>& rows) {
    double bc1 = 1.0 - std::pow(beta1, static_cast<double>(t));
    double bc2 = 1.0 - std::pow(beta2, static_cast<double>(t));
    for (const auto& [row, g] : rows) {
      auto r = static_cast<Eigen::Index>(row);
      m.row(r) = beta1 * m.row(r) + (1.0 - beta1) * g.transpose();
      v.row(r) = beta2 * v.row(r) + (1.0 - beta2) * g.cwiseProduct(g).transpose();
      theta.row(r) -=
          (lr / bc1) *
          m.row(r).cwiseQuotient(((v.row(r) / bc2).cwiseSqrt().array() + eps).matrix());
    }
  }

  void apply(ModelParams& p, const GradSet& g) {
    ++t;
    step_rows(p.micro_user_emb, m_user, v_user, g.micro_user);
    step_rows(p.micro_item_emb, m_item, v_item, g.micro_item);
    step_rows(p.macro_emb, m_macro, v_macro, g.macro);
    step_dense(p.attn_user.Q, m_au.Q, v_au.Q, g.attn_user.Q);
    step_dense(p.attn_user.K, m_au.K, v_au.K, g.attn_user.K);
    step_dense(p.attn_user.V, m_au.V, v_au.V, g.attn_user.V);
    step_dense(p.attn_item.Q, m_ai.Q, v_ai.Q, g.attn_item.Q);
    step_dense(p.attn_item.K, m_ai.K, v_ai.K, g.attn_item.K);
    step_dense(p.attn_item.V, m_ai.V, v_ai.V, g.attn_item.V);
    for (std::size_t l = 0; l < p.mlp.W.size(); ++l) {
      step_dense(p.mlp.W[l], m_mlp.W[l], v_mlp.W[l], g.mlp.W[l]);
      step_vec(p.mlp.b[l], m_mlp.b[l], v_mlp.b[l], g.mlp.b[l]);
    }
  }
};

}  // namespace

std::vector<double> score_examples(const std::vector<ExampleContext>& examples,
                                   const ModelParams& params, const MacroNodeRegistry& reg,
                                   int threads) {
  std::vector<double> scores(examples.size());
  auto work = [&](std::size_t lo, std::size_t hi) {
    for (std::size_t k = lo; k < hi; ++k)
      scores[k] = forward(examples[k], params, reg, nullptr);
  };
  if (threads <= 1 || examples.size() < 2) {
    work(0, examples.size());
  } else {
    std::size_t nt = std::min<std::size_t>(threads, examples.size());
    std::vector<std::thread> pool;
    std::size_t chunk = (examples.size() + nt - 1) / nt;
    for (std::size_t tix = 0; tix < nt; ++tix) {
      std::size_t lo = tix * chunk, hi = std::min(examples.size(), lo + chunk);
      if (lo >= hi) break;
      pool.emplace_back(work, lo, hi);
    }
    for (auto& th : pool) th.join();
  }
  return scores;
}

EvalReport evaluate_model(const ModelParams& params, const TrainData& data,
                          const std::vector<std::size_t>& example_indices, int threads) {
  std::vector<ExampleContext> contexts;
  std::vector<int> labels;
  std::vector<std::uint32_t> users;
  contexts.reserve(example_indices.size());
  for (std::size_t idx : example_indices) {
    contexts.push_back(data.context_for(idx, /*in_train=*/false));
    labels.push_back(data.log().records[idx].label);
    users.push_back(data.log().records[idx].user);
  }
  auto scores = score_examples(contexts, params, data.registry(), threads);
  return evaluate_scores(scores, labels, users);
}

FitResult fit(const TrainConfig& cfg, const TrainData& data,
              const std::function<void(const EpochStats&)>& on_epoch) {
  cfg.validate();
  const auto& reg = data.registry();
  ModelConfig mc;
  mc.d = cfg.d;
  mc.d_prime = cfg.d_prime;
  mc.hidden = cfg.hidden;
  mc.tau = cfg.tau;
  mc.lambda = cfg.lambda;
  mc.ablation = cfg.ablation;
  ModelParams params = init_params(mc, data.log().n_users, data.log().n_items, reg,
                                   sub_seed(cfg.seed, kTagInit));
  AdamState adam(params, cfg.lr);
  Rng shuffle_rng(sub_seed(cfg.seed, kTagShuffle));

  const auto& train_idx = data.train_examples();
  if (train_idx.empty()) throw DataError("no training examples after the validation split");

  FitResult result;
  double best_key = -std::numeric_limits<double>::infinity();
  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    std::vector<std::size_t> order = train_idx;
    shuffle_vec(order, shuffle_rng);

    double loss_sum = 0.0;
    std::size_t batches = 0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      std::size_t stop = std::min(order.size(), start + static_cast<std::size_t>(cfg.batch_size));
      std::vector<ExampleContext> batch;
      std::vector<int> labels;
      batch.reserve(stop - start);
      for (std::size_t k = start; k < stop; ++k) {
        batch.push_back(data.context_for(order[k], /*in_train=*/true));
        labels.push_back(data.log().records[order[k]].label);
      }
      GradSet g = make_zero_grads(params);
      BatchResult br = batch_backward(batch, labels, params, reg, g);
      if (!std::isfinite(br.total))
        throw NumericError("non-finite loss in epoch " + std::to_string(epoch) + ", batch " +
                           std::to_string(batches) + " (first example record " +
                           std::to_string(order[start]) + ")");
      adam.apply(params, g);
      loss_sum += br.total;
      ++batches;
    }

    EpochStats st;
    st.epoch = epoch;
    st.train_loss = batches ? loss_sum / static_cast<double>(batches) : 0.0;
    if (!data.val_examples().empty()) {
      // Validation recents still respect each example's own timestamp.
      std::vector<ExampleContext> vctx;
      std::vector<int> vlab;
      std::vector<std::uint32_t> vusr;
      for (std::size_t idx : data.val_examples()) {
        vctx.push_back(data.context_for(idx, /*in_train=*/true));
        vlab.push_back(data.log().records[idx].label);
        vusr.push_back(data.log().records[idx].user);
      }
      auto scores = score_examples(vctx, params, reg, cfg.threads);
      EvalReport rep = evaluate_scores(scores, vlab, vusr);
      st.val_auc = rep.auc;
      st.val_gauc = rep.gauc;
      st.val_logloss = rep.logloss;
    }
    result.curve.push_back(st);
    if (on_epoch) on_epoch(st);

    // Best epoch by validation AUC; without one, the last epoch wins.
    double key = st.val_auc ? *st.val_auc : -std::numeric_limits<double>::infinity();
    if (key > best_key || result.best_epoch == 0 ||
        (!st.val_auc && best_key == -std::numeric_limits<double>::infinity())) {
      best_key = key;
      result.best_epoch = epoch;
      result.params = params;
    }
  }
  return result;
}

std::vector<SweepRow> run_sweep(const TrainConfig& base, const InteractionLog& log,
                                const std::vector<std::uint32_t>& item_categories,
                                std::uint32_t n_categories, const std::string& grid_name,
                                const std::vector<double>& grid_values) {
  if (grid_name != "tau" && grid_name != "k_user")
    throw UsageError("run_sweep: grid must be 'tau' or 'k_user'");
  if (grid_values.empty()) throw UsageError("run_sweep: empty grid");
  std::vector<SweepRow> rows;
  for (double v : grid_values) {
    SweepRow row;
    row.value = v;
    try {
      TrainConfig cfg = base;
      if (grid_name == "tau") cfg.tau = v;
      else cfg.k_user = static_cast<int>(v);
      TrainData data = TrainData::build(log, cfg, item_categories, n_categories);
      FitResult fr = fit(cfg, data);
      EvalReport rep = evaluate_model(fr.params, data, data.test_examples(), cfg.threads);
      row.auc = rep.auc;
      row.gauc = rep.gauc;
      row.logloss = rep.logloss;
    } catch (const std::exception& e) {
      row.status = std::string("error: ") + e.what();
    }
    rows.push_back(row);
  }
  return rows;
}

}  // namespace macrograph
