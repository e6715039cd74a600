// macrograph: command-line front end over the core library.
//
// Commands compose through directories of plain files (graph.bin, grouping
// CSVs, per-node subgraph JSONs, model checkpoints) so each pipeline stage
// can run and be inspected in isolation.  Every command validates its inputs
// fully before writing anything, and writes are atomic per file, so a failed
// run leaves no partial outputs.  Outputs are byte-stable for fixed inputs
// and seeds.
//
// Exit codes: 0 success, 1 usage error, 2 data error, 3 numeric failure.

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include "CLI11.hpp"
#include <nlohmann/json.hpp>

#include "macrograph/common.hpp"
#include "macrograph/grouping.hpp"
#include "macrograph/interactions.hpp"
#include "macrograph/io.hpp"
#include "macrograph/macro_graph.hpp"
#include "macrograph/metrics.hpp"
#include "macrograph/micro_graph.hpp"
#include "macrograph/model.hpp"
#include "macrograph/trainer.hpp"

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;
using namespace macrograph;

namespace {

// ---------------------------------------------------------------------------
// small shared helpers

void ensure_dir(const std::string& path) {
  std::error_code ec;
  fs::create_directories(path, ec);
  if (ec) throw DataError("cannot create directory " + path + ": " + ec.message());
}

void copy_bytes(const std::string& src, const std::string& dst) {
  write_file_atomic(dst, read_file(src));
}

std::string join(const std::string& dir, const std::string& name) {
  return (fs::path(dir) / name).string();
}

void write_json_file(const std::string& path, const json& j) {
  write_file_atomic(path, j.dump(2) + "\n");
}

json read_json_file(const std::string& path) {
  try {
    return json::parse(read_file(path));
  } catch (const nlohmann::json::exception& e) {
    throw DataError(path + ": " + e.what());
  }
}

// One CSV field; our formats never need quoting except free-text status
// columns, which may carry commas from error messages.
std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

std::vector<std::string> split_line(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == sep) {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

std::string strip_cr(std::string s) {
  if (!s.empty() && s.back() == '\r') s.pop_back();
  return s;
}

std::unordered_map<std::string, std::uint32_t> index_of(const std::vector<std::string>& ids) {
  std::unordered_map<std::string, std::uint32_t> m;
  m.reserve(ids.size());
  for (std::uint32_t i = 0; i < ids.size(); ++i) m.emplace(ids[i], i);
  return m;
}

void emit(const std::string& text, const std::string& out_path) {
  if (out_path.empty())
    std::cout << text;
  else
    write_file_atomic(out_path, text);
}

// ---------------------------------------------------------------------------
// config <-> JSON (model meta files)

json ablation_to_json(const AblationFlags& a) {
  json j;
  j["no_graph"] = a.no_graph;
  j["no_highorder"] = a.no_highorder;
  j["no_itemgraph"] = a.no_itemgraph;
  j["no_recent"] = a.no_recent;
  j["no_weighting"] = a.no_weighting;
  return j;
}

json config_to_json(const TrainConfig& c) {
  json j;
  j["ablation"] = ablation_to_json(c.ablation);
  j["allow_off_grid"] = c.allow_off_grid;
  j["batch_size"] = c.batch_size;
  j["d"] = c.d;
  j["d_prime"] = c.d_prime;
  j["epochs"] = c.epochs;
  j["hidden"] = c.hidden;
  j["item_grouping"] = c.item_grouping;
  j["k_item"] = c.k_item;
  j["k_user"] = c.k_user;
  j["lambda"] = c.lambda;
  j["lr"] = c.lr;
  j["recent_len"] = c.recent_len;
  j["seed"] = c.seed;
  j["tau"] = c.tau;
  j["threads"] = c.threads;
  j["train_fraction"] = c.train_fraction;
  j["val_fraction"] = c.val_fraction;
  return j;
}

TrainConfig config_from_json(const json& j) {
  TrainConfig c;
  try {
    const json& a = j.at("ablation");
    c.ablation.no_graph = a.at("no_graph").get<bool>();
    c.ablation.no_highorder = a.at("no_highorder").get<bool>();
    c.ablation.no_itemgraph = a.at("no_itemgraph").get<bool>();
    c.ablation.no_recent = a.at("no_recent").get<bool>();
    c.ablation.no_weighting = a.at("no_weighting").get<bool>();
    c.allow_off_grid = j.at("allow_off_grid").get<bool>();
    c.batch_size = j.at("batch_size").get<int>();
    c.d = j.at("d").get<int>();
    c.d_prime = j.at("d_prime").get<int>();
    c.epochs = j.at("epochs").get<int>();
    c.hidden = j.at("hidden").get<std::vector<int>>();
    c.item_grouping = j.at("item_grouping").get<std::string>();
    c.k_item = j.at("k_item").get<int>();
    c.k_user = j.at("k_user").get<int>();
    c.lambda = j.at("lambda").get<double>();
    c.lr = j.at("lr").get<double>();
    c.recent_len = j.at("recent_len").get<int>();
    c.seed = j.at("seed").get<std::uint64_t>();
    c.tau = j.at("tau").get<double>();
    c.threads = j.at("threads").get<int>();
    c.train_fraction = j.at("train_fraction").get<double>();
    c.val_fraction = j.at("val_fraction").get<double>();
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("model meta: bad config block: ") + e.what());
  }
  return c;
}

// ---------------------------------------------------------------------------
// delta / pairs CSV readers (raw ids resolved against an existing id map;
// these must never mint new dense ids)

std::vector<Interaction> read_delta_csv(const std::string& path, const InteractionLog& log) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw DataError("cannot open delta file: " + path);
  auto users = index_of(log.user_ids);
  auto items = index_of(log.item_ids);

  std::string line;
  if (!std::getline(f, line))
    throw DataError(path + ": empty file (expected header user_id,item_id,label,timestamp)");
  if (strip_cr(line) != "user_id,item_id,label,timestamp")
    throw DataError(path + ": bad header '" + strip_cr(line) +
                    "' (expected user_id,item_id,label,timestamp)");

  std::vector<Interaction> out;
  std::size_t line_no = 1;
  while (std::getline(f, line)) {
    ++line_no;
    line = strip_cr(line);
    if (line.empty()) continue;
    auto fields = split_line(line, ',');
    if (fields.size() != 4)
      throw DataError(path + " line " + std::to_string(line_no) + ": expected 4 fields, got " +
                      std::to_string(fields.size()));
    auto u = users.find(fields[0]);
    if (u == users.end())
      throw DataError(path + " line " + std::to_string(line_no) + ": unknown user id '" +
                      fields[0] + "'");
    auto it = items.find(fields[1]);
    if (it == items.end())
      throw DataError(path + " line " + std::to_string(line_no) + ": unknown item id '" +
                      fields[1] + "'");
    if (fields[2] != "1")
      throw DataError(path + " line " + std::to_string(line_no) +
                      ": delta records must be positive interactions (label=1), got '" +
                      fields[2] + "'");
    Interaction rec;
    rec.user = u->second;
    rec.item = it->second;
    rec.label = 1;
    try {
      std::size_t pos = 0;
      rec.timestamp = std::stoll(fields[3], &pos);
      if (pos != fields[3].size()) throw std::invalid_argument(fields[3]);
    } catch (const std::exception&) {
      throw DataError(path + " line " + std::to_string(line_no) + ": bad timestamp '" +
                      fields[3] + "'");
    }
    out.push_back(rec);
  }
  return out;
}

struct RawPair {
  std::string user, item;
  std::uint32_t u, i;
};

std::vector<RawPair> read_pairs_csv(const std::string& path, const InteractionLog& log) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw DataError("cannot open pairs file: " + path);
  auto users = index_of(log.user_ids);
  auto items = index_of(log.item_ids);

  std::string line;
  if (!std::getline(f, line))
    throw DataError(path + ": empty file (expected header user_id,item_id)");
  if (strip_cr(line) != "user_id,item_id")
    throw DataError(path + ": bad header '" + strip_cr(line) + "' (expected user_id,item_id)");

  std::vector<RawPair> out;
  std::size_t line_no = 1;
  while (std::getline(f, line)) {
    ++line_no;
    line = strip_cr(line);
    if (line.empty()) continue;
    auto fields = split_line(line, ',');
    if (fields.size() != 2)
      throw DataError(path + " line " + std::to_string(line_no) + ": expected 2 fields, got " +
                      std::to_string(fields.size()));
    auto u = users.find(fields[0]);
    if (u == users.end())
      throw DataError(path + " line " + std::to_string(line_no) + ": unknown user id '" +
                      fields[0] + "'");
    auto it = items.find(fields[1]);
    if (it == items.end())
      throw DataError(path + " line " + std::to_string(line_no) + ": unknown item id '" +
                      fields[1] + "'");
    out.push_back(RawPair{fields[0], fields[1], u->second, it->second});
  }
  return out;
}

// ---------------------------------------------------------------------------
// shared pieces of macro-graph directories

std::int64_t log_watermark(const InteractionLog& log) {
  std::int64_t w = std::numeric_limits<std::int64_t>::min();
  for (const auto& r : log.records) w = std::max(w, r.timestamp);
  return w;
}

std::string subgraph_file(NodeRef v) { return node_name(v) + ".json"; }

struct MacroDir {
  InteractionLog log;
  MicroGraph graph;
  Grouping user_grouping, item_grouping;
  MacroNodeRegistry registry;
  std::int64_t watermark = std::numeric_limits<std::int64_t>::min();
};

MacroDir load_macro_dir(const std::string& dir) {
  MacroDir d;
  d.log = load_log_file(join(dir, "graph.bin"));
  d.graph = MicroGraph::build(d.log);
  Side side = Side::user;
  d.user_grouping =
      load_grouping(join(dir, "user_grouping.csv"), join(dir, "user_grouping.meta.json"), &side);
  if (side != Side::user) throw DataError(dir + ": user_grouping.csv is not a user-side grouping");
  d.item_grouping =
      load_grouping(join(dir, "item_grouping.csv"), join(dir, "item_grouping.meta.json"), &side);
  if (side != Side::item) throw DataError(dir + ": item_grouping.csv is not an item-side grouping");
  if (d.user_grouping.assignments.size() != d.log.n_users)
    throw DataError(dir + ": user grouping covers " +
                    std::to_string(d.user_grouping.assignments.size()) + " nodes, graph has " +
                    std::to_string(d.log.n_users) + " users");
  if (d.item_grouping.assignments.size() != d.log.n_items)
    throw DataError(dir + ": item grouping covers " +
                    std::to_string(d.item_grouping.assignments.size()) + " nodes, graph has " +
                    std::to_string(d.log.n_items) + " items");
  d.registry = MacroNodeRegistry::build(d.user_grouping, d.item_grouping);
  json meta = read_json_file(join(dir, "meta.json"));
  if (meta.contains("watermark") && !meta["watermark"].is_null())
    d.watermark = meta["watermark"].get<std::int64_t>();
  return d;
}

// Writes the complete directory: one subgraph JSON per node plus the graph,
// id map, groupings, and a meta block.  Everything is computed by the caller
// before we get here.
void write_macro_dir(const std::string& out, const InteractionLog& log, const MicroGraph& graph,
                     const std::vector<MacroSubgraph>& user_sgs,
                     const std::vector<MacroSubgraph>& item_sgs, const Grouping& ug,
                     const Grouping& ig, const std::string& id_map_bytes) {
  ensure_dir(out);
  for (std::uint32_t u = 0; u < log.n_users; ++u)
    save_subgraph(user_sgs[u], join(out, subgraph_file(user_node(u))));
  for (std::uint32_t i = 0; i < log.n_items; ++i)
    save_subgraph(item_sgs[i], join(out, subgraph_file(item_node(i))));
  save_log_file(log, join(out, "graph.bin"));
  write_file_atomic(join(out, "id_map.csv"), id_map_bytes);
  save_grouping(ug, Side::user, join(out, "user_grouping.csv"),
                join(out, "user_grouping.meta.json"));
  save_grouping(ig, Side::item, join(out, "item_grouping.csv"),
                join(out, "item_grouping.meta.json"));

  json meta;
  meta["edge_count"] = graph.edge_count();
  meta["k_item"] = ig.K;
  meta["k_user"] = ug.K;
  meta["n_items"] = log.n_items;
  meta["n_users"] = log.n_users;
  std::int64_t w = log_watermark(log);
  if (w == std::numeric_limits<std::int64_t>::min())
    meta["watermark"] = nullptr;
  else
    meta["watermark"] = w;
  write_json_file(join(out, "meta.json"), meta);
}

// ---------------------------------------------------------------------------
// command bodies

struct BuildGraphArgs {
  std::string interactions, out;
};

void run_build_graph(const BuildGraphArgs& a) {
  InteractionLog log = load_interactions_file(a.interactions);
  std::ostringstream id_map;
  write_id_map(log, id_map);
  ensure_dir(a.out);
  save_log_file(log, join(a.out, "graph.bin"));
  write_file_atomic(join(a.out, "id_map.csv"), id_map.str());
  std::cerr << "build-graph: " << log.n_users << " users, " << log.n_items << " items, "
            << log.records.size() << " records -> " << a.out << "\n";
}

struct GroupArgs {
  std::string graph, side, by_category, out;
  int k = 0;
  bool k_seen = false;
  std::uint64_t seed = 0;
};

void run_group(const GroupArgs& a) {
  if (!a.k_seen && a.by_category.empty())
    throw UsageError("exactly one of --k or --by-category is required");
  InteractionLog log = load_log_file(join(a.graph, "graph.bin"));
  MicroGraph graph = MicroGraph::build(log);
  Side side = a.side == "user" ? Side::user : Side::item;
  auto embs = behavior_embeddings(graph, side);
  std::size_t dim = side == Side::user ? log.n_items : log.n_users;

  Grouping g;
  if (!a.by_category.empty()) {
    if (side != Side::item)
      throw UsageError("--by-category applies to --side item (category maps are per item)");
    CategoryMap cm = load_category_map_file(a.by_category, log);
    g = group_by_category(embs, cm.categories, static_cast<std::uint32_t>(cm.names.size()), dim);
  } else {
    if (a.k < 1) throw DataError("--k must be >= 1");
    g = group(embs, static_cast<std::uint32_t>(a.k), dim, a.seed);
  }
  fs::path outp(a.out);
  if (outp.has_parent_path()) ensure_dir(outp.parent_path().string());
  save_grouping(g, side, a.out, a.out + ".meta.json");
  std::cerr << "group: " << a.side << " side, K=" << g.K << ", J=" << format_double(g.objective)
            << ", " << g.iterations << " iterations -> " << a.out << "\n";
}

struct BuildMacroArgs {
  std::string graph, user_grouping, item_grouping, out;
};

void run_build_macro(const BuildMacroArgs& a) {
  InteractionLog log = load_log_file(join(a.graph, "graph.bin"));
  std::string id_map_bytes = read_file(join(a.graph, "id_map.csv"));
  MicroGraph graph = MicroGraph::build(log);

  Side side = Side::user;
  Grouping ug = load_grouping(a.user_grouping, a.user_grouping + ".meta.json", &side);
  if (side != Side::user) throw DataError(a.user_grouping + ": not a user-side grouping");
  Grouping ig = load_grouping(a.item_grouping, a.item_grouping + ".meta.json", &side);
  if (side != Side::item) throw DataError(a.item_grouping + ": not an item-side grouping");
  if (ug.assignments.size() != log.n_users)
    throw DataError("user grouping covers " + std::to_string(ug.assignments.size()) +
                    " nodes, graph has " + std::to_string(log.n_users) + " users");
  if (ig.assignments.size() != log.n_items)
    throw DataError("item grouping covers " + std::to_string(ig.assignments.size()) +
                    " nodes, graph has " + std::to_string(log.n_items) + " items");

  MacroNodeRegistry reg = MacroNodeRegistry::build(ug, ig);
  std::vector<MacroSubgraph> user_sgs, item_sgs;
  user_sgs.reserve(log.n_users);
  for (std::uint32_t u = 0; u < log.n_users; ++u)
    user_sgs.push_back(build_macro_subgraph(graph, reg, user_node(u)));
  item_sgs.reserve(log.n_items);
  for (std::uint32_t i = 0; i < log.n_items; ++i)
    item_sgs.push_back(build_macro_subgraph(graph, reg, item_node(i)));

  write_macro_dir(a.out, log, graph, user_sgs, item_sgs, ug, ig, id_map_bytes);
  std::cerr << "build-macro: " << (log.n_users + log.n_items) << " subgraphs -> " << a.out << "\n";
}

struct MergeDeltasArgs {
  std::string stock, delta, out;
};

void run_merge_deltas(const MergeDeltasArgs& a) {
  MacroDir stock = load_macro_dir(a.stock);
  std::string id_map_bytes = read_file(join(a.stock, "id_map.csv"));
  std::vector<Interaction> deltas = read_delta_csv(a.delta, stock.log);

  EdgeDeltaStore store(stock.graph, stock.registry);
  for (const auto& rec : deltas) store.accumulate(rec);
  if (store.accepted_count() > 0 && stock.watermark != std::numeric_limits<std::int64_t>::min() &&
      store.watermark() < stock.watermark)
    throw DataError("delta watermark " + std::to_string(store.watermark()) +
                    " precedes the stock snapshot at " + std::to_string(stock.watermark));

  // Merge every stock file; untouched targets pass through unchanged.
  std::vector<MacroSubgraph> user_sgs, item_sgs;
  user_sgs.reserve(stock.log.n_users);
  for (std::uint32_t u = 0; u < stock.log.n_users; ++u) {
    MacroSubgraph sg = load_subgraph(join(a.stock, subgraph_file(user_node(u))));
    if (!(sg.target == user_node(u)))
      throw DataError(subgraph_file(user_node(u)) + ": target mismatch");
    user_sgs.push_back(merge(sg, store));
  }
  item_sgs.reserve(stock.log.n_items);
  for (std::uint32_t i = 0; i < stock.log.n_items; ++i) {
    MacroSubgraph sg = load_subgraph(join(a.stock, subgraph_file(item_node(i))));
    if (!(sg.target == item_node(i)))
      throw DataError(subgraph_file(item_node(i)) + ": target mismatch");
    item_sgs.push_back(merge(sg, store));
  }

  InteractionLog merged_log = stock.log;
  for (const auto& rec : deltas) merged_log.records.push_back(rec);
  MicroGraph merged_graph = MicroGraph::build(merged_log);

  write_macro_dir(a.out, merged_log, merged_graph, user_sgs, item_sgs, stock.user_grouping,
                  stock.item_grouping, id_map_bytes);
  std::cerr << "merge-deltas: " << store.accepted_count() << " new edges merged -> " << a.out
            << "\n";
}

struct TrainArgs {
  std::string config, data, out, categories;
  std::uint64_t seed = 0;
  bool seed_seen = false;
  int threads = 0, epochs = 0;
  bool allow_off_grid = false;
};

TrainConfig load_train_config(const std::string& path, const TrainArgs& a) {
  TrainConfig cfg = parse_config_file(path);
  if (a.seed_seen) cfg.seed = a.seed;
  if (a.threads > 0) cfg.threads = a.threads;
  if (a.epochs > 0) cfg.epochs = a.epochs;
  if (a.allow_off_grid) cfg.allow_off_grid = true;
  cfg.validate();
  return cfg;
}

CategoryMap load_categories_if_needed(const TrainConfig& cfg, const std::string& path,
                                      const InteractionLog& log) {
  CategoryMap cm;
  if (cfg.item_grouping == "category") {
    if (path.empty())
      throw DataError("item_grouping=category requires --categories PATH (item_id,category CSV)");
    cm = load_category_map_file(path, log);
  }
  return cm;
}

std::string metrics_csv(const std::vector<EpochStats>& curve, int best_epoch,
                        const EvalReport& test) {
  std::ostringstream out;
  out << "epoch,split,auc,gauc,logloss\n";
  auto opt = [](const std::optional<double>& v) { return v ? format_double(*v) : std::string(); };
  for (const auto& e : curve) {
    out << e.epoch << ",train,,," << format_double(e.train_loss) << "\n";
    out << e.epoch << ",val," << opt(e.val_auc) << "," << opt(e.val_gauc) << ","
        << format_double(e.val_logloss) << "\n";
  }
  out << best_epoch << ",test," << opt(test.auc) << "," << opt(test.gauc) << ","
      << format_double(test.logloss) << "\n";
  return out.str();
}

json report_to_json(const EvalReport& r) {
  json j;
  if (r.auc)
    j["auc"] = *r.auc;
  else
    j["auc"] = nullptr;
  j["eligible_users"] = r.per_user.size();
  j["examples"] = r.examples;
  if (r.gauc)
    j["gauc"] = *r.gauc;
  else
    j["gauc"] = nullptr;
  j["logloss"] = r.logloss;
  j["positives"] = r.positives;
  return j;
}

void run_train(const TrainArgs& a) {
  TrainConfig cfg = load_train_config(a.config, a);
  InteractionLog log = load_log_file(join(a.data, "graph.bin"));
  std::string id_map_bytes = read_file(join(a.data, "id_map.csv"));
  CategoryMap cm = load_categories_if_needed(cfg, a.categories, log);

  TrainData data =
      TrainData::build(log, cfg, cm.categories, static_cast<std::uint32_t>(cm.names.size()));
  std::cerr << "train: " << data.train_examples().size() << " train / "
            << data.val_examples().size() << " val / " << data.test_examples().size()
            << " test examples; " << data.user_grouping().K << " user macros, "
            << data.item_grouping().K << " item macros\n";

  FitResult fr = fit(cfg, data, [](const EpochStats& e) {
    std::cerr << "epoch " << e.epoch << ": train_loss=" << format_double(e.train_loss);
    if (e.val_auc) std::cerr << " val_auc=" << format_double(*e.val_auc);
    if (e.val_gauc) std::cerr << " val_gauc=" << format_double(*e.val_gauc);
    std::cerr << " val_logloss=" << format_double(e.val_logloss) << "\n";
  });
  EvalReport test = evaluate_model(fr.params, data, data.test_examples(), cfg.threads);

  ensure_dir(a.out);
  save_checkpoint(fr.params, join(a.out, "checkpoint.bin"));
  save_grouping(data.user_grouping(), Side::user, join(a.out, "user_grouping.csv"),
                join(a.out, "user_grouping.meta.json"));
  save_grouping(data.item_grouping(), Side::item, join(a.out, "item_grouping.csv"),
                join(a.out, "item_grouping.meta.json"));
  save_log_file(data.train_window_log(), join(a.out, "history.bin"));
  write_file_atomic(join(a.out, "id_map.csv"), id_map_bytes);
  write_file_atomic(join(a.out, "metrics.csv"), metrics_csv(fr.curve, fr.best_epoch, test));

  json meta;
  meta["best_epoch"] = fr.best_epoch;
  meta["config"] = config_to_json(cfg);
  meta["cutoff"] = data.split().cutoff;
  meta["k_item"] = data.item_grouping().K;
  meta["k_user"] = data.user_grouping().K;
  meta["n_items"] = log.n_items;
  meta["n_users"] = log.n_users;
  meta["test_records"] = data.test_examples().size();
  meta["train_records"] = data.split().train_idx.size();
  write_json_file(join(a.out, "meta.json"), meta);

  json summary;
  summary["best_epoch"] = fr.best_epoch;
  summary["test"] = report_to_json(test);
  write_json_file(join(a.out, "summary.json"), summary);

  std::cerr << "train: best epoch " << fr.best_epoch << ", test auc="
            << (test.auc ? format_double(*test.auc) : "n/a") << " -> " << a.out << "\n";
}

struct EvaluateArgs {
  std::string checkpoint, data, out;
  int threads = 0;
};

void run_evaluate(const EvaluateArgs& a) {
  json meta = read_json_file(join(a.checkpoint, "meta.json"));
  if (!meta.contains("config")) throw DataError(join(a.checkpoint, "meta.json") + ": no config block");
  TrainConfig cfg = config_from_json(meta["config"]);
  if (a.threads > 0) cfg.threads = a.threads;

  InteractionLog log = load_log_file(join(a.data, "graph.bin"));
  if (read_file(join(a.data, "id_map.csv")) != read_file(join(a.checkpoint, "id_map.csv")))
    throw DataError("data directory id map differs from the model's; these artifacts do not "
                    "describe the same log");

  Side side = Side::user;
  Grouping ug = load_grouping(join(a.checkpoint, "user_grouping.csv"),
                              join(a.checkpoint, "user_grouping.meta.json"), &side);
  Grouping ig = load_grouping(join(a.checkpoint, "item_grouping.csv"),
                              join(a.checkpoint, "item_grouping.meta.json"), &side);
  TrainData data = TrainData::build_with_groupings(log, cfg, std::move(ug), std::move(ig));

  ModelParams params = load_checkpoint(join(a.checkpoint, "checkpoint.bin"));
  if (params.micro_user_emb.rows() != static_cast<Eigen::Index>(log.n_users) ||
      params.micro_item_emb.rows() != static_cast<Eigen::Index>(log.n_items))
    throw DataError("checkpoint embeds " + std::to_string(params.micro_user_emb.rows()) + "x" +
                    std::to_string(params.micro_item_emb.rows()) +
                    " micro nodes but the log has " + std::to_string(log.n_users) + "x" +
                    std::to_string(log.n_items));
  if (params.macro_emb.rows() != static_cast<Eigen::Index>(data.registry().embedding_rows()))
    throw DataError("checkpoint macro table has " + std::to_string(params.macro_emb.rows()) +
                    " rows, groupings imply " + std::to_string(data.registry().embedding_rows()));

  EvalReport rep = evaluate_model(params, data, data.test_examples(), cfg.threads);
  emit(report_to_json(rep).dump(2) + "\n", a.out);
}

struct ScoreArgs {
  std::string checkpoint, pairs, out;
  int threads = 0;
};

void run_score(const ScoreArgs& a) {
  json meta = read_json_file(join(a.checkpoint, "meta.json"));
  if (!meta.contains("config")) throw DataError(join(a.checkpoint, "meta.json") + ": no config block");
  TrainConfig cfg = config_from_json(meta["config"]);
  int threads = a.threads > 0 ? a.threads : cfg.threads;

  // history.bin is the training-window log with the full raw-id tables
  // embedded; pairs resolve against those, so the model directory stands on
  // its own.
  InteractionLog history = load_log_file(join(a.checkpoint, "history.bin"));
  MicroGraph graph = MicroGraph::build(history);
  Side side = Side::user;
  Grouping ug = load_grouping(join(a.checkpoint, "user_grouping.csv"),
                              join(a.checkpoint, "user_grouping.meta.json"), &side);
  Grouping ig = load_grouping(join(a.checkpoint, "item_grouping.csv"),
                              join(a.checkpoint, "item_grouping.meta.json"), &side);
  MacroNodeRegistry reg = MacroNodeRegistry::build(ug, ig);
  ModelParams params = load_checkpoint(join(a.checkpoint, "checkpoint.bin"));

  std::vector<RawPair> pairs = read_pairs_csv(a.pairs, history);

  std::vector<MacroSubgraph> user_sgs, item_sgs;
  user_sgs.reserve(history.n_users);
  for (std::uint32_t u = 0; u < history.n_users; ++u)
    user_sgs.push_back(build_macro_subgraph(graph, reg, user_node(u)));
  item_sgs.reserve(history.n_items);
  for (std::uint32_t i = 0; i < history.n_items; ++i)
    item_sgs.push_back(build_macro_subgraph(graph, reg, item_node(i)));
  RecentIndex recents(history);

  const std::int64_t horizon = std::numeric_limits<std::int64_t>::max();
  std::vector<ExampleContext> contexts;
  contexts.reserve(pairs.size());
  for (const auto& p : pairs) {
    ExampleContext ex;
    ex.u = p.u;
    ex.i = p.i;
    ex.user_sg = &user_sgs[p.u];
    ex.item_sg = &item_sgs[p.i];
    ex.recent_items = recents.recent(user_node(p.u), static_cast<std::size_t>(cfg.recent_len), horizon);
    ex.recent_users = recents.recent(item_node(p.i), static_cast<std::size_t>(cfg.recent_len), horizon);
    contexts.push_back(std::move(ex));
  }
  std::vector<double> scores = score_examples(contexts, params, reg, threads);

  std::ostringstream out;
  out << "user,item,score\n";
  for (std::size_t k = 0; k < pairs.size(); ++k)
    out << csv_field(pairs[k].user) << "," << csv_field(pairs[k].item) << ","
        << format_double(scores[k]) << "\n";
  emit(out.str(), a.out);
}

struct SweepArgs {
  std::string config, data, grid, values, categories, out;
  std::uint64_t seed = 0;
  bool seed_seen = false;
  int threads = 0;
};

void run_sweep_cmd(const SweepArgs& a) {
  TrainArgs overrides;
  overrides.seed = a.seed;
  overrides.seed_seen = a.seed_seen;
  overrides.threads = a.threads;
  TrainConfig cfg = load_train_config(a.config, overrides);

  InteractionLog log = load_log_file(join(a.data, "graph.bin"));
  CategoryMap cm;
  std::string grid_name;
  std::vector<double> values;
  if (a.grid == "tau") {
    grid_name = "tau";
    values = grids::tau();
  } else {
    grid_name = "k_user";
    if (a.values.empty())
      throw UsageError("--grid k requires --values (comma-separated macro-node counts)");
  }
  if (!a.values.empty()) {
    values.clear();
    for (const auto& tok : split_line(a.values, ',')) {
      try {
        std::size_t pos = 0;
        values.push_back(std::stod(tok, &pos));
        if (pos != tok.size()) throw std::invalid_argument(tok);
      } catch (const std::exception&) {
        throw UsageError("bad --values entry '" + tok + "'");
      }
    }
    if (values.empty()) throw UsageError("--values must name at least one grid point");
  }
  cm = load_categories_if_needed(cfg, a.categories, log);

  std::vector<SweepRow> rows =
      run_sweep(cfg, log, cm.categories, static_cast<std::uint32_t>(cm.names.size()), grid_name,
                values);

  std::ostringstream out;
  out << "value,auc,gauc,logloss,status\n";
  for (const auto& r : rows) {
    out << format_double(r.value) << "," << (r.auc ? format_double(*r.auc) : "") << ","
        << (r.gauc ? format_double(*r.gauc) : "") << ","
        << (r.status == "ok" ? format_double(r.logloss) : "") << "," << csv_field(r.status)
        << "\n";
  }
  emit(out.str(), a.out);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"macro recommendation graph toolkit: build interaction graphs, group nodes into "
               "macro nodes, materialize macro subgraphs, merge streaming deltas, and "
               "train/evaluate/score the CTR model"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "macrograph 0.1.0");

  BuildGraphArgs bg;
  auto* c_bg = app.add_subcommand("build-graph",
                                  "parse an interactions CSV into a graph directory");
  c_bg->add_option("--interactions", bg.interactions,
                   "CSV with header user_id,item_id,label,timestamp")->required();
  c_bg->add_option("--out", bg.out, "output directory (graph.bin, id_map.csv)")->required();

  GroupArgs gr;
  auto* c_gr = app.add_subcommand("group", "group one side's nodes into macro nodes");
  c_gr->add_option("--graph", gr.graph, "graph directory from build-graph")->required();
  c_gr->add_option("--side", gr.side, "which side to group")
      ->required()
      ->check(CLI::IsMember({"user", "item"}));
  auto* opt_k = c_gr->add_option("--k", gr.k, "number of macro nodes (behavior k-means)");
  auto* opt_cat = c_gr->add_option("--by-category", gr.by_category,
                                   "item_id,category CSV; one macro node per category");
  opt_k->excludes(opt_cat);
  opt_cat->excludes(opt_k);
  c_gr->add_option("--seed", gr.seed, "RNG seed for the k-means initialization")
      ->default_val(std::uint64_t{0});
  c_gr->add_option("--out", gr.out,
                   "output CSV path (meta JSON lands next to it as <out>.meta.json)")->required();

  BuildMacroArgs bm;
  auto* c_bm = app.add_subcommand("build-macro",
                                  "materialize per-node macro subgraphs from a graph + groupings");
  c_bm->add_option("--graph", bm.graph, "graph directory from build-graph")->required();
  c_bm->add_option("--user-grouping", bm.user_grouping, "user grouping CSV from group")->required();
  c_bm->add_option("--item-grouping", bm.item_grouping, "item grouping CSV from group")->required();
  c_bm->add_option("--out", bm.out, "output directory (one <node>.json per node + support files)")
      ->required();

  MergeDeltasArgs md;
  auto* c_md = app.add_subcommand("merge-deltas",
                                  "fold new positive interactions into a stock macro directory");
  c_md->add_option("--stock", md.stock, "macro directory from build-macro (or a previous merge)")
      ->required();
  c_md->add_option("--delta", md.delta,
                   "CSV of new positive interactions (user_id,item_id,label,timestamp)")
      ->required();
  c_md->add_option("--out", md.out, "output macro directory")->required();

  TrainArgs tr;
  auto* c_tr = app.add_subcommand("train", "train the CTR model end to end");
  c_tr->add_option("--config", tr.config, "flat key=value config file")->required();
  c_tr->add_option("--data", tr.data, "graph directory from build-graph")->required();
  c_tr->add_option("--out", tr.out, "model directory to write")->required();
  c_tr->add_option("--categories", tr.categories,
                   "item_id,category CSV (required when item_grouping=category)");
  auto* tr_seed = c_tr->add_option("--seed", tr.seed, "override the config seed");
  c_tr->add_option("--threads", tr.threads, "override evaluation threads (training is sequential)");
  c_tr->add_option("--epochs", tr.epochs, "override the config epoch count");
  c_tr->add_flag("--allow-off-grid", tr.allow_off_grid,
                 "accept hyperparameters outside the declared search grids");

  EvaluateArgs ev;
  auto* c_ev = app.add_subcommand("evaluate",
                                  "evaluate a model directory on a data directory's test split");
  c_ev->add_option("--checkpoint", ev.checkpoint, "model directory from train")->required();
  c_ev->add_option("--data", ev.data, "graph directory holding the full log")->required();
  c_ev->add_option("--out", ev.out, "write the report JSON here instead of stdout");
  c_ev->add_option("--threads", ev.threads, "override scoring threads");

  ScoreArgs sc;
  auto* c_sc = app.add_subcommand("score", "score user-item pairs against a trained model");
  c_sc->add_option("--checkpoint", sc.checkpoint, "model directory from train")->required();
  c_sc->add_option("--pairs", sc.pairs, "CSV with header user_id,item_id (raw ids)")->required();
  c_sc->add_option("--out", sc.out, "write the score CSV here instead of stdout");
  c_sc->add_option("--threads", sc.threads, "override scoring threads");

  SweepArgs sw;
  auto* c_sw = app.add_subcommand("sweep", "train once per grid value and tabulate test metrics");
  c_sw->add_option("--config", sw.config, "flat key=value config file (the sweep base)")
      ->required();
  c_sw->add_option("--data", sw.data, "graph directory from build-graph")->required();
  c_sw->add_option("--grid", sw.grid, "which hyperparameter to sweep")
      ->required()
      ->check(CLI::IsMember({"tau", "k"}));
  c_sw->add_option("--values", sw.values,
                   "comma-separated grid points (defaults to the declared tau grid; required "
                   "for --grid k)");
  c_sw->add_option("--categories", sw.categories,
                   "item_id,category CSV (required when item_grouping=category)");
  auto* sw_seed = c_sw->add_option("--seed", sw.seed, "override the config seed");
  c_sw->add_option("--threads", sw.threads, "override evaluation threads");
  c_sw->add_option("--out", sw.out, "write the sweep CSV here instead of stdout");

  try {
    app.parse(argc, argv);
    gr.k_seen = opt_k->count() > 0;
    tr.seed_seen = tr_seed->count() > 0;
    sw.seed_seen = sw_seed->count() > 0;

    if (c_bg->parsed()) run_build_graph(bg);
    if (c_gr->parsed()) run_group(gr);
    if (c_bm->parsed()) run_build_macro(bm);
    if (c_md->parsed()) run_merge_deltas(md);
    if (c_tr->parsed()) run_train(tr);
    if (c_ev->parsed()) run_evaluate(ev);
    if (c_sc->parsed()) run_score(sc);
    if (c_sw->parsed()) run_sweep_cmd(sw);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 1;
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 1;
  } catch (const NumericError& e) {
    std::cerr << "numeric failure: " << e.what() << "\n";
    return 3;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
