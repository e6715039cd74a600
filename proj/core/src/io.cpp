#include "macrograph/io.hpp"

#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include <nlohmann/json.hpp>

namespace macrograph {

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

std::string format_double(double x) {
  // Shortest representation that round-trips; stable across runs.
  char buf[64];
  for (int prec = 1; prec <= 17; ++prec) {
    std::snprintf(buf, sizeof buf, "%.*g", prec, x);
    double back = 0.0;
    std::sscanf(buf, "%lf", &back);
    if (back == x) break;
  }
  return buf;
}

void write_file_atomic(const std::string& path, const std::string& contents) {
  fs::path target(path);
  fs::path tmp = target;
  tmp += ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw DataError("cannot write file: " + tmp.string());
    f.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    if (!f) throw DataError("short write: " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, target, ec);
  if (ec) throw DataError("cannot move " + tmp.string() + " into place: " + ec.message());
}

std::string read_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw DataError("cannot open file: " + path);
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

namespace {

constexpr std::uint32_t kLogMagic = 0x4D474C47u;  // "MGLG"
constexpr std::uint32_t kLogVersion = 1;

void put_u32(std::ostream& o, std::uint32_t v) { o.write(reinterpret_cast<const char*>(&v), 4); }
void put_u64(std::ostream& o, std::uint64_t v) { o.write(reinterpret_cast<const char*>(&v), 8); }
void put_i64(std::ostream& o, std::int64_t v) { o.write(reinterpret_cast<const char*>(&v), 8); }

std::uint32_t get_u32(std::istream& i) {
  std::uint32_t v = 0;
  i.read(reinterpret_cast<char*>(&v), 4);
  return v;
}
std::uint64_t get_u64(std::istream& i) {
  std::uint64_t v = 0;
  i.read(reinterpret_cast<char*>(&v), 8);
  return v;
}
std::int64_t get_i64(std::istream& i) {
  std::int64_t v = 0;
  i.read(reinterpret_cast<char*>(&v), 8);
  return v;
}

void put_string(std::ostream& o, const std::string& s) {
  put_u64(o, s.size());
  o.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::string get_string(std::istream& i) {
  std::uint64_t n = get_u64(i);
  if (n > (1ull << 32)) throw DataError("log file: absurd string length");
  std::string s(n, '\0');
  i.read(s.data(), static_cast<std::streamsize>(n));
  return s;
}

}  // namespace

void save_log(const InteractionLog& log, std::ostream& out) {
  put_u32(out, kLogMagic);
  put_u32(out, kLogVersion);
  put_u32(out, log.n_users);
  put_u32(out, log.n_items);
  put_u64(out, log.records.size());
  for (const auto& r : log.records) {
    put_u32(out, r.user);
    put_u32(out, r.item);
    out.put(static_cast<char>(r.label));
    put_i64(out, r.timestamp);
  }
  // id tables travel with the log so downstream stages can report raw ids
  put_u64(out, log.user_ids.size());
  for (const auto& s : log.user_ids) put_string(out, s);
  put_u64(out, log.item_ids.size());
  for (const auto& s : log.item_ids) put_string(out, s);
}

InteractionLog load_log(std::istream& in) {
  if (get_u32(in) != kLogMagic) throw DataError("not an interaction log file");
  if (get_u32(in) != kLogVersion) throw DataError("unsupported log file version");
  InteractionLog log;
  log.n_users = get_u32(in);
  log.n_items = get_u32(in);
  std::uint64_t n = get_u64(in);
  if (n > (1ull << 40)) throw DataError("log file: absurd record count");
  log.records.reserve(n);
  for (std::uint64_t k = 0; k < n; ++k) {
    Interaction r;
    r.user = get_u32(in);
    r.item = get_u32(in);
    int c = in.get();
    if (c != 0 && c != 1) throw DataError("log file: bad label byte");
    r.label = static_cast<std::uint8_t>(c);
    r.timestamp = get_i64(in);
    if (r.user >= log.n_users || r.item >= log.n_items)
      throw DataError("log file: record index out of range");
    log.records.push_back(r);
  }
  std::uint64_t nu = get_u64(in);
  if (nu != log.n_users) throw DataError("log file: user id table size mismatch");
  for (std::uint64_t k = 0; k < nu; ++k) log.user_ids.push_back(get_string(in));
  std::uint64_t ni = get_u64(in);
  if (ni != log.n_items) throw DataError("log file: item id table size mismatch");
  for (std::uint64_t k = 0; k < ni; ++k) log.item_ids.push_back(get_string(in));
  if (!in) throw DataError("log file: truncated");
  return log;
}

void save_log_file(const InteractionLog& log, const std::string& path) {
  std::ostringstream ss(std::ios::binary);
  save_log(log, ss);
  write_file_atomic(path, ss.str());
}

InteractionLog load_log_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw DataError("cannot open log file: " + path);
  return load_log(f);
}

void save_grouping(const Grouping& g, Side side, const std::string& csv_path,
                   const std::string& meta_path) {
  std::ostringstream csv;
  csv << "node_id,macro_index\n";
  for (std::size_t v = 0; v < g.assignments.size(); ++v)
    csv << v << ',' << g.assignments[v] << '\n';
  write_file_atomic(csv_path, csv.str());

  ordered_json meta;
  meta["side"] = side == Side::user ? "user" : "item";
  meta["mode"] = g.mode;
  meta["K"] = g.K;
  meta["objective"] = g.objective;
  meta["iterations"] = g.iterations;
  meta["seed"] = g.seed;
  write_file_atomic(meta_path, meta.dump(2) + "\n");
}

Grouping load_grouping(const std::string& csv_path, const std::string& meta_path,
                       Side* side_out) {
  Grouping g;
  {
    std::string meta_text = read_file(meta_path);
    nlohmann::json meta;
    try {
      meta = nlohmann::json::parse(meta_text);
    } catch (const nlohmann::json::exception& e) {
      throw DataError("grouping metadata " + meta_path + ": " + e.what());
    }
    try {
      g.K = meta.at("K").get<std::uint32_t>();
      g.mode = meta.at("mode").get<std::string>();
      g.objective = meta.at("objective").get<double>();
      g.iterations = meta.at("iterations").get<std::uint32_t>();
      g.seed = meta.at("seed").get<std::uint64_t>();
      if (side_out) {
        std::string s = meta.at("side").get<std::string>();
        if (s != "user" && s != "item") throw DataError("grouping metadata: bad side");
        *side_out = s == "user" ? Side::user : Side::item;
      }
    } catch (const nlohmann::json::exception& e) {
      throw DataError("grouping metadata " + meta_path + ": " + e.what());
    }
  }
  std::istringstream csv(read_file(csv_path));
  std::string line;
  if (!std::getline(csv, line) || (line != "node_id,macro_index" && line != "node_id,macro_index\r"))
    throw DataError("grouping csv " + csv_path + ": bad header");
  std::size_t line_no = 1;
  while (std::getline(csv, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::size_t comma = line.find(',');
    if (comma == std::string::npos)
      throw DataError("grouping csv line " + std::to_string(line_no) + ": malformed");
    std::uint64_t node = 0, macro = 0;
    auto r1 = std::from_chars(line.data(), line.data() + comma, node);
    auto r2 = std::from_chars(line.data() + comma + 1, line.data() + line.size(), macro);
    if (r1.ec != std::errc{} || r1.ptr != line.data() + comma || r2.ec != std::errc{} ||
        r2.ptr != line.data() + line.size())
      throw DataError("grouping csv line " + std::to_string(line_no) + ": malformed");
    if (node != g.assignments.size())
      throw DataError("grouping csv line " + std::to_string(line_no) + ": out-of-order node id");
    if (macro > g.K)
      throw DataError("grouping csv line " + std::to_string(line_no) +
                      ": macro index exceeds K");
    g.assignments.push_back(static_cast<std::uint32_t>(macro));
  }
  return g;
}

std::string subgraph_to_json(const MacroSubgraph& sg) {
  ordered_json j;
  j["target"] = node_name(sg.target);
  ordered_json hop1 = ordered_json::object();
  for (const auto& [q, w] : sg.hop1) hop1[std::to_string(q)] = w;  // already sorted numerically
  j["hop1"] = std::move(hop1);
  ordered_json hop2 = ordered_json::array();
  for (const auto& [p, q, w] : sg.hop2_pairs) hop2.push_back({p, q, w});
  j["hop2"] = std::move(hop2);
  return j.dump() + "\n";
}

MacroSubgraph subgraph_from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("subgraph json: ") + e.what());
  }
  MacroSubgraph sg;
  try {
    std::string t = j.at("target").get<std::string>();
    if (t.size() < 2 || (t[0] != 'u' && t[0] != 'i'))
      throw DataError("subgraph json: bad target '" + t + "'");
    std::uint32_t id = 0;
    auto r = std::from_chars(t.data() + 1, t.data() + t.size(), id);
    if (r.ec != std::errc{} || r.ptr != t.data() + t.size())
      throw DataError("subgraph json: bad target '" + t + "'");
    sg.target = {t[0] == 'u' ? Side::user : Side::item, id};

    std::map<std::uint32_t, std::uint64_t> hop1;
    for (const auto& [key, val] : j.at("hop1").items()) {
      std::uint32_t q = 0;
      auto rr = std::from_chars(key.data(), key.data() + key.size(), q);
      if (rr.ec != std::errc{} || rr.ptr != key.data() + key.size())
        throw DataError("subgraph json: bad hop1 key '" + key + "'");
      std::uint64_t w = val.get<std::uint64_t>();
      if (w == 0) throw DataError("subgraph json: zero hop1 weight");
      hop1[q] = w;
    }
    sg.hop1.assign(hop1.begin(), hop1.end());

    std::map<std::pair<std::uint32_t, std::uint32_t>, std::uint64_t> hop2;
    for (const auto& e : j.at("hop2")) {
      if (!e.is_array() || e.size() != 3) throw DataError("subgraph json: bad hop2 entry");
      std::uint32_t p = e[0].get<std::uint32_t>(), q = e[1].get<std::uint32_t>();
      std::uint64_t w = e[2].get<std::uint64_t>();
      if (w == 0) throw DataError("subgraph json: zero hop2 weight");
      if (hop2.count({p, q})) throw DataError("subgraph json: duplicate hop2 pair");
      hop2[{p, q}] = w;
    }
    for (const auto& [pq, w] : hop2) sg.hop2_pairs.emplace_back(pq.first, pq.second, w);
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("subgraph json: ") + e.what());
  }
  refresh_hop2_sums(sg);
  return sg;
}

void save_subgraph(const MacroSubgraph& sg, const std::string& path) {
  write_file_atomic(path, subgraph_to_json(sg));
}

MacroSubgraph load_subgraph(const std::string& path) {
  return subgraph_from_json(read_file(path));
}

CategoryMap load_category_map(std::istream& in, const InteractionLog& log) {
  std::string line;
  if (!std::getline(in, line))
    throw DataError("category map: missing header (expected 'item_id,category')");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "item_id,category")
    throw DataError("category map: bad header '" + line + "' (expected 'item_id,category')");

  std::map<std::string, std::uint32_t> item_index;
  for (std::uint32_t i = 0; i < log.n_items; ++i) item_index[log.item_ids[i]] = i;

  std::vector<std::string> per_item(log.n_items);
  std::vector<bool> seen(log.n_items, false);
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::size_t comma = line.find(',');
    if (comma == std::string::npos)
      throw DataError("category map line " + std::to_string(line_no) + ": malformed");
    std::string raw = line.substr(0, comma);
    std::string cat = line.substr(comma + 1);
    if (cat.empty())
      throw DataError("category map line " + std::to_string(line_no) + ": empty category");
    auto it = item_index.find(raw);
    if (it == item_index.end()) continue;  // categories for unknown items are ignored
    if (seen[it->second])
      throw DataError("category map line " + std::to_string(line_no) + ": duplicate item '" +
                      raw + "'");
    seen[it->second] = true;
    per_item[it->second] = cat;
  }
  for (std::uint32_t i = 0; i < log.n_items; ++i)
    if (!seen[i])
      throw DataError("category map: no category for item '" + log.item_ids[i] + "'");

  CategoryMap out;
  std::map<std::string, std::uint32_t> name_index;  // lexicographic -> dense
  for (std::uint32_t i = 0; i < log.n_items; ++i) name_index[per_item[i]] = 0;
  std::uint32_t next = 0;
  for (auto& [name, idx] : name_index) {
    idx = next++;
    out.names.push_back(name);
  }
  out.categories.resize(log.n_items);
  for (std::uint32_t i = 0; i < log.n_items; ++i) out.categories[i] = name_index[per_item[i]];
  return out;
}

CategoryMap load_category_map_file(const std::string& path, const InteractionLog& log) {
  std::ifstream f(path);
  if (!f) throw DataError("cannot open category map: " + path);
  return load_category_map(f, log);
}

}  // namespace macrograph
