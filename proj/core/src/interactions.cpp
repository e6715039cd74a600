#include "macrograph/interactions.hpp"

#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>
#include <unordered_map>

namespace macrograph {
namespace {

// Splits on ',' without any quoting — ids in this format must not contain
// commas, which load_interactions enforces implicitly by field count.
std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    std::size_t pos = line.find(',', start);
    if (pos == std::string::npos) {
      out.push_back(line.substr(start));
      break;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
  return out;
}

std::int64_t parse_int(const std::string& s, std::size_t line_no, const char* what) {
  std::int64_t v = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || p != s.data() + s.size())
    throw DataError("line " + std::to_string(line_no) + ": non-integer " + what + " '" + s + "'");
  return v;
}

std::string strip_cr(std::string s) {
  if (!s.empty() && s.back() == '\r') s.pop_back();
  return s;
}

}  // namespace

InteractionLog load_interactions(std::istream& in) {
  std::string line;
  if (!std::getline(in, line))
    throw DataError("line 1: missing header (expected 'user_id,item_id,label,timestamp')");
  line = strip_cr(line);
  if (line != "user_id,item_id,label,timestamp")
    throw DataError("line 1: bad header '" + line +
                    "' (expected 'user_id,item_id,label,timestamp')");

  InteractionLog log;
  std::unordered_map<std::string, std::uint32_t> user_index, item_index;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    line = strip_cr(line);
    if (line.empty()) continue;  // tolerate blank lines
    auto fields = split_csv(line);
    if (fields.size() != 4)
      throw DataError("line " + std::to_string(line_no) + ": expected 4 fields, got " +
                      std::to_string(fields.size()));
    if (fields[0].empty() || fields[1].empty())
      throw DataError("line " + std::to_string(line_no) + ": empty id");
    std::int64_t label = parse_int(fields[2], line_no, "label");
    if (label != 0 && label != 1)
      throw DataError("line " + std::to_string(line_no) + ": label must be 0 or 1, got " +
                      fields[2]);
    std::int64_t ts = parse_int(fields[3], line_no, "timestamp");

    auto user_it = user_index.find(fields[0]);
    if (user_it == user_index.end()) {
      user_it = user_index.emplace(fields[0], static_cast<std::uint32_t>(log.user_ids.size())).first;
      log.user_ids.push_back(fields[0]);
    }
    auto item_it = item_index.find(fields[1]);
    if (item_it == item_index.end()) {
      item_it = item_index.emplace(fields[1], static_cast<std::uint32_t>(log.item_ids.size())).first;
      log.item_ids.push_back(fields[1]);
    }
    log.records.push_back({user_it->second, item_it->second,
                           static_cast<std::uint8_t>(label), ts});
  }
  log.n_users = static_cast<std::uint32_t>(log.user_ids.size());
  log.n_items = static_cast<std::uint32_t>(log.item_ids.size());
  return log;
}

InteractionLog load_interactions_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw DataError("cannot open interactions file: " + path);
  return load_interactions(f);
}

void write_id_map(const InteractionLog& log, std::ostream& out) {
  out << "node,raw_id\n";
  for (std::uint32_t u = 0; u < log.n_users; ++u) out << 'u' << u << ',' << log.user_ids[u] << '\n';
  for (std::uint32_t i = 0; i < log.n_items; ++i) out << 'i' << i << ',' << log.item_ids[i] << '\n';
}

void read_id_map(std::istream& in, std::vector<std::string>& user_ids,
                 std::vector<std::string>& item_ids) {
  user_ids.clear();
  item_ids.clear();
  std::string line;
  if (!std::getline(in, line) || strip_cr(line) != "node,raw_id")
    throw DataError("id map: bad header");
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    line = strip_cr(line);
    if (line.empty()) continue;
    std::size_t comma = line.find(',');
    if (comma == std::string::npos || comma < 2)
      throw DataError("id map line " + std::to_string(line_no) + ": malformed");
    char side = line[0];
    std::uint32_t idx = static_cast<std::uint32_t>(
        parse_int(line.substr(1, comma - 1), line_no, "node index"));
    std::string raw = line.substr(comma + 1);
    auto& vec = (side == 'u') ? user_ids : item_ids;
    if (side != 'u' && side != 'i')
      throw DataError("id map line " + std::to_string(line_no) + ": bad node key");
    if (idx != vec.size())
      throw DataError("id map line " + std::to_string(line_no) + ": out-of-order index");
    vec.push_back(raw);
  }
}

}  // namespace macrograph
