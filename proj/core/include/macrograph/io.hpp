#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "macrograph/macro_graph.hpp"
#include "macrograph/trainer.hpp"

namespace macrograph {

// graph.bin: the dense interaction log (magic+version header, fixed-width
// little-endian records).  The CSR graph is rebuilt on load — it is a pure
// function of the log.
void save_log(const InteractionLog& log, std::ostream& out);
InteractionLog load_log(std::istream& in);
void save_log_file(const InteractionLog& log, const std::string& path);
InteractionLog load_log_file(const std::string& path);

// Grouping: CSV `node_id,macro_index` (dense ids, ascending) next to a JSON
// metadata blob (side, mode, K, J, iterations, seed).  Both byte-stable.
void save_grouping(const Grouping& g, Side side, const std::string& csv_path,
                   const std::string& meta_path);
Grouping load_grouping(const std::string& csv_path, const std::string& meta_path,
                       Side* side_out = nullptr);

// MacroSubgraph JSON: {"target": "u0", "hop1": {macro-id: weight, ...},
// "hop2": [[p, q, weight], ...]} — keys in numeric order, compact dump.
std::string subgraph_to_json(const MacroSubgraph& sg);
MacroSubgraph subgraph_from_json(const std::string& text);
void save_subgraph(const MacroSubgraph& sg, const std::string& path);
MacroSubgraph load_subgraph(const std::string& path);

// Category map CSV `item_id,category` (raw ids, resolved through the log's
// id map).  Returns per-item dense category indices; category names sorted
// lexicographically define the index order.
struct CategoryMap {
  std::vector<std::uint32_t> categories;  // per item, dense
  std::vector<std::string> names;         // index -> name
};
CategoryMap load_category_map(std::istream& in, const InteractionLog& log);
CategoryMap load_category_map_file(const std::string& path, const InteractionLog& log);

// Atomic-ish file write: temp file in the same directory, then rename.
void write_file_atomic(const std::string& path, const std::string& contents);
std::string read_file(const std::string& path);

std::string format_double(double x);  // shortest round-trip, deterministic

}  // namespace macrograph
