#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "macrograph/common.hpp"

namespace macrograph {

struct Interaction {
  std::uint32_t user = 0;
  std::uint32_t item = 0;
  std::uint8_t label = 0;       // 0 or 1
  std::int64_t timestamp = 0;   // seconds
};

// Timestamped labeled events, dense-indexed.  Iteration order is file order.
struct InteractionLog {
  std::vector<Interaction> records;
  std::uint32_t n_users = 0;
  std::uint32_t n_items = 0;
  // dense index -> raw id, retained for reporting; empty when the log was
  // produced programmatically rather than parsed.
  std::vector<std::string> user_ids;
  std::vector<std::string> item_ids;

  std::size_t size() const { return records.size(); }
};

// Parses the documented CSV: header `user_id,item_id,label,timestamp`, then
// one record per line.  Raw ids are arbitrary strings and get dense indices
// in first-appearance order.  Throws DataError with a line number on any
// malformed line.
InteractionLog load_interactions(std::istream& in);
InteractionLog load_interactions_file(const std::string& path);

// Two-column remap table (`node,raw_id`, u<dense>/i<dense> keys), users then
// items, both ascending — byte-stable.
void write_id_map(const InteractionLog& log, std::ostream& out);
// Inverse of write_id_map; fills user_ids/item_ids of an existing log shell.
void read_id_map(std::istream& in, std::vector<std::string>& user_ids,
                 std::vector<std::string>& item_ids);

}  // namespace macrograph
