#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <tuple>

namespace macrograph {

// Which side of the bipartite graph a node lives on.
enum class Side : std::uint8_t { user = 0, item = 1 };

inline Side other_side(Side s) { return s == Side::user ? Side::item : Side::user; }

// A typed node id.  Plain micro-node indices are ambiguous without the side,
// so every cross-module query carries one of these.
struct NodeRef {
  Side side = Side::user;
  std::uint32_t id = 0;

  friend bool operator==(const NodeRef& a, const NodeRef& b) {
    return a.side == b.side && a.id == b.id;
  }
  friend bool operator<(const NodeRef& a, const NodeRef& b) {
    return std::tie(a.side, a.id) < std::tie(b.side, b.id);
  }
};

inline NodeRef user_node(std::uint32_t id) { return {Side::user, id}; }
inline NodeRef item_node(std::uint32_t id) { return {Side::item, id}; }

// "u12" / "i7"; used in file formats and error messages.
inline std::string node_name(NodeRef v) {
  return (v.side == Side::user ? "u" : "i") + std::to_string(v.id);
}

// Bad or inconsistent input data (files, ids, shapes read from disk).
struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// API misuse: out-of-range arguments, mismatched shapes, bad preconditions.
struct UsageError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Non-finite values where finite ones are required (training blow-up etc).
struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace macrograph
