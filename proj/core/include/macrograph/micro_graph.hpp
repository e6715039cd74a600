#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "macrograph/interactions.hpp"

namespace macrograph {

// Bipartite adjacency over the *positive* interactions, deduplicated, CSR on
// both sides.  Immutable once built; safe for concurrent reads.
class MicroGraph {
 public:
  static MicroGraph build(const InteractionLog& log);

  std::uint32_t user_count() const { return n_users_; }
  std::uint32_t item_count() const { return n_items_; }
  std::size_t edge_count() const { return user_targets_.size(); }

  // Sorted ascending.
  std::span<const std::uint32_t> items_of(std::uint32_t user) const;
  std::span<const std::uint32_t> users_of(std::uint32_t item) const;
  std::span<const std::uint32_t> adjacency(NodeRef v) const;

  std::uint32_t degree(NodeRef v) const { return static_cast<std::uint32_t>(adjacency(v).size()); }
  bool has_edge(std::uint32_t user, std::uint32_t item) const;

  // k-hop neighbor *set*, sorted.  k=1: direct counterparts.  k=2: union of
  // the 1-hop neighborhoods of the 1-hop set — same side as v, and v itself
  // is a member whenever it is reachable (literal set definition).
  std::vector<std::uint32_t> neighbors(NodeRef v, int k) const;

 private:
  std::uint32_t n_users_ = 0, n_items_ = 0;
  std::vector<std::size_t> user_offsets_{0};   // n+1
  std::vector<std::uint32_t> user_targets_;    // items, sorted per user
  std::vector<std::size_t> item_offsets_{0};   // m+1
  std::vector<std::uint32_t> item_targets_;    // users, sorted per item

  void check_node(NodeRef v) const;
};

// The last L positive counterpart ids of `v` with timestamp strictly below
// `cutoff`, chronological (most recent last), ties broken by log order.
// Linear scan over the log; the reference implementation.
std::vector<std::uint32_t> recent_sequence(const InteractionLog& log, NodeRef v,
                                           std::size_t L, std::int64_t cutoff);

// Same answers as recent_sequence but O(log deg) per query: per-node event
// lists sorted by (timestamp, log order), binary-searched on the cutoff.
class RecentIndex {
 public:
  explicit RecentIndex(const InteractionLog& log);
  std::vector<std::uint32_t> recent(NodeRef v, std::size_t L, std::int64_t cutoff) const;

 private:
  struct Event {
    std::int64_t ts;
    std::size_t order;          // position in the log, tie-breaker
    std::uint32_t counterpart;
  };
  std::vector<std::vector<Event>> by_user_, by_item_;
};

}  // namespace macrograph
