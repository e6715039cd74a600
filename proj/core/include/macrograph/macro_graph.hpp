#pragma once

#include <cstdint>
#include <limits>
#include <map>
#include <set>
#include <tuple>
#include <utility>
#include <vector>

#include "macrograph/grouping.hpp"

namespace macrograph {

// Macro nodes of both sides under one global id space: user macros take
// [0, n_user_macros), item macros follow.  Member lists partition the
// non-isolated micro nodes of each side.
class MacroNodeRegistry {
 public:
  static MacroNodeRegistry build(const Grouping& users, const Grouping& items);

  std::uint32_t user_macro_count() const { return n_user_; }
  std::uint32_t item_macro_count() const { return n_item_; }
  std::uint32_t total_macro_count() const { return n_user_ + n_item_; }

  // Global macro id of a micro node, or kIsolated when it has no edges.
  static constexpr std::uint32_t kIsolated = 0xffffffff;
  std::uint32_t macro_of(NodeRef v) const;

  Side side_of_macro(std::uint32_t gid) const;
  const std::vector<std::uint32_t>& members(std::uint32_t gid) const;

  // Embedding-table row layout: user macros, the user isolated bucket, item
  // macros, the item isolated bucket — (n_user + n_item + 2) rows total.
  std::size_t embedding_rows() const { return std::size_t(n_user_) + n_item_ + 2; }
  std::size_t embedding_row(std::uint32_t gid) const;
  std::size_t user_isolated_row() const { return n_user_; }
  std::size_t item_isolated_row() const { return std::size_t(n_user_) + 1 + n_item_; }

 private:
  std::uint32_t n_user_ = 0, n_item_ = 0;
  std::vector<std::uint32_t> user_assign_, item_assign_;  // micro -> local macro or K
  std::vector<std::vector<std::uint32_t>> members_;       // indexed by global id
};

// Per-target macro edge weights.  hop1: counterpart-side macro -> number of
// target edges landing in it.  hop2_pairs: (hop-1 macro p, hop-2 macro q) ->
// number of 2-paths target->a->b with a in p's members, b in q's.  Weights
// are positive; zero entries are never stored.  Sorted vectors, so files and
// iteration order are deterministic.
struct MacroSubgraph {
  NodeRef target;
  std::vector<std::pair<std::uint32_t, std::uint64_t>> hop1;
  std::vector<std::tuple<std::uint32_t, std::uint32_t, std::uint64_t>> hop2_pairs;
  std::vector<std::pair<std::uint32_t, std::uint64_t>> hop2_sums;  // per q, over p

  bool empty() const { return hop1.empty() && hop2_pairs.empty(); }
};

// Recomputes hop2_sums from hop2_pairs (column sums).
void refresh_hop2_sums(MacroSubgraph& sg);

MacroSubgraph build_macro_subgraph(const MicroGraph& g, const MacroNodeRegistry& reg,
                                   NodeRef target);

// Distinct macro ids across hop1 and hop2_sums; bounded by the registry size.
std::size_t related_node_count(const MacroSubgraph& sg);

// Increments owed to one target by the not-yet-merged interactions.
struct TargetDelta {
  NodeRef target;
  std::map<std::uint32_t, std::uint64_t> hop1;
  std::map<std::pair<std::uint32_t, std::uint32_t>, std::uint64_t> hop2_pairs;

  bool empty() const { return hop1.empty() && hop2_pairs.empty(); }
};

// Accumulates real-time positive edges as per-target weight increments on top
// of a frozen base graph + registry.  merge(stock, delta) then equals a full
// rebuild over base ∪ accepted edges — including 2-paths running through
// *other* delta edges, which is why the store keeps its own overlay
// adjacency.  Single writer; merging reads a consistent snapshot.
class EdgeDeltaStore {
 public:
  explicit EdgeDeltaStore(const MicroGraph& base, const MacroNodeRegistry& reg)
      : base_(&base), reg_(&reg) {}

  // Rejects label-0 records, out-of-range ids, and duplicates of an existing
  // positive edge (base or already accepted) with DataError.
  void accumulate(const Interaction& x);

  std::size_t accepted_count() const { return accepted_.size(); }
  std::int64_t watermark() const { return watermark_; }

  // Empty delta when the target owes nothing.
  TargetDelta delta_for(NodeRef target) const;
  std::vector<NodeRef> touched_targets() const;

 private:
  const MicroGraph* base_;
  const MacroNodeRegistry* reg_;
  std::set<std::pair<std::uint32_t, std::uint32_t>> accepted_;  // (user,item)
  std::map<std::uint32_t, std::vector<std::uint32_t>> overlay_user_, overlay_item_;
  std::map<NodeRef, TargetDelta> deltas_;
  std::int64_t watermark_ = std::numeric_limits<std::int64_t>::min();

  std::vector<std::uint32_t> union_adjacency(NodeRef v) const;
  TargetDelta& delta_slot(NodeRef target);
};

// Entrywise integer addition; hop2_sums recomputed.  Errors when the delta
// belongs to a different target.
MacroSubgraph merge(const MacroSubgraph& stock, const TargetDelta& delta);
MacroSubgraph merge(const MacroSubgraph& stock, const EdgeDeltaStore& store);

}  // namespace macrograph
