#include "macrograph/macro_graph.hpp"

#include <algorithm>

namespace macrograph {

MacroNodeRegistry MacroNodeRegistry::build(const Grouping& users, const Grouping& items) {
  MacroNodeRegistry reg;
  reg.n_user_ = users.K;
  reg.n_item_ = items.K;
  reg.user_assign_ = users.assignments;
  reg.item_assign_ = items.assignments;
  reg.members_.assign(std::size_t(reg.n_user_) + reg.n_item_, {});
  for (std::uint32_t v = 0; v < reg.user_assign_.size(); ++v) {
    std::uint32_t k = reg.user_assign_[v];
    if (k == users.K) continue;  // isolated
    if (k > users.K) throw UsageError("registry: user assignment out of range");
    reg.members_[k].push_back(v);
  }
  for (std::uint32_t v = 0; v < reg.item_assign_.size(); ++v) {
    std::uint32_t k = reg.item_assign_[v];
    if (k == items.K) continue;
    if (k > items.K) throw UsageError("registry: item assignment out of range");
    reg.members_[std::size_t(reg.n_user_) + k].push_back(v);
  }
  return reg;
}

std::uint32_t MacroNodeRegistry::macro_of(NodeRef v) const {
  const auto& asg = v.side == Side::user ? user_assign_ : item_assign_;
  if (v.id >= asg.size()) throw UsageError("macro_of: node out of range: " + node_name(v));
  std::uint32_t local = asg[v.id];
  std::uint32_t K = v.side == Side::user ? n_user_ : n_item_;
  if (local == K) return kIsolated;
  return v.side == Side::user ? local : n_user_ + local;
}

Side MacroNodeRegistry::side_of_macro(std::uint32_t gid) const {
  if (gid >= total_macro_count()) throw UsageError("macro id out of range");
  return gid < n_user_ ? Side::user : Side::item;
}

const std::vector<std::uint32_t>& MacroNodeRegistry::members(std::uint32_t gid) const {
  if (gid >= total_macro_count()) throw UsageError("macro id out of range");
  return members_[gid];
}

std::size_t MacroNodeRegistry::embedding_row(std::uint32_t gid) const {
  if (gid >= total_macro_count()) throw UsageError("macro id out of range");
  // user macros keep their index; item macros shift past the user isolated row
  return gid < n_user_ ? gid : std::size_t(gid) + 1;
}

void refresh_hop2_sums(MacroSubgraph& sg) {
  std::map<std::uint32_t, std::uint64_t> sums;
  for (const auto& [p, q, w] : sg.hop2_pairs) sums[q] += w;
  sg.hop2_sums.assign(sums.begin(), sums.end());
}

MacroSubgraph build_macro_subgraph(const MicroGraph& g, const MacroNodeRegistry& reg,
                                   NodeRef target) {
  MacroSubgraph sg;
  sg.target = target;
  std::map<std::uint32_t, std::uint64_t> hop1;
  std::map<std::pair<std::uint32_t, std::uint32_t>, std::uint64_t> hop2;
  Side counterpart = other_side(target.side);
  for (std::uint32_t a : g.adjacency(target)) {
    std::uint32_t p = reg.macro_of({counterpart, a});
    // a is adjacent to the target, so it cannot be isolated
    hop1[p] += 1;
    for (std::uint32_t b : g.adjacency({counterpart, a})) {
      std::uint32_t q = reg.macro_of({target.side, b});
      hop2[{p, q}] += 1;
    }
  }
  sg.hop1.assign(hop1.begin(), hop1.end());
  for (const auto& [pq, w] : hop2) sg.hop2_pairs.emplace_back(pq.first, pq.second, w);
  refresh_hop2_sums(sg);
  return sg;
}

std::size_t related_node_count(const MacroSubgraph& sg) {
  std::set<std::uint32_t> ids;
  for (const auto& [q, w] : sg.hop1) ids.insert(q);
  for (const auto& [q, w] : sg.hop2_sums) ids.insert(q);
  return ids.size();
}

std::vector<std::uint32_t> EdgeDeltaStore::union_adjacency(NodeRef v) const {
  auto base = base_->adjacency(v);
  std::vector<std::uint32_t> out(base.begin(), base.end());
  const auto& overlay = v.side == Side::user ? overlay_user_ : overlay_item_;
  auto it = overlay.find(v.id);
  if (it != overlay.end()) out.insert(out.end(), it->second.begin(), it->second.end());
  return out;
}

TargetDelta& EdgeDeltaStore::delta_slot(NodeRef target) {
  auto it = deltas_.find(target);
  if (it == deltas_.end()) it = deltas_.emplace(target, TargetDelta{target, {}, {}}).first;
  return it->second;
}

void EdgeDeltaStore::accumulate(const Interaction& x) {
  if (x.label != 1) throw DataError("delta edge must be a positive interaction");
  if (x.user >= base_->user_count() || x.item >= base_->item_count())
    throw DataError("delta edge references unknown node (u" + std::to_string(x.user) +
                    ", i" + std::to_string(x.item) + ")");
  if (base_->has_edge(x.user, x.item) || accepted_.count({x.user, x.item}))
    throw DataError("duplicate positive edge rejected: (u" + std::to_string(x.user) +
                    ", i" + std::to_string(x.item) + ")");

  std::uint32_t xu = reg_->macro_of(user_node(x.user));
  std::uint32_t xi = reg_->macro_of(item_node(x.item));
  // A node incident to any accepted edge is non-isolated in the union graph,
  // but the grouping was frozen before this edge arrived: a previously
  // isolated endpoint has no macro node to charge the weight to.
  if (xu == MacroNodeRegistry::kIsolated || xi == MacroNodeRegistry::kIsolated)
    throw DataError("delta edge touches a node outside every macro node "
                    "(isolated at grouping time); rebuild the grouping instead");

  // Neighborhoods in the union graph *before* this edge joins it.
  auto n_of_u = union_adjacency(user_node(x.user));   // items
  auto n_of_i = union_adjacency(item_node(x.item));   // users

  // New 2-paths created by edge (u,i):
  //   target u:  u->i->b for b in N(i) ∪ {u}
  //   target i:  i->u->s for s in N(u) ∪ {i}
  //   target t in N(i):  t->i->u
  //   target s in N(u):  s->u->i
  {
    TargetDelta& d = delta_slot(user_node(x.user));
    d.hop1[xi] += 1;
    for (std::uint32_t b : n_of_i) d.hop2_pairs[{xi, reg_->macro_of(user_node(b))}] += 1;
    d.hop2_pairs[{xi, xu}] += 1;  // the b = u path over the new edge itself
  }
  {
    TargetDelta& d = delta_slot(item_node(x.item));
    d.hop1[xu] += 1;
    for (std::uint32_t s : n_of_u) d.hop2_pairs[{xu, reg_->macro_of(item_node(s))}] += 1;
    d.hop2_pairs[{xu, xi}] += 1;
  }
  for (std::uint32_t t : n_of_i)
    delta_slot(user_node(t)).hop2_pairs[{xi, xu}] += 1;
  for (std::uint32_t s : n_of_u)
    delta_slot(item_node(s)).hop2_pairs[{xu, xi}] += 1;

  accepted_.insert({x.user, x.item});
  overlay_user_[x.user].push_back(x.item);
  overlay_item_[x.item].push_back(x.user);
  if (x.timestamp > watermark_) watermark_ = x.timestamp;
}

TargetDelta EdgeDeltaStore::delta_for(NodeRef target) const {
  auto it = deltas_.find(target);
  if (it == deltas_.end()) return TargetDelta{target, {}, {}};
  return it->second;
}

std::vector<NodeRef> EdgeDeltaStore::touched_targets() const {
  std::vector<NodeRef> out;
  out.reserve(deltas_.size());
  for (const auto& [t, d] : deltas_) out.push_back(t);
  return out;
}

MacroSubgraph merge(const MacroSubgraph& stock, const TargetDelta& delta) {
  if (!(stock.target == delta.target))
    throw UsageError("merge: delta belongs to " + node_name(delta.target) +
                     ", stock to " + node_name(stock.target));
  MacroSubgraph out;
  out.target = stock.target;
  std::map<std::uint32_t, std::uint64_t> hop1(delta.hop1);
  for (const auto& [q, w] : stock.hop1) hop1[q] += w;
  std::map<std::pair<std::uint32_t, std::uint32_t>, std::uint64_t> hop2(delta.hop2_pairs);
  for (const auto& [p, q, w] : stock.hop2_pairs) hop2[{p, q}] += w;
  out.hop1.assign(hop1.begin(), hop1.end());
  for (const auto& [pq, w] : hop2) out.hop2_pairs.emplace_back(pq.first, pq.second, w);
  refresh_hop2_sums(out);
  return out;
}

MacroSubgraph merge(const MacroSubgraph& stock, const EdgeDeltaStore& store) {
  return merge(stock, store.delta_for(stock.target));
}

}  // namespace macrograph
