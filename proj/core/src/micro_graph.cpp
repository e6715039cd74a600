#include "macrograph/micro_graph.hpp"

#include <algorithm>

namespace macrograph {

MicroGraph MicroGraph::build(const InteractionLog& log) {
  for (const auto& r : log.records) {
    if (r.user >= log.n_users || r.item >= log.n_items)
      throw UsageError("interaction indices out of range");
  }
  // Distinct positive pairs; duplicates collapse to one micro edge.
  std::vector<std::pair<std::uint32_t, std::uint32_t>> pairs;
  for (const auto& r : log.records)
    if (r.label == 1) pairs.emplace_back(r.user, r.item);
  std::sort(pairs.begin(), pairs.end());
  pairs.erase(std::unique(pairs.begin(), pairs.end()), pairs.end());

  MicroGraph g;
  g.n_users_ = log.n_users;
  g.n_items_ = log.n_items;

  g.user_offsets_.assign(std::size_t(g.n_users_) + 1, 0);
  g.item_offsets_.assign(std::size_t(g.n_items_) + 1, 0);
  for (auto [u, i] : pairs) {
    ++g.user_offsets_[u + 1];
    ++g.item_offsets_[i + 1];
  }
  for (std::size_t u = 0; u < g.n_users_; ++u) g.user_offsets_[u + 1] += g.user_offsets_[u];
  for (std::size_t i = 0; i < g.n_items_; ++i) g.item_offsets_[i + 1] += g.item_offsets_[i];

  g.user_targets_.resize(pairs.size());
  g.item_targets_.resize(pairs.size());
  {
    std::vector<std::size_t> cursor(g.user_offsets_.begin(), g.user_offsets_.end() - 1);
    for (auto [u, i] : pairs) g.user_targets_[cursor[u]++] = i;  // sorted: pairs are
  }
  {
    std::vector<std::size_t> cursor(g.item_offsets_.begin(), g.item_offsets_.end() - 1);
    for (auto [u, i] : pairs) g.item_targets_[cursor[i]++] = u;  // ascending u per item
  }
  return g;
}

std::span<const std::uint32_t> MicroGraph::items_of(std::uint32_t user) const {
  if (user >= n_users_) throw UsageError("user id out of range: " + std::to_string(user));
  return {user_targets_.data() + user_offsets_[user], user_offsets_[user + 1] - user_offsets_[user]};
}

std::span<const std::uint32_t> MicroGraph::users_of(std::uint32_t item) const {
  if (item >= n_items_) throw UsageError("item id out of range: " + std::to_string(item));
  return {item_targets_.data() + item_offsets_[item], item_offsets_[item + 1] - item_offsets_[item]};
}

std::span<const std::uint32_t> MicroGraph::adjacency(NodeRef v) const {
  return v.side == Side::user ? items_of(v.id) : users_of(v.id);
}

void MicroGraph::check_node(NodeRef v) const {
  std::uint32_t bound = v.side == Side::user ? n_users_ : n_items_;
  if (v.id >= bound) throw UsageError("node id out of range: " + node_name(v));
}

bool MicroGraph::has_edge(std::uint32_t user, std::uint32_t item) const {
  auto adj = items_of(user);
  return std::binary_search(adj.begin(), adj.end(), item);
}

std::vector<std::uint32_t> MicroGraph::neighbors(NodeRef v, int k) const {
  check_node(v);
  if (k != 1 && k != 2) throw UsageError("hop count must be 1 or 2, got " + std::to_string(k));
  auto direct = adjacency(v);
  if (k == 1) return {direct.begin(), direct.end()};
  // Union of 1-hop neighborhoods of the 1-hop set; lands on v's own side and
  // includes v itself when reachable.
  std::vector<std::uint8_t> seen(v.side == Side::user ? n_users_ : n_items_, 0);
  std::vector<std::uint32_t> out;
  for (std::uint32_t mid : direct) {
    auto back = adjacency({other_side(v.side), mid});
    for (std::uint32_t b : back) {
      if (!seen[b]) {
        seen[b] = 1;
        out.push_back(b);
      }
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<std::uint32_t> recent_sequence(const InteractionLog& log, NodeRef v,
                                           std::size_t L, std::int64_t cutoff) {
  if (L < 1) throw UsageError("recent_sequence: L must be >= 1");
  struct Hit {
    std::int64_t ts;
    std::size_t order;
    std::uint32_t counterpart;
  };
  std::vector<Hit> hits;
  for (std::size_t idx = 0; idx < log.records.size(); ++idx) {
    const auto& r = log.records[idx];
    if (r.label != 1 || r.timestamp >= cutoff) continue;
    if (v.side == Side::user && r.user == v.id) hits.push_back({r.timestamp, idx, r.item});
    else if (v.side == Side::item && r.item == v.id) hits.push_back({r.timestamp, idx, r.user});
  }
  std::sort(hits.begin(), hits.end(),
            [](const Hit& a, const Hit& b) { return std::tie(a.ts, a.order) < std::tie(b.ts, b.order); });
  std::size_t start = hits.size() > L ? hits.size() - L : 0;
  std::vector<std::uint32_t> out;
  for (std::size_t i = start; i < hits.size(); ++i) out.push_back(hits[i].counterpart);
  return out;
}

RecentIndex::RecentIndex(const InteractionLog& log)
    : by_user_(log.n_users), by_item_(log.n_items) {
  for (std::size_t idx = 0; idx < log.records.size(); ++idx) {
    const auto& r = log.records[idx];
    if (r.label != 1) continue;
    by_user_[r.user].push_back({r.timestamp, idx, r.item});
    by_item_[r.item].push_back({r.timestamp, idx, r.user});
  }
  auto lt = [](const Event& a, const Event& b) {
    return std::tie(a.ts, a.order) < std::tie(b.ts, b.order);
  };
  for (auto& v : by_user_) std::sort(v.begin(), v.end(), lt);
  for (auto& v : by_item_) std::sort(v.begin(), v.end(), lt);
}

std::vector<std::uint32_t> RecentIndex::recent(NodeRef v, std::size_t L,
                                               std::int64_t cutoff) const {
  if (L < 1) throw UsageError("RecentIndex::recent: L must be >= 1");
  const auto& lists = v.side == Side::user ? by_user_ : by_item_;
  if (v.id >= lists.size()) throw UsageError("node id out of range: " + node_name(v));
  const auto& events = lists[v.id];
  // First event with ts >= cutoff bounds the eligible prefix.
  auto end = std::lower_bound(events.begin(), events.end(), cutoff,
                              [](const Event& e, std::int64_t t) { return e.ts < t; });
  std::size_t count = static_cast<std::size_t>(end - events.begin());
  std::size_t start = count > L ? count - L : 0;
  std::vector<std::uint32_t> out;
  out.reserve(count - start);
  for (std::size_t i = start; i < count; ++i) out.push_back(events[i].counterpart);
  return out;
}

}  // namespace macrograph
