#include <algorithm>
#include <limits>
#include <map>
#include <set>
#include <vector>

#include "doctest.h"
#include "macrograph/macro_graph.hpp"
#include "oracles.hpp"

using namespace macrograph;

namespace {

// Grouping with hand-picked assignments; centroids are irrelevant to the
// registry and left empty.
Grouping fixed_grouping(std::vector<std::uint32_t> assignments, std::uint32_t K) {
  Grouping g;
  g.assignments = std::move(assignments);
  g.K = K;
  return g;
}

InteractionLog tiny_log(std::uint32_t n, std::uint32_t m,
                        std::vector<std::pair<std::uint32_t, std::uint32_t>> edges) {
  InteractionLog log;
  log.n_users = n;
  log.n_items = m;
  std::int64_t ts = 0;
  for (auto [u, i] : edges) log.records.push_back({u, i, 1, ++ts});
  return log;
}

// micro -> global macro tables for the brute-force oracle.
std::vector<std::uint32_t> macro_table(const MacroNodeRegistry& reg, Side side,
                                       std::uint32_t count) {
  std::vector<std::uint32_t> t(count);
  for (std::uint32_t v = 0; v < count; ++v) t[v] = reg.macro_of({side, v});
  return t;
}

void check_against_oracle(const MicroGraph& g, const MacroNodeRegistry& reg,
                          const InteractionLog& log) {
  auto ref = oracle::ref_graph(log);
  auto umac = macro_table(reg, Side::user, g.user_count());
  auto imac = macro_table(reg, Side::item, g.item_count());
  for (int side_i = 0; side_i < 2; ++side_i) {
    Side side = side_i == 0 ? Side::user : Side::item;
    std::uint32_t count = side == Side::user ? g.user_count() : g.item_count();
    for (std::uint32_t v = 0; v < count; ++v) {
      auto sg = build_macro_subgraph(g, reg, {side, v});
      auto want = oracle::brute_macro_weights(ref, side == Side::user, v, umac, imac);
      REQUIRE(sg.hop1.size() == want.hop1.size());
      for (const auto& [q, w] : sg.hop1) CHECK(want.hop1.at(q) == w);
      REQUIRE(sg.hop2_pairs.size() == want.hop2.size());
      for (const auto& [p, q, w] : sg.hop2_pairs) CHECK(want.hop2.at({p, q}) == w);
      // and the per-q sums really are column sums
      std::map<std::uint32_t, std::uint64_t> cols;
      for (const auto& [pq, w] : want.hop2) cols[pq.second] += w;
      REQUIRE(sg.hop2_sums.size() == cols.size());
      for (const auto& [q, w] : sg.hop2_sums) CHECK(cols.at(q) == w);
    }
  }
}

}  // namespace

TEST_SUITE("macro_graph") {

TEST_CASE("registry: global ids, rows, members, inversion") {
  // 3 users in 2 macros; 4 items in 3 macros with item 3 isolated
  auto reg = MacroNodeRegistry::build(fixed_grouping({0, 1, 0}, 2),
                                      fixed_grouping({0, 1, 2, 3}, 3));
  CHECK(reg.user_macro_count() == 2u);
  CHECK(reg.item_macro_count() == 3u);
  CHECK(reg.total_macro_count() == 5u);

  CHECK(reg.macro_of(user_node(0)) == 0u);
  CHECK(reg.macro_of(user_node(1)) == 1u);
  CHECK(reg.macro_of(user_node(2)) == 0u);
  CHECK(reg.macro_of(item_node(0)) == 2u);
  CHECK(reg.macro_of(item_node(2)) == 4u);
  CHECK(reg.macro_of(item_node(3)) == MacroNodeRegistry::kIsolated);

  CHECK(reg.side_of_macro(1) == Side::user);
  CHECK(reg.side_of_macro(2) == Side::item);
  CHECK_THROWS_AS(reg.side_of_macro(5), UsageError);

  CHECK(reg.members(0) == std::vector<std::uint32_t>{0, 2});
  CHECK(reg.members(1) == std::vector<std::uint32_t>{1});
  CHECK(reg.members(2) == std::vector<std::uint32_t>{0});
  CHECK(reg.members(4) == std::vector<std::uint32_t>{2});

  // members invert macro_of, per side
  for (std::uint32_t gid = 0; gid < reg.total_macro_count(); ++gid)
    for (std::uint32_t v : reg.members(gid))
      CHECK(reg.macro_of({reg.side_of_macro(gid), v}) == gid);

  // row layout: user macros, user isolated, item macros, item isolated
  CHECK(reg.embedding_rows() == 7u);
  CHECK(reg.embedding_row(0) == 0u);
  CHECK(reg.embedding_row(1) == 1u);
  CHECK(reg.user_isolated_row() == 2u);
  CHECK(reg.embedding_row(2) == 3u);
  CHECK(reg.embedding_row(4) == 5u);
  CHECK(reg.item_isolated_row() == 6u);
}

TEST_CASE("registry rejects assignments beyond the isolated bucket") {
  CHECK_THROWS_AS(MacroNodeRegistry::build(fixed_grouping({0, 3}, 2),
                                           fixed_grouping({0}, 1)),
                  UsageError);
}

TEST_CASE("hop-1 weights count edges into each counterpart macro") {
  auto log = tiny_log(1, 2, {{0, 0}, {0, 1}});
  auto g = MicroGraph::build(log);
  auto reg = MacroNodeRegistry::build(fixed_grouping({0}, 1), fixed_grouping({0, 0}, 1));
  auto sg = build_macro_subgraph(g, reg, user_node(0));
  REQUIRE(sg.hop1.size() == 1);
  CHECK(sg.hop1[0] == std::pair<std::uint32_t, std::uint64_t>{1, 2});
}

TEST_CASE("hop-2 weights count 2-paths, including the bounce-back to the target") {
  // u0-i0, u0-i1, u1-i0: paths u0->i0->{u0,u1}, u0->i1->{u0} = 3
  auto log = tiny_log(2, 2, {{0, 0}, {0, 1}, {1, 0}});
  auto g = MicroGraph::build(log);
  auto reg = MacroNodeRegistry::build(fixed_grouping({0, 0}, 1), fixed_grouping({0, 0}, 1));
  auto sg = build_macro_subgraph(g, reg, user_node(0));
  REQUIRE(sg.hop2_pairs.size() == 1);
  CHECK(std::get<0>(sg.hop2_pairs[0]) == 1u);  // via the item macro
  CHECK(std::get<1>(sg.hop2_pairs[0]) == 0u);  // into the user macro
  CHECK(std::get<2>(sg.hop2_pairs[0]) == 3u);
  REQUIRE(sg.hop2_sums.size() == 1);
  CHECK(sg.hop2_sums[0] == std::pair<std::uint32_t, std::uint64_t>{0, 3});

  // item targets, same graph: i0 has paths i0->u0->{i0,i1}, i0->u1->{i0} = 3
  auto sgi = build_macro_subgraph(g, reg, item_node(0));
  CHECK(sgi.hop1 == std::vector<std::pair<std::uint32_t, std::uint64_t>>{{0, 2}});
  CHECK(std::get<2>(sgi.hop2_pairs[0]) == 3u);
}

TEST_CASE("random graphs match the brute-force double sum") {
  for (std::uint64_t seed : {1u, 2u, 3u, 4u}) {
    auto log = oracle::random_bipartite(seed, 30, 24, 0.15);
    auto g = MicroGraph::build(log);
    auto users = group(behavior_embeddings(g, Side::user), 4, g.item_count(), seed);
    auto items = group(behavior_embeddings(g, Side::item), 3, g.user_count(), seed + 100);
    auto reg = MacroNodeRegistry::build(users, items);
    check_against_oracle(g, reg, log);
  }
}

TEST_CASE("weight conservation: totals equal micro degrees") {
  auto log = oracle::random_bipartite(9, 25, 20, 0.2);
  auto g = MicroGraph::build(log);
  auto users = group(behavior_embeddings(g, Side::user), 5, g.item_count(), 1);
  auto items = group(behavior_embeddings(g, Side::item), 4, g.user_count(), 2);
  auto reg = MacroNodeRegistry::build(users, items);
  for (std::uint32_t u = 0; u < g.user_count(); ++u) {
    auto sg = build_macro_subgraph(g, reg, user_node(u));
    std::uint64_t h1 = 0, h2 = 0;
    for (const auto& [q, w] : sg.hop1) h1 += w;
    for (const auto& [p, q, w] : sg.hop2_pairs) h2 += w;
    CHECK(h1 == g.degree(user_node(u)));
    std::uint64_t path2 = 0;
    for (std::uint32_t a : g.items_of(u)) path2 += g.degree(item_node(a));
    CHECK(h2 == path2);
    // sums over pairs and over columns agree
    std::uint64_t cols = 0;
    for (const auto& [q, w] : sg.hop2_sums) cols += w;
    CHECK(cols == h2);
  }
}

TEST_CASE("related_node_count: empty, hand-built, bounded") {
  MacroSubgraph sg;
  sg.target = user_node(0);
  CHECK(related_node_count(sg) == 0u);

  sg.hop1 = {{1, 4}, {2, 1}};
  sg.hop2_pairs = {{1, 0, 2}, {2, 3, 1}, {2, 4, 5}};
  refresh_hop2_sums(sg);
  CHECK(related_node_count(sg) == 5u);  // {1,2} ∪ {0,3,4}

  auto log = oracle::random_bipartite(21, 40, 35, 0.12);
  auto g = MicroGraph::build(log);
  auto users = group(behavior_embeddings(g, Side::user), 5, g.item_count(), 3);
  auto items = group(behavior_embeddings(g, Side::item), 6, g.user_count(), 4);
  auto reg = MacroNodeRegistry::build(users, items);
  for (std::uint32_t u = 0; u < g.user_count(); ++u)
    CHECK(related_node_count(build_macro_subgraph(g, reg, user_node(u))) <=
          reg.total_macro_count());
  for (std::uint32_t i = 0; i < g.item_count(); ++i)
    CHECK(related_node_count(build_macro_subgraph(g, reg, item_node(i))) <=
          reg.total_macro_count());
}

TEST_CASE("refresh_hop2_sums collapses pairs by the hop-2 macro") {
  MacroSubgraph sg;
  sg.target = user_node(0);
  sg.hop2_pairs = {{1, 0, 2}, {2, 0, 3}, {2, 5, 7}};
  refresh_hop2_sums(sg);
  CHECK(sg.hop2_sums == std::vector<std::pair<std::uint32_t, std::uint64_t>>{{0, 5}, {5, 7}});
}

TEST_CASE("delta on an empty base records the edge's own 2-path") {
  auto base_log = tiny_log(2, 2, {});
  auto g = MicroGraph::build(base_log);
  // groupings are imposed from outside: one macro per side over both nodes
  auto reg = MacroNodeRegistry::build(fixed_grouping({0, 0}, 1), fixed_grouping({0, 0}, 1));
  EdgeDeltaStore store(g, reg);
  store.accumulate({0, 1, 1, 50});
  CHECK(store.accepted_count() == 1u);
  CHECK(store.watermark() == 50);

  auto du = store.delta_for(user_node(0));
  CHECK(du.hop1 == std::map<std::uint32_t, std::uint64_t>{{1, 1}});
  CHECK(du.hop2_pairs ==
        std::map<std::pair<std::uint32_t, std::uint32_t>, std::uint64_t>{{{1, 0}, 1}});
  auto di = store.delta_for(item_node(1));
  CHECK(di.hop1 == std::map<std::uint32_t, std::uint64_t>{{0, 1}});
  CHECK(di.hop2_pairs ==
        std::map<std::pair<std::uint32_t, std::uint32_t>, std::uint64_t>{{{0, 1}, 1}});

  // untouched nodes owe nothing
  CHECK(store.delta_for(user_node(1)).empty());
  CHECK(store.delta_for(item_node(0)).empty());

  // merge(empty stock, delta) equals a rebuild over the union log
  auto union_g = MicroGraph::build(tiny_log(2, 2, {{0, 1}}));
  for (auto t : {user_node(0), item_node(1)}) {
    auto merged = merge(build_macro_subgraph(g, reg, t), store);
    auto rebuilt = build_macro_subgraph(union_g, reg, t);
    CHECK(merged.hop1 == rebuilt.hop1);
    CHECK(merged.hop2_pairs == rebuilt.hop2_pairs);
    CHECK(merged.hop2_sums == rebuilt.hop2_sums);
  }
}

TEST_CASE("accumulate rejects bad records") {
  auto log = tiny_log(2, 2, {{0, 0}});
  auto g = MicroGraph::build(log);
  auto reg = MacroNodeRegistry::build(fixed_grouping({0, 1}, 1), fixed_grouping({0, 1}, 1));
  EdgeDeltaStore store(g, reg);

  CHECK_THROWS_AS(store.accumulate({0, 1, 0, 5}), DataError);   // label 0
  CHECK_THROWS_AS(store.accumulate({2, 0, 1, 5}), DataError);   // unknown user
  CHECK_THROWS_AS(store.accumulate({0, 2, 1, 5}), DataError);   // unknown item
  CHECK_THROWS_AS(store.accumulate({0, 0, 1, 5}), DataError);   // already in base
  CHECK_THROWS_AS(store.accumulate({1, 1, 1, 5}), DataError);   // both endpoints isolated
  CHECK(store.accepted_count() == 0u);

  // a fresh edge between grouped nodes is fine once — the repeat is rejected
  auto reg2 = MacroNodeRegistry::build(fixed_grouping({0, 0}, 1), fixed_grouping({0, 0}, 1));
  EdgeDeltaStore store2(g, reg2);
  store2.accumulate({0, 1, 1, 6});
  CHECK_THROWS_AS(store2.accumulate({0, 1, 1, 7}), DataError);
  CHECK(store2.accepted_count() == 1u);
}

TEST_CASE("merge adds weights entrywise") {
  MacroSubgraph stock;
  stock.target = user_node(3);
  stock.hop1 = {{2, 5}};
  stock.hop2_pairs = {{2, 0, 4}};
  refresh_hop2_sums(stock);

  TargetDelta d;
  d.target = user_node(3);
  d.hop1[2] = 2;
  d.hop1[4] = 1;
  d.hop2_pairs[{2, 0}] = 2;
  d.hop2_pairs[{4, 1}] = 3;

  auto merged = merge(stock, d);
  CHECK(merged.hop1 ==
        std::vector<std::pair<std::uint32_t, std::uint64_t>>{{2, 7}, {4, 1}});
  CHECK(merged.hop2_pairs ==
        std::vector<std::tuple<std::uint32_t, std::uint32_t, std::uint64_t>>{{2, 0, 6},
                                                                             {4, 1, 3}});
  CHECK(merged.hop2_sums ==
        std::vector<std::pair<std::uint32_t, std::uint64_t>>{{0, 6}, {1, 3}});
}

TEST_CASE("merge with an empty delta is the identity") {
  MacroSubgraph stock;
  stock.target = item_node(2);
  stock.hop1 = {{0, 3}, {1, 1}};
  stock.hop2_pairs = {{0, 2, 2}, {1, 3, 1}};
  refresh_hop2_sums(stock);
  auto merged = merge(stock, TargetDelta{item_node(2), {}, {}});
  CHECK(merged.hop1 == stock.hop1);
  CHECK(merged.hop2_pairs == stock.hop2_pairs);
  CHECK(merged.hop2_sums == stock.hop2_sums);
}

TEST_CASE("merge refuses a delta for a different target") {
  MacroSubgraph stock;
  stock.target = user_node(0);
  CHECK_THROWS_AS(merge(stock, TargetDelta{user_node(1), {}, {}}), UsageError);
  CHECK_THROWS_AS(merge(stock, TargetDelta{item_node(0), {}, {}}), UsageError);
}

TEST_CASE("stock + accepted deltas equals a rebuild over the union") {
  // stock = first 70% of a random log; the rest becomes delta candidates
  auto log = oracle::random_log(31, 20, 16, 260, 0.7);
  std::size_t cut = log.records.size() * 7 / 10;
  InteractionLog stock_log;
  stock_log.n_users = log.n_users;
  stock_log.n_items = log.n_items;
  stock_log.records.assign(log.records.begin(), log.records.begin() + cut);

  auto g = MicroGraph::build(stock_log);
  auto users = group(behavior_embeddings(g, Side::user), 4, g.item_count(), 7);
  auto items = group(behavior_embeddings(g, Side::item), 4, g.user_count(), 8);
  auto reg = MacroNodeRegistry::build(users, items);

  EdgeDeltaStore store(g, reg);
  InteractionLog union_log = stock_log;
  std::size_t accepted = 0;
  for (std::size_t k = cut; k < log.records.size(); ++k) {
    const auto& r = log.records[k];
    if (r.label != 1) continue;
    try {
      store.accumulate(r);
    } catch (const DataError&) {
      continue;  // duplicate of stock/accepted, or isolated endpoint
    }
    union_log.records.push_back(r);
    ++accepted;
  }
  REQUIRE(accepted >= 10);  // the fixture actually exercises the path

  auto union_g = MicroGraph::build(union_log);
  for (std::uint32_t u = 0; u < g.user_count(); ++u) {
    auto merged = merge(build_macro_subgraph(g, reg, user_node(u)), store);
    auto rebuilt = build_macro_subgraph(union_g, reg, user_node(u));
    CHECK(merged.hop1 == rebuilt.hop1);
    CHECK(merged.hop2_pairs == rebuilt.hop2_pairs);
    CHECK(merged.hop2_sums == rebuilt.hop2_sums);
  }
  for (std::uint32_t i = 0; i < g.item_count(); ++i) {
    auto merged = merge(build_macro_subgraph(g, reg, item_node(i)), store);
    auto rebuilt = build_macro_subgraph(union_g, reg, item_node(i));
    CHECK(merged.hop1 == rebuilt.hop1);
    CHECK(merged.hop2_pairs == rebuilt.hop2_pairs);
    CHECK(merged.hop2_sums == rebuilt.hop2_sums);
  }
  // watermark tracks the max accepted timestamp
  std::int64_t max_ts = std::numeric_limits<std::int64_t>::min();
  for (std::size_t k = cut; k < union_log.records.size(); ++k)
    max_ts = std::max(max_ts, union_log.records[k].timestamp);
  CHECK(store.watermark() == max_ts);
}

}  // TEST_SUITE
