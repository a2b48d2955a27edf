#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <sstream>

#include "hcdist/dhc.hpp"
#include "hcdist/graph.hpp"
#include "hcdist/verify.hpp"

using namespace hcdist;

namespace {

/// Members of color c in index order.
std::vector<NodeId> cycle_of(const CycleState& st, std::uint32_t c) {
  std::vector<NodeId> m;
  for (NodeId v = 0; v < st.color.size(); ++v)
    if (st.color[v] == c) m.push_back(v);
  std::sort(m.begin(), m.end(), [&](NodeId a, NodeId b) { return st.idx[a] < st.idx[b]; });
  return m;
}

CycleState state_from_cycles(std::size_t n, const std::vector<std::vector<NodeId>>& cycles) {
  CycleState st(n);
  for (std::uint32_t c = 0; c < cycles.size(); ++c) {
    const auto& cy = cycles[c];
    const auto s = static_cast<std::uint32_t>(cy.size());
    for (std::uint32_t i = 0; i < s; ++i) {
      const NodeId v = cy[i];
      st.color[v] = c + 1;
      st.idx[v] = i + 1;
      st.size[v] = s;
      st.pred[v] = cy[(i + s - 1) % s];
      st.succ[v] = cy[(i + 1) % s];
    }
  }
  return st;
}

bool same_bridges(std::vector<Bridge> a, std::vector<Bridge> b) {
  auto by_key = [](const Bridge& l, const Bridge& r) { return bridge_key(l) < bridge_key(r); };
  std::sort(a.begin(), a.end(), by_key);
  std::sort(b.begin(), b.end(), by_key);
  return a == b;
}

}  // namespace

TEST(Colors, SingleColorAndRangeChecks) {
  auto c = assign_colors(50, 1, 3);
  EXPECT_TRUE(std::all_of(c.begin(), c.end(), [](std::uint32_t x) { return x == 1; }));
  EXPECT_THROW(assign_colors(10, 0, 1), std::invalid_argument);
  EXPECT_THROW(assign_colors(10, 11, 1), std::invalid_argument);
}

TEST(Colors, ClassSizesConcentrate) {
  int good = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    auto s = class_sizes(assign_colors(4096, 64, seed), 64);
    if (std::all_of(s.begin() + 1, s.end(), [](std::size_t x) { return x >= 32 && x <= 96; })) ++good;
  }
  // Per seed, all 64 classes land in range with probability 0.9957
  // (binomial tails), so 97 or more of 100 seeds pass with probability 0.999.
  EXPECT_GE(good, 97);
}

TEST(Colors, ManyColorsLeaveEmptyClasses) {
  auto s = class_sizes(assign_colors(1000, 1000, 9), 1000);
  const auto empty = std::count(s.begin() + 1, s.end(), std::size_t{0});
  // About 1000/e classes stay empty.
  EXPECT_GT(empty, 300);
  EXPECT_LT(empty, 440);
}

TEST(Colors, CountsAndLevels) {
  EXPECT_EQ(dhc1_num_colors(4096), 64u);
  EXPECT_EQ(dhc1_num_colors(1000), 32u);
  EXPECT_EQ(dhc2_num_colors(4096, 0.5), 64u);
  EXPECT_EQ(dhc2_num_colors(4096, 0.4), 148u);  // 4096^0.6 = 147.03
  EXPECT_EQ(merge_levels(1), 0u);
  EXPECT_EQ(merge_levels(2), 1u);
  EXPECT_EQ(merge_levels(3), 2u);
  EXPECT_EQ(merge_levels(64), 6u);
  EXPECT_EQ(merge_levels(65), 7u);
  EXPECT_EQ(merge_levels(148), 8u);
  EXPECT_EQ(halved_color(5, 1), 3u);
  EXPECT_EQ(halved_color(6, 1), 3u);
  EXPECT_EQ(halved_color(148, 8), 1u);
  for (std::uint32_t c = 1; c < 300; ++c)
    for (std::uint32_t h = 0; h < 6; ++h) EXPECT_EQ(halved_color(halved_color(c, h), 1), halved_color(c, h + 1));
}

TEST(CycleStateCheck, DetectsBrokenLinks) {
  Graph g = complete_graph(7);
  CycleState st = state_from_cycles(7, {{0, 3, 5}, {1, 2, 6, 4}});
  EXPECT_FALSE(find_broken_cycle(g, st).has_value());
  CycleState bad = st;
  bad.idx[3] = 3;
  EXPECT_EQ(find_broken_cycle(g, bad), std::optional<std::uint32_t>(1));
  bad = st;
  bad.succ[6] = 1;
  EXPECT_EQ(find_broken_cycle(g, bad), std::optional<std::uint32_t>(2));
  Graph c7 = cycle_graph(7);
  EXPECT_TRUE(find_broken_cycle(c7, st).has_value());  // 0-3 is not an edge of C7
}

TEST(Hypernodes, SmallExamples) {
  Graph g = path_graph(6);  // 0-1-2-3-4-5
  auto e = build_hypernode_graph(g, {{0, 1}, {2, 3}, {4, 5}});
  ASSERT_EQ(e.size(), 2u);
  EXPECT_EQ(e[0].i, 0u);
  EXPECT_EQ(e[0].j, 1u);
  EXPECT_EQ(e[0].terminal_pairs, (std::vector<Edge>{{1, 2}}));
  EXPECT_EQ(e[1].i, 1u);
  EXPECT_EQ(e[1].j, 2u);
  EXPECT_EQ(e[1].terminal_pairs, (std::vector<Edge>{{3, 4}}));

  auto k = build_hypernode_graph(complete_graph(4), {{0, 1}, {2, 3}});
  ASSERT_EQ(k.size(), 1u);
  EXPECT_EQ(k[0].terminal_pairs.size(), 4u);
}

TEST(Hypernodes, MatchFourPairBruteForce) {
  const std::size_t n = 1024;
  Graph g = generate_gnp({n, 0.05, 12});
  std::vector<HyperNode> hs;
  for (NodeId v = 0; v + 1 < n; v += 32) hs.push_back({v, v + 1});
  std::map<std::pair<std::uint32_t, std::uint32_t>, std::vector<Edge>> expect;
  for (std::uint32_t i = 0; i < hs.size(); ++i) {
    for (std::uint32_t j = i + 1; j < hs.size(); ++j) {
      for (NodeId s : {hs[i].u, hs[i].v})
        for (NodeId t : {hs[j].u, hs[j].v})
          if (g.has_edge(s, t)) expect[{i, j}].emplace_back(s, t);
    }
  }
  auto got = build_hypernode_graph(g, hs);
  ASSERT_EQ(got.size(), expect.size());
  for (const auto& e : got) {
    auto want = expect.at({e.i, e.j});
    auto have = e.terminal_pairs;
    std::sort(want.begin(), want.end());
    std::sort(have.begin(), have.end());
    EXPECT_EQ(have, want);
  }
}

TEST(Dhc1, CompleteGraphWithEightColors) {
  // Classes of about 8 nodes; the rotation algorithm closes K8 in about 89%
  // of runs, so all eight classes close in roughly a third of the seeds.
  Graph g = complete_graph(64);
  DhcOptions opt;
  opt.num_colors = 8;
  int ok = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    auto r = dhc1(g, seed, opt);
    EXPECT_EQ(r.num_colors, 8u);
    if (!r.report.success) continue;
    ++ok;
    EXPECT_TRUE(check_certificate(g, r.certificate).ok());
    EXPECT_GT(r.report.phase_total("phase1:"), 0u);
    EXPECT_GT(r.report.phase_total("phase2:"), 0u);
    EXPECT_LE(r.report.max_message_bits, r.report.bandwidth_bits);
  }
  EXPECT_GE(ok, 3);
}

TEST(Dhc1, DisconnectedOrEmptyClassFails) {
  Graph two = Graph::from_edges(8, std::vector<Edge>{{0, 1}, {1, 2}, {2, 3}, {3, 0}, {4, 5}, {5, 6}, {6, 7}, {7, 4}});
  DhcOptions opt;
  opt.num_colors = 1;
  auto r = dhc1(two, 1, opt);
  EXPECT_EQ(r.report.failure_reason, FailureReason::PartitionDisconnected);
  opt.num_colors = 8;  // eight colors over eight nodes leave some class empty
  auto e = dhc1(complete_graph(8), 2, opt);
  EXPECT_FALSE(e.report.success);
}

TEST(Bridges, SpliceFollowsTheCrossEdges) {
  // C_i = x, y, z and C_j = a, b, c with cross edges (x, a), (y, b).
  const NodeId x = 0, y = 1, z = 2, a = 3, b = 4, c = 5;
  auto merged = splice_bridge({x, y, z}, {a, b, c}, {x, y, a, b});
  EXPECT_EQ(merged, (std::vector<NodeId>{y, z, x, a, c, b}));  // x -> a -> c -> b -> y -> z
  // w2 = pred(w) keeps C_j's orientation.
  auto same = splice_bridge({x, y, z}, {a, b, c}, {x, y, b, a});
  EXPECT_EQ(same, (std::vector<NodeId>{y, z, x, b, c, a}));
}

TEST(Bridges, MergedIndexIsABijection) {
  for (std::uint32_t s = 1; s < 12; ++s) {
    for (std::uint32_t anchor = 1; anchor <= s; ++anchor) {
      for (bool rev : {false, true}) {
        std::set<std::uint32_t> seen;
        for (std::uint32_t i = 1; i <= s; ++i) seen.insert(merged_index(i, anchor, 7, rev, s));
        EXPECT_EQ(seen.size(), s);
        EXPECT_EQ(*seen.begin(), 8u);
        EXPECT_EQ(*seen.rbegin(), 7 + s);
        EXPECT_EQ(merged_index(anchor, anchor, 7, rev, s), 8u);
      }
    }
  }
}

TEST(Bridges, EnumerationOnSmallExample) {
  // Cycles 0-1-2 and 3-4-5; only 0~3 and 1~4 cross.
  std::vector<Edge> e{{0, 1}, {1, 2}, {2, 0}, {3, 4}, {4, 5}, {5, 3}, {0, 3}, {1, 4}};
  Graph g = Graph::from_edges(6, e);
  auto br = enumerate_bridges(g, {0, 1, 2}, {3, 4, 5});
  ASSERT_EQ(br.size(), 1u);
  EXPECT_EQ(br[0], (Bridge{0, 1, 3, 4}));
}

TEST(Bridges, RandomSplicesAreHamiltonian) {
  int merged = 0;
  for (std::uint64_t seed = 0; merged < 200; ++seed) {
    ASSERT_LT(seed, 1000u);
    NodeRng rng(seed, 0);
    const std::uint32_t si = 3 + static_cast<std::uint32_t>(rng.below(10));
    const std::uint32_t sj = 3 + static_cast<std::uint32_t>(rng.below(10));
    const std::size_t n = si + sj;
    std::vector<NodeId> perm(n);
    for (NodeId v = 0; v < n; ++v) perm[v] = v;
    for (std::size_t i = n - 1; i > 0; --i) std::swap(perm[i], perm[rng.below(i + 1)]);
    std::vector<NodeId> ci(perm.begin(), perm.begin() + si), cj(perm.begin() + si, perm.end());
    std::vector<Edge> edges;
    for (std::uint32_t i = 0; i < si; ++i) edges.emplace_back(ci[i], ci[(i + 1) % si]);
    for (std::uint32_t i = 0; i < sj; ++i) edges.emplace_back(cj[i], cj[(i + 1) % sj]);
    for (NodeId u : ci)
      for (NodeId v : cj)
        if (rng.unit() < 0.3) edges.emplace_back(u, v);
    Graph g = Graph::from_edges(n, edges);
    auto bridges = enumerate_bridges(g, ci, cj);
    if (bridges.empty()) continue;
    const Bridge& br = bridges[rng.below(bridges.size())];
    auto cyc = splice_bridge(ci, cj, br);
    ASSERT_TRUE(check_certificate(g, certificate_from_cycle(n, cyc)).ok()) << "seed " << seed;
    ++merged;
  }
}

TEST(Dhc2, DiscoveryAndSelectionMatchBruteForce) {
  const std::size_t n = 512;
  const double delta = 0.5;
  const double p = 3 * std::log(512.0) / std::sqrt(512.0);
  int checked_levels = 0, successes = 0;
  for (std::uint64_t seed = 0; seed < 4; ++seed) {
    Graph g = generate_gnp({n, p, seed});
    std::map<std::uint32_t, std::vector<Bridge>> expected;  // by active color
    std::map<std::uint32_t, std::vector<Bridge>> found;
    std::map<std::uint32_t, std::uint32_t> color_of_a;
    Dhc2Hooks hooks;
    hooks.before_level = [&](std::uint32_t, const CycleState& st, std::uint32_t count) {
      expected.clear();
      found.clear();
      for (std::uint32_t c = 1; c + 1 <= count; c += 2)
        expected[c] = enumerate_bridges(g, cycle_of(st, c), cycle_of(st, c + 1));
      for (NodeId v = 0; v < n; ++v) color_of_a[v] = st.color[v];
    };
    hooks.on_candidate = [&](std::uint32_t, const Bridge& br) { found[color_of_a[br.a]].push_back(br); };
    hooks.on_winner = [&](std::uint32_t, std::uint32_t color, const Bridge& br) {
      ASSERT_FALSE(expected[color].empty());
      EXPECT_TRUE(same_bridges(found[color], expected[color])) << "color " << color;
      EXPECT_EQ(br, expected[color].front());
      ++checked_levels;
    };
    auto r = dhc2(g, seed, delta, {}, hooks);
    if (!r.report.success) continue;
    ++successes;
    EXPECT_TRUE(check_certificate(g, r.certificate).ok());
    ASSERT_EQ(r.levels.size(), merge_levels(r.num_colors));
    for (const auto& lv : r.levels) {
      EXPECT_EQ(lv.bridges, lv.pairs);
      EXPECT_TRUE(lv.cycles_valid);
      EXPECT_EQ(lv.live_cycles, halved_color(r.num_colors, lv.level));
    }
    EXPECT_LE(r.report.max_message_bits, r.report.bandwidth_bits);
  }
  EXPECT_GT(successes, 0);
  EXPECT_GT(checked_levels, 20);
}

TEST(Dhc2, EveryLevelKeepsCyclesValid) {
  const std::size_t n = 1024;
  const double p = 4 * std::log(1024.0) / 32;
  int ok = 0;
  for (std::uint64_t seed = 0; seed < 4; ++seed) {
    Graph g = generate_gnp({n, p, seed});
    std::uint32_t last_level = 0;
    Dhc2Hooks hooks;
    hooks.before_level = [&](std::uint32_t level, const CycleState& st, std::uint32_t) {
      EXPECT_FALSE(find_broken_cycle(g, st).has_value()) << "before level " << level;
      last_level = level;
    };
    auto r = dhc2(g, seed, 0.5, {}, hooks);
    if (!r.report.success) continue;
    ++ok;
    EXPECT_EQ(last_level, merge_levels(32));
    EXPECT_TRUE(check_certificate(g, r.certificate).ok());
    EXPECT_EQ(r.report.rounds, r.report.phase_total("phase1:") + r.report.phase_total("phase2:"));
  }
  EXPECT_GE(ok, 3);
}

TEST(Dhc2, SingleColorSkipsMerging) {
  Graph g = complete_graph(30);
  DhcOptions opt;
  opt.num_colors = 1;
  auto r = dhc2(g, 4, 0.5, opt);
  ASSERT_TRUE(r.report.success);
  EXPECT_TRUE(r.levels.empty());
  EXPECT_TRUE(check_certificate(g, r.certificate).ok());
}

TEST(Dhc2, DeterministicTranscript) {
  Graph g = generate_gnp({256, 0.6, 5});
  std::ostringstream a, b;
  DhcOptions oa, ob;
  oa.transcript = &a;
  ob.transcript = &b;
  auto ra = dhc2(g, 8, 0.5, oa);
  auto rb = dhc2(g, 8, 0.5, ob);
  EXPECT_EQ(ra.report, rb.report);
  EXPECT_EQ(ra.certificate, rb.certificate);
  EXPECT_EQ(a.str(), b.str());
  EXPECT_FALSE(a.str().empty());
}
