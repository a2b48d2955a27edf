#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "hcdist/graph.hpp"
#include "hcdist/rotation.hpp"
#include "hcdist/verify.hpp"

using namespace hcdist;

namespace {

double ln(double x) { return std::log(x); }

/// Path order of a whole-graph DRA reconstructed from indices; asserts it
/// is a simple graph path.
void expect_simple_path(const Graph& g, const RotationProtocol& p) {
  std::vector<NodeId> all(g.size());
  for (NodeId v = 0; v < g.size(); ++v) all[v] = v;
  auto path = path_snapshot(p, all);
  ASSERT_FALSE(path.empty());
  for (NodeId v : path) ASSERT_NE(v, kNoNode);
  for (std::size_t i = 0; i + 1 < path.size(); ++i) {
    ASSERT_TRUE(g.has_edge(path[i], path[i + 1]));
    ASSERT_EQ(p.link_out(path[i]), path[i + 1]);
    ASSERT_EQ(p.link_in(path[i + 1]), path[i]);
  }
  ASSERT_TRUE(p.is_head(path.back()));
}

}  // namespace

TEST(RotateIndex, ReversesSuffixAfterHit) {
  // Head h = 5 hits j = 2: old 3,4,5 become 5,4,3; old v3 is the new head.
  EXPECT_EQ(rotate_index(1, 5, 2), 1u);
  EXPECT_EQ(rotate_index(2, 5, 2), 2u);
  EXPECT_EQ(rotate_index(3, 5, 2), 5u);
  EXPECT_EQ(rotate_index(4, 5, 2), 4u);
  EXPECT_EQ(rotate_index(5, 5, 2), 3u);
}

TEST(RotateIndex, PredecessorHitIsIdentity) {
  for (std::uint32_t h = 2; h < 30; ++h)
    for (std::uint32_t i = 1; i <= h; ++i) EXPECT_EQ(rotate_index(i, h, h - 1), i);
}

TEST(RotateIndex, InvolutionOnSegment) {
  for (std::uint32_t h = 1; h < 40; ++h)
    for (std::uint32_t j = 0; j < h; ++j)
      for (std::uint32_t i = 1; i <= h + 2; ++i) EXPECT_EQ(rotate_index(rotate_index(i, h, j), h, j), i);
}

TEST(UnusedEdges, DrawAndRemove) {
  UnusedEdges u({4, 8, 15, 16});
  NodeRng rng(1, 2);
  EXPECT_TRUE(u.remove(8));
  EXPECT_FALSE(u.remove(8));
  std::set<NodeId> seen;
  while (!u.empty()) seen.insert(u.draw(rng));
  EXPECT_EQ(seen, (std::set<NodeId>{4, 15, 16}));
}

TEST(Dra, TriangleSucceeds) {
  Graph g = complete_graph(3);
  auto r = run_dra(g, 5);
  ASSERT_TRUE(r.report.success);
  EXPECT_TRUE(check_certificate(g, r.certificate).ok());
}

TEST(Dra, TooSmallOrDisconnectedFails) {
  auto r2 = run_dra(complete_graph(2), 1);
  EXPECT_FALSE(r2.report.success);
  EXPECT_EQ(r2.report.failure_reason, FailureReason::UnusedExhausted);
  auto rd = run_dra(Graph::from_edges(6, std::vector<Edge>{{0, 1}, {1, 2}, {2, 0}, {3, 4}, {4, 5}, {5, 3}}), 1);
  EXPECT_FALSE(rd.report.success);
  EXPECT_EQ(rd.report.failure_reason, FailureReason::PartitionDisconnected);
}

TEST(Dra, CycleGraphYieldsItsOnlyCycle) {
  Graph g = cycle_graph(9);
  // A unique Hamiltonian cycle may still be missed if the head strays; any
  // success must be the cycle itself.
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    auto r = run_dra(g, seed);
    if (!r.report.success) continue;
    EXPECT_TRUE(check_certificate(g, r.certificate).ok());
  }
}

TEST(Dra, StepCountEqualsProgressMessages) {
  Graph g = generate_gnp({120, 0.3, 3});
  std::uint64_t progress = 0;
  auto r = run_dra(g, 4, {}, [&](RotationProtocol& p) {
    p.before_draw = [&](const RotationProtocol&, NodeId) { ++progress; };
  });
  ASSERT_TRUE(r.report.success);
  EXPECT_EQ(r.report.steps, progress);
  EXPECT_LE(r.report.steps, step_budget(120));
}

TEST(Dra, PathStaysSimpleAndEdgesAreConsumedMonotonically) {
  Graph g = generate_gnp({80, 0.25, 21});
  std::uint64_t rotations = 0;
  int successes = 0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    std::vector<std::size_t> last_size(80);
    for (NodeId v = 0; v < 80; ++v) last_size[v] = g.degree(v);
    std::set<std::pair<NodeId, NodeId>> drawn;
    auto r = run_dra(g, seed, {}, [&](RotationProtocol& p) {
      p.before_draw = [&](const RotationProtocol& q, NodeId) {
        for (NodeId v = 0; v < 80; ++v) {
          ASSERT_LE(q.unused(v).size(), last_size[v]);
          last_size[v] = q.unused(v).size();
        }
      };
      p.on_event = [&](const RotationProtocol& q, const RotationEvent& e) {
        expect_simple_path(g, q);
        ASSERT_EQ(q.index(e.head), e.h);
        auto key = std::minmax(e.head, e.target);
        ASSERT_TRUE(drawn.insert({key.first, key.second}).second) << "edge drawn twice";
        ASSERT_FALSE(q.unused(e.head).contains(e.target));
        if (e.kind == RotationEventKind::Rotate) ++rotations;
      };
    });
    if (r.report.success) ++successes;
  }
  EXPECT_GT(successes, 0);
  EXPECT_GT(rotations, 0u);
}

TEST(Dra, PredecessorEdgeIsNeverRedrawn) {
  // Every path edge was consumed at both ends when it was drawn, so a
  // rotation with j = h - 1 cannot occur; rotate_index covers that case.
  Graph g = complete_graph(6);
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    run_dra(g, seed, {}, [&](RotationProtocol& p) {
      p.on_event = [&](const RotationProtocol&, const RotationEvent& e) {
        if (e.kind == RotationEventKind::Rotate) {
          EXPECT_NE(e.j + 1, e.h);
        }
      };
    });
  }
}

TEST(Dra, RandomGraphSuccessRate) {
  const std::size_t n = 1000;
  const double p = 12 * ln(n) / n;
  int ok = 0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    Graph g = generate_gnp({n, p, seed});
    auto r = run_dra(g, seed + 1000);
    if (r.report.success) {
      ++ok;
      EXPECT_TRUE(check_certificate(g, r.certificate).ok());
      EXPECT_LE(r.report.steps, static_cast<std::uint64_t>(std::ceil(7 * n * ln(n))));
    }
  }
  EXPECT_GE(ok, 8);
}

TEST(Sequential, CompleteAndCycleGraphs) {
  // Small graphs can exhaust the head's edges; successes must be valid.
  Graph k4 = complete_graph(4);
  int ok = 0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    auto r = sequential_rotation_solve(k4, seed);
    if (!r.success) continue;
    ++ok;
    EXPECT_TRUE(check_certificate(k4, certificate_from_cycle(4, r.cycle)).ok());
  }
  EXPECT_GT(ok, 0);

  for (std::size_t n : {3u, 5u, 12u}) {
    Graph c = cycle_graph(n);
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      auto s = sequential_rotation_solve(c, seed);
      if (!s.success) continue;
      auto cert = certificate_from_cycle(n, s.cycle);
      EXPECT_TRUE(check_certificate(c, cert).ok());
    }
  }
}

TEST(Sequential, RandomGraphSuccessRate) {
  const std::size_t n = 500;
  const double p = 15 * ln(n) / n;
  int ok = 0;
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    Graph g = generate_gnp({n, p, seed});
    auto r = sequential_rotation_solve(g, seed);
    if (r.success) {
      ++ok;
      EXPECT_TRUE(check_certificate(g, certificate_from_cycle(n, r.cycle)).ok());
    }
  }
  EXPECT_GE(ok, 48);  // >= 95% of 50
}

TEST(Sequential, LockstepWithDistributed) {
  int compared = 0;
  for (std::size_t n = 3; n <= 64; n += 3) {
    for (std::uint64_t seed = 0; seed < 4; ++seed) {
      Graph g = generate_gnp({n, std::min(1.0, 4 * ln(n) / n), seed + 17 * n});
      if (!diameter(g)) continue;
      auto d = run_dra(g, seed);
      auto s = sequential_rotation_solve(g, seed);
      ASSERT_EQ(d.report.success, s.success) << "n=" << n << " seed=" << seed;
      ASSERT_EQ(d.report.steps, s.steps);
      if (s.success) {
        EXPECT_EQ(d.certificate, certificate_from_cycle(n, s.cycle));
        ++compared;
      } else {
        EXPECT_EQ(d.report.failure_reason, s.failure);
      }
    }
  }
  EXPECT_GT(compared, 20);
}
