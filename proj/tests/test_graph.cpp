#include <gtest/gtest.h>

#include <numeric>
#include <set>

#include "oracles.hpp"
#include "poisnet/graph.hpp"
#include "poisnet/rng.hpp"

using namespace poisnet;

namespace {

Adjacency directed(std::size_t n, std::initializer_list<std::pair<std::size_t, std::size_t>> arcs) {
  Adjacency a(n, true);
  for (auto [i, j] : arcs) a.set(i, j);
  return a;
}

Adjacency random_directed(std::size_t n, double p, Rng& rng) {
  Adjacency a(n, true);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      if (i != j && rng.uniform() < p) a.set(i, j);
  return a;
}

std::vector<std::vector<int>> dense(const Adjacency& a) {
  std::vector<std::vector<int>> m(a.size(), std::vector<int>(a.size(), 0));
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < a.size(); ++j) m[i][j] = a(i, j) ? 1 : 0;
  return m;
}

}  // namespace

TEST(Components, Examples) {
  EXPECT_EQ(weakly_connected_components(Adjacency(3, true)).size(), 3u);
  const auto path = weakly_connected_components(directed(3, {{0, 1}, {1, 2}}));
  ASSERT_EQ(path.size(), 1u);
  EXPECT_EQ(path[0], (std::vector<std::size_t>{0, 1, 2}));
  const auto two = weakly_connected_components(directed(4, {{0, 1}, {3, 2}}));
  ASSERT_EQ(two.size(), 2u);
  EXPECT_EQ(two[0].size(), 2u);
  EXPECT_EQ(two[1].size(), 2u);
}

TEST(Components, PartitionNodesLargestFirst) {
  Rng rng(2);
  for (int trial = 0; trial < 50; ++trial) {
    const auto a = random_directed(15, 0.07, rng);
    const auto comps = weakly_connected_components(a);
    std::set<std::size_t> seen;
    std::size_t total = 0;
    for (std::size_t k = 0; k < comps.size(); ++k) {
      if (k > 0) EXPECT_GE(comps[k - 1].size(), comps[k].size());
      for (auto v : comps[k]) seen.insert(v);
      total += comps[k].size();
    }
    EXPECT_EQ(total, 15u);
    EXPECT_EQ(seen.size(), 15u);
  }
}

TEST(OutDegree, Examples) {
  const auto star = directed(4, {{0, 1}, {0, 2}, {0, 3}});
  EXPECT_EQ(out_degree(star), (std::vector<std::size_t>{3, 0, 0, 0}));
  EXPECT_EQ(out_degree(Adjacency(3, true)), (std::vector<std::size_t>{0, 0, 0}));
  Adjacency complete(4, true);
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t j = 0; j < 4; ++j)
      if (i != j) complete.set(i, j);
  EXPECT_EQ(out_degree(complete), (std::vector<std::size_t>{3, 3, 3, 3}));
}

TEST(Betweenness, Examples) {
  EXPECT_EQ(betweenness(directed(3, {{0, 1}, {1, 2}})), (std::vector<double>{0, 1, 0}));
  EXPECT_EQ(betweenness(Adjacency(3, true)), (std::vector<double>{0, 0, 0}));
  const auto star = directed(5, {{0, 1}, {0, 2}, {0, 3}, {0, 4}});
  EXPECT_EQ(betweenness(star), oracle::betweenness(dense(star)));
  EXPECT_EQ(betweenness(star), (std::vector<double>(5, 0.0)));
}

TEST(Betweenness, SplitShortestPaths) {
  // Two shortest routes 0->1->3 and 0->2->3 share the pair's credit.
  const auto diamond = directed(4, {{0, 1}, {0, 2}, {1, 3}, {2, 3}});
  EXPECT_EQ(betweenness(diamond), (std::vector<double>{0, 0.5, 0.5, 0}));
}

TEST(Betweenness, MatchesPathEnumerationOnRandomGraphs) {
  Rng rng(17);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 2 + rng.below(7);
    const auto a = random_directed(n, 0.1 + 0.5 * rng.uniform(), rng);
    const auto got = betweenness(a, 1 + trial % 3);
    const auto want = oracle::betweenness(dense(a));
    for (std::size_t v = 0; v < n; ++v) EXPECT_NEAR(got[v], want[v], 1e-9);
  }
}

TEST(Eigenvector, CycleIsUniform) {
  const auto cycle = directed(4, {{0, 1}, {1, 2}, {2, 3}, {3, 0}});
  const auto r = eigenvector_centrality(cycle);
  for (double v : r.scores) EXPECT_NEAR(v, 1.0, 1e-12);
  EXPECT_NEAR(r.eigenvalue, 1.0, 1e-12);
  EXPECT_LE(eigen_residual(cycle, r), 1e-8);
}

TEST(Eigenvector, EmptyGraphRejected) {
  EXPECT_THROW(eigenvector_centrality(Adjacency(3, true)), std::invalid_argument);
}

TEST(Eigenvector, DriverOfForkIsMaximal) {
  const auto fork = directed(3, {{0, 1}, {0, 2}});
  const auto r = eigenvector_centrality(fork);
  EXPECT_EQ(r.scores, (std::vector<double>{1.0, 0.0, 0.0}));
  EXPECT_EQ(r.eigenvalue, 0.0);
  EXPECT_LE(eigen_residual(fork, r), 1e-8);
}

TEST(Eigenvector, OutsideLwccScoresZero) {
  const auto a = directed(6, {{0, 1}, {1, 2}, {2, 0}, {3, 4}});
  const auto r = eigenvector_centrality(a);
  EXPECT_EQ(r.component, (std::vector<std::size_t>{0, 1, 2}));
  EXPECT_EQ(r.scores[3], 0.0);
  EXPECT_EQ(r.scores[4], 0.0);
  EXPECT_EQ(r.scores[5], 0.0);
}

TEST(Eigenvector, ResidualOnRandomGraphs) {
  Rng rng(23);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 3 + rng.below(10);
    const auto a = random_directed(n, 0.35, rng);
    if (a.edge_count() == 0) continue;
    const auto r = eigenvector_centrality(a);
    EXPECT_LE(eigen_residual(a, r), 1e-8);
    EXPECT_NEAR(*std::max_element(r.scores.begin(), r.scores.end()), 1.0, 1e-12);
    for (double v : r.scores) EXPECT_GE(v, 0.0);
  }
}

TEST(Eigenvector, ChainedEqualCyclesAreExact) {
  // Two 2-cycles, the first feeding the second: a defective eigenvalue 1.
  Adjacency a(4, true);
  a.set(0, 1);
  a.set(1, 0);
  a.set(1, 2);
  a.set(2, 3);
  a.set(3, 2);
  const auto r = eigenvector_centrality(a);
  EXPECT_NEAR(r.eigenvalue, 1.0, 1e-10);
  EXPECT_EQ(r.scores, (std::vector<double>{1.0, 1.0, 0.0, 0.0}));
  EXPECT_LE(eigen_residual(a, r), 1e-10);
}

TEST(Eigenvector, UndirectedStarCentreIsMaximal) {
  Adjacency a(5, false);
  for (std::size_t j = 1; j < 5; ++j) a.set(0, j);
  const auto r = eigenvector_centrality(a);
  EXPECT_EQ(r.scores[0], 1.0);
  EXPECT_NEAR(r.scores[1], 0.5, 1e-9);  // lambda = 2 for the 4-leaf star
  EXPECT_NEAR(r.eigenvalue, 2.0, 1e-9);
}

TEST(TprFpr, Examples) {
  Adjacency truth(5, false);
  truth.set(0, 1);
  truth.set(2, 3);
  EXPECT_EQ(tpr_fpr(truth, truth).tpr, 1.0);
  EXPECT_EQ(tpr_fpr(truth, truth).fpr, 0.0);
  const auto none = tpr_fpr(truth, Adjacency(5, true));
  EXPECT_EQ(none.tpr, 0.0);
  EXPECT_EQ(none.fpr, 0.0);
  Adjacency est = truth;
  for (auto [i, j] : {std::pair{0, 2}, {0, 3}, {0, 4}, {1, 2}, {1, 3}, {1, 4}}) est.set(i, j);
  const auto r = tpr_fpr(truth, est);
  EXPECT_EQ(r.tpr, 1.0);
  EXPECT_EQ(r.fpr, 3.0);
}

TEST(TprFpr, DirectedEstimateMatchesUndirectedTruthEitherWay) {
  Adjacency truth(3, false);
  truth.set(0, 1);
  const auto r = tpr_fpr(truth, directed(3, {{1, 0}}));
  EXPECT_EQ(r.tpr, 1.0);
  EXPECT_EQ(tpr_fpr(truth, directed(3, {{1, 0}, {0, 1}})).fpr, 0.0);
}

TEST(TprFpr, ErrorsAndRelabelling) {
  EXPECT_THROW(tpr_fpr(Adjacency(3, false), Adjacency(3, false)), std::domain_error);
  EXPECT_THROW(tpr_fpr(Adjacency(3, false), Adjacency(4, false)), std::invalid_argument);
  Rng rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    const auto t = random_directed(8, 0.3, rng);
    const auto e = random_directed(8, 0.3, rng);
    if (t.edge_count() == 0) continue;
    std::vector<std::size_t> perm(8);
    std::iota(perm.begin(), perm.end(), 0);
    rng.shuffle(std::span<std::size_t>(perm));
    const auto a = tpr_fpr(t, e), b = tpr_fpr(t.relabeled(perm), e.relabeled(perm));
    EXPECT_EQ(a.tpr, b.tpr);
    EXPECT_EQ(a.fpr, b.fpr);
  }
}

TEST(CentralityReport, RankingsAndEmptyGraph) {
  const auto r = centrality_report(directed(3, {{0, 1}, {0, 2}, {1, 2}}));
  EXPECT_EQ(r.rank_out_degree, (std::vector<std::size_t>{0, 1, 2}));
  ASSERT_TRUE(r.eigenvector.has_value());
  EXPECT_EQ(r.rank_eigenvector.front(), 0u);
  const auto empty = centrality_report(Adjacency(3, true));
  EXPECT_FALSE(empty.eigenvector.has_value());
  EXPECT_FALSE(empty.eigenvector_error.empty());
  EXPECT_EQ(empty.rank_betweenness, (std::vector<std::size_t>{0, 1, 2}));
}
