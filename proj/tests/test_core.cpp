#include <gtest/gtest.h>

#include <atomic>
#include <cstdlib>
#include <stdexcept>

#include "poisnet/adjacency.hpp"
#include "poisnet/counts.hpp"
#include "poisnet/parallel.hpp"
#include "poisnet/rng.hpp"

using namespace poisnet;

TEST(CountMatrix, ConstructionAndLabels) {
  const auto m = CountMatrix::from_rows({{1, 2}, {3, 4}, {5, 6}});
  EXPECT_EQ(m.labels(), (std::vector<std::string>{"1", "2", "3"}));
  EXPECT_EQ(m(2, 1), 6);
  const std::vector<std::size_t> rows{2, 0};
  const auto s = m.select_rows(rows);
  EXPECT_EQ(s.labels(), (std::vector<std::string>{"3", "1"}));
  EXPECT_EQ(s(0, 0), 5);
}

TEST(CountMatrix, Validation) {
  EXPECT_THROW(CountMatrix::from_rows({{1, -2}}), std::invalid_argument);
  EXPECT_THROW(CountMatrix::from_rows({{1, 2}, {3}}), std::invalid_argument);
  EXPECT_THROW(CountMatrix(2, 2, {1, 2, 3}), std::invalid_argument);
  EXPECT_THROW(CountMatrix(2, 1, {1, 2}, {"a"}), std::invalid_argument);
  CountMatrix m(1, 2);
  EXPECT_THROW(m.set(0, 0, -1), std::invalid_argument);
}

TEST(Adjacency, UndirectedSyncAndEdges) {
  Adjacency a(3, false);
  a.set(2, 0);
  EXPECT_TRUE(a(0, 2));
  EXPECT_EQ(a.edge_count(), 1u);
  EXPECT_EQ(a.edges(), (std::vector<std::pair<std::size_t, std::size_t>>{{0, 2}}));
  EXPECT_THROW(a.set(1, 1), std::invalid_argument);
}

TEST(Adjacency, DirectedRelabelAndUndirectedView) {
  Adjacency a(3, true);
  a.set(0, 1);
  a.set(1, 0);
  a.set(1, 2);
  EXPECT_EQ(a.edge_count(), 3u);
  EXPECT_EQ(a.as_undirected().edge_count(), 2u);
  const auto r = a.relabeled({2, 0, 1});
  EXPECT_TRUE(r(2, 0));
  EXPECT_TRUE(r(0, 1));
  EXPECT_EQ(r.edge_count(), 3u);
}

TEST(Rng, SubstreamsAreStable) {
  auto a = Rng::substream(5, {1, 2});
  auto b = Rng::substream(5, {1, 2});
  auto c = Rng::substream(5, {2, 1});
  const auto va = a.next();
  EXPECT_EQ(va, b.next());
  EXPECT_NE(va, c.next());
  static_assert(Rng::hash_label("") == 0xcbf29ce484222325ULL);
  EXPECT_NE(Rng::hash_label("g1"), Rng::hash_label("g2"));
}

TEST(Rng, BoundedAndUniform) {
  Rng rng(1);
  std::vector<int> hist(7, 0);
  for (int i = 0; i < 70000; ++i) {
    const auto v = rng.below(7);
    ASSERT_LT(v, 7u);
    ++hist[v];
  }
  for (int h : hist) EXPECT_NEAR(h, 10000, 450);
  for (int i = 0; i < 1000; ++i) {
    const double u = rng.uniform();
    EXPECT_GE(u, 0.0);
    EXPECT_LT(u, 1.0);
  }
}

TEST(Parallel, CoversEveryIndexAndRethrows) {
  std::vector<std::atomic<int>> hits(100);
  parallel_for(100, 4, [&](std::size_t i) { hits[i]++; });
  for (auto& h : hits) EXPECT_EQ(h.load(), 1);
  EXPECT_THROW(parallel_for(10, 3,
                            [](std::size_t i) {
                              if (i == 5) throw std::runtime_error("boom");
                            }),
               std::runtime_error);
}

TEST(Parallel, DefaultWorkersFromEnvironment) {
  setenv("POISNET_WORKERS", "3", 1);
  EXPECT_EQ(default_workers(), 3u);
  unsetenv("POISNET_WORKERS");
  EXPECT_GE(default_workers(), 1u);
}
