#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "poisnet/omii.hpp"
#include "poisnet/rates.hpp"
#include "poisnet/sim.hpp"

using namespace poisnet;

namespace {

CountMatrix simulated(std::size_t n, std::size_t t, const Adjacency& adj, std::uint64_t seed) {
  SimConfig cfg;
  cfg.n = n;
  cfg.t = t;
  cfg.seed = seed;
  return simulate(cfg, adj);
}

Adjacency pair_graph() {
  Adjacency a(2, false);
  a.set(0, 1);
  return a;
}

Adjacency chain_graph() {
  Adjacency a(3, false);
  a.set(0, 1);
  a.set(1, 2);
  return a;
}

InferenceConfig fast_config(std::uint64_t seed) {
  InferenceConfig c;
  c.n_shuffles = 100;
  c.seed = seed;
  return c;
}

bool contains(const std::vector<std::size_t>& v, std::size_t x) {
  return std::find(v.begin(), v.end(), x) != v.end();
}

}  // namespace

TEST(InferenceConfig, Validation) {
  InferenceConfig c;
  EXPECT_NO_THROW(c.validate());
  c.alpha = 0.0;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c.alpha = 1.0;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c.alpha = 0.05;
  c.n_shuffles = 19;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c.n_shuffles = 20;
  c.lag = 2;
  EXPECT_THROW(c.validate(), std::invalid_argument);
}

TEST(InferenceConfig, ParseNames) {
  EXPECT_EQ(parse_estimator("gaussian"), Estimator::gaussian);
  EXPECT_EQ(to_string(Estimator::poisson), "poisson");
  EXPECT_EQ(parse_forward_null("candidate"), ForwardNull::candidate);
  EXPECT_THROW(parse_estimator("ksg"), std::invalid_argument);
}

TEST(ShuffleTest, ConstantRowHasPValueOne) {
  auto counts = CountMatrix::from_rows({{2, 2, 2, 2, 2, 2, 2, 2}, {0, 3, 1, 4, 1, 5, 9, 2}});
  Rng rng(1);
  const auto r = shuffle_test(0, 1, {}, counts, fast_config(1), rng);
  EXPECT_EQ(r.cmi, 0.0);
  EXPECT_EQ(r.p_value, 1.0);
  EXPECT_FALSE(r.accepted);
}

TEST(ShuffleTest, StrongCouplingReachesMinimumPValue) {
  const auto counts = simulated(2, 1000, pair_graph(), 3);
  Rng rng(2);
  InferenceConfig cfg;
  const auto r = shuffle_test(0, 1, {}, counts, cfg, rng);
  EXPECT_DOUBLE_EQ(r.p_value, 1.0 / 201.0);
  EXPECT_TRUE(r.accepted);
  EXPECT_GT(r.cmi, 0.0);
}

TEST(ShuffleTest, IndependentPairCalibration) {
  // Acceptance rate of a valid permutation test is at most alpha; the bound
  // adds three binomial standard errors for 200 trials.
  int accepted = 0;
  const int trials = 200;
  for (int s = 0; s < trials; ++s) {
    const auto counts = simulated(2, 200, Adjacency(2, false), 1000 + s);
    Rng rng = Rng::substream(s, {9});
    if (shuffle_test(0, 1, {}, counts, fast_config(s), rng).accepted) ++accepted;
  }
  EXPECT_LE(accepted / double(trials), 0.05 + 3.0 * std::sqrt(0.05 * 0.95 / trials));
}

TEST(ShuffleTest, Deterministic) {
  const auto counts = simulated(4, 300, Adjacency(4, false), 5);
  Rng a(11), b(11);
  const std::vector<std::size_t> s{2};
  const auto ra = shuffle_test(0, 1, s, counts, fast_config(0), a);
  const auto rb = shuffle_test(0, 1, s, counts, fast_config(0), b);
  EXPECT_EQ(ra.cmi, rb.cmi);
  EXPECT_EQ(ra.p_value, rb.p_value);
}

TEST(ForwardSelect, EmptyGraphMostlySelectsNothing) {
  int nonempty = 0, targets = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto counts = simulated(8, 300, Adjacency(8, false), seed);
    for (std::size_t target = 0; target < 8; ++target, ++targets)
      if (!forward_select(target, counts, fast_config(seed)).parents.empty()) ++nonempty;
  }
  EXPECT_LE(nonempty / double(targets), 0.05 + 3.0 * std::sqrt(0.05 * 0.95 / targets));
}

TEST(ForwardSelect, CoupledPairSelectEachOther) {
  int both = 0;
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const auto counts = simulated(2, 1000, pair_graph(), seed);
    const auto a = forward_select(0, counts, fast_config(seed)).sources();
    const auto b = forward_select(1, counts, fast_config(seed)).sources();
    if (a == std::vector<std::size_t>{1} && b == std::vector<std::size_t>{0}) ++both;
  }
  EXPECT_GE(both, 48);
}

TEST(ForwardSelect, ChainEndSelectsOnlyNeighbour) {
  const auto counts = simulated(3, 5000, chain_graph(), 12);
  const auto sel = forward_select(0, counts, fast_config(12));
  EXPECT_EQ(sel.sources(), std::vector<std::size_t>{1});
  ASSERT_GE(sel.trace.size(), 2u);
  EXPECT_EQ(sel.trace.front().candidate, 1u);
  EXPECT_FALSE(sel.trace.back().accepted);
}

TEST(ForwardSelect, RespectsMaxParents) {
  Rng rng(4);
  Adjacency star(6, false);
  for (std::size_t j = 1; j < 6; ++j) star.set(0, j);
  const auto counts = simulated(6, 3000, star, 4);
  auto cfg = fast_config(4);
  cfg.max_parents = 2;
  EXPECT_EQ(forward_select(0, counts, cfg).parents.size(), 2u);
  cfg.max_parents.reset();
  EXPECT_EQ(forward_select(0, counts, cfg).parents.size(), 5u);
}

TEST(ForwardSelect, CandidateNullAlsoFindsPair) {
  const auto counts = simulated(2, 1000, pair_graph(), 8);
  auto cfg = fast_config(8);
  cfg.forward_null = ForwardNull::candidate;
  EXPECT_EQ(forward_select(0, counts, cfg).sources(), std::vector<std::size_t>{1});
}

TEST(BackwardEliminate, EmptyStaysEmpty) {
  const auto counts = simulated(3, 200, chain_graph(), 1);
  EXPECT_TRUE(backward_eliminate(0, {}, counts, fast_config(1)).parents.empty());
}

TEST(BackwardEliminate, DropsRedundantAncestor) {
  // Markov chain X -> Z -> T: given Z, X carries nothing about T, so X goes
  // at roughly the null rejection rate and Z always stays.
  const int trials = 40;
  int dropped = 0;
  for (int trial = 0; trial < trials; ++trial) {
    Rng rng = Rng::substream(31, {static_cast<std::uint64_t>(trial)});
    CountMatrix counts(3, 5000);
    for (std::size_t s = 0; s < 5000; ++s) {
      const Count x = rng.poisson(1.0);
      const Count z = x + rng.poisson(0.5);
      const Count t = z + rng.poisson(0.5);
      counts.set(0, s, x);
      counts.set(1, s, z);
      counts.set(2, s, t);
    }
    const std::vector<std::size_t> parents{0, 1};  // ancestor entered first
    const auto kept = backward_eliminate(2, parents, counts, fast_config(trial));
    ASSERT_TRUE(contains(kept.sources(), 1));
    if (!contains(kept.sources(), 0)) {
      ++dropped;
      EXPECT_EQ(kept.parents.front().order_added, 2u);
    }
  }
  EXPECT_GE(dropped / double(trials), 0.95 - 3.0 * std::sqrt(0.05 * 0.95 / trials));
}

TEST(BackwardEliminate, KeepsTrueParentOfPair) {
  const auto counts = simulated(2, 1000, pair_graph(), 2);
  const std::vector<std::size_t> parents{1};
  EXPECT_EQ(backward_eliminate(0, parents, counts, fast_config(2)).sources(), parents);
}

TEST(InferNetwork, InvariantsAndDeterminism) {
  Rng rng(6);
  const Adjacency truth = er_graph(12, 0.2, rng);
  const auto counts = simulated(12, 500, truth, 6);
  auto cfg = fast_config(6);
  const auto a = infer_network(counts, cfg);
  cfg.workers = 3;
  const auto b = infer_network(counts, cfg);
  EXPECT_EQ(a.adjacency, b.adjacency);
  ASSERT_EQ(a.edges.size(), b.edges.size());
  for (std::size_t k = 0; k < a.edges.size(); ++k) {
    EXPECT_EQ(a.edges[k].cmi, b.edges[k].cmi);
    EXPECT_EQ(a.edges[k].p_value, b.edges[k].p_value);
  }
  for (std::size_t i = 0; i < 12; ++i) EXPECT_FALSE(a.adjacency(i, i));
  for (const auto& e : a.edges) {
    EXPECT_LE(e.p_value, cfg.alpha);
    EXPECT_TRUE(a.adjacency(e.source, e.target));
  }
  EXPECT_TRUE(std::is_sorted(a.edges.begin(), a.edges.end(), [](const auto& x, const auto& y) {
    return std::pair(x.target, x.source) < std::pair(y.target, y.source);
  }));
  EXPECT_EQ(a.edges.size(), a.adjacency.edge_count());
}

TEST(InferNetwork, LabelPermutationInvariance) {
  Rng rng(7);
  const std::size_t n = 10;
  const Adjacency truth = er_graph(n, 0.25, rng);
  const auto counts = simulated(n, 400, truth, 7);
  std::vector<std::size_t> perm(n);  // new position of row i
  std::iota(perm.begin(), perm.end(), 0);
  Rng prng(70);
  prng.shuffle(std::span<std::size_t>(perm));
  std::vector<std::size_t> order(n);  // row placed at each new position
  for (std::size_t i = 0; i < n; ++i) order[perm[i]] = i;
  const auto shuffled = counts.select_rows(order);
  for (auto fn : {ForwardNull::max_statistic, ForwardNull::candidate}) {
    auto cfg = fast_config(7);
    cfg.forward_null = fn;
    const auto a = infer_network(counts, cfg);
    const auto b = infer_network(shuffled, cfg);
    EXPECT_EQ(a.adjacency.relabeled(perm), b.adjacency) << to_string(fn);
  }
}

TEST(InferNetwork, RaisingAlphaKeepsFirstParent) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    Rng rng(seed);
    const auto counts = simulated(8, 300, er_graph(8, 0.3, rng), seed);
    auto strict = fast_config(seed);
    strict.alpha = 0.01;
    auto loose = strict;
    loose.alpha = 0.1;
    for (std::size_t target = 0; target < 8; ++target) {
      const auto a = forward_select(target, counts, strict);
      if (a.parents.empty()) continue;
      const auto b = forward_select(target, counts, loose);
      ASSERT_FALSE(b.parents.empty());
      EXPECT_EQ(a.parents.front().source, b.parents.front().source);
    }
  }
}

TEST(InferNetwork, GaussianEstimatorRuns) {
  const auto counts = simulated(3, 2000, chain_graph(), 9);
  auto cfg = fast_config(9);
  cfg.estimator = Estimator::gaussian;
  const auto r = infer_network(counts, cfg);
  EXPECT_TRUE(r.adjacency(1, 0));
  EXPECT_TRUE(r.adjacency(0, 1));
  // Given the middle node, the ends of a shared-latent chain are negatively
  // related. -1/2 ln(1 - r^2) sees that; the clamped Poisson coupling does not.
  EXPECT_LT(partial_correlation(0, 2, std::vector<std::size_t>{1}, counts), -0.05);
  EXPECT_FALSE(infer_network(counts, fast_config(9)).adjacency(2, 0));
}

TEST(InferNetwork, LagModeFindsDirection) {
  // Y(s) copies X(s-1) plus noise; X is i.i.d.
  Rng rng(13);
  const std::size_t t = 3000;
  CountMatrix counts(3, t);
  std::vector<Count> x(t);
  for (auto& v : x) v = rng.poisson(1.0);
  for (std::size_t s = 0; s < t; ++s) {
    counts.set(0, s, x[s]);
    counts.set(1, s, (s > 0 ? x[s - 1] : 0) + rng.poisson(0.5));
    counts.set(2, s, rng.poisson(1.0));
  }
  auto cfg = fast_config(13);
  cfg.lag = 1;
  const auto r = infer_network(counts, cfg);
  EXPECT_TRUE(r.adjacency(0, 1));
  EXPECT_FALSE(r.adjacency(1, 0));
  EXPECT_FALSE(r.adjacency(2, 1));
  cfg.lag = 0;
  EXPECT_FALSE(infer_network(counts, cfg).adjacency(0, 1));
}

TEST(InferNetwork, RejectsTinyInputs) {
  EXPECT_THROW(infer_network(CountMatrix(1, 10), fast_config(0)), std::invalid_argument);
  EXPECT_THROW(infer_network(CountMatrix(3, 2), fast_config(0)), std::invalid_argument);
}
