#include "poisnet/sim.hpp"

#include <stdexcept>
#include <vector>

namespace poisnet {

namespace {

constexpr std::uint64_t kLatentStream = 0x6c6174656e74ULL;
constexpr std::uint64_t kNoiseStream = 0x6e6f697365ULL;

}  // namespace

void SimConfig::validate() const {
  if (n < 2) throw std::invalid_argument("simulation: need n >= 2");
  if (t < 1) throw std::invalid_argument("simulation: need t >= 1");
  if (!(er_p >= 0.0 && er_p <= 1.0)) throw std::invalid_argument("simulation: er_p outside [0, 1]");
  if (!(edge_rate >= 0.0) || !(base_rate >= 0.0) || !(noise_rate >= 0.0))
    throw std::invalid_argument("simulation: rates must be nonnegative");
}

std::size_t MixingMatrix::pair_column(std::size_t n, std::size_t i, std::size_t j) {
  if (i >= j || j >= n) throw std::invalid_argument("pair column: need i < j < n");
  // Pairs before row i: sum_{a<i} (n-1-a).
  return n + i * (2 * n - i - 1) / 2 + (j - i - 1);
}

Adjacency er_graph(std::size_t n, double p, Rng& rng) {
  if (n < 2) throw std::invalid_argument("er graph: need n >= 2");
  if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("er graph: p outside [0, 1]");
  Adjacency adj(n, false);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      if (rng.uniform() < p) adj.set(i, j);
  return adj;
}

MixingMatrix build_mixing(const Adjacency& adj) {
  const std::size_t n = adj.size();
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      if (adj(i, j) != adj(j, i))
        throw std::invalid_argument("mixing matrix: adjacency must be symmetric");
  const std::size_t m = n + n * (n - 1) / 2;
  std::vector<Eigen::Triplet<int>> entries;
  for (std::size_t i = 0; i < n; ++i)
    entries.emplace_back(static_cast<int>(i), static_cast<int>(i), 1);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      if (!adj(i, j)) continue;
      const auto c = static_cast<int>(MixingMatrix::pair_column(n, i, j));
      entries.emplace_back(static_cast<int>(i), c, 1);
      entries.emplace_back(static_cast<int>(j), c, 1);
    }
  }
  Eigen::SparseMatrix<int, Eigen::ColMajor> b(static_cast<Eigen::Index>(n),
                                              static_cast<Eigen::Index>(m));
  b.setFromTriplets(entries.begin(), entries.end());
  return MixingMatrix(std::move(b));
}

CountMatrix simulate(const SimConfig& config, const Adjacency& adj) {
  config.validate();
  if (adj.size() != config.n) throw std::invalid_argument("simulation: adjacency size != n");
  const MixingMatrix mixing = build_mixing(adj);
  const auto& b = mixing.matrix();
  const std::size_t n = config.n;
  const std::size_t t = config.t;

  CountMatrix x(n, t);
  std::vector<Count> latent(t);
  for (Eigen::Index c = 0; c < b.outerSize(); ++c) {
    Eigen::SparseMatrix<int>::InnerIterator it(b, c);
    if (!it) continue;
    const double rate = static_cast<std::size_t>(c) < n ? config.base_rate : config.edge_rate;
    Rng rng = Rng::substream(config.seed, {kLatentStream, static_cast<std::uint64_t>(c)});
    for (auto& v : latent) v = rng.poisson(rate);
    for (; it; ++it) {
      const auto row = static_cast<std::size_t>(it.row());
      for (std::size_t s = 0; s < t; ++s) x.add(row, s, it.value() * latent[s]);
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    Rng rng = Rng::substream(config.seed, {kNoiseStream, i});
    for (std::size_t s = 0; s < t; ++s) x.add(i, s, rng.poisson(config.noise_rate));
  }
  return x;
}

}  // namespace poisnet
