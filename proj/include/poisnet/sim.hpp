#pragma once

#include <cstddef>
#include <cstdint>

#include <Eigen/SparseCore>

#include "poisnet/adjacency.hpp"
#include "poisnet/counts.hpp"
#include "poisnet/rng.hpp"

namespace poisnet {

/// Synthetic benchmark parameters. Defaults are the high-SNR setting: unit
/// base and coupling rates with Poisson(0.5) observation noise.
struct SimConfig {
  std::size_t n = 50;
  std::size_t t = 1000;
  double er_p = 0.04;
  double edge_rate = 1.0;
  double base_rate = 1.0;
  double noise_rate = 0.5;
  std::uint64_t seed = 0;

  void validate() const;
};

/// n x m latent-to-observed map, m = n + n(n-1)/2. Column i < n is e_i; the
/// pair column for (i, j), i < j, sits at n + index of (i, j) in the order
/// (0,1), (0,2), ..., (n-2,n-1) and equals e_i + e_j when the pair is an
/// edge and zero otherwise.
class MixingMatrix {
 public:
  MixingMatrix() = default;
  explicit MixingMatrix(Eigen::SparseMatrix<int, Eigen::ColMajor> b) : b_(std::move(b)) {}

  std::size_t rows() const { return static_cast<std::size_t>(b_.rows()); }
  std::size_t cols() const { return static_cast<std::size_t>(b_.cols()); }

  static std::size_t pair_column(std::size_t n, std::size_t i, std::size_t j);

  const Eigen::SparseMatrix<int, Eigen::ColMajor>& matrix() const { return b_; }
  Eigen::MatrixXi dense() const { return Eigen::MatrixXi(b_); }

 private:
  Eigen::SparseMatrix<int, Eigen::ColMajor> b_;
};

/// Undirected Erdos-Renyi graph: each unordered pair is an edge with probability p.
Adjacency er_graph(std::size_t n, double p, Rng& rng);

MixingMatrix build_mixing(const Adjacency& adj);

/// X = B Y + E with y_ii ~ Poisson(base_rate), y_ij ~ Poisson(edge_rate) on
/// edges and E ~ Poisson(noise_rate) i.i.d. per node and sample. Labels are
/// "1".."n". Deterministic in config.seed.
CountMatrix simulate(const SimConfig& config, const Adjacency& adj);

}  // namespace poisnet
