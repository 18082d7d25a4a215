#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "poisnet/adjacency.hpp"

namespace poisnet {

/// Components of the underlying undirected graph, each sorted ascending,
/// largest first (ties broken by smallest member).
std::vector<std::vector<std::size_t>> weakly_connected_components(const Adjacency& adj);

/// Row sums. For an undirected adjacency this is the degree.
std::vector<std::size_t> out_degree(const Adjacency& adj);

/// Unweighted shortest-path betweenness over ordered pairs (s, t), s != t,
/// without normalization. Per-source passes run on `workers` threads and are
/// summed in source order.
std::vector<double> betweenness(const Adjacency& adj, std::size_t workers = 1);

struct EigenvectorResult {
  std::vector<double> scores;  // max 1 on the LWCC, 0 elsewhere
  double eigenvalue = 0.0;
  std::size_t iterations = 0;  // slowest block; 0 when the closed form was used
  std::vector<std::size_t> component;
};

inline constexpr double kEigenTolerance = 1e-10;
inline constexpr std::size_t kEigenMaxIterations = 100000;

/// Out-influence eigenvector on the largest weakly connected component with at
/// least one edge: x_i proportional to the sum of x_j over arcs i -> j, so a
/// node scores high when it points at high-scoring nodes.
///
/// An acyclic component has nilpotent adjacency; there the score is the count
/// of longest walks leaving each node (A^L 1 with L the longest path length),
/// the limit of the Katz-type walk count as the attenuation goes to infinity.
/// Otherwise each strong component gets power iteration on A_CC + I until the
/// max-abs change falls below kEigenTolerance; lambda is the largest block
/// value. Dominant blocks not downstream of another dominant block keep their
/// Perron vectors, nodes upstream of them are solved exactly from
/// (lambda I - A) x = 0, everything else scores 0. Plain power iteration heads
/// for the same direction (up to how unrelated dominant blocks are weighted)
/// but only like 1/k when two dominant blocks are chained.
/// Throws std::runtime_error if a block hits kEigenMaxIterations, and
/// std::invalid_argument if the graph has no edges.
EigenvectorResult eigenvector_centrality(const Adjacency& adj);

/// max_i |(A v)_i - lambda v_i| over the whole graph.
double eigen_residual(const Adjacency& adj, const EigenvectorResult& result);

struct EdgeRates {
  double tpr = 0.0;
  double fpr = 0.0;
};

/// TPR = |E and Ê| / |E|, FPR = |Ê minus E| / |E|. If either adjacency is
/// undirected both are compared as unordered pairs. Throws when |E| = 0.
EdgeRates tpr_fpr(const Adjacency& truth, const Adjacency& estimate);

/// Node ids sorted by descending score, ties by ascending id.
template <class T>
std::vector<std::size_t> ranking(const std::vector<T>& scores);

struct CentralityReport {
  std::vector<std::size_t> out_degree;
  std::vector<double> betweenness;
  std::optional<EigenvectorResult> eigenvector;
  std::string eigenvector_error;  // set when eigenvector is empty

  std::vector<std::size_t> rank_out_degree;
  std::vector<std::size_t> rank_betweenness;
  std::vector<std::size_t> rank_eigenvector;
};

CentralityReport centrality_report(const Adjacency& adj, std::size_t workers = 1);

}  // namespace poisnet
