#pragma once

#include <cstddef>
#include <cstdint>
#include <utility>
#include <vector>

namespace poisnet {

/// 0/1 network encoding with zero diagonal. Entry (i, j) set means an edge
/// i -> j; an undirected adjacency keeps both entries in sync.
class Adjacency {
 public:
  Adjacency() = default;
  Adjacency(std::size_t n, bool directed) : n_(n), directed_(directed), cells_(n * n, 0) {}

  std::size_t size() const { return n_; }
  bool directed() const { return directed_; }

  bool operator()(std::size_t i, std::size_t j) const { return cells_[i * n_ + j] != 0; }
  void set(std::size_t i, std::size_t j, bool value = true);

  /// Directed: number of arcs. Undirected: number of unordered pairs.
  std::size_t edge_count() const;

  /// Directed: all arcs (i, j). Undirected: pairs with i < j. Row-major order.
  std::vector<std::pair<std::size_t, std::size_t>> edges() const;

  /// Undirected view: a pair is connected if either direction is present.
  Adjacency as_undirected() const;

  /// Relabel nodes: node i becomes perm[i].
  Adjacency relabeled(const std::vector<std::size_t>& perm) const;

  bool operator==(const Adjacency&) const = default;

 private:
  std::size_t n_ = 0;
  bool directed_ = true;
  std::vector<std::uint8_t> cells_;
};

}  // namespace poisnet
