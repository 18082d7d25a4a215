#include "poisnet/adjacency.hpp"

#include <stdexcept>

namespace poisnet {

void Adjacency::set(std::size_t i, std::size_t j, bool value) {
  if (i >= n_ || j >= n_) throw std::out_of_range("adjacency: node index out of range");
  if (i == j) {
    if (value) throw std::invalid_argument("adjacency: self-loops are not allowed");
    return;
  }
  cells_[i * n_ + j] = value ? 1 : 0;
  if (!directed_) cells_[j * n_ + i] = value ? 1 : 0;
}

std::size_t Adjacency::edge_count() const {
  std::size_t count = 0;
  for (auto c : cells_) count += c;
  return directed_ ? count : count / 2;
}

std::vector<std::pair<std::size_t, std::size_t>> Adjacency::edges() const {
  std::vector<std::pair<std::size_t, std::size_t>> out;
  for (std::size_t i = 0; i < n_; ++i)
    for (std::size_t j = directed_ ? 0 : i + 1; j < n_; ++j)
      if ((*this)(i, j)) out.emplace_back(i, j);
  return out;
}

Adjacency Adjacency::as_undirected() const {
  Adjacency out(n_, false);
  for (std::size_t i = 0; i < n_; ++i)
    for (std::size_t j = 0; j < n_; ++j)
      if ((*this)(i, j)) out.set(i, j);
  return out;
}

Adjacency Adjacency::relabeled(const std::vector<std::size_t>& perm) const {
  if (perm.size() != n_) throw std::invalid_argument("adjacency: permutation size mismatch");
  Adjacency out(n_, directed_);
  for (std::size_t i = 0; i < n_; ++i)
    for (std::size_t j = 0; j < n_; ++j)
      if ((*this)(i, j)) out.set(perm[i], perm[j]);
  return out;
}

}  // namespace poisnet
