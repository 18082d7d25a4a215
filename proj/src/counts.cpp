#include "poisnet/counts.hpp"

#include <stdexcept>

namespace poisnet {

namespace {

std::vector<std::string> default_labels(std::size_t n) {
  std::vector<std::string> labels;
  labels.reserve(n);
  for (std::size_t i = 0; i < n; ++i) labels.push_back(std::to_string(i + 1));
  return labels;
}

}  // namespace

CountMatrix::CountMatrix(std::size_t n, std::size_t t)
    : n_(n), t_(t), values_(n * t, 0), labels_(default_labels(n)) {}

CountMatrix::CountMatrix(std::size_t n, std::size_t t, std::vector<Count> values,
                         std::vector<std::string> labels)
    : n_(n), t_(t), values_(std::move(values)) {
  if (values_.size() != n * t)
    throw std::invalid_argument("count matrix: expected " + std::to_string(n * t) +
                                " entries, got " + std::to_string(values_.size()));
  for (Count v : values_)
    if (v < 0) throw std::invalid_argument("count matrix: negative count");
  set_labels(std::move(labels));
}

CountMatrix CountMatrix::from_rows(const std::vector<std::vector<Count>>& rows,
                                   std::vector<std::string> labels) {
  const std::size_t n = rows.size();
  const std::size_t t = n ? rows.front().size() : 0;
  std::vector<Count> values;
  values.reserve(n * t);
  for (const auto& r : rows) {
    if (r.size() != t) throw std::invalid_argument("count matrix: ragged rows");
    values.insert(values.end(), r.begin(), r.end());
  }
  return CountMatrix(n, t, std::move(values), std::move(labels));
}

void CountMatrix::set(std::size_t i, std::size_t s, Count v) {
  if (v < 0) throw std::invalid_argument("count matrix: negative count");
  values_[i * t_ + s] = v;
}

void CountMatrix::add(std::size_t i, std::size_t s, Count v) {
  set(i, s, values_[i * t_ + s] + v);
}

void CountMatrix::set_labels(std::vector<std::string> labels) {
  if (labels.empty()) {
    labels_ = default_labels(n_);
    return;
  }
  if (labels.size() != n_)
    throw std::invalid_argument("count matrix: label count does not match rows");
  labels_ = std::move(labels);
}

CountMatrix CountMatrix::select_rows(std::span<const std::size_t> rows) const {
  std::vector<Count> values;
  std::vector<std::string> labels;
  values.reserve(rows.size() * t_);
  for (auto r : rows) {
    if (r >= n_) throw std::out_of_range("count matrix: row index out of range");
    auto src = row(r);
    values.insert(values.end(), src.begin(), src.end());
    labels.push_back(labels_[r]);
  }
  return CountMatrix(rows.size(), t_, std::move(values), std::move(labels));
}

}  // namespace poisnet
