#include "poisnet/rates.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace poisnet {

namespace {

// Residual variance below this (rows have unit norm) counts as degenerate.
constexpr double kDegenerateResidual = 1e-10;

}  // namespace

void check_condition(std::size_t x, std::size_t y, std::span<const std::size_t> condition,
                     std::size_t variables, std::size_t samples) {
  if (x >= variables || y >= variables)
    throw std::invalid_argument("variable id out of range");
  if (x == y) throw std::invalid_argument("x and y must be distinct variables");
  for (auto s : condition) {
    if (s >= variables) throw std::invalid_argument("condition id out of range");
    if (s == x || s == y) throw std::invalid_argument("condition set must exclude x and y");
  }
  if (samples < condition.size() + 3)
    throw std::invalid_argument("need at least |S| + 3 samples, have " + std::to_string(samples));
}

StandardizedRows::StandardizedRows(const CountMatrix& counts) {
  if (counts.samples() < 2) throw std::invalid_argument("correlation needs at least 2 samples");
  Eigen::MatrixXd raw(static_cast<Eigen::Index>(counts.variables()),
                      static_cast<Eigen::Index>(counts.samples()));
  for (std::size_t i = 0; i < counts.variables(); ++i) {
    auto row = counts.row(i);
    for (std::size_t s = 0; s < row.size(); ++s)
      raw(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(s)) = static_cast<double>(row[s]);
  }
  standardize(raw);
}

StandardizedRows::StandardizedRows(const Eigen::MatrixXd& raw) {
  if (raw.cols() < 2) throw std::invalid_argument("correlation needs at least 2 samples");
  standardize(raw);
}

void StandardizedRows::standardize(const Eigen::MatrixXd& raw) {
  const auto n = raw.rows();
  const auto t = static_cast<std::size_t>(raw.cols());
  z_.resize(n, raw.cols());
  degenerate_.assign(static_cast<std::size_t>(n), false);
  std::vector<double> row(t);
  for (Eigen::Index i = 0; i < n; ++i) {
    double sum = 0.0, peak = 1.0;
    for (std::size_t s = 0; s < t; ++s) {
      row[s] = raw(i, static_cast<Eigen::Index>(s));
      sum += row[s];
      peak = std::max(peak, std::abs(row[s]));
    }
    const double mean = sum / static_cast<double>(t);
    for (auto& v : row) v -= mean;
    const double norm = std::sqrt(dot_fixed(row.data(), row.data(), t));
    double* out = z_.data() + i * z_.cols();
    // Integer data: any nonconstant row has norm well above this.
    if (norm <= 1e-12 * peak) {
      std::fill(out, out + t, 0.0);
      degenerate_[static_cast<std::size_t>(i)] = true;
    } else {
      for (std::size_t s = 0; s < t; ++s) out[s] = row[s] / norm;
    }
  }
}

double StandardizedRows::correlation(std::size_t i, std::size_t j) const {
  if (i == j) return 1.0;
  if (degenerate_[i] || degenerate_[j]) return 0.0;
  const double r = dot_fixed(row_data(i), row_data(j), samples());
  return std::clamp(r, -1.0, 1.0);
}

CorrelationMatrix StandardizedRows::correlation_matrix() const {
  // Pairwise dot products rather than one matrix product: a blocked product
  // can round an entry differently depending on where the rows sit, which
  // would make results depend on variable order.
  const auto n = z_.rows();
  Eigen::MatrixXd c = Eigen::MatrixXd::Identity(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = i + 1; j < n; ++j)
      c(i, j) = c(j, i) = correlation(static_cast<std::size_t>(i), static_cast<std::size_t>(j));
  return {std::move(c)};
}

ConditionBasis StandardizedRows::basis(std::span<const std::size_t> condition) const {
  const auto t = z_.cols();
  if (condition.empty()) return {Eigen::MatrixXd(t, 0)};
  Eigen::MatrixXd cols(t, static_cast<Eigen::Index>(condition.size()));
  for (std::size_t k = 0; k < condition.size(); ++k)
    cols.col(static_cast<Eigen::Index>(k)) =
        z_.row(static_cast<Eigen::Index>(condition[k])).transpose();
  // Rank-revealing QR: collinear or constant condition rows drop out of the span.
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(cols);
  qr.setThreshold(1e-10);
  const Eigen::Index rank = qr.rank();
  Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(t, rank);
  return {std::move(q)};
}

double StandardizedRows::partial_correlation(std::size_t x, std::size_t y,
                                             std::span<const std::size_t> condition) const {
  check_condition(x, y, condition, variables(), samples());
  return partial_correlation(x, y, basis(condition));
}

double StandardizedRows::partial_correlation(std::size_t x, std::size_t y,
                                             const ConditionBasis& basis) const {
  if (degenerate_[x] || degenerate_[y]) return 0.0;
  const Eigen::VectorXd zx = z_.row(static_cast<Eigen::Index>(x)).transpose();
  const Eigen::VectorXd zy = z_.row(static_cast<Eigen::Index>(y)).transpose();
  if (basis.rank() == 0) return correlation(x, y);
  const Eigen::VectorXd rx = zx - basis.q * (basis.q.transpose() * zx);
  const Eigen::VectorXd ry = zy - basis.q * (basis.q.transpose() * zy);
  const double nx = rx.squaredNorm();
  const double ny = ry.squaredNorm();
  if (nx < kDegenerateResidual || ny < kDegenerateResidual) return 0.0;
  return std::clamp(rx.dot(ry) / std::sqrt(nx * ny), -1.0, 1.0);
}

CorrelationMatrix correlation(const CountMatrix& counts) {
  return StandardizedRows(counts).correlation_matrix();
}

double base_rate_from_couplings(std::vector<double> couplings) {
  std::sort(couplings.begin(), couplings.end());
  double sum = 0.0;
  for (double c : couplings) sum += c;
  return std::max(1.0 - sum, 0.0);
}

RateMatrix rates_from_correlation(const CorrelationMatrix& corr) {
  const std::size_t n = corr.size();
  RateMatrix rates(n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) rates.set(i, j, std::max(corr(i, j), 0.0));
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<double> couplings;
    couplings.reserve(n);
    for (std::size_t j = 0; j < n; ++j)
      if (j != i) couplings.push_back(rates(i, j));
    rates.set(i, i, base_rate_from_couplings(std::move(couplings)));
  }
  return rates;
}

RateMatrix estimate_rate_matrix(const CountMatrix& counts) {
  return rates_from_correlation(correlation(counts));
}

double partial_correlation(std::size_t x, std::size_t y, std::span<const std::size_t> condition,
                           const CountMatrix& counts) {
  check_condition(x, y, condition, counts.variables(), counts.samples());
  return StandardizedRows(counts).partial_correlation(x, y, condition);
}

double conditional_rate(std::size_t x, std::size_t y, std::span<const std::size_t> condition,
                        const CountMatrix& counts) {
  return std::max(partial_correlation(x, y, condition, counts), 0.0);
}

}  // namespace poisnet
