#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "poisnet/counts.hpp"
#include "poisnet/entropy.hpp"

namespace poisnet {

/// Dot product with a fixed summation order. Eigen's vectorized reductions
/// peel elements to reach alignment, so their rounding depends on where a row
/// starts in memory; results here must not depend on row position.
inline double dot_fixed(const double* a, const double* b, std::size_t n) {
  double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0;
  std::size_t k = 0;
  for (; k + 4 <= n; k += 4) {
    s0 += a[k] * b[k];
    s1 += a[k + 1] * b[k + 1];
    s2 += a[k + 2] * b[k + 2];
    s3 += a[k + 3] * b[k + 3];
  }
  for (; k < n; ++k) s0 += a[k] * b[k];
  return (s0 + s1) + (s2 + s3);
}

/// Pearson correlation of variables. Unit diagonal; a zero-variance variable
/// has zero correlation with everything else.
struct CorrelationMatrix {
  Eigen::MatrixXd values;

  std::size_t size() const { return static_cast<std::size_t>(values.rows()); }
  double operator()(std::size_t i, std::size_t j) const {
    return values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
  }
};

/// Orthonormal basis (t x rank) of the span of a set of standardized rows.
struct ConditionBasis {
  Eigen::MatrixXd q;

  Eigen::Index rank() const { return q.cols(); }
};

/// Rows centered to mean zero and scaled to unit Euclidean norm, so that a
/// dot product of two rows is their Pearson correlation. Constant rows stay
/// all-zero and are flagged degenerate.
class StandardizedRows {
 public:
  explicit StandardizedRows(const CountMatrix& counts);
  explicit StandardizedRows(const Eigen::MatrixXd& raw);

  std::size_t variables() const { return static_cast<std::size_t>(z_.rows()); }
  std::size_t samples() const { return static_cast<std::size_t>(z_.cols()); }

  /// n x t, row-major so that a row is contiguous.
  const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>& z() const {
    return z_;
  }
  const double* row_data(std::size_t i) const { return z_.data() + i * samples(); }
  bool degenerate(std::size_t i) const { return degenerate_[i]; }

  double correlation(std::size_t i, std::size_t j) const;
  CorrelationMatrix correlation_matrix() const;

  ConditionBasis basis(std::span<const std::size_t> condition) const;
  double partial_correlation(std::size_t x, std::size_t y,
                             std::span<const std::size_t> condition) const;
  double partial_correlation(std::size_t x, std::size_t y, const ConditionBasis& basis) const;

 private:
  void standardize(const Eigen::MatrixXd& raw);

  Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> z_;
  std::vector<bool> degenerate_;
};

CorrelationMatrix correlation(const CountMatrix& counts);

/// Off-diagonal rates are the positive part of the correlation; each base
/// rate is one minus the sum of its row's couplings, floored at zero.
RateMatrix estimate_rate_matrix(const CountMatrix& counts);
RateMatrix rates_from_correlation(const CorrelationMatrix& corr);

/// max(1 - sum(couplings), 0), summed in sorted order so the result does not
/// depend on variable ordering.
double base_rate_from_couplings(std::vector<double> couplings);

/// Correlation of x and y after projecting out the rows in `condition`.
/// Plain correlation for an empty condition set; 0 for a degenerate residual.
double partial_correlation(std::size_t x, std::size_t y, std::span<const std::size_t> condition,
                           const CountMatrix& counts);

/// Coupling rate given a condition set: the positive part of the partial correlation.
double conditional_rate(std::size_t x, std::size_t y, std::span<const std::size_t> condition,
                        const CountMatrix& counts);

/// Throws std::invalid_argument for x == y, ids out of range, x or y in the
/// condition set, or too few samples for the condition set size.
void check_condition(std::size_t x, std::size_t y, std::span<const std::size_t> condition,
                     std::size_t variables, std::size_t samples);

}  // namespace poisnet
