#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "poisnet/counts.hpp"

namespace poisnet {

/// Entropies are reported in nats throughout.
using Nats = double;

/// Cutoff rule for the infinite series in the Poisson entropy expressions.
/// Summation stops once the accumulated pmf mass reaches 1 - tail_mass, or
/// when the remaining mass is provably below tail_mass, or after max_terms.
struct TruncationPolicy {
  double tail_mass = 1e-12;
  std::size_t max_terms = 1'000'000;

  void validate() const;
};

/// Throws std::domain_error unless rate is finite and nonnegative.
double check_rate(double rate);

/// Symmetric nonnegative matrix of latent Poisson rates. The diagonal holds
/// base rates lambda_ii; off-diagonal entries are the coupling rates of the
/// latent stream shared by a pair.
class RateMatrix {
 public:
  RateMatrix() = default;
  explicit RateMatrix(std::size_t n);
  explicit RateMatrix(Eigen::MatrixXd values);

  std::size_t size() const { return static_cast<std::size_t>(values_.rows()); }
  double operator()(std::size_t i, std::size_t j) const {
    return values_(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
  }
  double base_rate(std::size_t i) const { return (*this)(i, i); }

  /// Sets (i, j) and (j, i).
  void set(std::size_t i, std::size_t j, double rate);

  RateMatrix restrict(std::span<const std::size_t> subset) const;

  const Eigen::MatrixXd& values() const { return values_; }

 private:
  Eigen::MatrixXd values_;
};

/// Entropy of Poisson(rate): rate - rate ln(rate) + sum_k p(k) ln(k!).
Nats poisson_entropy(double rate, const TruncationPolicy& policy = {});

/// Joint entropy of the bivariate Poisson built from private streams with
/// rates l11, l22 and a shared stream with rate l12, by direct double
/// summation of -P ln P with the combinatorial factor D(x1, x2) evaluated in
/// the log domain. Intended as the accuracy reference for the approximation.
Nats bivariate_joint_entropy_exact(double l11, double l22, double l12,
                                   const TruncationPolicy& policy = {});

/// Fast joint entropy: sum of base-rate marginal entropies plus the sum of
/// coupling rates over pairs in the subset.
Nats joint_entropy_approx(const RateMatrix& rates, std::span<const std::size_t> subset,
                          const TruncationPolicy& policy = {});
Nats joint_entropy_approx(const RateMatrix& rates, const TruncationPolicy& policy = {});

/// H(x_hat) + H(y_hat) - H(x, y) where the hatted marginals carry the coupling
/// rate on top of the base rate and H(x, y) is the fast approximation. With
/// that expansion every term of the four-term conditional identity collapses
/// to this expression, so it is shared by MI and CMI.
Nats poisson_cmi_from_rates(double rate_x, double rate_y, double coupling,
                            const TruncationPolicy& policy = {});

Nats mutual_information_poisson(double l11, double l22, double l12,
                                const TruncationPolicy& policy = {});

/// The variant with base-rate marginals in place of the hatted ones. Always
/// equals -l12 under the fast joint entropy; kept to demonstrate the sign
/// failure of that choice.
Nats naive_mutual_information_poisson(double l11, double l22, double l12,
                                      const TruncationPolicy& policy = {});

/// I(X_x; X_y | X_S) under the Poisson approximation, with base rates taken
/// from estimate_rate_matrix and the coupling rate from conditional_rate.
/// A zero-variance x or y yields 0.
Nats conditional_mutual_information_poisson(std::size_t x, std::size_t y,
                                            std::span<const std::size_t> condition,
                                            const CountMatrix& counts,
                                            const TruncationPolicy& policy = {});

/// Differential entropy 0.5 ln((2 pi e)^k det cov). A singular matrix is
/// retried once with 1e-9 added to the diagonal before giving up.
Nats gaussian_entropy(const Eigen::MatrixXd& covariance);

/// H(x,S) + H(y,S) - H(x,y,S) - H(S) over principal submatrices of cov.
Nats gaussian_cmi(std::size_t x, std::size_t y, std::span<const std::size_t> condition,
                  const Eigen::MatrixXd& covariance);

/// -0.5 ln(1 - r^2), the Gaussian CMI written in terms of the partial correlation.
Nats gaussian_cmi_from_partial_correlation(double r);

}  // namespace poisnet
