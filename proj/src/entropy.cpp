#include "poisnet/entropy.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>

#include "poisnet/rates.hpp"

namespace poisnet {

void TruncationPolicy::validate() const {
  if (!(tail_mass > 0.0 && tail_mass < 1.0))
    throw std::invalid_argument("truncation policy: tail_mass must lie in (0, 1)");
  if (max_terms < 1) throw std::invalid_argument("truncation policy: max_terms must be >= 1");
}

double check_rate(double rate) {
  if (!std::isfinite(rate) || rate < 0.0)
    throw std::domain_error("poisson rate must be finite and nonnegative, got " +
                            std::to_string(rate));
  return rate;
}

RateMatrix::RateMatrix(std::size_t n)
    : values_(Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n))) {}

RateMatrix::RateMatrix(Eigen::MatrixXd values) : values_(std::move(values)) {
  if (values_.rows() != values_.cols()) throw std::invalid_argument("rate matrix must be square");
  for (Eigen::Index i = 0; i < values_.rows(); ++i) {
    for (Eigen::Index j = 0; j < values_.cols(); ++j) {
      check_rate(values_(i, j));
      if (values_(i, j) != values_(j, i))
        throw std::invalid_argument("rate matrix must be symmetric");
    }
  }
}

void RateMatrix::set(std::size_t i, std::size_t j, double rate) {
  check_rate(rate);
  const auto a = static_cast<Eigen::Index>(i);
  const auto b = static_cast<Eigen::Index>(j);
  values_(a, b) = rate;
  values_(b, a) = rate;
}

RateMatrix RateMatrix::restrict(std::span<const std::size_t> subset) const {
  RateMatrix out(subset.size());
  for (std::size_t a = 0; a < subset.size(); ++a)
    for (std::size_t b = a; b < subset.size(); ++b) out.set(a, b, (*this)(subset[a], subset[b]));
  return out;
}

namespace {

// Upper bound on sum_{j>k} p(j) when k + 1 > rate: a geometric series with
// ratio rate / (k + 1).
double remaining_mass_bound(double pk, double rate, std::size_t k) {
  const double ratio = rate / static_cast<double>(k + 1);
  if (ratio >= 1.0) return std::numeric_limits<double>::infinity();
  return pk * ratio / (1.0 - ratio);
}

// Smallest k whose Poisson(rate) cdf reaches 1 - tail_mass.
std::size_t poisson_cutoff(double rate, const TruncationPolicy& policy) {
  if (rate == 0.0) return 0;
  const double log_rate = std::log(rate);
  double cum = 0.0;
  for (std::size_t k = 0; k < policy.max_terms; ++k) {
    const double pk = std::exp(-rate + static_cast<double>(k) * log_rate -
                               std::lgamma(static_cast<double>(k) + 1.0));
    cum += pk;
    if (cum >= 1.0 - policy.tail_mass) return k;
    if (static_cast<double>(k) + 1.0 > rate &&
        remaining_mass_bound(pk, rate, k) < policy.tail_mass)
      return k;
  }
  return policy.max_terms - 1;
}

double log_sum_exp(std::span<const double> terms) {
  const double top = *std::max_element(terms.begin(), terms.end());
  if (!std::isfinite(top)) return top;
  double s = 0.0;
  for (double v : terms) s += std::exp(v - top);
  return top + std::log(s);
}

}  // namespace

Nats poisson_entropy(double rate, const TruncationPolicy& policy) {
  check_rate(rate);
  policy.validate();
  if (rate == 0.0) return 0.0;

  const double log_rate = std::log(rate);
  double series = 0.0;  // sum_k p(k) ln(k!)
  double cum = 0.0;

  if (rate < 600.0) {
    // Forward recurrence; e^{-rate} is representable here.
    double pk = std::exp(-rate);
    double log_fact = 0.0;
    cum = pk;
    for (std::size_t k = 1; k < policy.max_terms; ++k) {
      const double kd = static_cast<double>(k);
      pk *= rate / kd;
      log_fact += std::log(kd);
      series += pk * log_fact;
      cum += pk;
      if (cum >= 1.0 - policy.tail_mass) break;
      if (kd + 1.0 > rate && remaining_mass_bound(pk, rate, k) < policy.tail_mass) break;
    }
  } else {
    for (std::size_t k = 0; k < policy.max_terms; ++k) {
      const double kd = static_cast<double>(k);
      const double log_fact = std::lgamma(kd + 1.0);
      const double pk = std::exp(-rate + kd * log_rate - log_fact);
      series += pk * log_fact;
      cum += pk;
      if (cum >= 1.0 - policy.tail_mass) break;
      if (kd + 1.0 > rate && remaining_mass_bound(pk, rate, k) < policy.tail_mass) break;
    }
  }
  return rate - rate * log_rate + series;
}

Nats bivariate_joint_entropy_exact(double l11, double l22, double l12,
                                   const TruncationPolicy& policy) {
  check_rate(l11);
  check_rate(l22);
  check_rate(l12);
  policy.validate();
  if (l12 > 0.0 && l11 * l22 == 0.0)
    throw std::domain_error("bivariate joint entropy: coupling rate needs positive base rates");

  const std::size_t k1 = poisson_cutoff(l11 + l12, policy);
  const std::size_t k2 = poisson_cutoff(l22 + l12, policy);
  const std::size_t kmax = std::max(k1, k2);

  std::vector<double> log_fact(kmax + 1);
  for (std::size_t k = 0; k <= kmax; ++k) log_fact[k] = std::lgamma(static_cast<double>(k) + 1.0);

  const double log_l11 = l11 > 0.0 ? std::log(l11) : 0.0;
  const double log_l22 = l22 > 0.0 ? std::log(l22) : 0.0;
  const double log_d = l12 > 0.0 ? std::log(l12) - log_l11 - log_l22 : 0.0;
  const double total = l11 + l22 + l12;

  std::vector<double> terms;
  terms.reserve(kmax + 1);
  double h = 0.0;
  for (std::size_t x1 = 0; x1 <= k1; ++x1) {
    if (l11 == 0.0 && x1 > 0) break;
    for (std::size_t x2 = 0; x2 <= k2; ++x2) {
      if (l22 == 0.0 && x2 > 0) break;
      // ln D(x1, x2) = ln sum_a x1!/(x1-a)! x2!/(x2-a)! d^a / a!
      double log_dfac = 0.0;
      if (l12 > 0.0) {
        terms.clear();
        const std::size_t amax = std::min(x1, x2);
        for (std::size_t a = 0; a <= amax; ++a) {
          terms.push_back(log_fact[x1] - log_fact[x1 - a] + log_fact[x2] - log_fact[x2 - a] +
                          static_cast<double>(a) * log_d - log_fact[a]);
        }
        log_dfac = log_sum_exp(terms);
      }
      const double log_p = -total + static_cast<double>(x1) * log_l11 +
                           static_cast<double>(x2) * log_l22 - log_fact[x1] - log_fact[x2] +
                           log_dfac;
      const double p = std::exp(log_p);
      if (p > 0.0) h -= p * log_p;
    }
  }
  return h;
}

Nats joint_entropy_approx(const RateMatrix& rates, std::span<const std::size_t> subset,
                          const TruncationPolicy& policy) {
  double h = 0.0;
  for (std::size_t a = 0; a < subset.size(); ++a) {
    h += poisson_entropy(rates.base_rate(subset[a]), policy);
    for (std::size_t b = a + 1; b < subset.size(); ++b) h += rates(subset[a], subset[b]);
  }
  return h;
}

Nats joint_entropy_approx(const RateMatrix& rates, const TruncationPolicy& policy) {
  std::vector<std::size_t> all(rates.size());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
  return joint_entropy_approx(rates, all, policy);
}

Nats poisson_cmi_from_rates(double rate_x, double rate_y, double coupling,
                            const TruncationPolicy& policy) {
  check_rate(rate_x);
  check_rate(rate_y);
  check_rate(coupling);
  if (coupling == 0.0) return 0.0;
  return poisson_entropy(rate_x + coupling, policy) + poisson_entropy(rate_y + coupling, policy) -
         poisson_entropy(rate_x, policy) - poisson_entropy(rate_y, policy) - coupling;
}

Nats mutual_information_poisson(double l11, double l22, double l12,
                                const TruncationPolicy& policy) {
  return poisson_cmi_from_rates(l11, l22, l12, policy);
}

Nats naive_mutual_information_poisson(double l11, double l22, double l12,
                                      const TruncationPolicy& policy) {
  RateMatrix rates(2);
  rates.set(0, 0, l11);
  rates.set(1, 1, l22);
  rates.set(0, 1, l12);
  return poisson_entropy(l11, policy) + poisson_entropy(l22, policy) -
         joint_entropy_approx(rates, policy);
}

Nats conditional_mutual_information_poisson(std::size_t x, std::size_t y,
                                            std::span<const std::size_t> condition,
                                            const CountMatrix& counts,
                                            const TruncationPolicy& policy) {
  check_condition(x, y, condition, counts.variables(), counts.samples());
  const StandardizedRows rows(counts);
  if (rows.degenerate(x) || rows.degenerate(y)) return 0.0;

  auto base_rate = [&](std::size_t v) {
    std::vector<double> couplings;
    for (std::size_t k = 0; k < rows.variables(); ++k)
      if (k != v) couplings.push_back(std::max(rows.correlation(v, k), 0.0));
    return base_rate_from_couplings(std::move(couplings));
  };
  const double coupling = std::max(rows.partial_correlation(x, y, condition), 0.0);
  return poisson_cmi_from_rates(base_rate(x), base_rate(y), coupling, policy);
}

namespace {

double log_det_spd(const Eigen::MatrixXd& m) {
  if (m.rows() == 0) return 0.0;
  Eigen::LLT<Eigen::MatrixXd> llt(m);
  if (llt.info() != Eigen::Success) {
    const Eigen::MatrixXd jittered =
        m + 1e-9 * Eigen::MatrixXd::Identity(m.rows(), m.cols());
    llt.compute(jittered);
    if (llt.info() != Eigen::Success)
      throw std::domain_error("gaussian entropy: covariance is not positive definite");
  }
  const auto& l = llt.matrixLLT();
  double s = 0.0;
  for (Eigen::Index i = 0; i < l.rows(); ++i) s += std::log(l(i, i));
  return 2.0 * s;
}

Eigen::MatrixXd principal(const Eigen::MatrixXd& m, const std::vector<std::size_t>& idx) {
  const auto k = static_cast<Eigen::Index>(idx.size());
  Eigen::MatrixXd out(k, k);
  for (Eigen::Index a = 0; a < k; ++a)
    for (Eigen::Index b = 0; b < k; ++b)
      out(a, b) = m(static_cast<Eigen::Index>(idx[a]), static_cast<Eigen::Index>(idx[b]));
  return out;
}

}  // namespace

Nats gaussian_entropy(const Eigen::MatrixXd& covariance) {
  if (covariance.rows() != covariance.cols())
    throw std::invalid_argument("gaussian entropy: covariance must be square");
  if (!covariance.isApprox(covariance.transpose(), 1e-12))
    throw std::invalid_argument("gaussian entropy: covariance must be symmetric");
  const auto k = static_cast<double>(covariance.rows());
  return 0.5 * (k * std::log(2.0 * std::numbers::pi * std::numbers::e) + log_det_spd(covariance));
}

Nats gaussian_cmi(std::size_t x, std::size_t y, std::span<const std::size_t> condition,
                  const Eigen::MatrixXd& covariance) {
  const auto n = static_cast<std::size_t>(covariance.rows());
  if (x >= n || y >= n || x == y) throw std::invalid_argument("gaussian cmi: bad variable ids");
  std::vector<std::size_t> s(condition.begin(), condition.end());
  for (auto v : s)
    if (v == x || v == y || v >= n)
      throw std::invalid_argument("gaussian cmi: bad condition set");

  auto with = [&](std::initializer_list<std::size_t> extra) {
    std::vector<std::size_t> idx(extra);
    idx.insert(idx.end(), s.begin(), s.end());
    return gaussian_entropy(principal(covariance, idx));
  };
  const double h_s = s.empty() ? 0.0 : gaussian_entropy(principal(covariance, s));
  return with({x}) + with({y}) - with({x, y}) - h_s;
}

Nats gaussian_cmi_from_partial_correlation(double r) {
  const double r2 = std::min(r * r, 1.0 - 1e-15);
  return -0.5 * std::log1p(-r2);
}

}  // namespace poisnet
