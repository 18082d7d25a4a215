#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "poisnet/counts.hpp"
#include "poisnet/rng.hpp"

namespace poisnet {

enum class Family { point_mass, poisson, negative_binomial };

std::string to_string(Family family);

/// Fitted distribution. For the negative binomial, pmf(k) =
/// C(k+r-1, k) lambda^k (1-lambda)^r; for the Poisson only lambda is used.
struct DistributionFit {
  Family family = Family::poisson;
  double lambda = 0.0;
  double r = 0.0;
};

struct GofResult {
  double statistic = 0.0;
  double p_value = 1.0;
  DistributionFit fit;
};

/// Sample summarized as sorted (value, multiplicity) pairs.
using Histogram = std::vector<std::pair<Count, std::int64_t>>;

Histogram make_histogram(std::span<const Count> sample);

/// Two-sample Kolmogorov-Smirnov statistic sup_v |F_a(v) - F_b(v)|.
double ks_statistic(const Histogram& a, const Histogram& b);
double ks_statistic(std::span<const Count> a, std::span<const Count> b);

/// Histogram of `size` i.i.d. draws from the pmf p[0], p[1], ... drawn by
/// sequential conditional binomials (exactly multinomial). Mass beyond the
/// table is assigned to its last entry.
Histogram sample_histogram(std::int64_t size, std::span<const double> pmf, Rng& rng);

double poisson_pmf(Count k, double rate);
double negbin_pmf(Count k, double r, double lambda);

/// Two-sample KS between the sample and a synthetic Poisson sample of the
/// same size at the sample-mean rate. The p-value comes from a parametric
/// bootstrap that refits the rate on every replicate.
GofResult ks_test_poisson(std::span<const Count> sample, Rng& rng, std::size_t n_boot = 200);

/// As ks_test_poisson with a method-of-moments negative binomial fit
/// (r = m^2/(v-m), lambda = 1 - m/v). Falls back to the Poisson fit when the
/// sample is not over-dispersed, and to a point mass for constant samples.
GofResult ks_test_negbin(std::span<const Count> sample, Rng& rng, std::size_t n_boot = 200);

/// (z^gamma - 1)/gamma, or ln z at gamma = 0. Counts must be shifted by +1
/// before transforming since every entry has to be positive.
std::vector<double> box_cox(std::span<const double> z, double gamma);

template <class T>
std::vector<T> permute(std::span<const T> values, Rng& rng) {
  std::vector<T> out(values.begin(), values.end());
  rng.shuffle(std::span<T>(out));
  return out;
}

}  // namespace poisnet
