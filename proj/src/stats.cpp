#include "poisnet/stats.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <functional>
#include <stdexcept>

namespace poisnet {

namespace {

constexpr std::size_t kMinSample = 10;
constexpr double kTableTail = 1e-14;
constexpr std::size_t kMaxTable = 10'000'000;

struct Moments {
  std::int64_t size = 0;
  double mean = 0.0;
  double variance = 0.0;  // unbiased
};

Moments moments(const Histogram& h) {
  Moments m;
  for (const auto& [v, c] : h) {
    m.size += c;
    m.mean += static_cast<double>(v) * static_cast<double>(c);
  }
  if (m.size == 0) return m;
  m.mean /= static_cast<double>(m.size);
  double ss = 0.0;
  for (const auto& [v, c] : h) {
    const double d = static_cast<double>(v) - m.mean;
    ss += d * d * static_cast<double>(c);
  }
  m.variance = m.size > 1 ? ss / static_cast<double>(m.size - 1) : 0.0;
  return m;
}

std::vector<double> poisson_table(double rate) {
  std::vector<double> pmf;
  if (rate <= 0.0) return {1.0};
  double cum = 0.0;
  for (std::size_t k = 0; k < kMaxTable; ++k) {
    const double p = poisson_pmf(static_cast<Count>(k), rate);
    pmf.push_back(p);
    cum += p;
    if (cum >= 1.0 - kTableTail || (static_cast<double>(k) > rate && p < kTableTail * 1e-3)) break;
  }
  return pmf;
}

std::vector<double> negbin_table(double r, double lambda) {
  std::vector<double> pmf;
  double p = std::exp(r * std::log1p(-lambda));
  double cum = 0.0;
  for (std::size_t k = 0; k < kMaxTable; ++k) {
    if (k > 0) p *= (static_cast<double>(k) + r - 1.0) / static_cast<double>(k) * lambda;
    pmf.push_back(p);
    cum += p;
    const double mean = r * lambda / (1.0 - lambda);
    if (cum >= 1.0 - kTableTail || (static_cast<double>(k) > mean && p < kTableTail * 1e-3)) break;
  }
  return pmf;
}

std::vector<double> table_for(const DistributionFit& fit) {
  switch (fit.family) {
    case Family::poisson:
      return poisson_table(fit.lambda);
    case Family::negative_binomial:
      return negbin_table(fit.r, fit.lambda);
    case Family::point_mass: {
      std::vector<double> pmf(static_cast<std::size_t>(fit.lambda) + 1, 0.0);
      pmf.back() = 1.0;
      return pmf;
    }
  }
  return {1.0};
}

DistributionFit fit_poisson(const Moments& m) { return {Family::poisson, m.mean, 0.0}; }

DistributionFit fit_negbin(const Moments& m) {
  if (m.variance == 0.0) return {Family::point_mass, m.mean, 0.0};
  if (m.variance <= m.mean) return fit_poisson(m);
  return {Family::negative_binomial, 1.0 - m.mean / m.variance,
          m.mean * m.mean / (m.variance - m.mean)};
}

using Fitter = std::function<DistributionFit(const Moments&)>;

GofResult bootstrap_ks(std::span<const Count> sample, Rng& rng, std::size_t n_boot,
                       const Fitter& fitter) {
  if (sample.size() < kMinSample)
    throw std::invalid_argument("goodness of fit needs at least 10 observations");
  for (Count v : sample)
    if (v < 0) throw std::invalid_argument("goodness of fit: negative count");

  const Histogram observed = make_histogram(sample);
  const Moments m = moments(observed);
  GofResult result;
  result.fit = fitter(m);
  if (result.fit.family == Family::point_mass) return result;

  const auto size = static_cast<std::int64_t>(sample.size());
  const std::vector<double> pmf = table_for(result.fit);
  result.statistic = ks_statistic(observed, sample_histogram(size, pmf, rng));

  std::size_t exceed = 0;
  for (std::size_t b = 0; b < n_boot; ++b) {
    const Histogram replicate = sample_histogram(size, pmf, rng);
    const DistributionFit refit = fitter(moments(replicate));
    const Histogram synthetic = sample_histogram(size, table_for(refit), rng);
    if (ks_statistic(replicate, synthetic) >= result.statistic) ++exceed;
  }
  result.p_value = static_cast<double>(1 + exceed) / static_cast<double>(1 + n_boot);
  return result;
}

}  // namespace

std::string to_string(Family family) {
  switch (family) {
    case Family::point_mass:
      return "point_mass";
    case Family::poisson:
      return "poisson";
    case Family::negative_binomial:
      return "negative_binomial";
  }
  return "unknown";
}

Histogram make_histogram(std::span<const Count> sample) {
  std::vector<Count> sorted(sample.begin(), sample.end());
  std::sort(sorted.begin(), sorted.end());
  Histogram h;
  for (Count v : sorted) {
    if (!h.empty() && h.back().first == v)
      ++h.back().second;
    else
      h.emplace_back(v, 1);
  }
  return h;
}

double ks_statistic(const Histogram& a, const Histogram& b) {
  std::int64_t na = 0, nb = 0;
  for (const auto& e : a) na += e.second;
  for (const auto& e : b) nb += e.second;
  if (na == 0 || nb == 0) throw std::invalid_argument("ks statistic: empty sample");

  // Exact integer numerator |ca*nb - cb*na| keeps ties between equal statistics exact.
  std::int64_t ca = 0, cb = 0, best = 0;
  std::size_t ia = 0, ib = 0;
  while (ia < a.size() || ib < b.size()) {
    Count v;
    if (ib == b.size() || (ia < a.size() && a[ia].first <= b[ib].first))
      v = a[ia].first;
    else
      v = b[ib].first;
    if (ia < a.size() && a[ia].first == v) ca += a[ia++].second;
    if (ib < b.size() && b[ib].first == v) cb += b[ib++].second;
    best = std::max(best, std::abs(ca * nb - cb * na));
  }
  return static_cast<double>(best) / (static_cast<double>(na) * static_cast<double>(nb));
}

double ks_statistic(std::span<const Count> a, std::span<const Count> b) {
  return ks_statistic(make_histogram(a), make_histogram(b));
}

Histogram sample_histogram(std::int64_t size, std::span<const double> pmf, Rng& rng) {
  Histogram h;
  std::int64_t remaining = size;
  double mass = 1.0;
  for (std::size_t k = 0; k < pmf.size() && remaining > 0; ++k) {
    std::int64_t c;
    if (k + 1 == pmf.size() || mass <= pmf[k]) {
      c = remaining;
    } else {
      c = rng.binomial(remaining, std::clamp(pmf[k] / mass, 0.0, 1.0));
    }
    if (c > 0) h.emplace_back(static_cast<Count>(k), c);
    remaining -= c;
    mass -= pmf[k];
  }
  return h;
}

double poisson_pmf(Count k, double rate) {
  if (k < 0) return 0.0;
  if (rate == 0.0) return k == 0 ? 1.0 : 0.0;
  const double kd = static_cast<double>(k);
  return std::exp(-rate + kd * std::log(rate) - std::lgamma(kd + 1.0));
}

double negbin_pmf(Count k, double r, double lambda) {
  if (!(r > 0.0) || !std::isfinite(r))
    throw std::domain_error("negative binomial: r must be positive");
  if (!(lambda > 0.0 && lambda < 1.0))
    throw std::domain_error("negative binomial: lambda must lie in (0, 1)");
  if (k < 0) throw std::domain_error("negative binomial: k must be nonnegative");
  const double kd = static_cast<double>(k);
  return std::exp(std::lgamma(kd + r) - std::lgamma(kd + 1.0) - std::lgamma(r) +
                  kd * std::log(lambda) + r * std::log1p(-lambda));
}

GofResult ks_test_poisson(std::span<const Count> sample, Rng& rng, std::size_t n_boot) {
  return bootstrap_ks(sample, rng, n_boot, fit_poisson);
}

GofResult ks_test_negbin(std::span<const Count> sample, Rng& rng, std::size_t n_boot) {
  return bootstrap_ks(sample, rng, n_boot, fit_negbin);
}

std::vector<double> box_cox(std::span<const double> z, double gamma) {
  std::vector<double> out;
  out.reserve(z.size());
  for (double v : z) {
    if (!(v > 0.0)) throw std::domain_error("box-cox: entries must be positive (shift counts by +1)");
    out.push_back(gamma == 0.0 ? std::log(v) : std::expm1(gamma * std::log(v)) / gamma);
  }
  return out;
}

}  // namespace poisnet
