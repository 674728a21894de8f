#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <utility>
#include <vector>

#include <boost/math/distributions/normal.hpp>

namespace atomweaver {

inline constexpr double kErrorBarCoverage = 0.68;

/// Two-sided normal quantile for a central interval of the given coverage.
inline double coverage_z(double coverage) {
  if (!(coverage > 0.0 && coverage < 1.0)) throw std::invalid_argument("coverage must lie in (0, 1)");
  return boost::math::quantile(boost::math::normal(), 0.5 + coverage / 2.0);
}

/// Wilson score interval for a binomial proportion.
inline std::pair<double, double> wilson_interval(std::size_t successes, std::size_t trials,
                                                 double coverage = kErrorBarCoverage) {
  if (trials == 0) throw std::invalid_argument("wilson_interval needs at least one trial");
  if (successes > trials) throw std::invalid_argument("successes exceed trials");
  const double n = static_cast<double>(trials);
  const double p = static_cast<double>(successes) / n;
  const double z = coverage_z(coverage);
  const double z2 = z * z;
  const double denom = 1.0 + z2 / n;
  const double centre = (p + z2 / (2.0 * n)) / denom;
  const double half = z / denom * std::sqrt(p * (1.0 - p) / n + z2 / (4.0 * n * n));
  double lo = successes == 0 ? 0.0 : std::max(0.0, centre - half);
  double hi = successes == trials ? 1.0 : std::min(1.0, centre + half);
  return {std::min(lo, p), std::max(hi, p)};
}

/// Point estimate with a 68% interval. Proportions use the Wilson interval, means use
/// the normal approximation.
struct EstimateWithCI {
  double estimate = 0.0;
  double lower = 0.0;
  double upper = 0.0;
  std::size_t trials = 0;

  static EstimateWithCI proportion(std::size_t successes, std::size_t trials,
                                   double coverage = kErrorBarCoverage) {
    const auto [lo, hi] = wilson_interval(successes, trials, coverage);
    return {static_cast<double>(successes) / static_cast<double>(trials), lo, hi, trials};
  }

  static EstimateWithCI mean(const std::vector<double>& samples, double coverage = kErrorBarCoverage) {
    if (samples.empty()) throw std::invalid_argument("mean of empty sample");
    const double n = static_cast<double>(samples.size());
    double sum = 0.0;
    for (double x : samples) sum += x;
    const double m = sum / n;
    double ss = 0.0;
    for (double x : samples) ss += (x - m) * (x - m);
    const double se = samples.size() > 1 ? std::sqrt(ss / (n - 1.0) / n) : 0.0;
    const double z = coverage_z(coverage);
    return {m, m - z * se, m + z * se, samples.size()};
  }

  /// Binomial standard error of a proportion estimate.
  double standard_error() const {
    return std::sqrt(estimate * (1.0 - estimate) / static_cast<double>(trials));
  }
};

/// Binomial(n, p) probability mass function, all k in [0, n].
inline std::vector<double> binomial_pmf(std::size_t n, double p) {
  if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("p must lie in [0, 1]");
  std::vector<double> pmf(n + 1, 0.0);
  if (p == 0.0) {
    pmf[0] = 1.0;
    return pmf;
  }
  if (p == 1.0) {
    pmf[n] = 1.0;
    return pmf;
  }
  const double nn = static_cast<double>(n);
  for (std::size_t k = 0; k <= n; ++k) {
    const double kk = static_cast<double>(k);
    const double log_term = std::lgamma(nn + 1.0) - std::lgamma(kk + 1.0) - std::lgamma(nn - kk + 1.0) +
                            kk * std::log(p) + (nn - kk) * std::log1p(-p);
    pmf[k] = std::exp(log_term);
  }
  return pmf;
}

/// P(X >= k) for a distribution given by its pmf over 0..n.
inline double tail_at_least(const std::vector<double>& pmf, std::size_t k) {
  double s = 0.0;
  for (std::size_t i = pmf.size(); i-- > k;) s += pmf[i];
  return std::min(1.0, s);
}

}  // namespace atomweaver
