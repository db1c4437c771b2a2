#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

namespace chaoscorr::stats {

struct MeanVariance {
  double mean = 0.0;
  double variance = 0.0;  // unbiased
  std::size_t n = 0;
};

inline MeanVariance mean_variance(const std::vector<double>& xs) {
  MeanVariance mv;
  mv.n = xs.size();
  if (mv.n == 0) return mv;
  double sum = 0.0;
  for (double x : xs) sum += x;
  mv.mean = sum / static_cast<double>(mv.n);
  if (mv.n < 2) return mv;
  double ss = 0.0;
  for (double x : xs) ss += (x - mv.mean) * (x - mv.mean);
  mv.variance = ss / static_cast<double>(mv.n - 1);
  return mv;
}

/// Two-sided Kolmogorov-Smirnov distance of a sample against the
/// unit-mean exponential CDF.
inline double ks_statistic_exponential(std::vector<double> xs) {
  if (xs.empty())
    throw std::invalid_argument("ks_statistic_exponential: empty sample");
  std::sort(xs.begin(), xs.end());
  const double n = static_cast<double>(xs.size());
  double d = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double cdf = 1.0 - std::exp(-xs[i]);
    d = std::max(d, std::fabs(cdf - static_cast<double>(i + 1) / n));
    d = std::max(d, std::fabs(cdf - static_cast<double>(i) / n));
  }
  return d;
}

/// Asymptotic two-sided KS critical value at significance alpha.
inline double ks_critical(std::size_t n, double alpha) {
  const double c = std::sqrt(-0.5 * std::log(alpha / 2.0));
  return c / std::sqrt(static_cast<double>(n));
}

/// Upper quantile of chi-square with df degrees of freedom via the
/// Wilson-Hilferty cube approximation; z is the standard-normal
/// quantile of the same probability (2.3263 for p = 0.99).
inline double chi_square_quantile(double df, double z) {
  const double a = 2.0 / (9.0 * df);
  const double t = 1.0 - a + z * std::sqrt(a);
  return df * t * t * t;
}

inline constexpr double kZ99 = 2.3263478740408408;

struct FlatnessResult {
  double statistic = 0.0;
  double dof = 0.0;
  double critical_99 = 0.0;
  bool pass = false;
};

/// Pearson-style flatness test on per-bin counts against their common
/// mean. `overdispersion` scales the Poisson variance; 1 for constant
/// (coherent) intensity, 1 + rate*tau_c*(1 - 1/M) for a chaotic drive
/// whose intensity fluctuations add bunching variance on top of shot
/// noise.
inline FlatnessResult flatness_chi_square(
    const std::vector<std::uint64_t>& counts, double overdispersion = 1.0) {
  if (counts.size() < 2)
    throw std::invalid_argument("flatness_chi_square: need >= 2 bins");
  if (!(overdispersion >= 1.0))
    throw std::invalid_argument("flatness_chi_square: overdispersion >= 1");
  double total = 0.0;
  for (std::uint64_t c : counts) total += static_cast<double>(c);
  const double expected = total / static_cast<double>(counts.size());
  if (!(expected > 0.0))
    throw std::invalid_argument("flatness_chi_square: empty counts");
  FlatnessResult r;
  for (std::uint64_t c : counts) {
    const double d = static_cast<double>(c) - expected;
    r.statistic += d * d / (expected * overdispersion);
  }
  r.dof = static_cast<double>(counts.size() - 1);
  r.critical_99 = chi_square_quantile(r.dof, kZ99);
  r.pass = r.statistic <= r.critical_99;
  return r;
}

/// Counts tags into consecutive macro-bins of the given width.
inline std::vector<std::uint64_t> macro_bin_counts(
    const std::vector<std::uint64_t>& tags_ps, std::uint64_t duration_ps,
    std::uint64_t bin_ps) {
  if (bin_ps == 0 || duration_ps < 2 * bin_ps)
    throw std::invalid_argument("macro_bin_counts: bad bin width");
  const std::size_t n = static_cast<std::size_t>(duration_ps / bin_ps);
  std::vector<std::uint64_t> counts(n, 0);
  for (std::uint64_t t : tags_ps) {
    const std::size_t i = static_cast<std::size_t>(t / bin_ps);
    if (i < n) ++counts[i];  // tail shorter than a full bin is dropped
  }
  return counts;
}

}  // namespace chaoscorr::stats
