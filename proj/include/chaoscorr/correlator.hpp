#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "chaoscorr/detection.hpp"
#include "chaoscorr/parallel.hpp"

namespace chaoscorr::correlator {

/// Uniform delay axis spanning [-half_range_ps, +half_range_ps) in
/// bins of bin_width_ps; the half range must be a whole number of
/// bins, so zero delay always falls on a bin edge.
struct HistogramAxis {
  std::uint64_t bin_width_ps = 0;
  std::uint64_t half_range_ps = 0;

  void validate() const {
    if (bin_width_ps == 0)
      throw std::invalid_argument("HistogramAxis: bin width must be > 0");
    if (half_range_ps == 0 || half_range_ps % bin_width_ps != 0)
      throw std::invalid_argument(
          "HistogramAxis: half range must be a positive multiple of the bin "
          "width");
  }

  std::size_t num_bins() const {
    return static_cast<std::size_t>(2 * (half_range_ps / bin_width_ps));
  }
  std::int64_t lo_ps() const { return -static_cast<std::int64_t>(half_range_ps); }
  std::int64_t hi_ps() const { return static_cast<std::int64_t>(half_range_ps); }
  bool contains(std::int64_t delay_ps) const {
    return delay_ps >= lo_ps() && delay_ps < hi_ps();
  }
  std::size_t index(std::int64_t delay_ps) const {
    return static_cast<std::size_t>(
        static_cast<std::uint64_t>(delay_ps + static_cast<std::int64_t>(half_range_ps)) /
        bin_width_ps);
  }
  double center_ps(std::size_t bin) const {
    return static_cast<double>(lo_ps()) +
           (static_cast<double>(bin) + 0.5) * static_cast<double>(bin_width_ps);
  }
  bool operator==(const HistogramAxis&) const = default;
};

/// Acquisition bookkeeping carried by every histogram; feeds the
/// accidental-rate normalization.
struct AcquisitionMeta {
  std::uint64_t duration_ps = 0;
  std::vector<std::uint64_t> singles;  // per input channel, in stream order
};

struct Histogram1D {
  HistogramAxis axis;
  std::vector<std::uint64_t> counts;
  std::uint64_t total_pairs = 0;
  AcquisitionMeta acquisition;
};

struct CoincidenceHistogram2D {
  HistogramAxis axis13;  // t1 - t3
  HistogramAxis axis23;  // t2 - t3
  std::vector<std::uint64_t> counts;  // row-major [i13][i23]
  std::uint64_t total_triples = 0;
  AcquisitionMeta acquisition;

  std::uint64_t at(std::size_t i13, std::size_t i23) const {
    return counts[i13 * axis23.num_bins() + i23];
  }
};

struct NormalizedSurface {
  HistogramAxis axis13;
  HistogramAxis axis23;
  std::vector<double> values;  // row-major, g3 estimate per bin
  std::vector<double> stderr_values;
  AcquisitionMeta acquisition;

  double at(std::size_t i13, std::size_t i23) const {
    return values[i13 * axis23.num_bins() + i23];
  }
};

struct NormalizedProfile {
  std::uint64_t bin_width_ps = 0;
  std::vector<double> s_ps;  // coordinate along t13 = -t23
  std::vector<double> values;
  std::vector<double> stderr_values;
};

struct ContrastReport {
  double peak_value = 0.0;
  double background_value = 0.0;
  double contrast_ratio = 0.0;
  double visibility = 0.0;
  double peak_stderr = 0.0;
  double background_stderr = 0.0;
};

namespace detail {

inline void require_same_duration(std::uint64_t a, std::uint64_t b) {
  if (a != b)
    throw std::invalid_argument(
        "correlator: streams have mismatched acquisition durations");
}

}  // namespace detail

/// 1-D histogram of delays (t_a - t_b) by a two-cursor sort-merge
/// sweep; cost O(n_a + n_b + pairs in window).
inline Histogram1D histogram_g2(const detection::TimeTagStream& a,
                                const detection::TimeTagStream& b,
                                const HistogramAxis& axis,
                                unsigned workers = 0) {
  axis.validate();
  detail::require_same_duration(a.origin_duration_ps, b.origin_duration_ps);

  Histogram1D hist;
  hist.axis = axis;
  hist.counts.assign(axis.num_bins(), 0);
  hist.acquisition.duration_ps = a.origin_duration_ps;
  hist.acquisition.singles = {a.tags.size(), b.tags.size()};

  const std::size_t nb = b.tags.size();
  if (a.tags.empty() || nb == 0) return hist;

  // Partition the sweep over b; per-task histograms are summed in
  // task order, so the counts are exact for any worker count.
  const std::size_t kGrain = 1 << 16;
  const std::size_t n_tasks = (nb + kGrain - 1) / kGrain;
  std::vector<std::vector<std::uint64_t>> partial(n_tasks);
  parallel_for_index(n_tasks, workers, [&](std::size_t task) {
    auto& counts = partial[task];
    counts.assign(axis.num_bins(), 0);
    const std::size_t begin = task * kGrain;
    const std::size_t end = std::min(begin + kGrain, nb);
    std::size_t cursor = 0;
    for (std::size_t j = begin; j < end; ++j) {
      const std::int64_t tb = static_cast<std::int64_t>(b.tags[j]);
      const std::int64_t lo = tb + axis.lo_ps();
      if (j == begin) {
        cursor = static_cast<std::size_t>(
            std::lower_bound(a.tags.begin(), a.tags.end(),
                             static_cast<std::uint64_t>(std::max<std::int64_t>(lo, 0))) -
            a.tags.begin());
      }
      while (cursor < a.tags.size() &&
             static_cast<std::int64_t>(a.tags[cursor]) < lo)
        ++cursor;
      for (std::size_t i = cursor; i < a.tags.size(); ++i) {
        const std::int64_t d = static_cast<std::int64_t>(a.tags[i]) - tb;
        if (d >= axis.hi_ps()) break;
        ++counts[axis.index(d)];
      }
    }
  });
  for (const auto& counts : partial)
    for (std::size_t k = 0; k < hist.counts.size(); ++k)
      hist.counts[k] += counts[k];
  for (std::uint64_t c : hist.counts) hist.total_pairs += c;
  return hist;
}

/// 2-D triple-coincidence histogram over (t1 - t3, t2 - t3): a sweep
/// over stream 3 with windowed cursors into streams 1 and 2.
inline CoincidenceHistogram2D histogram_g3(const detection::TimeTagStream& s1,
                                           const detection::TimeTagStream& s2,
                                           const detection::TimeTagStream& s3,
                                           const HistogramAxis& axis13,
                                           const HistogramAxis& axis23,
                                           unsigned workers = 0) {
  axis13.validate();
  axis23.validate();
  detail::require_same_duration(s1.origin_duration_ps, s3.origin_duration_ps);
  detail::require_same_duration(s2.origin_duration_ps, s3.origin_duration_ps);

  CoincidenceHistogram2D hist;
  hist.axis13 = axis13;
  hist.axis23 = axis23;
  hist.counts.assign(axis13.num_bins() * axis23.num_bins(), 0);
  hist.acquisition.duration_ps = s3.origin_duration_ps;
  hist.acquisition.singles = {s1.tags.size(), s2.tags.size(), s3.tags.size()};

  const std::size_t n3 = s3.tags.size();
  if (s1.tags.empty() || s2.tags.empty() || n3 == 0) return hist;

  const std::size_t n23 = axis23.num_bins();
  const std::size_t kGrain = 1 << 15;
  const std::size_t n_tasks = (n3 + kGrain - 1) / kGrain;
  std::vector<std::vector<std::uint64_t>> partial(n_tasks);
  parallel_for_index(n_tasks, workers, [&](std::size_t task) {
    auto& counts = partial[task];
    counts.assign(hist.counts.size(), 0);
    const std::size_t begin = task * kGrain;
    const std::size_t end = std::min(begin + kGrain, n3);
    std::size_t c1 = 0, c2 = 0;
    bool seeded = false;
    for (std::size_t j = begin; j < end; ++j) {
      const std::int64_t t3 = static_cast<std::int64_t>(s3.tags[j]);
      const std::int64_t lo1 = t3 + axis13.lo_ps();
      const std::int64_t lo2 = t3 + axis23.lo_ps();
      if (!seeded) {
        c1 = static_cast<std::size_t>(
            std::lower_bound(s1.tags.begin(), s1.tags.end(),
                             static_cast<std::uint64_t>(std::max<std::int64_t>(lo1, 0))) -
            s1.tags.begin());
        c2 = static_cast<std::size_t>(
            std::lower_bound(s2.tags.begin(), s2.tags.end(),
                             static_cast<std::uint64_t>(std::max<std::int64_t>(lo2, 0))) -
            s2.tags.begin());
        seeded = true;
      }
      while (c1 < s1.tags.size() &&
             static_cast<std::int64_t>(s1.tags[c1]) < lo1)
        ++c1;
      while (c2 < s2.tags.size() &&
             static_cast<std::int64_t>(s2.tags[c2]) < lo2)
        ++c2;
      for (std::size_t i = c1; i < s1.tags.size(); ++i) {
        const std::int64_t d13 = static_cast<std::int64_t>(s1.tags[i]) - t3;
        if (d13 >= axis13.hi_ps()) break;
        const std::size_t row = axis13.index(d13) * n23;
        for (std::size_t k = c2; k < s2.tags.size(); ++k) {
          const std::int64_t d23 = static_cast<std::int64_t>(s2.tags[k]) - t3;
          if (d23 >= axis23.hi_ps()) break;
          ++counts[row + axis23.index(d23)];
        }
      }
    }
  });
  for (const auto& counts : partial)
    for (std::size_t k = 0; k < hist.counts.size(); ++k)
      hist.counts[k] += counts[k];
  for (std::uint64_t c : hist.counts) hist.total_triples += c;
  return hist;
}

namespace detail {

inline double accidental_denominator(const AcquisitionMeta& acq,
                                     double bin_product_ps) {
  if (acq.duration_ps == 0)
    throw std::invalid_argument("normalize: zero acquisition duration");
  const double t = static_cast<double>(acq.duration_ps);
  double rate_product = 1.0;
  for (std::uint64_t s : acq.singles) {
    if (s == 0)
      throw std::invalid_argument("normalize: zero singles count");
    rate_product *= static_cast<double>(s) / t;
  }
  return rate_product * t * bin_product_ps;
}

}  // namespace detail

/// Divides each bin by the accidental expectation
/// R1*R2*R3 * T * bin13 * bin23, so statistically independent inputs
/// normalize to 1. Standard errors are Poisson.
inline NormalizedSurface normalize_g3(const CoincidenceHistogram2D& hist) {
  NormalizedSurface out;
  out.axis13 = hist.axis13;
  out.axis23 = hist.axis23;
  out.acquisition = hist.acquisition;
  const double denom = detail::accidental_denominator(
      hist.acquisition, static_cast<double>(hist.axis13.bin_width_ps) *
                            static_cast<double>(hist.axis23.bin_width_ps));
  out.values.resize(hist.counts.size());
  out.stderr_values.resize(hist.counts.size());
  for (std::size_t i = 0; i < hist.counts.size(); ++i) {
    const double c = static_cast<double>(hist.counts[i]);
    out.values[i] = c / denom;
    out.stderr_values[i] = std::sqrt(std::max(c, 1.0)) / denom;
  }
  return out;
}

struct NormalizedG2 {
  HistogramAxis axis;
  std::vector<double> values;
  std::vector<double> stderr_values;
};

inline NormalizedG2 normalize_g2(const Histogram1D& hist) {
  NormalizedG2 out;
  out.axis = hist.axis;
  const double denom = detail::accidental_denominator(
      hist.acquisition, static_cast<double>(hist.axis.bin_width_ps));
  out.values.resize(hist.counts.size());
  out.stderr_values.resize(hist.counts.size());
  for (std::size_t i = 0; i < hist.counts.size(); ++i) {
    const double c = static_cast<double>(hist.counts[i]);
    out.values[i] = c / denom;
    out.stderr_values[i] = std::sqrt(std::max(c, 1.0)) / denom;
  }
  return out;
}

/// Anti-diagonal cut t13 = -t23 through a square surface, read from
/// the top-left corner (most negative t13, most positive t23) to the
/// bottom-right; coordinate s = t13 at each bin center.
inline NormalizedProfile slice_antidiagonal(const NormalizedSurface& surface) {
  if (!(surface.axis13 == surface.axis23))
    throw std::invalid_argument("slice_antidiagonal: axes must be square");
  const std::size_t n = surface.axis13.num_bins();
  NormalizedProfile p;
  p.bin_width_ps = surface.axis13.bin_width_ps;
  p.s_ps.resize(n);
  p.values.resize(n);
  p.stderr_values.resize(n);
  for (std::size_t k = 0; k < n; ++k) {
    const std::size_t i13 = k;
    const std::size_t i23 = n - 1 - k;
    p.s_ps[k] = surface.axis13.center_ps(i13);
    p.values[k] = surface.at(i13, i23);
    p.stderr_values[k] = surface.stderr_values[i13 * n + i23];
  }
  return p;
}

namespace detail {

struct PeakPick {
  double value = 0.0;
  double stderr_value = 0.0;
  double tie_metric = 0.0;
  bool set = false;

  void offer(double v, double se, double metric) {
    if (!set || v > value || (v == value && metric < tie_metric)) {
      value = v;
      stderr_value = se;
      tie_metric = metric;
      set = true;
    }
  }
};

inline ContrastReport finish_contrast(const PeakPick& peak, double bg_sum,
                                      double bg_var_sum, std::size_t bg_n) {
  if (bg_n < 100)
    throw std::invalid_argument(
        "contrast: background region has fewer than 100 bins");
  ContrastReport r;
  r.peak_value = peak.value;
  r.peak_stderr = peak.stderr_value;
  r.background_value = bg_sum / static_cast<double>(bg_n);
  r.background_stderr =
      std::sqrt(bg_var_sum) / static_cast<double>(bg_n);
  r.contrast_ratio = r.peak_value / r.background_value;
  r.visibility = (r.peak_value - r.background_value) /
                 (r.peak_value + r.background_value);
  return r;
}

}  // namespace detail

/// Peak = maximum bin (ties broken toward the origin), background =
/// mean over bins with all pairwise delays beyond
/// background_min_delay_ps.
inline ContrastReport contrast_and_visibility(
    const NormalizedSurface& surface, double background_min_delay_ps) {
  const std::size_t n13 = surface.axis13.num_bins();
  const std::size_t n23 = surface.axis23.num_bins();
  detail::PeakPick peak;
  double bg_sum = 0.0, bg_var = 0.0;
  std::size_t bg_n = 0;
  for (std::size_t i = 0; i < n13; ++i) {
    const double c13 = surface.axis13.center_ps(i);
    for (std::size_t j = 0; j < n23; ++j) {
      const double c23 = surface.axis23.center_ps(j);
      const double v = surface.at(i, j);
      const double se = surface.stderr_values[i * n23 + j];
      peak.offer(v, se, std::fabs(c13) + std::fabs(c23));
      if (std::fabs(c13) > background_min_delay_ps &&
          std::fabs(c23) > background_min_delay_ps &&
          std::fabs(c13 - c23) > background_min_delay_ps) {
        bg_sum += v;
        bg_var += se * se;
        ++bg_n;
      }
    }
  }
  return detail::finish_contrast(peak, bg_sum, bg_var, bg_n);
}

inline ContrastReport contrast_and_visibility(
    const NormalizedProfile& profile, double background_min_delay_ps) {
  detail::PeakPick peak;
  double bg_sum = 0.0, bg_var = 0.0;
  std::size_t bg_n = 0;
  for (std::size_t k = 0; k < profile.values.size(); ++k) {
    const double s = profile.s_ps[k];
    peak.offer(profile.values[k], profile.stderr_values[k],
               2.0 * std::fabs(s));
    if (std::fabs(s) > background_min_delay_ps) {
      bg_sum += profile.values[k];
      bg_var += profile.stderr_values[k] * profile.stderr_values[k];
      ++bg_n;
    }
  }
  return detail::finish_contrast(peak, bg_sum, bg_var, bg_n);
}

}  // namespace chaoscorr::correlator
