#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "chaoscorr/errors.hpp"
#include "chaoscorr/field.hpp"
#include "chaoscorr/parallel.hpp"
#include "chaoscorr/rng.hpp"

namespace chaoscorr::detection {

/// Semiclassical photodetector: instantaneous rate
/// lambda(t) = mean_rate_hz * I(t) / <I>, plus optional Gaussian
/// timing jitter, a fixed path delay and a non-paralyzable dead time.
struct DetectorConfig {
  int channel_id = 1;
  double mean_rate_hz = 0.0;
  double dead_time_s = 0.0;
  double jitter_sigma_s = 0.0;
  double delay_s = 0.0;

  void validate() const {
    if (channel_id < 1 || channel_id > 3)
      throw std::invalid_argument("DetectorConfig: channel_id must be 1..3");
    if (!(mean_rate_hz > 0.0))
      throw std::invalid_argument("DetectorConfig: mean_rate_hz must be > 0");
    if (dead_time_s < 0.0)
      throw std::invalid_argument("DetectorConfig: dead_time_s must be >= 0");
    if (jitter_sigma_s < 0.0)
      throw std::invalid_argument(
          "DetectorConfig: jitter_sigma_s must be >= 0");
    if (!std::isfinite(delay_s))
      throw std::invalid_argument("DetectorConfig: delay_s must be finite");
  }
};

/// Sorted picosecond timestamps of one detector channel.
struct TimeTagStream {
  int channel_id = 0;
  std::vector<std::uint64_t> tags;
  std::uint64_t origin_duration_ps = 0;
};

/// Splits one intensity trace into three scaled copies; ratios must be
/// non-negative and sum to 1 within 1e-9.
inline std::array<field::IntensityTrace, 3> split_intensity(
    const field::IntensityTrace& input, const std::array<double, 3>& ratios) {
  double sum = 0.0;
  for (double r : ratios) {
    if (!(r >= 0.0))
      throw std::invalid_argument("split_intensity: ratios must be >= 0");
    sum += r;
  }
  if (std::fabs(sum - 1.0) > 1e-9)
    throw std::invalid_argument("split_intensity: ratios must sum to 1");
  std::array<field::IntensityTrace, 3> out;
  for (int k = 0; k < 3; ++k) {
    out[static_cast<std::size_t>(k)].sample_interval_s =
        input.sample_interval_s;
    auto& s = out[static_cast<std::size_t>(k)].samples;
    s.resize(input.samples.size());
    const double r = ratios[static_cast<std::size_t>(k)];
    for (std::size_t i = 0; i < input.samples.size(); ++i)
      s[i] = r * input.samples[i];
  }
  return out;
}

/// Greedy non-paralyzable dead time: keep a tag iff it is at least
/// dead_time_ps after the last kept tag.
inline TimeTagStream apply_dead_time(const TimeTagStream& stream,
                                     std::uint64_t dead_time_ps) {
  TimeTagStream out;
  out.channel_id = stream.channel_id;
  out.origin_duration_ps = stream.origin_duration_ps;
  if (dead_time_ps == 0 || stream.tags.empty()) {
    out.tags = stream.tags;
    return out;
  }
  out.tags.reserve(stream.tags.size());
  out.tags.push_back(stream.tags.front());
  std::uint64_t last = stream.tags.front();
  for (std::size_t i = 1; i < stream.tags.size(); ++i) {
    const std::uint64_t t = stream.tags[i];
    if (t - last >= dead_time_ps) {
      out.tags.push_back(t);
      last = t;
    }
  }
  return out;
}

/// Chunk length for thinning substreams, in grid samples. Fixed so
/// that seeded results do not depend on worker count; a multiple of
/// the field's phase-anchor stride.
inline constexpr std::uint64_t kThinChunkSamples = 1ULL << 20;

namespace detail {

/// Thins a homogeneous Poisson candidate stream at lambda_max over
/// [t_begin, t_end) against linearly interpolated intensity. `samples`
/// must cover global grid indices [first_sample, first_sample + len);
/// `total_samples` bounds the interpolation clamp. Accepted times get
/// jitter and delay applied and are quantized to integer picoseconds.
inline void thin_chunk_tags(const double* samples, std::uint64_t first_sample,
                            std::size_t len, std::uint64_t total_samples,
                            double dt, double t_begin, double t_end,
                            double lambda_max, double intensity_max,
                            const DetectorConfig& det, CounterRng& rng,
                            std::vector<std::int64_t>& out) {
  (void)len;
  double t = t_begin;
  for (;;) {
    t += rng.next_exponential() / lambda_max;
    if (t >= t_end) break;
    const double pos = t / dt;
    std::uint64_t i = static_cast<std::uint64_t>(pos);
    if (i > total_samples - 2) i = total_samples - 2;
    const double frac = pos - static_cast<double>(i);
    const std::size_t local = static_cast<std::size_t>(i - first_sample);
    const double value =
        samples[local] + frac * (samples[local + 1] - samples[local]);
    if (rng.next_unit() * intensity_max < value) {
      double tagged = t + det.delay_s;
      if (det.jitter_sigma_s > 0.0)
        tagged += det.jitter_sigma_s * rng.next_gaussian();
      out.push_back(static_cast<std::int64_t>(std::llround(tagged * 1e12)));
    }
  }
}

/// Per-chunk sum and max, accumulated in fixed chunk order so the
/// reduction is bit-identical between the in-memory and streaming
/// paths.
struct IntensityStats {
  double mean = 0.0;
  double max = 0.0;
};

inline IntensityStats intensity_stats(const std::vector<double>& samples) {
  IntensityStats st;
  double total = 0.0;
  for (std::size_t first = 0; first < samples.size();
       first += kThinChunkSamples) {
    const std::size_t end = std::min<std::size_t>(
        first + static_cast<std::size_t>(kThinChunkSamples), samples.size());
    double partial = 0.0;
    for (std::size_t i = first; i < end; ++i) {
      partial += samples[i];
      if (samples[i] > st.max) st.max = samples[i];
    }
    total += partial;
  }
  st.mean = total / static_cast<double>(samples.size());
  return st;
}

/// Drops out-of-range tags, restores order after jitter/delay and
/// applies the dead time.
inline TimeTagStream finalize_stream(std::vector<std::int64_t>&& raw,
                                     std::uint64_t duration_ps,
                                     const DetectorConfig& det) {
  TimeTagStream stream;
  stream.channel_id = det.channel_id;
  stream.origin_duration_ps = duration_ps;
  stream.tags.reserve(raw.size());
  for (std::int64_t t : raw)
    if (t >= 0 && static_cast<std::uint64_t>(t) < duration_ps)
      stream.tags.push_back(static_cast<std::uint64_t>(t));
  if (!std::is_sorted(stream.tags.begin(), stream.tags.end()))
    std::sort(stream.tags.begin(), stream.tags.end());
  if (det.dead_time_s > 0.0) {
    const std::uint64_t dead_ps = static_cast<std::uint64_t>(
        std::llround(det.dead_time_s * 1e12));
    return apply_dead_time(stream, dead_ps);
  }
  return stream;
}

}  // namespace detail

/// Inhomogeneous Poisson sampling of photodetection times from an
/// intensity trace, by thinning against
/// lambda_max = mean_rate_hz * max(I) / <I>. Deterministic for fixed
/// (trace, detector, seed) independent of the worker count.
inline TimeTagStream sample_time_tags(const field::IntensityTrace& intensity,
                                      const DetectorConfig& det,
                                      std::uint64_t seed,
                                      unsigned workers = 0) {
  det.validate();
  if (intensity.samples.size() < 2)
    throw std::invalid_argument(
        "sample_time_tags: intensity trace needs at least 2 samples");
  if (!(intensity.sample_interval_s > 0.0))
    throw std::invalid_argument(
        "sample_time_tags: sample interval must be > 0");

  const detail::IntensityStats stats =
      detail::intensity_stats(intensity.samples);
  if (!(stats.max > 0.0))
    throw dark_input_error("sample_time_tags: dark input (all-zero intensity)");

  const double dt = intensity.sample_interval_s;
  const std::uint64_t n = intensity.samples.size();
  const double end_time = static_cast<double>(n - 1) * dt;
  const std::uint64_t duration_ps =
      static_cast<std::uint64_t>(std::llround(end_time * 1e12));
  const double lambda_max = det.mean_rate_hz * stats.max / stats.mean;

  const std::size_t n_chunks = static_cast<std::size_t>(
      (n + kThinChunkSamples - 1) / kThinChunkSamples);
  std::vector<std::vector<std::int64_t>> per_chunk(n_chunks);
  parallel_for_index(n_chunks, workers, [&](std::size_t c) {
    const std::uint64_t first =
        static_cast<std::uint64_t>(c) * kThinChunkSamples;
    const double t_begin = static_cast<double>(first) * dt;
    const double t_end =
        std::min(static_cast<double>(first + kThinChunkSamples) * dt,
                 end_time);
    CounterRng rng = CounterRng::substream(seed, kStreamThinning, c);
    detail::thin_chunk_tags(intensity.samples.data() + first, first,
                            static_cast<std::size_t>(
                                std::min<std::uint64_t>(kThinChunkSamples + 2,
                                                        n - first)),
                            n, dt, t_begin, t_end, lambda_max, stats.max, det,
                            rng, per_chunk[c]);
  });

  std::vector<std::int64_t> raw;
  std::size_t total = 0;
  for (const auto& v : per_chunk) total += v.size();
  raw.reserve(total);
  for (auto& v : per_chunk) raw.insert(raw.end(), v.begin(), v.end());
  return detail::finalize_stream(std::move(raw), duration_ps, det);
}

}  // namespace chaoscorr::detection
