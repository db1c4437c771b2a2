#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "chaoscorr/parallel.hpp"
#include "chaoscorr/rng.hpp"

namespace chaoscorr::field {

enum class SpectrumShape { Rectangular };

/// Spectral description of the chaotic source: M independent modes
/// spread uniformly over a rectangular band of full width
/// bandwidth_rad_per_s.
struct FieldConfig {
  double bandwidth_rad_per_s = 0.0;
  int num_modes = 0;
  double mean_intensity = 1.0;
  SpectrumShape spectrum_shape = SpectrumShape::Rectangular;

  void validate() const {
    if (!(bandwidth_rad_per_s > 0.0))
      throw std::invalid_argument("FieldConfig: bandwidth must be > 0");
    if (num_modes < 1)
      throw std::invalid_argument("FieldConfig: num_modes must be >= 1");
    if (!(mean_intensity > 0.0))
      throw std::invalid_argument("FieldConfig: mean_intensity must be > 0");
  }
};

/// tau_c = 2*pi / bandwidth: the first zero of the sinc coherence
/// kernel of a rectangular spectrum.
inline double coherence_time(const FieldConfig& config) {
  config.validate();
  return 2.0 * 3.14159265358979323846 / config.bandwidth_rad_per_s;
}

/// Complex baseband envelope on a uniform grid.
struct FieldTrace {
  double sample_interval_s = 0.0;
  std::vector<std::complex<double>> samples;
  FieldConfig config;
  std::uint64_t seed = 0;
};

struct IntensityTrace {
  double sample_interval_s = 0.0;
  std::vector<double> samples;
};

/// Grid resolution: samples per coherence time. 10 keeps the envelope
/// comfortably below Nyquist (dt * bandwidth = 2*pi/10 < pi) and the
/// interpolation error of off-grid intensity lookups well under 1%.
inline constexpr int kSamplesPerCoherenceTime = 10;

/// Phase recurrences restart from an exact sin/cos evaluation at fixed
/// global sample indices, so any chunk decomposition reproduces the
/// same bits and rounding drift stays bounded.
inline constexpr std::uint64_t kPhaseAnchorStride = 4096;

struct GridSpec {
  double sample_interval_s = 0.0;
  std::uint64_t num_samples = 0;

  /// Last fully defined time on the grid.
  double end_time_s() const {
    return static_cast<double>(num_samples - 1) * sample_interval_s;
  }
};

inline GridSpec grid_for(const FieldConfig& config, double duration_s) {
  config.validate();
  const double tau_c = coherence_time(config);
  if (!(duration_s >= 100.0 * tau_c))
    throw std::invalid_argument(
        "duration must span at least 100 coherence times");
  GridSpec g;
  g.sample_interval_s = tau_c / kSamplesPerCoherenceTime;
  // Two trailing samples of padding so interpolation at t <= duration
  // never reads past the end.
  g.num_samples =
      static_cast<std::uint64_t>(std::ceil(duration_s / g.sample_interval_s)) +
      2;
  return g;
}

/// Frozen random draw of the mode ensemble: offsets uniform in
/// [-bandwidth/2, +bandwidth/2], phases uniform in [0, 2*pi).
struct ModeTable {
  std::vector<double> delta_omega_rad_per_s;
  std::vector<double> phase_rad;
  double amplitude = 0.0;  // sqrt(mean_intensity / M)
};

inline ModeTable draw_modes(const FieldConfig& config, std::uint64_t seed) {
  config.validate();
  ModeTable t;
  const std::size_t m = static_cast<std::size_t>(config.num_modes);
  t.delta_omega_rad_per_s.resize(m);
  t.phase_rad.resize(m);
  t.amplitude = std::sqrt(config.mean_intensity / static_cast<double>(m));
  CounterRng rng = CounterRng::substream(seed, kStreamFieldModes);
  const double two_pi = 6.283185307179586476925286766559;
  for (std::size_t k = 0; k < m; ++k) {
    t.delta_omega_rad_per_s[k] =
        (rng.next_unit() - 0.5) * config.bandwidth_rad_per_s;
    t.phase_rad[k] = rng.next_unit() * two_pi;
  }
  return t;
}

/// Fills envelope samples for global grid indices
/// [first_sample, first_sample + count) at spacing dt. Each mode is
/// advanced by complex rotation between anchors.
inline void fill_envelope(const ModeTable& modes, double dt,
                          std::uint64_t first_sample, std::size_t count,
                          std::complex<double>* out) {
  if (count == 0) return;
  const std::size_t m = modes.delta_omega_rad_per_s.size();
  std::vector<double> cs(m), sn(m), step_c(m), step_s(m);
  for (std::size_t k = 0; k < m; ++k) {
    step_c[k] = std::cos(modes.delta_omega_rad_per_s[k] * dt);
    step_s[k] = std::sin(modes.delta_omega_rad_per_s[k] * dt);
  }

  const std::uint64_t last = first_sample + count;
  std::uint64_t block = first_sample / kPhaseAnchorStride;
  std::uint64_t idx = block * kPhaseAnchorStride;
  while (idx < last) {
    const double t0 = static_cast<double>(idx) * dt;
    for (std::size_t k = 0; k < m; ++k) {
      const double phi =
          modes.delta_omega_rad_per_s[k] * t0 + modes.phase_rad[k];
      cs[k] = std::cos(phi);
      sn[k] = std::sin(phi);
    }
    const std::uint64_t block_end =
        std::min<std::uint64_t>(idx + kPhaseAnchorStride, last);
    for (; idx < block_end; ++idx) {
      double acc_re = 0.0, acc_im = 0.0;
      for (std::size_t k = 0; k < m; ++k) {
        acc_re += cs[k];
        acc_im += sn[k];
      }
      if (idx >= first_sample)
        out[idx - first_sample] = std::complex<double>(
            modes.amplitude * acc_re, modes.amplitude * acc_im);
      for (std::size_t k = 0; k < m; ++k) {
        const double c = cs[k] * step_c[k] - sn[k] * step_s[k];
        const double s = sn[k] * step_c[k] + cs[k] * step_s[k];
        cs[k] = c;
        sn[k] = s;
      }
    }
  }
}

/// Synthesizes the chaotic envelope for the requested duration.
/// Deterministic for a fixed (config, duration, seed) regardless of
/// the worker count.
inline FieldTrace generate_field(const FieldConfig& config, double duration_s,
                                 std::uint64_t seed, unsigned workers = 0) {
  const GridSpec grid = grid_for(config, duration_s);
  const ModeTable modes = draw_modes(config, seed);

  FieldTrace trace;
  trace.sample_interval_s = grid.sample_interval_s;
  trace.config = config;
  trace.seed = seed;
  trace.samples.resize(grid.num_samples);

  constexpr std::uint64_t kFillChunk = 1ULL << 16;  // anchor-aligned
  const std::size_t n_chunks = static_cast<std::size_t>(
      (grid.num_samples + kFillChunk - 1) / kFillChunk);
  parallel_for_index(n_chunks, workers, [&](std::size_t c) {
    const std::uint64_t first = static_cast<std::uint64_t>(c) * kFillChunk;
    const std::size_t count = static_cast<std::size_t>(
        std::min<std::uint64_t>(kFillChunk, grid.num_samples - first));
    fill_envelope(modes, grid.sample_interval_s, first, count,
                  trace.samples.data() + first);
  });
  return trace;
}

/// Pointwise |E|^2 on the same grid.
inline IntensityTrace intensity(const FieldTrace& trace) {
  if (trace.samples.empty())
    throw std::invalid_argument("intensity: empty field trace");
  IntensityTrace out;
  out.sample_interval_s = trace.sample_interval_s;
  out.samples.resize(trace.samples.size());
  for (std::size_t i = 0; i < trace.samples.size(); ++i)
    out.samples[i] = std::norm(trace.samples[i]);
  return out;
}

}  // namespace chaoscorr::field
