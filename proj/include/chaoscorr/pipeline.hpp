#pragma once

#include <array>
#include <cinttypes>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "chaoscorr/analytic.hpp"
#include "chaoscorr/config.hpp"
#include "chaoscorr/correlator.hpp"
#include "chaoscorr/detection.hpp"
#include "chaoscorr/errors.hpp"
#include "chaoscorr/field.hpp"
#include "chaoscorr/io.hpp"

namespace chaoscorr::pipeline {

inline nlohmann::json lineage(const RunConfig& cfg) {
  char hash[32];
  std::snprintf(hash, sizeof(hash), "%016" PRIx64, config_hash(cfg));
  return {{"seed", cfg.seed}, {"config_hash", hash}, {"config", to_json(cfg)}};
}

/// Background cut for contrast estimation: all pairwise delays beyond
/// five coherence times, where the analytic surface is flat to ~1e-3.
inline double background_min_delay_ps(const RunConfig& cfg) {
  return 5.0 * field::coherence_time(cfg.field) * 1e12;
}

/// Staged detection: split a materialized intensity trace and sample
/// each channel. Matches detect_streaming() bit for bit.
inline std::array<detection::TimeTagStream, 3> detect_from_intensity(
    const field::IntensityTrace& intensity, const RunConfig& cfg) {
  cfg.validate();
  const auto channels = detection::split_intensity(intensity, cfg.split_ratios);
  std::array<detection::TimeTagStream, 3> out;
  for (std::size_t k = 0; k < 3; ++k)
    out[k] = detection::sample_time_tags(
        channels[k], cfg.detectors[k],
        channel_seed(cfg.seed, cfg.detectors[k].channel_id), cfg.workers);
  return out;
}

/// Streaming detection straight from the field configuration: the
/// envelope is synthesized chunk by chunk and never materialized in
/// full. Pass 1 reduces per-channel intensity mean/max (fixing the
/// thinning ceiling), pass 2 thins each chunk with its own substream.
inline std::array<detection::TimeTagStream, 3> detect_streaming(
    const RunConfig& cfg) {
  cfg.validate();
  const field::GridSpec grid = field::grid_for(cfg.field, cfg.duration_s);
  const field::ModeTable modes = field::draw_modes(cfg.field, cfg.seed);
  const double dt = grid.sample_interval_s;
  const std::uint64_t n = grid.num_samples;
  const double end_time = grid.end_time_s();
  const std::uint64_t duration_ps =
      static_cast<std::uint64_t>(std::llround(end_time * 1e12));

  constexpr std::uint64_t kChunk = detection::kThinChunkSamples;
  const std::size_t n_chunks =
      static_cast<std::size_t>((n + kChunk - 1) / kChunk);

  // Pass 1: per-chunk partial sums and maxima of each scaled channel,
  // reduced in chunk order so the result matches the staged path.
  std::vector<std::array<double, 3>> chunk_sum(n_chunks);
  std::vector<std::array<double, 3>> chunk_max(n_chunks);
  parallel_for_index(n_chunks, cfg.workers, [&](std::size_t c) {
    const std::uint64_t first = static_cast<std::uint64_t>(c) * kChunk;
    const std::size_t count =
        static_cast<std::size_t>(std::min<std::uint64_t>(kChunk, n - first));
    std::vector<std::complex<double>> env(count);
    field::fill_envelope(modes, dt, first, count, env.data());
    std::vector<double> scaled(count);
    for (std::size_t k = 0; k < 3; ++k) {
      const double r = cfg.split_ratios[k];
      double partial = 0.0, mx = 0.0;
      for (std::size_t i = 0; i < count; ++i) scaled[i] = r * std::norm(env[i]);
      for (std::size_t i = 0; i < count; ++i) {
        partial += scaled[i];
        if (scaled[i] > mx) mx = scaled[i];
      }
      chunk_sum[c][k] = partial;
      chunk_max[c][k] = mx;
    }
  });

  std::array<double, 3> mean{}, mx{}, lambda_max{};
  for (std::size_t k = 0; k < 3; ++k) {
    double total = 0.0;
    for (std::size_t c = 0; c < n_chunks; ++c) {
      total += chunk_sum[c][k];
      if (chunk_max[c][k] > mx[k]) mx[k] = chunk_max[c][k];
    }
    mean[k] = total / static_cast<double>(n);
    if (!(mx[k] > 0.0))
      throw dark_input_error("detect: dark input on channel " +
                             std::to_string(k + 1));
    lambda_max[k] = cfg.detectors[k].mean_rate_hz * mx[k] / mean[k];
  }

  // Pass 2: thinning; chunk buffers carry two samples of lookahead for
  // interpolation at the upper edge.
  std::vector<std::array<std::vector<std::int64_t>, 3>> raw(n_chunks);
  parallel_for_index(n_chunks, cfg.workers, [&](std::size_t c) {
    const std::uint64_t first = static_cast<std::uint64_t>(c) * kChunk;
    const std::size_t count = static_cast<std::size_t>(
        std::min<std::uint64_t>(kChunk + 2, n - first));
    std::vector<std::complex<double>> env(count);
    field::fill_envelope(modes, dt, first, count, env.data());
    std::vector<double> scaled(count);
    const double t_begin = static_cast<double>(first) * dt;
    const double t_end =
        std::min(static_cast<double>(first + kChunk) * dt, end_time);
    for (std::size_t k = 0; k < 3; ++k) {
      const double r = cfg.split_ratios[k];
      for (std::size_t i = 0; i < count; ++i) scaled[i] = r * std::norm(env[i]);
      CounterRng rng = CounterRng::substream(
          channel_seed(cfg.seed, cfg.detectors[k].channel_id),
          kStreamThinning, c);
      detection::detail::thin_chunk_tags(scaled.data(), first, count, n, dt,
                                         t_begin, t_end, lambda_max[k], mx[k],
                                         cfg.detectors[k], rng, raw[c][k]);
    }
  });

  std::array<detection::TimeTagStream, 3> out;
  for (std::size_t k = 0; k < 3; ++k) {
    std::vector<std::int64_t> all;
    std::size_t total = 0;
    for (const auto& chunk : raw) total += chunk[k].size();
    all.reserve(total);
    for (const auto& chunk : raw)
      all.insert(all.end(), chunk[k].begin(), chunk[k].end());
    out[k] = detection::detail::finalize_stream(std::move(all), duration_ps,
                                                cfg.detectors[k]);
  }
  return out;
}

struct CorrelateResult {
  correlator::CoincidenceHistogram2D histogram;
  correlator::NormalizedSurface surface;
  correlator::NormalizedProfile profile;
  correlator::ContrastReport contrast;
};

inline CorrelateResult correlate(
    const std::array<detection::TimeTagStream, 3>& streams,
    const RunConfig& cfg) {
  CorrelateResult r;
  r.histogram = correlator::histogram_g3(streams[0], streams[1], streams[2],
                                         cfg.axis13, cfg.axis23, cfg.workers);
  r.surface = correlator::normalize_g3(r.histogram);
  r.profile = correlator::slice_antidiagonal(r.surface);
  r.contrast =
      correlator::contrast_and_visibility(r.surface, background_min_delay_ps(cfg));
  return r;
}

/// Analytic counterpart of the measured surface: per-bin means of the
/// closed-form g3 on the same axes (exact values, zero stderr).
inline correlator::NormalizedSurface analytic_surface(const RunConfig& cfg) {
  correlator::NormalizedSurface s;
  s.axis13 = cfg.axis13;
  s.axis23 = cfg.axis23;
  const std::size_t n13 = cfg.axis13.num_bins();
  const std::size_t n23 = cfg.axis23.num_bins();
  s.values.resize(n13 * n23);
  s.stderr_values.assign(n13 * n23, 0.0);
  const double bw = cfg.field.bandwidth_rad_per_s;
  for (std::size_t i = 0; i < n13; ++i) {
    const double u0 = (s.axis13.center_ps(i) -
                       0.5 * static_cast<double>(s.axis13.bin_width_ps)) *
                      1e-12;
    const double u1 =
        u0 + static_cast<double>(s.axis13.bin_width_ps) * 1e-12;
    for (std::size_t j = 0; j < n23; ++j) {
      const double v0 = (s.axis23.center_ps(j) -
                         0.5 * static_cast<double>(s.axis23.bin_width_ps)) *
                        1e-12;
      const double v1 =
          v0 + static_cast<double>(s.axis23.bin_width_ps) * 1e-12;
      s.values[i * n23 + j] = analytic::g3_cell_average(u0, u1, v0, v1, bw);
    }
  }
  return s;
}

struct CompareReport {
  double rms = 0.0;
  double rms_fraction_of_peak = 0.0;
  double chi_square = 0.0;
  std::size_t bins = 0;
  std::size_t bins_with_stderr = 0;
  correlator::ContrastReport measured_contrast;
  correlator::ContrastReport analytic_contrast;
};

inline CompareReport compare_surfaces(
    const correlator::NormalizedSurface& measured,
    const correlator::NormalizedSurface& reference, double bg_min_delay_ps) {
  if (!(measured.axis13 == reference.axis13) ||
      !(measured.axis23 == reference.axis23))
    throw std::invalid_argument("compare: surfaces have mismatched axes");
  CompareReport rep;
  rep.bins = measured.values.size();
  double ss = 0.0;
  for (std::size_t i = 0; i < measured.values.size(); ++i) {
    const double r = measured.values[i] - reference.values[i];
    ss += r * r;
    const double se = measured.stderr_values[i];
    if (se > 0.0) {
      rep.chi_square += (r / se) * (r / se);
      ++rep.bins_with_stderr;
    }
  }
  rep.rms = std::sqrt(ss / static_cast<double>(rep.bins));
  rep.measured_contrast =
      correlator::contrast_and_visibility(measured, bg_min_delay_ps);
  rep.analytic_contrast =
      correlator::contrast_and_visibility(reference, bg_min_delay_ps);
  rep.rms_fraction_of_peak = rep.rms / rep.analytic_contrast.peak_value;
  return rep;
}

// --- file-writing stage drivers -------------------------------------------

inline nlohmann::json contrast_to_json(const correlator::ContrastReport& r) {
  return {{"peak_value", r.peak_value},
          {"background_value", r.background_value},
          {"contrast_ratio", r.contrast_ratio},
          {"visibility", r.visibility},
          {"peak_stderr", r.peak_stderr},
          {"background_stderr", r.background_stderr}};
}

inline void run_simulate(const RunConfig& cfg) {
  cfg.validate();
  namespace fs = std::filesystem;
  fs::create_directories(cfg.output_dir);
  const field::FieldTrace trace =
      field::generate_field(cfg.field, cfg.duration_s, cfg.seed, cfg.workers);
  io::write_field_csv(fs::path(cfg.output_dir) / "field.csv", trace);
  io::write_intensity_csv(fs::path(cfg.output_dir) / "intensity.csv",
                          field::intensity(trace));
  io::write_json(fs::path(cfg.output_dir) / "simulate_meta.json",
                 lineage(cfg));
}

inline void write_tag_outputs(
    const std::array<detection::TimeTagStream, 3>& streams,
    const RunConfig& cfg) {
  namespace fs = std::filesystem;
  fs::create_directories(cfg.output_dir);
  nlohmann::json meta = lineage(cfg);
  meta["duration_ps"] = streams[0].origin_duration_ps;
  meta["singles"] = {streams[0].tags.size(), streams[1].tags.size(),
                     streams[2].tags.size()};
  for (std::size_t k = 0; k < 3; ++k) {
    const std::string name = "ch" + std::to_string(streams[k].channel_id);
    io::write_ttag1(fs::path(cfg.output_dir) / (name + ".ttag1"), streams[k]);
  }
  io::write_json(fs::path(cfg.output_dir) / "tags_meta.json", meta);
}

inline std::array<detection::TimeTagStream, 3> run_detect(
    const RunConfig& cfg, const std::string& intensity_csv = "") {
  std::array<detection::TimeTagStream, 3> streams;
  if (intensity_csv.empty()) {
    streams = detect_streaming(cfg);
  } else {
    const field::IntensityTrace trace = io::read_intensity_csv(intensity_csv);
    streams = detect_from_intensity(trace, cfg);
  }
  write_tag_outputs(streams, cfg);
  return streams;
}

inline std::array<detection::TimeTagStream, 3> read_tag_outputs(
    const std::string& dir) {
  namespace fs = std::filesystem;
  const nlohmann::json meta = io::read_json(fs::path(dir) / "tags_meta.json");
  std::uint64_t duration_ps = 0;
  try {
    duration_ps = meta.at("duration_ps").get<std::uint64_t>();
  } catch (const nlohmann::json::exception& e) {
    throw io_error(std::string("tags_meta.json: ") + e.what());
  }
  std::array<detection::TimeTagStream, 3> streams;
  for (std::size_t k = 0; k < 3; ++k) {
    const std::string name = "ch" + std::to_string(k + 1) + ".ttag1";
    streams[k] = io::read_ttag1(fs::path(dir) / name, duration_ps);
  }
  return streams;
}

inline CorrelateResult run_correlate(
    const std::array<detection::TimeTagStream, 3>& streams,
    const RunConfig& cfg) {
  cfg.validate();
  namespace fs = std::filesystem;
  fs::create_directories(cfg.output_dir);
  CorrelateResult result = correlate(streams, cfg);

  nlohmann::json meta = lineage(cfg);
  meta["axis13"] = io::axis_to_json(cfg.axis13);
  meta["axis23"] = io::axis_to_json(cfg.axis23);
  meta["total_triples"] = result.histogram.total_triples;
  meta["duration_ps"] = result.histogram.acquisition.duration_ps;
  meta["singles"] = result.histogram.acquisition.singles;
  io::write_json(fs::path(cfg.output_dir) / "histogram_meta.json", meta);
  io::write_counts_csv(fs::path(cfg.output_dir) / "histogram_counts.csv",
                       result.histogram);
  io::write_surface(fs::path(cfg.output_dir) / "g3_surface.json",
                    result.surface, lineage(cfg));
  io::write_profile_csv(fs::path(cfg.output_dir) / "g3_profile.csv",
                        result.profile);
  io::write_json(fs::path(cfg.output_dir) / "contrast.json",
                 contrast_to_json(result.contrast));

  // HBT baseline for the 1-2 pair alongside the triple histogram.
  const auto g2h =
      correlator::histogram_g2(streams[0], streams[1], cfg.axis13, cfg.workers);
  io::write_g2_csv(fs::path(cfg.output_dir) / "g2_12.csv",
                   correlator::normalize_g2(g2h));
  return result;
}

inline void run_analytic(const RunConfig& cfg) {
  cfg.validate();
  namespace fs = std::filesystem;
  fs::create_directories(cfg.output_dir);
  const correlator::NormalizedSurface surface = analytic_surface(cfg);
  io::write_surface(fs::path(cfg.output_dir) / "analytic_surface.json",
                    surface, lineage(cfg));
  io::write_profile_csv(fs::path(cfg.output_dir) / "analytic_profile.csv",
                        correlator::slice_antidiagonal(surface));
}

/// Compares a measured surface against a reference surface, writes the
/// residual grid and report, and enforces the RMS threshold (fraction
/// of the reference peak; <= 0 disables the gate).
inline CompareReport run_compare(const std::string& measured_json,
                                 const std::string& reference_json,
                                 const RunConfig& cfg,
                                 double rms_fraction_tolerance) {
  namespace fs = std::filesystem;
  fs::create_directories(cfg.output_dir);
  const correlator::NormalizedSurface measured =
      io::read_surface(measured_json);
  const correlator::NormalizedSurface reference =
      io::read_surface(reference_json);
  const CompareReport rep =
      compare_surfaces(measured, reference, background_min_delay_ps(cfg));

  {
    auto f = io::detail::open_out(fs::path(cfg.output_dir) / "residuals.csv");
    f << "t13_ps,t23_ps,residual\n";
    const std::size_t n23 = measured.axis23.num_bins();
    for (std::size_t i = 0; i < measured.axis13.num_bins(); ++i)
      for (std::size_t j = 0; j < n23; ++j)
        f << io::detail::fmt_double(measured.axis13.center_ps(i)) << ','
          << io::detail::fmt_double(measured.axis23.center_ps(j)) << ','
          << io::detail::fmt_double(measured.values[i * n23 + j] -
                                    reference.values[i * n23 + j])
          << "\n";
  }
  nlohmann::json j = lineage(cfg);
  j["rms"] = rep.rms;
  j["rms_fraction_of_peak"] = rep.rms_fraction_of_peak;
  j["chi_square"] = rep.chi_square;
  j["bins"] = rep.bins;
  j["measured_contrast"] = contrast_to_json(rep.measured_contrast);
  j["analytic_contrast"] = contrast_to_json(rep.analytic_contrast);
  io::write_json(fs::path(cfg.output_dir) / "compare_report.json", j);

  if (rms_fraction_tolerance > 0.0 &&
      rep.rms_fraction_of_peak > rms_fraction_tolerance) {
    char msg[128];
    std::snprintf(msg, sizeof(msg),
                  "compare: RMS %.4f exceeds %.2f%% of the reference peak",
                  rep.rms, 100.0 * rms_fraction_tolerance);
    throw compare_threshold_error(msg);
  }
  return rep;
}

/// simulate -> detect -> correlate -> analytic -> compare in one call,
/// streaming the field (no intermediate trace files).
inline CompareReport run_pipeline(const RunConfig& cfg,
                                  double rms_fraction_tolerance) {
  cfg.validate();
  namespace fs = std::filesystem;
  const auto streams = detect_streaming(cfg);
  write_tag_outputs(streams, cfg);
  run_correlate(streams, cfg);
  run_analytic(cfg);
  return run_compare((fs::path(cfg.output_dir) / "g3_surface.json").string(),
                     (fs::path(cfg.output_dir) / "analytic_surface.json").string(),
                     cfg, rms_fraction_tolerance);
}

}  // namespace chaoscorr::pipeline
