#pragma once

#include <array>
#include <cstdint>
#include <string>

#include <json.hpp>

#include "chaoscorr/correlator.hpp"
#include "chaoscorr/detection.hpp"
#include "chaoscorr/field.hpp"
#include "chaoscorr/io.hpp"

namespace chaoscorr {

/// One fully resolved run: source, three detectors, acquisition length,
/// histogram axes and the master seed. Seconds and Hz at this boundary;
/// picoseconds only inside tag files and histograms.
struct RunConfig {
  field::FieldConfig field;
  std::array<detection::DetectorConfig, 3> detectors;
  std::array<double, 3> split_ratios = {1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0};
  double duration_s = 0.0;
  correlator::HistogramAxis axis13;
  correlator::HistogramAxis axis23;
  std::uint64_t seed = 1;
  std::string output_dir = "out";
  unsigned workers = 0;

  void validate() const {
    field.validate();
    const double tau_c = field::coherence_time(field);
    if (!(duration_s >= 100.0 * tau_c))
      throw std::invalid_argument(
          "RunConfig: duration must span at least 100 coherence times");
    for (const auto& det : detectors) {
      det.validate();
      if (det.mean_rate_hz * tau_c > 10.0)
        throw std::invalid_argument(
            "RunConfig: mean_rate_hz * tau_c must be <= 10");
    }
    double sum = 0.0;
    for (double r : split_ratios) {
      if (!(r >= 0.0))
        throw std::invalid_argument("RunConfig: split ratios must be >= 0");
      sum += r;
    }
    if (std::fabs(sum - 1.0) > 1e-9)
      throw std::invalid_argument("RunConfig: split ratios must sum to 1");
    axis13.validate();
    axis23.validate();
  }
};

inline RunConfig default_run_config() {
  RunConfig cfg;
  cfg.field.bandwidth_rad_per_s = 2.0 * 3.14159265358979323846 * 5e6;
  cfg.field.num_modes = 256;
  cfg.field.mean_intensity = 1.0;
  for (int k = 0; k < 3; ++k) {
    cfg.detectors[static_cast<std::size_t>(k)].channel_id = k + 1;
    cfg.detectors[static_cast<std::size_t>(k)].mean_rate_hz = 2e6;
  }
  cfg.duration_s = 10.0;
  cfg.axis13 = {20000, 2000000};
  cfg.axis23 = {20000, 2000000};
  return cfg;
}

inline nlohmann::json to_json(const RunConfig& cfg) {
  nlohmann::json j;
  j["field"] = {{"bandwidth_rad_per_s", cfg.field.bandwidth_rad_per_s},
                {"num_modes", cfg.field.num_modes},
                {"mean_intensity", cfg.field.mean_intensity},
                {"spectrum_shape", "rectangular"}};
  j["detectors"] = nlohmann::json::array();
  for (const auto& d : cfg.detectors)
    j["detectors"].push_back({{"channel_id", d.channel_id},
                              {"mean_rate_hz", d.mean_rate_hz},
                              {"dead_time_s", d.dead_time_s},
                              {"jitter_sigma_s", d.jitter_sigma_s},
                              {"delay_s", d.delay_s}});
  j["split_ratios"] = cfg.split_ratios;
  j["duration_s"] = cfg.duration_s;
  j["axes"] = {{"axis13", io::axis_to_json(cfg.axis13)},
               {"axis23", io::axis_to_json(cfg.axis23)}};
  j["seed"] = cfg.seed;
  j["output_dir"] = cfg.output_dir;
  j["workers"] = cfg.workers;
  return j;
}

inline RunConfig run_config_from_json(const nlohmann::json& j) {
  RunConfig cfg = default_run_config();
  try {
    if (j.contains("field")) {
      const auto& f = j.at("field");
      if (f.contains("bandwidth_rad_per_s"))
        cfg.field.bandwidth_rad_per_s = f.at("bandwidth_rad_per_s");
      if (f.contains("num_modes")) cfg.field.num_modes = f.at("num_modes");
      if (f.contains("mean_intensity"))
        cfg.field.mean_intensity = f.at("mean_intensity");
      if (f.contains("spectrum_shape") &&
          f.at("spectrum_shape") != "rectangular")
        throw std::invalid_argument(
            "config: only the rectangular spectrum is supported");
    }
    if (j.contains("detectors")) {
      const auto& ds = j.at("detectors");
      if (!ds.is_array() || ds.size() != 3)
        throw std::invalid_argument("config: detectors must be 3 entries");
      for (std::size_t k = 0; k < 3; ++k) {
        auto& d = cfg.detectors[k];
        const auto& e = ds.at(k);
        if (e.contains("channel_id")) d.channel_id = e.at("channel_id");
        if (e.contains("mean_rate_hz")) d.mean_rate_hz = e.at("mean_rate_hz");
        if (e.contains("dead_time_s")) d.dead_time_s = e.at("dead_time_s");
        if (e.contains("jitter_sigma_s"))
          d.jitter_sigma_s = e.at("jitter_sigma_s");
        if (e.contains("delay_s")) d.delay_s = e.at("delay_s");
      }
    }
    if (j.contains("split_ratios"))
      cfg.split_ratios = j.at("split_ratios").get<std::array<double, 3>>();
    if (j.contains("duration_s")) cfg.duration_s = j.at("duration_s");
    if (j.contains("axes")) {
      cfg.axis13 = io::axis_from_json(j.at("axes").at("axis13"));
      cfg.axis23 = io::axis_from_json(j.at("axes").at("axis23"));
    }
    if (j.contains("seed")) cfg.seed = j.at("seed");
    if (j.contains("output_dir")) cfg.output_dir = j.at("output_dir");
    if (j.contains("workers")) cfg.workers = j.at("workers");
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(std::string("config: ") + e.what());
  }
  cfg.validate();
  return cfg;
}

/// Hash of the fully resolved configuration; stamped into every output.
inline std::uint64_t config_hash(const RunConfig& cfg) {
  return io::fnv1a(to_json(cfg).dump());
}

/// Per-channel detection seed derived from the master seed.
inline std::uint64_t channel_seed(std::uint64_t master_seed, int channel_id) {
  return CounterRng::derive_key(master_seed, kStreamChannelSeed,
                                static_cast<std::uint64_t>(channel_id));
}

}  // namespace chaoscorr
