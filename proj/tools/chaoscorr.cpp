// Command-line driver: simulate -> detect -> correlate -> compare for
// the chaotic-light triple-coincidence experiment, as one pipeline or
// as stages chained through files.

#include <cstdio>
#include <exception>
#include <string>

#include <CLI11.hpp>

#include "chaoscorr/config.hpp"
#include "chaoscorr/errors.hpp"
#include "chaoscorr/pipeline.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfigError = 2;
constexpr int kExitIoError = 3;
constexpr int kExitCompareFailed = 4;
constexpr int kExitDarkInput = 5;

struct Options {
  std::string config_path;
  std::string out_dir;
  std::string intensity_csv;
  std::string tags_dir;
  std::string measured_json;
  std::string reference_json;
  double rms_frac_tol = 0.05;
  std::uint64_t seed = 0;
  bool seed_set = false;
  std::uint64_t bin_ps = 0;
  std::uint64_t range_ps = 0;
  unsigned workers = 0;
  bool workers_set = false;
};

chaoscorr::RunConfig resolve_config(const Options& opt) {
  chaoscorr::RunConfig cfg = chaoscorr::default_run_config();
  if (!opt.config_path.empty())
    cfg = chaoscorr::run_config_from_json(
        chaoscorr::io::read_json(opt.config_path));
  if (opt.seed_set) cfg.seed = opt.seed;
  if (!opt.out_dir.empty()) cfg.output_dir = opt.out_dir;
  if (opt.workers_set) cfg.workers = opt.workers;
  if (opt.bin_ps != 0) {
    cfg.axis13.bin_width_ps = opt.bin_ps;
    cfg.axis23.bin_width_ps = opt.bin_ps;
  }
  if (opt.range_ps != 0) {
    cfg.axis13.half_range_ps = opt.range_ps;
    cfg.axis23.half_range_ps = opt.range_ps;
  }
  cfg.validate();
  return cfg;
}

void print_compare(const chaoscorr::pipeline::CompareReport& rep) {
  std::printf("rms %.5f (%.2f%% of peak)  chi2 %.1f over %zu bins\n", rep.rms,
              100.0 * rep.rms_fraction_of_peak, rep.chi_square, rep.bins);
  std::printf("measured: peak %.4f background %.4f contrast %.3f visibility %.3f\n",
              rep.measured_contrast.peak_value,
              rep.measured_contrast.background_value,
              rep.measured_contrast.contrast_ratio,
              rep.measured_contrast.visibility);
  std::printf("analytic: peak %.4f background %.4f contrast %.3f visibility %.3f\n",
              rep.analytic_contrast.peak_value,
              rep.analytic_contrast.background_value,
              rep.analytic_contrast.contrast_ratio,
              rep.analytic_contrast.visibility);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"chaotic-light triple-coincidence simulator and correlator"};
  app.require_subcommand(1);

  Options opt;
  app.add_option("--config", opt.config_path, "JSON run configuration");
  app.add_option("--seed", opt.seed, "master seed (overrides config)")
      ->each([&](const std::string&) { opt.seed_set = true; });
  app.add_option("--out", opt.out_dir, "output directory (overrides config)");
  app.add_option("--workers", opt.workers,
                 "worker thread cap (overrides config; env CHAOSCORR_WORKERS "
                 "is the fallback)")
      ->each([&](const std::string&) { opt.workers_set = true; });
  app.add_option("--bin-ps", opt.bin_ps, "histogram bin width, picoseconds");
  app.add_option("--range-ps", opt.range_ps,
                 "histogram half range, picoseconds");

  auto* simulate = app.add_subcommand(
      "simulate", "write the field envelope and intensity trace");
  auto* detect = app.add_subcommand(
      "detect", "produce three TTAG1 time-tag files");
  detect->add_option("--intensity", opt.intensity_csv,
                     "intensity CSV to detect from (default: synthesize and "
                     "stream the field)");
  auto* correlate = app.add_subcommand(
      "correlate", "build histograms and the normalized g3 surface");
  correlate->add_option("--tags", opt.tags_dir,
                        "directory with ch*.ttag1 + tags_meta.json (default: "
                        "the output directory)");
  auto* analytic = app.add_subcommand(
      "analytic", "emit the closed-form surface and slice on the same axes");
  auto* compare = app.add_subcommand(
      "compare", "compare a measured surface against a reference surface");
  compare->add_option("--measured", opt.measured_json, "measured surface JSON")
      ->required();
  compare
      ->add_option("--reference", opt.reference_json, "reference surface JSON")
      ->required();
  compare->add_option("--rms-frac-tol", opt.rms_frac_tol,
                      "fail when RMS exceeds this fraction of the reference "
                      "peak (<= 0 disables)");
  auto* pipeline = app.add_subcommand(
      "pipeline", "run simulate|detect|correlate|analytic|compare in one go");
  pipeline->add_option("--rms-frac-tol", opt.rms_frac_tol,
                       "comparison gate (<= 0 disables)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfigError;
  }

  try {
    const chaoscorr::RunConfig cfg = resolve_config(opt);
    if (simulate->parsed()) {
      chaoscorr::pipeline::run_simulate(cfg);
    } else if (detect->parsed()) {
      const auto streams = chaoscorr::pipeline::run_detect(cfg, opt.intensity_csv);
      std::printf("singles: %zu %zu %zu\n", streams[0].tags.size(),
                  streams[1].tags.size(), streams[2].tags.size());
    } else if (correlate->parsed()) {
      const std::string dir =
          opt.tags_dir.empty() ? cfg.output_dir : opt.tags_dir;
      const auto streams = chaoscorr::pipeline::read_tag_outputs(dir);
      const auto result = chaoscorr::pipeline::run_correlate(streams, cfg);
      std::printf("triples %llu  peak %.4f  background %.4f  visibility %.3f\n",
                  static_cast<unsigned long long>(result.histogram.total_triples),
                  result.contrast.peak_value, result.contrast.background_value,
                  result.contrast.visibility);
    } else if (analytic->parsed()) {
      chaoscorr::pipeline::run_analytic(cfg);
    } else if (compare->parsed()) {
      print_compare(chaoscorr::pipeline::run_compare(
          opt.measured_json, opt.reference_json, cfg, opt.rms_frac_tol));
    } else if (pipeline->parsed()) {
      print_compare(chaoscorr::pipeline::run_pipeline(cfg, opt.rms_frac_tol));
    }
  } catch (const chaoscorr::dark_input_error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitDarkInput;
  } catch (const chaoscorr::compare_threshold_error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitCompareFailed;
  } catch (const chaoscorr::io_error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitIoError;
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitConfigError;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return kExitOk;
}
