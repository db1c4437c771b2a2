#pragma once

#include <stdexcept>
#include <string>

namespace chaoscorr {

/// All-zero intensity offered to the photodetection sampler.
struct dark_input_error : std::runtime_error {
  explicit dark_input_error(const std::string& what)
      : std::runtime_error(what) {}
};

/// Unreadable, unwritable or malformed file.
struct io_error : std::runtime_error {
  explicit io_error(const std::string& what) : std::runtime_error(what) {}
};

/// A measured-vs-analytic comparison exceeded its threshold.
struct compare_threshold_error : std::runtime_error {
  explicit compare_threshold_error(const std::string& what)
      : std::runtime_error(what) {}
};

}  // namespace chaoscorr
