#pragma once

#include <cmath>
#include <cstdint>

namespace chaoscorr {

inline constexpr std::uint64_t kGolden64 = 0x9E3779B97F4A7C15ULL;

/// SplitMix64 finalizer; bijective on 64-bit integers.
inline constexpr std::uint64_t mix64(std::uint64_t z) {
  z ^= z >> 30;
  z *= 0xBF58476D1CE4E5B9ULL;
  z ^= z >> 27;
  z *= 0x94D049BB133111EBULL;
  z ^= z >> 31;
  return z;
}

/// Counter-based generator: output i is mix64(key + (i+1)*kGolden64),
/// i.e. the SplitMix64 sequence keyed by a hashed (seed, stream) pair.
/// Substreams are independent keys, so chunked/parallel sampling is
/// reproducible without jumping a shared state.
class CounterRng {
 public:
  explicit CounterRng(std::uint64_t key) : key_(key) {}

  static std::uint64_t derive_key(std::uint64_t seed, std::uint64_t stream,
                                  std::uint64_t index = 0) {
    std::uint64_t k = mix64(seed + kGolden64);
    k = mix64(k ^ (stream + 0xD1B54A32D192ED03ULL));
    k = mix64(k ^ (index + 0x8CB92BA72F3D8DD7ULL));
    return k;
  }

  static CounterRng substream(std::uint64_t seed, std::uint64_t stream,
                              std::uint64_t index = 0) {
    return CounterRng(derive_key(seed, stream, index));
  }

  std::uint64_t next_u64() {
    counter_ += kGolden64;
    return mix64(key_ + counter_);
  }

  /// Uniform in [0, 1).
  double next_unit() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  /// Uniform in (0, 1]; safe as a log() argument.
  double next_unit_pos() {
    return static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;
  }

  /// Unit-mean exponential deviate.
  double next_exponential() { return -std::log(next_unit_pos()); }

  /// Standard normal via Box-Muller; consumes exactly two outputs.
  double next_gaussian() {
    const double u = next_unit_pos();
    const double v = next_unit();
    return std::sqrt(-2.0 * std::log(u)) *
           std::cos(6.283185307179586476925286766559 * v);
  }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

/// Fixed stream tags; keep values stable, they are part of the
/// reproducibility contract of seeded runs.
enum StreamTag : std::uint64_t {
  kStreamFieldModes = 1,
  kStreamThinning = 2,
  kStreamChannelSeed = 3,
};

}  // namespace chaoscorr
