#pragma once

#include <array>
#include <cinttypes>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "chaoscorr/correlator.hpp"
#include "chaoscorr/detection.hpp"
#include "chaoscorr/errors.hpp"
#include "chaoscorr/field.hpp"

namespace chaoscorr::io {

inline constexpr std::array<char, 8> kTtagMagic = {'T', 'T', 'A', 'G',
                                                   '1', 0,   0,   0};

namespace detail {

inline void put_u32_le(std::ostream& os, std::uint32_t v) {
  char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xFF);
  os.write(b, 4);
}

inline void put_u64_le(std::ostream& os, std::uint64_t v) {
  char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xFF);
  os.write(b, 8);
}

inline std::uint32_t get_u32_le(std::istream& is) {
  unsigned char b[4];
  is.read(reinterpret_cast<char*>(b), 4);
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
  return v;
}

inline std::uint64_t get_u64_le(std::istream& is) {
  unsigned char b[8];
  is.read(reinterpret_cast<char*>(b), 8);
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  return v;
}

/// Shortest decimal that round-trips a double exactly.
inline std::string fmt_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

inline std::ofstream open_out(const std::filesystem::path& path,
                              std::ios::openmode mode = std::ios::out) {
  std::ofstream f(path, mode);
  if (!f) throw io_error("cannot open for writing: " + path.string());
  return f;
}

inline std::ifstream open_in(const std::filesystem::path& path,
                             std::ios::openmode mode = std::ios::in) {
  std::ifstream f(path, mode);
  if (!f) throw io_error("cannot open for reading: " + path.string());
  return f;
}

}  // namespace detail

/// TTAG1: 8-byte magic "TTAG1\0\0\0", u32 LE channel id, u64 LE record
/// count, then count * u64 LE picosecond timestamps (sorted). The
/// acquisition duration is not part of the format; it travels in the
/// JSON metadata and readers pass it explicitly.
inline void write_ttag1(const std::filesystem::path& path,
                        const detection::TimeTagStream& stream) {
  auto f = detail::open_out(path, std::ios::binary);
  f.write(kTtagMagic.data(), kTtagMagic.size());
  detail::put_u32_le(f, static_cast<std::uint32_t>(stream.channel_id));
  detail::put_u64_le(f, stream.tags.size());
  for (std::uint64_t t : stream.tags) detail::put_u64_le(f, t);
  if (!f) throw io_error("write failed: " + path.string());
}

inline detection::TimeTagStream read_ttag1(const std::filesystem::path& path,
                                           std::uint64_t duration_ps) {
  auto f = detail::open_in(path, std::ios::binary);
  std::array<char, 8> magic{};
  f.read(magic.data(), magic.size());
  if (!f || magic != kTtagMagic)
    throw io_error("not a TTAG1 file: " + path.string());
  detection::TimeTagStream s;
  s.channel_id = static_cast<int>(detail::get_u32_le(f));
  const std::uint64_t count = detail::get_u64_le(f);
  if (!f) throw io_error("truncated TTAG1 header: " + path.string());
  s.tags.resize(count);
  for (std::uint64_t i = 0; i < count; ++i) s.tags[i] = detail::get_u64_le(f);
  if (!f) throw io_error("truncated TTAG1 payload: " + path.string());
  for (std::uint64_t i = 1; i < count; ++i)
    if (s.tags[i] < s.tags[i - 1])
      throw io_error("TTAG1 tags not sorted: " + path.string());
  s.origin_duration_ps = duration_ps;
  return s;
}

inline void write_tags_csv(const std::filesystem::path& path,
                           const detection::TimeTagStream& stream) {
  auto f = detail::open_out(path);
  f << "tag_ps\n";
  for (std::uint64_t t : stream.tags) f << t << "\n";
  if (!f) throw io_error("write failed: " + path.string());
}

inline void write_field_csv(const std::filesystem::path& path,
                            const field::FieldTrace& trace) {
  auto f = detail::open_out(path);
  f << "t_s,re,im\n";
  for (std::size_t i = 0; i < trace.samples.size(); ++i) {
    const double t = static_cast<double>(i) * trace.sample_interval_s;
    f << detail::fmt_double(t) << ','
      << detail::fmt_double(trace.samples[i].real()) << ','
      << detail::fmt_double(trace.samples[i].imag()) << "\n";
  }
  if (!f) throw io_error("write failed: " + path.string());
}

inline void write_intensity_csv(const std::filesystem::path& path,
                                const field::IntensityTrace& trace) {
  auto f = detail::open_out(path);
  f << "t_s,intensity\n";
  for (std::size_t i = 0; i < trace.samples.size(); ++i) {
    const double t = static_cast<double>(i) * trace.sample_interval_s;
    f << detail::fmt_double(t) << ',' << detail::fmt_double(trace.samples[i])
      << "\n";
  }
  if (!f) throw io_error("write failed: " + path.string());
}

inline field::IntensityTrace read_intensity_csv(
    const std::filesystem::path& path) {
  auto f = detail::open_in(path);
  std::string line;
  if (!std::getline(f, line) || line != "t_s,intensity")
    throw io_error("bad intensity CSV header: " + path.string());
  field::IntensityTrace trace;
  double t0 = 0.0, t1 = 0.0;
  while (std::getline(f, line)) {
    if (line.empty()) continue;
    const std::size_t comma = line.find(',');
    if (comma == std::string::npos)
      throw io_error("malformed intensity CSV row: " + path.string());
    const double t = std::strtod(line.c_str(), nullptr);
    const double v = std::strtod(line.c_str() + comma + 1, nullptr);
    if (trace.samples.empty())
      t0 = t;
    else if (trace.samples.size() == 1)
      t1 = t;
    trace.samples.push_back(v);
  }
  if (trace.samples.size() < 2)
    throw io_error("intensity CSV needs at least 2 samples: " + path.string());
  trace.sample_interval_s = t1 - t0;
  if (!(trace.sample_interval_s > 0.0))
    throw io_error("intensity CSV has a bad time grid: " + path.string());
  return trace;
}

// --- histogram / surface emission -----------------------------------------

inline nlohmann::json axis_to_json(const correlator::HistogramAxis& a) {
  return {{"bin_width_ps", a.bin_width_ps}, {"half_range_ps", a.half_range_ps}};
}

inline correlator::HistogramAxis axis_from_json(const nlohmann::json& j) {
  correlator::HistogramAxis a;
  a.bin_width_ps = j.at("bin_width_ps").get<std::uint64_t>();
  a.half_range_ps = j.at("half_range_ps").get<std::uint64_t>();
  a.validate();
  return a;
}

inline void write_counts_csv(const std::filesystem::path& path,
                             const correlator::CoincidenceHistogram2D& hist) {
  auto f = detail::open_out(path);
  f << "t13_ps,t23_ps,count\n";
  const std::size_t n23 = hist.axis23.num_bins();
  for (std::size_t i = 0; i < hist.axis13.num_bins(); ++i)
    for (std::size_t j = 0; j < n23; ++j)
      f << detail::fmt_double(hist.axis13.center_ps(i)) << ','
        << detail::fmt_double(hist.axis23.center_ps(j)) << ','
        << hist.counts[i * n23 + j] << "\n";
  if (!f) throw io_error("write failed: " + path.string());
}

/// Surface = <name>.json (axes + acquisition + lineage) next to
/// <name>.csv (grid values). The JSON names its CSV so a reader only
/// needs the JSON path.
inline void write_surface(const std::filesystem::path& json_path,
                          const correlator::NormalizedSurface& surface,
                          const nlohmann::json& lineage) {
  std::filesystem::path csv_path = json_path;
  csv_path.replace_extension(".csv");
  {
    auto f = detail::open_out(csv_path);
    f << "t13_ps,t23_ps,g3,stderr\n";
    const std::size_t n23 = surface.axis23.num_bins();
    for (std::size_t i = 0; i < surface.axis13.num_bins(); ++i)
      for (std::size_t j = 0; j < n23; ++j)
        f << detail::fmt_double(surface.axis13.center_ps(i)) << ','
          << detail::fmt_double(surface.axis23.center_ps(j)) << ','
          << detail::fmt_double(surface.values[i * n23 + j]) << ','
          << detail::fmt_double(surface.stderr_values[i * n23 + j]) << "\n";
    if (!f) throw io_error("write failed: " + csv_path.string());
  }
  nlohmann::json j;
  j["format"] = "chaoscorr.g3_surface.v1";
  j["csv"] = csv_path.filename().string();
  j["axis13"] = axis_to_json(surface.axis13);
  j["axis23"] = axis_to_json(surface.axis23);
  j["acquisition"] = {{"duration_ps", surface.acquisition.duration_ps},
                      {"singles", surface.acquisition.singles}};
  j["lineage"] = lineage;
  auto f = detail::open_out(json_path);
  f << j.dump(2) << "\n";
  if (!f) throw io_error("write failed: " + json_path.string());
}

inline correlator::NormalizedSurface read_surface(
    const std::filesystem::path& json_path) {
  nlohmann::json j;
  try {
    auto f = detail::open_in(json_path);
    f >> j;
  } catch (const nlohmann::json::exception& e) {
    throw io_error("malformed surface JSON " + json_path.string() + ": " +
                   e.what());
  }
  correlator::NormalizedSurface s;
  try {
    if (j.at("format") != "chaoscorr.g3_surface.v1")
      throw io_error("unknown surface format in " + json_path.string());
    s.axis13 = axis_from_json(j.at("axis13"));
    s.axis23 = axis_from_json(j.at("axis23"));
    s.acquisition.duration_ps =
        j.at("acquisition").at("duration_ps").get<std::uint64_t>();
    s.acquisition.singles = j.at("acquisition")
                                .at("singles")
                                .get<std::vector<std::uint64_t>>();
  } catch (const nlohmann::json::exception& e) {
    throw io_error("malformed surface JSON " + json_path.string() + ": " +
                   e.what());
  }
  const std::filesystem::path csv_path =
      json_path.parent_path() / j.at("csv").get<std::string>();
  auto f = detail::open_in(csv_path);
  std::string line;
  if (!std::getline(f, line) || line != "t13_ps,t23_ps,g3,stderr")
    throw io_error("bad surface CSV header: " + csv_path.string());
  const std::size_t cells = s.axis13.num_bins() * s.axis23.num_bins();
  s.values.reserve(cells);
  s.stderr_values.reserve(cells);
  while (std::getline(f, line)) {
    if (line.empty()) continue;
    double t13, t23, v, se;
    if (std::sscanf(line.c_str(), "%lf,%lf,%lf,%lf", &t13, &t23, &v, &se) != 4)
      throw io_error("malformed surface CSV row: " + csv_path.string());
    s.values.push_back(v);
    s.stderr_values.push_back(se);
  }
  if (s.values.size() != cells)
    throw io_error("surface CSV size does not match axes: " +
                   csv_path.string());
  return s;
}

inline void write_profile_csv(const std::filesystem::path& path,
                              const correlator::NormalizedProfile& profile) {
  auto f = detail::open_out(path);
  f << "s_ps,g3,stderr\n";
  for (std::size_t k = 0; k < profile.values.size(); ++k)
    f << detail::fmt_double(profile.s_ps[k]) << ','
      << detail::fmt_double(profile.values[k]) << ','
      << detail::fmt_double(profile.stderr_values[k]) << "\n";
  if (!f) throw io_error("write failed: " + path.string());
}

inline void write_g2_csv(const std::filesystem::path& path,
                         const correlator::NormalizedG2& g2) {
  auto f = detail::open_out(path);
  f << "tau_ps,g2,stderr\n";
  for (std::size_t k = 0; k < g2.values.size(); ++k)
    f << detail::fmt_double(g2.axis.center_ps(k)) << ','
      << detail::fmt_double(g2.values[k]) << ','
      << detail::fmt_double(g2.stderr_values[k]) << "\n";
  if (!f) throw io_error("write failed: " + path.string());
}

inline void write_json(const std::filesystem::path& path,
                       const nlohmann::json& j) {
  auto f = detail::open_out(path);
  f << j.dump(2) << "\n";
  if (!f) throw io_error("write failed: " + path.string());
}

inline nlohmann::json read_json(const std::filesystem::path& path) {
  nlohmann::json j;
  try {
    auto f = detail::open_in(path);
    f >> j;
  } catch (const nlohmann::json::exception& e) {
    throw io_error("malformed JSON " + path.string() + ": " + e.what());
  }
  return j;
}

/// FNV-1a over a canonical JSON dump; stamped into every output so a
/// figure can be traced back to its exact configuration.
inline std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

}  // namespace chaoscorr::io
