#pragma once

#include <bit>
#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

namespace chaoscorr::analytic {

/// sinc(x) = sin(x)/x with the removable singularity handled by a
/// short series below |x| = 1e-4 (cancellation-free near zero).
inline double sinc(double x) {
  const double ax = std::fabs(x);
  if (ax < 1e-4) {
    const double x2 = x * x;
    return 1.0 - x2 / 6.0 + x2 * x2 / 120.0;
  }
  return std::sin(x) / x;
}

/// Degree of first-order coherence of a rectangular spectrum of full
/// width `bandwidth_rad_per_s`: gamma(tau) = sinc(bandwidth*tau/2).
inline double gamma_coherence(double tau_s, double bandwidth_rad_per_s) {
  if (!(bandwidth_rad_per_s > 0.0))
    throw std::invalid_argument("gamma_coherence: bandwidth must be > 0");
  return sinc(0.5 * bandwidth_rad_per_s * tau_s);
}

/// Second-order correlation of chaotic light, g2(tau) = 1 + gamma^2.
inline double g2(double tau_s, double bandwidth_rad_per_s) {
  const double g = gamma_coherence(tau_s, bandwidth_rad_per_s);
  return 1.0 + g * g;
}

/// Third-order correlation of chaotic light:
///   g3 = 1 + g12^2 + g23^2 + g31^2 + 2*g12*g23*g31,
/// equal to 6 at coincident times, 1 at large separations.
inline double g3(double t1_s, double t2_s, double t3_s,
                 double bandwidth_rad_per_s) {
  const double g12 = gamma_coherence(t1_s - t2_s, bandwidth_rad_per_s);
  const double g23 = gamma_coherence(t2_s - t3_s, bandwidth_rad_per_s);
  const double g31 = gamma_coherence(t3_s - t1_s, bandwidth_rad_per_s);
  return 1.0 + g12 * g12 + g23 * g23 + g31 * g31 + 2.0 * g12 * g23 * g31;
}

inline constexpr int kMaxPermanentOrder = 20;

/// Matrix permanent by Ryser's inclusion-exclusion formula with
/// Gray-code column subsets; cost O(2^n * n), n <= 20.
inline double permanent(const double* a, int n) {
  if (n < 0 || n > kMaxPermanentOrder)
    throw std::invalid_argument("permanent: order must be in [0, 20]");
  if (n == 0) return 1.0;

  std::vector<double> row_sums(static_cast<std::size_t>(n), 0.0);
  double total = 0.0;
  std::uint64_t gray = 0;
  const std::uint64_t end = 1ULL << n;
  for (std::uint64_t k = 1; k < end; ++k) {
    const int j = std::countr_zero(k);  // column toggled at this step
    const std::uint64_t bit = 1ULL << j;
    gray ^= bit;
    if (gray & bit) {
      for (int i = 0; i < n; ++i)
        row_sums[static_cast<std::size_t>(i)] += a[i * n + j];
    } else {
      for (int i = 0; i < n; ++i)
        row_sums[static_cast<std::size_t>(i)] -= a[i * n + j];
    }
    double prod = 1.0;
    for (int i = 0; i < n; ++i) prod *= row_sums[static_cast<std::size_t>(i)];
    if (std::popcount(gray) & 1)
      total -= prod;
    else
      total += prod;
  }
  return (n & 1) ? -total : total;
}

/// N x N matrix of pairwise coherences gamma(t_i - t_j); symmetric with
/// unit diagonal.
struct CoherenceMatrix {
  int order = 0;
  std::vector<double> entries;  // row-major order x order

  double at(int i, int j) const {
    return entries[static_cast<std::size_t>(i) *
                       static_cast<std::size_t>(order) +
                   static_cast<std::size_t>(j)];
  }
};

inline CoherenceMatrix coherence_matrix(std::span<const double> times_s,
                                        double bandwidth_rad_per_s) {
  const int n = static_cast<int>(times_s.size());
  if (n < 1) throw std::invalid_argument("coherence_matrix: need N >= 1");
  CoherenceMatrix m;
  m.order = n;
  m.entries.resize(static_cast<std::size_t>(n) * static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      m.entries[static_cast<std::size_t>(i * n + j)] =
          gamma_coherence(times_s[static_cast<std::size_t>(i)] -
                              times_s[static_cast<std::size_t>(j)],
                          bandwidth_rad_per_s);
  return m;
}

/// N-th order correlation of chaotic light as the permanent of the
/// coherence matrix; N! at equal times, 1 at large separations. The
/// N = 3 case coincides with g3().
inline double gN(std::span<const double> times_s, double bandwidth_rad_per_s) {
  const CoherenceMatrix m = coherence_matrix(times_s, bandwidth_rad_per_s);
  return permanent(m.entries.data(), m.order);
}

/// Gauss-Legendre nodes/weights on [-1, 1], by Newton iteration on the
/// Legendre polynomial from the Chebyshev-based initial guess.
struct Quadrature {
  std::vector<double> nodes;
  std::vector<double> weights;
};

inline Quadrature gauss_legendre(int n) {
  if (n < 1) throw std::invalid_argument("gauss_legendre: n >= 1");
  Quadrature q;
  q.nodes.resize(static_cast<std::size_t>(n));
  q.weights.resize(static_cast<std::size_t>(n));
  const double pi = 3.14159265358979323846;
  for (int i = 0; i < n; ++i) {
    double x = std::cos(pi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = n * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::fabs(dx) < 1e-15) break;
    }
    q.nodes[static_cast<std::size_t>(i)] = x;
    q.weights[static_cast<std::size_t>(i)] = 2.0 / ((1.0 - x * x) * dp * dp);
  }
  return q;
}

/// Bin-averaged g3 over the central difference bin: mean of
/// g3(u, v, 0) for (u, v) uniform over [0, bin_width)^2, by tensor
/// Gauss-Legendre quadrature. Predicts the central-bin value a
/// histogram with that bin width should measure; 6 as the width goes
/// to zero, 1 for widths far above the coherence time.
inline double expected_contrast_with_binning(double bin_width_s,
                                             double bandwidth_rad_per_s) {
  if (!(bin_width_s > 0.0))
    throw std::invalid_argument(
        "expected_contrast_with_binning: bin width must be > 0");
  static const Quadrature q = gauss_legendre(32);
  const int n = static_cast<int>(q.nodes.size());
  const double half = 0.5 * bin_width_s;
  double acc = 0.0;
  for (int i = 0; i < n; ++i) {
    const double u = half * (q.nodes[static_cast<std::size_t>(i)] + 1.0);
    for (int j = 0; j < n; ++j) {
      const double v = half * (q.nodes[static_cast<std::size_t>(j)] + 1.0);
      acc += q.weights[static_cast<std::size_t>(i)] *
             q.weights[static_cast<std::size_t>(j)] *
             g3(u, v, 0.0, bandwidth_rad_per_s);
    }
  }
  return acc / 4.0;  // weights integrate to 2 per axis
}

/// Mean of g3 over an arbitrary difference-coordinate cell
/// [u0, u1) x [v0, v1); used to emit bin-averaged analytic surfaces.
inline double g3_cell_average(double u0_s, double u1_s, double v0_s,
                              double v1_s, double bandwidth_rad_per_s) {
  static const Quadrature q = gauss_legendre(8);
  const int n = static_cast<int>(q.nodes.size());
  const double cu = 0.5 * (u0_s + u1_s), hu = 0.5 * (u1_s - u0_s);
  const double cv = 0.5 * (v0_s + v1_s), hv = 0.5 * (v1_s - v0_s);
  double acc = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      acc += q.weights[static_cast<std::size_t>(i)] *
             q.weights[static_cast<std::size_t>(j)] *
             g3(cu + hu * q.nodes[static_cast<std::size_t>(i)],
                cv + hv * q.nodes[static_cast<std::size_t>(j)], 0.0,
                bandwidth_rad_per_s);
  return acc / 4.0;
}

/// Same for a 1-D g2 bin [u0, u1).
inline double g2_cell_average(double u0_s, double u1_s,
                              double bandwidth_rad_per_s) {
  static const Quadrature q = gauss_legendre(8);
  const double c = 0.5 * (u0_s + u1_s), h = 0.5 * (u1_s - u0_s);
  double acc = 0.0;
  for (std::size_t i = 0; i < q.nodes.size(); ++i)
    acc += q.weights[i] * g2(c + h * q.nodes[i], bandwidth_rad_per_s);
  return acc / 2.0;
}

}  // namespace chaoscorr::analytic
