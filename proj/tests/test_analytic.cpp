#include <doctest.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <vector>

#include "chaoscorr/analytic.hpp"
#include "chaoscorr/rng.hpp"

using namespace chaoscorr;
namespace an = chaoscorr::analytic;

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;

/// Brute-force permanent: sum over all column permutations.
double permanent_oracle(const double* a, int n) {
  std::vector<int> cols(static_cast<std::size_t>(n));
  std::iota(cols.begin(), cols.end(), 0);
  double sum = 0.0;
  do {
    double prod = 1.0;
    for (int i = 0; i < n; ++i)
      prod *= a[i * n + cols[static_cast<std::size_t>(i)]];
    sum += prod;
  } while (std::next_permutation(cols.begin(), cols.end()));
  return sum;
}

/// Composite-Simpson mean of g3 over the central bin square; the
/// independent cross-check for the Gauss-Legendre implementation.
double central_bin_mean_simpson(double width_s, double bandwidth) {
  const int n = 200;  // even panel count per axis
  const double h = width_s / n;
  auto w1 = [&](int i) {
    if (i == 0 || i == n) return 1.0;
    return (i % 2 == 1) ? 4.0 : 2.0;
  };
  double acc = 0.0;
  for (int i = 0; i <= n; ++i)
    for (int j = 0; j <= n; ++j)
      acc += w1(i) * w1(j) * an::g3(i * h, j * h, 0.0, bandwidth);
  return acc * h * h / 9.0 / (width_s * width_s);
}

}  // namespace

TEST_CASE("coherence kernel values") {
  const double bw = kTwoPi;  // tau_c = 1 s
  CHECK(an::gamma_coherence(0.0, bw) == 1.0);
  CHECK(std::fabs(an::gamma_coherence(1.0, bw)) < 1e-15);  // first zero
  CHECK(an::gamma_coherence(0.5, bw) ==
        doctest::Approx(2.0 / 3.14159265358979323846).epsilon(1e-12));
  // series branch joins the sin(x)/x branch smoothly
  CHECK(an::sinc(0.99e-4) == doctest::Approx(an::sinc(1.01e-4)).epsilon(1e-9));
}

TEST_CASE("g2 values") {
  const double bw = kTwoPi;
  CHECK(an::g2(0.0, bw) == 2.0);
  CHECK(an::g2(1e6, bw) == doctest::Approx(1.0).epsilon(1e-10));
  const double t = 2.0 / 3.14159265358979323846;
  CHECK(an::g2(0.5, bw) == doctest::Approx(1.0 + t * t).epsilon(1e-12));
}

TEST_CASE("g3 values") {
  const double bw = kTwoPi;
  CHECK(an::g3(0.3, 0.3, 0.3, bw) == doctest::Approx(6.0).epsilon(1e-12));
  CHECK(an::g3(0.0, 1e5, 2e5, bw) == doctest::Approx(1.0).epsilon(1e-8));
  CHECK(an::g3(0.0, 0.0, 1e6, bw) == doctest::Approx(2.0).epsilon(1e-10));
}

TEST_CASE("g3 symmetry and shift invariance") {
  CounterRng rng(11);
  const double bw = kTwoPi;
  for (int it = 0; it < 1000; ++it) {
    const double t1 = rng.next_unit() * 10 - 5;
    const double t2 = rng.next_unit() * 10 - 5;
    const double t3 = rng.next_unit() * 10 - 5;
    const double ref = an::g3(t1, t2, t3, bw);
    CHECK(an::g3(t2, t1, t3, bw) == doctest::Approx(ref).epsilon(1e-12));
    CHECK(an::g3(t3, t2, t1, bw) == doctest::Approx(ref).epsilon(1e-12));
    CHECK(an::g3(t2, t3, t1, bw) == doctest::Approx(ref).epsilon(1e-12));
    const double s = rng.next_unit() * 2 - 1;
    CHECK(an::g3(t1 + s, t2 + s, t3 + s, bw) ==
          doctest::Approx(ref).epsilon(1e-9));
  }
}

TEST_CASE("g3 bounds over random triples") {
  CounterRng rng(5);
  const double bw = kTwoPi;
  for (int it = 0; it < 1000000; ++it) {
    const double t1 = rng.next_unit() * 8 - 4;
    const double t2 = rng.next_unit() * 8 - 4;
    const double t3 = rng.next_unit() * 8 - 4;
    const double v = an::g3(t1, t2, t3, bw);
    CHECK(v > 0.0);
    CHECK(v <= 6.0 + 1e-12);
  }
}

TEST_CASE("g3 reduces to g2 with a far third time") {
  CounterRng rng(17);
  const double bw = kTwoPi;
  for (int it = 0; it < 200; ++it) {
    const double t1 = rng.next_unit() * 2 - 1;
    const double t2 = rng.next_unit() * 2 - 1;
    const double t3 = 2e3 + rng.next_unit() * 1e3;
    CHECK(an::g3(t1, t2, t3, bw) ==
          doctest::Approx(an::g2(t1 - t2, bw)).epsilon(1e-6));
  }
}

TEST_CASE("permanent basics") {
  const double id3[9] = {1, 0, 0, 0, 1, 0, 0, 0, 1};
  CHECK(an::permanent(id3, 3) == 1.0);
  const double ones[9] = {1, 1, 1, 1, 1, 1, 1, 1, 1};
  CHECK(an::permanent(ones, 3) == 6.0);
  CHECK(an::permanent(nullptr, 0) == 1.0);
  std::vector<double> big(21 * 21, 0.0);
  CHECK_THROWS_AS(an::permanent(big.data(), 21), std::invalid_argument);
}

TEST_CASE("permanent matches the permutation-sum oracle") {
  CounterRng rng(99);
  for (int n = 1; n <= 6; ++n) {
    for (int rep = 0; rep < 20; ++rep) {
      std::vector<double> a(static_cast<std::size_t>(n * n));
      for (auto& x : a) x = rng.next_unit() * 2 - 1;
      const double got = an::permanent(a.data(), n);
      const double want = permanent_oracle(a.data(), n);
      CHECK(got == doctest::Approx(want).epsilon(1e-10));
    }
  }
}

TEST_CASE("gN limits") {
  const double bw = kTwoPi;
  const double one[1] = {0.0};
  CHECK(an::gN(std::span<const double>(one, 1), bw) == 1.0);
  double factorial = 1.0;
  for (int n = 1; n <= 10; ++n) {
    factorial *= n;
    std::vector<double> times(static_cast<std::size_t>(n), 0.7);
    CHECK(an::gN(times, bw) == factorial);
  }
}

TEST_CASE("gN at order 3 equals the closed-form g3") {
  CounterRng rng(2024);
  const double bw = kTwoPi;
  for (int it = 0; it < 10000; ++it) {
    const std::array<double, 3> t = {rng.next_unit() * 6 - 3,
                                     rng.next_unit() * 6 - 3,
                                     rng.next_unit() * 6 - 3};
    const double via_permanent = an::gN(t, bw);
    const double closed_form = an::g3(t[0], t[1], t[2], bw);
    CHECK(via_permanent == doctest::Approx(closed_form).epsilon(1e-12));
  }
}

TEST_CASE("gauss-legendre integrates polynomials") {
  const auto q = an::gauss_legendre(16);
  double m2 = 0.0, m6 = 0.0, m0 = 0.0;
  for (std::size_t i = 0; i < q.nodes.size(); ++i) {
    m0 += q.weights[i];
    m2 += q.weights[i] * q.nodes[i] * q.nodes[i];
    m6 += q.weights[i] * std::pow(q.nodes[i], 6);
  }
  CHECK(m0 == doctest::Approx(2.0).epsilon(1e-14));
  CHECK(m2 == doctest::Approx(2.0 / 3.0).epsilon(1e-13));
  CHECK(m6 == doctest::Approx(2.0 / 7.0).epsilon(1e-13));
}

TEST_CASE("binning prediction limits and cross-check") {
  const double bw = kTwoPi;  // tau_c = 1 s
  CHECK(an::expected_contrast_with_binning(1e-9, bw) ==
        doctest::Approx(6.0).epsilon(1e-9));
  const double wide = an::expected_contrast_with_binning(100.0, bw);
  CHECK(wide > 1.0);
  CHECK(wide < 1.1);
  CHECK(an::expected_contrast_with_binning(0.1, bw) >
        an::expected_contrast_with_binning(1.0, bw));
  for (double width : {0.1, 0.5, 1.0, 2.0}) {
    CHECK(an::expected_contrast_with_binning(width, bw) ==
          doctest::Approx(central_bin_mean_simpson(width, bw)).epsilon(1e-6));
  }
}
