#include <cmath>
#include <complex>
#include <numbers>

#include "chaoslab/error.hpp"
#include "chaoslab/kernels.hpp"
#include "doctest.h"

using namespace chaoslab;

namespace {
constexpr double kPi = std::numbers::pi;
constexpr double kCatalan = 0.915965594177219015054603514932;

// Composite Simpson on [a, b] with n (even) panels.
template <class F>
double simpson(F&& f, double a, double b, int n) {
  const double h = (b - a) / n;
  double s = f(a) + f(b);
  for (int i = 1; i < n; ++i) s += (i % 2 ? 4.0 : 2.0) * f(a + i * h);
  return s * h / 3.0;
}

// Transform of the normalized bump (1 - r^2/eps^2)^2 by direct quadrature.
double bump_transform(int dim, double eps, double xi) {
  auto bump = [eps](double r) { return std::pow(1.0 - r * r / (eps * eps), 2); };
  if (dim == 1) {
    const double mass = simpson(bump, -eps, eps, 4000);
    return simpson([&](double x) { return bump(x) * std::cos(xi * x); }, -eps, eps, 4000) / mass;
  }
  const double mass = simpson([&](double r) { return bump(r) * r; }, 0.0, eps, 4000);
  return simpson([&](double r) { return bump(r) * std::cyl_bessel_j(0.0, xi * r) * r; }, 0.0, eps,
                 4000) /
         mass;
}
}  // namespace

TEST_CASE("Kuramoto coefficients and closed form") {
  const auto k = KernelSpec::kuramoto(2 * kPi);
  const int p1[] = {1}, m1[] = {-1}, p2[] = {2};
  CHECK(fourier_coefficients(k, p1)[0].imag() == doctest::Approx(0.5));
  CHECK(fourier_coefficients(k, m1)[0].imag() == doctest::Approx(-0.5));
  CHECK(std::abs(fourier_coefficients(k, p2)[0]) == 0.0);
  for (double x : {0.3, 1.7, 4.0}) {
    const double xs[] = {x};
    CHECK(eval_kernel(k, xs)[0] == doctest::Approx(-std::sin(x)).epsilon(1e-14));
  }
}

TEST_CASE("H^-1 norm of the single-mode kernel is 1/sqrt 2") {
  const auto k = KernelSpec::kuramoto(2 * kPi);
  CHECK(h_minus1_norm(k, TorusGeometry(1, 2 * kPi), 16) == doctest::Approx(1.0 / std::sqrt(2.0)));
  CHECK(h_minus1_norm(KernelSpec::zero(2, 1.0), TorusGeometry(2, 1.0), 8) == 0.0);
}

TEST_CASE("singular kernels: H^-1 norm against the Z^2 lattice sum") {
  // sum_{m != 0} |m|^-4 = 4 zeta(2) G, so the norm is sqrt(4 zeta(2) G) / (4 pi^2).
  const double exact = std::sqrt(4.0 * (kPi * kPi / 6.0) * kCatalan) / (4.0 * kPi * kPi);
  for (double L : {1.0, 2 * kPi}) {
    const TorusGeometry g(2, L);
    const double bs = h_minus1_norm(KernelSpec::biot_savart_2d(L), g, 128);
    const double al = h_minus1_norm(KernelSpec::attractive_log_2d(L), g, 128);
    CHECK(bs == doctest::Approx(exact).epsilon(1e-4));
    CHECK(al == doctest::Approx(exact).epsilon(1e-4));
  }
  const TorusGeometry g(2, 2 * kPi);
  const auto al = KernelSpec::attractive_log_2d(2 * kPi);
  double prev = 0.0;
  for (int m : {8, 16, 32, 64}) {
    const double v = h_minus1_norm(al, g, m);
    CHECK(v >= prev);
    prev = v;
  }
}

TEST_CASE("H^-1 norm rejects kernels with nonzero mean") {
  FourierTerm t{{0}, {Complex(1.0, 0.0)}};
  const auto k = KernelSpec::smooth_fourier(1, 1.0, {t});
  CHECK_THROWS_AS(h_minus1_norm(k, TorusGeometry(1, 1.0), 4), DomainError);
}

TEST_CASE("Biot-Savart is divergence free and matches its truncated series") {
  const double L = 2 * kPi;
  const int cutoff = 24;
  const auto k = KernelSpec::biot_savart_2d(L, cutoff);
  CHECK(check_divergence_free(k, GridSpec(TorusGeometry(2, L), 32, 2)) < 1e-12);
  const double xs[] = {0.7, -1.3};
  std::complex<double> u = 0.0, w = 0.0;
  for (int a = -cutoff; a <= cutoff; ++a)
    for (int b = -cutoff; b <= cutoff; ++b) {
      if (a == 0 && b == 0) continue;
      const double k1 = 2 * kPi * a / L, k2 = 2 * kPi * b / L, kk = k1 * k1 + k2 * k2;
      const auto e = std::polar(1.0, k1 * xs[0] + k2 * xs[1]);
      u += std::complex<double>(0.0, -k2 / (L * L * kk)) * e;
      w += std::complex<double>(0.0, k1 / (L * L * kk)) * e;
    }
  const auto v = eval_kernel(k, xs);
  CHECK(v[0] == doctest::Approx(u.real()).epsilon(1e-12));
  CHECK(v[1] == doctest::Approx(w.real()).epsilon(1e-12));
  CHECK(std::abs(u.imag()) < 1e-12);
}

TEST_CASE("mollified Biot-Savart converges in the cutoff and rotates about the origin") {
  const double L = 1.0;
  const double xs[] = {0.2, 0.0};
  const auto a = eval_kernel(mollify(KernelSpec::biot_savart_2d(L, 64), 0.1), xs);
  const auto b = eval_kernel(mollify(KernelSpec::biot_savart_2d(L, 128), 0.1), xs);
  CHECK(std::abs(a[1] - b[1]) < 1e-5 * std::abs(b[1]));
  CHECK(std::abs(b[0]) < 1e-12);
  CHECK(b[1] != 0.0);
}

TEST_CASE("attractive logarithmic kernel points toward the origin") {
  const auto k = KernelSpec::attractive_log_2d(2 * kPi, 64);
  for (auto [x, y] : {std::pair{0.3, 0.1}, std::pair{-0.2, 0.4}, std::pair{0.5, -0.5}}) {
    const double xs[] = {x, y};
    const auto v = eval_kernel(k, xs);
    CHECK(v[0] * x + v[1] * y < 0.0);
  }
}

TEST_CASE("mollifier transform against direct quadrature") {
  for (int d : {1, 2}) {
    CHECK(mollifier_transform(d, 0.1, 0.0) == 1.0);
    for (double xi : {0.5, 7.0, 19.0, 40.0, 95.0}) {
      const double m = mollifier_transform(d, 0.1, xi);
      CHECK(m == doctest::Approx(bump_transform(d, 0.1, xi)).epsilon(1e-7).scale(1.0));
      CHECK(std::abs(m) <= 1.0);
    }
  }
}

TEST_CASE("mollification does not increase the H^-1 norm and converges at second order") {
  const double L = 2 * kPi;
  const TorusGeometry g(2, L);
  const auto bs = KernelSpec::biot_savart_2d(L, 64);
  CHECK(h_minus1_norm(mollify(bs, 0.1), g, 64) <= h_minus1_norm(bs, g, 64));

  const auto ku = KernelSpec::kuramoto(L);
  std::vector<double> err;
  for (double eps : {0.1, 0.05, 0.025}) {
    const auto km = mollify(ku, eps);
    double e = 0.0;
    for (int i = 0; i < 64; ++i) {
      const double xs[] = {L * i / 64.0};
      e = std::max(e, std::abs(eval_kernel(km, xs)[0] - eval_kernel(ku, xs)[0]));
    }
    err.push_back(e);
  }
  CHECK(std::log2(err[0] / err[1]) == doctest::Approx(2.0).epsilon(0.05));
  CHECK(std::log2(err[1] / err[2]) == doctest::Approx(2.0).epsilon(0.05));
  CHECK_THROWS_AS(mollify(ku, L), DomainError);
}

TEST_CASE("convolution of Kuramoto with a cosine density") {
  const double L = 2 * kPi;
  GridSpec grid(TorusGeometry(1, L), 32, 1);
  auto f = DensityField::from_function(grid, [](std::span<const double> x) {
    return (1.0 + std::cos(x[0])) / (2 * kPi);
  });
  const auto v = convolve(KernelSpec::kuramoto(L), f)[0];
  for (int i = 0; i < 32; ++i) {
    const double x = grid.coordinate(i);
    // -(1/2 pi) int sin(x - y)(1 + cos y) dy by the trapezoid rule on 256 nodes
    double q = 0.0;
    for (int j = 0; j < 256; ++j) {
      const double y = L * j / 256.0;
      q -= std::sin(x - y) * (1.0 + std::cos(y));
    }
    q *= (L / 256.0) / (2 * kPi);
    CHECK(v[i] == doctest::Approx(q).epsilon(1e-12).scale(1.0));
    CHECK(v[i] == doctest::Approx(-0.5 * std::sin(x)).epsilon(1e-12).scale(1.0));
  }
  DensityField u(grid, std::vector<double>(32, 1.0 / L));
  const auto vu = convolve(KernelSpec::kuramoto(L), u);
  for (double x : vu[0].values()) CHECK(std::abs(x) < 1e-14);
}

TEST_CASE("tabulated evaluator agrees with the series") {
  const double L = 2 * kPi;
  const auto k = mollify(KernelSpec::biot_savart_2d(L, 32), 0.2);
  KernelEvaluator ev(k, 256);
  CHECK(ev.tabulated());
  for (auto [x, y] : {std::pair{0.7, 0.2}, std::pair{-1.3, 2.1}, std::pair{3.0, -3.0}}) {
    const double xs[] = {x, y};
    double out[2];
    ev.evaluate(xs, out);
    const auto ref = eval_kernel(k, xs);
    CHECK(out[0] == doctest::Approx(ref[0]).epsilon(2e-3).scale(1.0));
    CHECK(out[1] == doctest::Approx(ref[1]).epsilon(2e-3).scale(1.0));
  }
}

TEST_CASE("log potential on the unit cell against a midpoint rule") {
  // (1/2 pi) ||log|x| ||_{L^2([-1/2,1/2]^2)}, four-fold symmetric midpoint rule.
  const int n = 3000;
  const double h = 0.5 / n;
  double s = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      const double l = std::log(std::hypot((i + 0.5) * h, (j + 0.5) * h));
      s += l * l;
    }
  const double oracle = std::sqrt(4.0 * s * h * h) / (2 * kPi);
  CHECK(log_potential_cell_l2(1.0) == doctest::Approx(oracle).epsilon(1e-5));
  CHECK(log_potential_cell_l2(1.0) == doctest::Approx(0.18748).epsilon(1e-4));
}
