#include <cmath>
#include <numbers>

#include "chaoslab/error.hpp"
#include "chaoslab/meanfield.hpp"
#include "doctest.h"

using namespace chaoslab;

namespace {
constexpr double kPi = std::numbers::pi;

GridSpec line(int n) { return GridSpec(TorusGeometry(1, 2 * kPi), n, 1); }

DensityField cosine(const GridSpec& g, double a, int m = 1) {
  return DensityField::from_function(g, [=](std::span<const double> x) {
    return (1.0 + a * std::cos(m * x[0])) / (2 * kPi);
  });
}

// Largest root of r = I1(r/s)/I0(r/s) by bisection with the standard library Bessel functions.
double order_parameter_oracle(double s) {
  auto g = [s](double r) { return std::cyl_bessel_i(1.0, r / s) / std::cyl_bessel_i(0.0, r / s) - r; };
  double lo = 1e-6, hi = 1.0;
  if (g(lo) <= 0.0) return 0.0;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    (g(mid) > 0.0 ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}
}  // namespace

TEST_CASE("Bessel ratio against the standard library") {
  for (double x : {1e-3, 0.5, 2.0, 9.9, 10.1, 25.0, 300.0}) {
    const double ref = std::cyl_bessel_i(1.0, x) / std::cyl_bessel_i(0.0, x);
    CHECK(bessel_i1_over_i0(x) == doctest::Approx(ref).epsilon(1e-13));
  }
  CHECK(bessel_i0(3.0) == doctest::Approx(std::cyl_bessel_i(0.0, 3.0)).epsilon(1e-14));
}

TEST_CASE("Kuramoto order parameter") {
  CHECK(kuramoto_order_parameter(0.2) == doctest::Approx(order_parameter_oracle(0.2)).epsilon(1e-12));
  CHECK(kuramoto_order_parameter(0.2) == doctest::Approx(0.8768234220629447).epsilon(1e-12));
  CHECK(kuramoto_order_parameter(0.45) == doctest::Approx(order_parameter_oracle(0.45)).epsilon(1e-10));
  CHECK(kuramoto_order_parameter(0.5) == 0.0);
  CHECK(kuramoto_order_parameter(1.0) == 0.0);
}

TEST_CASE("stationary Kuramoto state is a fixed point") {
  const auto st = kuramoto_stationary(0.2, line(128));
  CHECK(st.density.mass() == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(stationary_residual(st.density, KernelSpec::kuramoto(2 * kPi), 0.2) < 1e-9);
  const auto coarse = solve(st.density, KernelSpec::kuramoto(2 * kPi), 0.2, {0.0, 5.0}, 0.01);
  const auto fine = solve(st.density, KernelSpec::kuramoto(2 * kPi), 0.2, {0.0, 5.0}, 0.005);
  const double dc = lp_distance(coarse.back().state.field, st.density, 1.0);
  const double df = lp_distance(fine.back().state.field, st.density, 1.0);
  CHECK(dc < 1e-4);
  CHECK(dc / df == doctest::Approx(4.0).epsilon(0.15));
}

TEST_CASE("zero kernel reduces to the heat equation") {
  const auto g = line(64);
  const double sigma = 0.3, t = 2.0;
  const auto recs = solve(cosine(g, 0.8, 2), KernelSpec::zero(1, 2 * kPi), sigma, {t}, 0.05);
  const auto exact = cosine(g, 0.8 * std::exp(-4.0 * sigma * t), 2);
  CHECK(lp_distance(recs.back().state.field, exact, 1.0) < 1e-12);
}

TEST_CASE("linearized Kuramoto mode decays at rate sigma - 1/2") {
  const auto g = line(64);
  const double a0 = 1e-4, t = 4.0, sigma = 1.0;
  const auto recs = solve(cosine(g, a0), KernelSpec::kuramoto(2 * kPi), sigma, {t}, 0.01);
  const auto s = spectrum_of(recs.back().state.field);
  const double amp = 2.0 * 2 * kPi * std::abs(s[1]);
  CHECK(amp / a0 == doctest::Approx(std::exp(-(sigma - 0.5) * t)).epsilon(1e-4));
}

TEST_CASE("mass is conserved and L2 does not grow for a divergence-free drift") {
  GridSpec g(TorusGeometry(2, 2 * kPi), 32, 2);
  auto f = DensityField::from_function(g, [](std::span<const double> x) {
    return (1.0 + 0.5 * std::cos(x[0]) * std::sin(2 * x[1])) / (4 * kPi * kPi);
  });
  const auto k = mollify(KernelSpec::biot_savart_2d(2 * kPi, 16), 0.3);
  const auto recs = solve(f, k, 0.05, {0.0, 0.5, 1.0}, 0.01);
  for (std::size_t i = 1; i < recs.size(); ++i) {
    CHECK(recs[i].state.field.mass() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(recs[i].l2_norm <= recs[i - 1].l2_norm + 1e-14);
  }
}

TEST_CASE("CFL guard") {
  const auto g = line(128);
  VlasovFokkerPlanckSolver s(KernelSpec::kuramoto(2 * kPi), g, 0.1, 1.0);
  CHECK_THROWS_AS(s.step(MeanFieldState{cosine(g, 1.0), 0.0}), StepSizeError);
}
