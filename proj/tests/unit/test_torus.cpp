#include <cmath>
#include <numbers>
#include <random>

#include "chaoslab/error.hpp"
#include "chaoslab/torus.hpp"
#include "doctest.h"

using namespace chaoslab;

namespace {
constexpr double kPi = std::numbers::pi;

DensityField random_field(const GridSpec& g, unsigned seed) {
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> v(g.size());
  for (auto& x : v) x = u(rng);
  return DensityField(g, v);
}
}  // namespace

TEST_CASE("constant field has all spectral mass in mode 0") {
  GridSpec g(TorusGeometry(2, 2 * kPi), 16, 2);
  DensityField f(g, std::vector<double>(g.size(), 3.0));
  const auto s = spectrum_of(f);
  CHECK(s[0].real() == doctest::Approx(3.0).epsilon(1e-14));
  for (std::size_t i = 1; i < s.size(); ++i) CHECK(std::abs(s[i]) <= 1e-13);
}

TEST_CASE("cosine has coefficients one half at modes plus and minus one") {
  GridSpec g(TorusGeometry(1, 2 * kPi), 32, 1);
  auto f = DensityField::from_function(g, [](std::span<const double> x) { return std::cos(x[0]); });
  const auto s = spectrum_of(f);
  CHECK(s[1].real() == doctest::Approx(0.5).epsilon(1e-13));
  CHECK(s[31].real() == doctest::Approx(0.5).epsilon(1e-13));
  CHECK(std::abs(s[2]) < 1e-14);
}

TEST_CASE("round trip and Parseval") {
  for (int dims = 1; dims <= 3; ++dims) {
    GridSpec g(TorusGeometry(1, 1.7), 8, dims);
    const auto f = random_field(g, 11 + dims);
    const auto s = spectrum_of(f);
    const auto back = DensityField::from_spectral(g, s);
    double err = 0.0, direct = 0.0, spectral = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) {
      err = std::max(err, std::abs(back[i] - f[i]));
      direct += f[i] * f[i] * g.cell_volume();
      spectral += std::norm(s[i]) * g.volume();
    }
    CHECK(err < 1e-12);
    CHECK(direct == doctest::Approx(spectral).epsilon(1e-10));
  }
}

TEST_CASE("norms, mass and distances") {
  GridSpec g(TorusGeometry(1, 2 * kPi), 64, 1);
  DensityField u(g, std::vector<double>(g.size(), 1.0 / (2 * kPi)));
  CHECK(u.mass() == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(lp_norm(u, 1.0) == doctest::Approx(1.0));
  CHECK(lp_norm(u, 2.0) == doctest::Approx(1.0 / std::sqrt(2 * kPi)));
  CHECK(lp_distance(u, u, 1.0) == 0.0);
  auto c = DensityField::from_function(g, [](std::span<const double> x) {
    return (1.0 + 0.5 * std::cos(x[0])) / (2 * kPi);
  });
  // int |0.5 cos x| / (2 pi) dx = 0.5 * 4 / (2 pi)
  CHECK(lp_distance(c, u, 1.0) == doctest::Approx(1.0 / kPi).epsilon(1e-3));
}

TEST_CASE("wrap and minimum image") {
  CHECK(wrap(-0.25, 1.0) == doctest::Approx(0.75));
  CHECK(wrap(3.5, 1.0) == doctest::Approx(0.5));
  const double w = wrap(-1e-18, 1.0);
  CHECK(w >= 0.0);
  CHECK(w < 1.0);
  CHECK(min_image(0.9, 0.1, 1.0) == doctest::Approx(-0.2));
  CHECK(min_image(0.1, 0.9, 1.0) == doctest::Approx(0.2));
}

TEST_CASE("tensor power keeps unit mass and factorizes") {
  GridSpec g(TorusGeometry(1, 2 * kPi), 16, 1);
  auto f = DensityField::from_function(g, [](std::span<const double> x) {
    return (1.0 + 0.3 * std::sin(x[0])) / (2 * kPi);
  });
  const auto f3 = tensor_power(f, 3);
  CHECK(f3.grid().total_dims() == 3);
  CHECK(f3.mass() == doctest::Approx(1.0).epsilon(1e-12));
  const int i = 3, j = 7, k = 11;
  CHECK(f3[(i * 16 + j) * 16 + k] == doctest::Approx(f[i] * f[j] * f[k]));
}

TEST_CASE("grid guards") {
  CHECK_THROWS_AS(GridSpec(TorusGeometry(2, 1.0), 4096, 4), ResourceError);
  CHECK_THROWS_AS(TorusGeometry(0, 1.0), DomainError);
  CHECK_THROWS_AS(TorusGeometry(1, -1.0), DomainError);
}
