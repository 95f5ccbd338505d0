#include <cmath>
#include <numbers>

#include "chaoslab/error.hpp"
#include "chaoslab/liouville.hpp"
#include "chaoslab/meanfield.hpp"
#include "doctest.h"

using namespace chaoslab;

namespace {
constexpr double kPi = std::numbers::pi;

DensityField cosine(int n, double a) {
  GridSpec g(TorusGeometry(1, 2 * kPi), n, 1);
  return DensityField::from_function(
      g, [=](std::span<const double> x) { return (1.0 + a * std::cos(x[0])) / (2 * kPi); });
}
}  // namespace

TEST_CASE("marginals of a product state") {
  const auto f = cosine(16, 0.4);
  const auto f3 = tensor_power(f, 3);
  JointDensity j(f3, 3);
  CHECK(lp_distance(extract_marginal(j, 1), f, 1.0) < 1e-14);
  CHECK(lp_distance(extract_marginal(j, 2), tensor_power(f, 2), 1.0) < 1e-14);
  CHECK(extract_marginal(j, 3).mass() == doctest::Approx(1.0).epsilon(1e-13));
}

TEST_CASE("joint grids are capped at three particles") {
  GridSpec g(TorusGeometry(1, 2 * kPi), 8, 4);
  CHECK_THROWS_AS(JointDensity(DensityField(g), 4), ResourceError);
}

TEST_CASE("without interaction the joint law stays a product of heat solutions") {
  const double sigma = 0.5, t = 0.5;
  JointDensity j0(tensor_power(cosine(32, 0.7), 2), 2);
  const auto out = liouville_solve(j0, KernelSpec::zero(1, 2 * kPi), sigma, 0.01, {t});
  const auto exact = tensor_power(cosine(32, 0.7 * std::exp(-sigma * t)), 2);
  CHECK(lp_distance(out.back().field, exact, 1.0) < 1e-12);
}

TEST_CASE("Gibbs state against its closed form") {
  const int N = 2;
  const double sigma = 0.5;
  GridSpec g(TorusGeometry(1, 2 * kPi), 64, N);
  const auto gibbs = gibbs_stationary_kuramoto(N, sigma, g);
  CHECK(gibbs.field.mass() == doctest::Approx(1.0).epsilon(1e-10));
  const double beta = 1.0 / (sigma * N);
  for (auto [i, j] : {std::pair{3, 40}, std::pair{17, 17}, std::pair{60, 5}}) {
    const double ratio = gibbs.field[i * 64 + j] / gibbs.field[0];
    const double dx = g.coordinate(i) - g.coordinate(j);
    CHECK(ratio == doctest::Approx(std::exp(beta * (std::cos(dx) - 1.0))).epsilon(1e-12));
  }
  GridSpec line(TorusGeometry(1, 2 * kPi), 64, 1);
  DensityField u(line, std::vector<double>(64, 1.0 / (2 * kPi)));
  CHECK(lp_distance(extract_marginal(gibbs, 1), u, 1.0) < 1e-8);
  const auto next = liouville_step(gibbs, KernelSpec::kuramoto(2 * kPi), sigma, 1e-3);
  CHECK(lp_distance(next.field, gibbs.field, 1.0) < 1e-6);
}

TEST_CASE("hierarchy residual of Liouville marginals and its ablation") {
  const double sigma = 0.5, dt = 1e-3, t = 0.3, h = 0.01;
  const auto k = KernelSpec::kuramoto(2 * kPi);
  JointDensity j0(tensor_power(cosine(48, 0.6), 2), 2);
  const auto s = liouville_solve(j0, k, sigma, dt, {t - h, t, t + h});
  const auto f1 = extract_marginal(s[1], 1);
  const auto fm = extract_marginal(s[0], 1), fp = extract_marginal(s[2], 1);
  std::vector<double> d(f1.grid().size());
  for (std::size_t i = 0; i < d.size(); ++i) d[i] = (fp[i] - fm[i]) / (2 * h);
  const DensityField dfdt(f1.grid(), d);
  const double full = bbgky_residual(f1, s[1].field, k, sigma, 2, dfdt, true);
  const double ablated = bbgky_residual(f1, s[1].field, k, sigma, 2, dfdt, false);
  CHECK(full < 1e-4);
  CHECK(ablated > 100.0 * full);
}

TEST_CASE("N = 1 reduces to the linear heat flow") {
  JointDensity j0(cosine(32, 0.5), 1);
  const auto out = liouville_solve(j0, KernelSpec::kuramoto(2 * kPi), 0.2, 0.01, {1.0});
  CHECK(lp_distance(out.back().field, cosine(32, 0.5 * std::exp(-0.2)), 1.0) < 1e-12);
}
