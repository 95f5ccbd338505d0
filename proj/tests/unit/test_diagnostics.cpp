#include <cmath>
#include <numbers>
#include <random>

#include "chaoslab/diagnostics.hpp"
#include "chaoslab/error.hpp"
#include "doctest.h"

using namespace chaoslab;

namespace {
constexpr double kPi = std::numbers::pi;

GridSpec line(int n) { return GridSpec(TorusGeometry(1, 2 * kPi), n, 1); }

DensityField cosine(int n, double a) {
  return DensityField::from_function(
      line(n), [=](std::span<const double> x) { return (1.0 + a * std::cos(x[0])) / (2 * kPi); });
}

ParticleEnsemble uniform_ensemble(std::size_t M, int N, unsigned seed) {
  ParticleEnsemble e(M, N, 1, 2 * kPi);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 2 * kPi);
  for (auto& x : e.positions) x = u(rng);
  return e;
}

template <class F>
double simpson(F&& f, double a, double b, int n) {
  const double h = (b - a) / n;
  double s = f(a) + f(b);
  for (int i = 1; i < n; ++i) s += (i % 2 ? 4.0 : 2.0) * f(a + i * h);
  return s * h / 3.0;
}
}  // namespace

TEST_CASE("default bins") {
  CHECK(default_bins(1) == 64);
  CHECK(default_bins(2) == 64);
  CHECK(default_bins(3) == 32);
  CHECK(default_bins(4) == 16);
}

TEST_CASE("histogram of a hand-placed ensemble") {
  ParticleEnsemble e(2, 2, 1, 2 * kPi);
  e.positions = {0.1, 3.3, 0.2, 6.2};
  const auto est = estimate_marginal(e, 1, 4);
  CHECK(est.sample_count == 4.0);
  const double cv = 2 * kPi / 4;
  CHECK(est.field[0] == doctest::Approx(0.5 / cv));
  CHECK(est.field[2] == doctest::Approx(0.25 / cv));
  CHECK(est.field[3] == doctest::Approx(0.25 / cv));
  CHECK(est.field.mass() == doctest::Approx(1.0));
  CHECK_THROWS_AS(estimate_marginal(e, 3), DomainError);
}

TEST_CASE("corrected L2 norm removes the sampling inflation") {
  const auto e = uniform_ensemble(4000, 4, 1);
  const auto est = estimate_marginal(e, 2, 32);
  const double exact = 1.0 / (2 * kPi);  // ||u (x) u||_2 on T^2
  CHECK(est.l2_raw > exact + 5 * est.l2_stderr);
  CHECK(std::abs(est.l2_corrected - exact) < 4 * est.l2_stderr);
}

TEST_CASE("bin averages of a cosine are exact") {
  const auto f = cosine(64, 0.5);
  GridSpec bins(TorusGeometry(1, 2 * kPi), 8, 1, true);
  const auto b = bin_average(f, bins);
  const double h = 2 * kPi / 8;
  for (int i = 0; i < 8; ++i) {
    const double xc = (i + 0.5) * h;
    const double avg = (1.0 + 0.5 * std::cos(xc) * std::sin(h / 2) / (h / 2)) / (2 * kPi);
    CHECK(b[i] == doctest::Approx(avg).epsilon(1e-13));
  }
}

TEST_CASE("sampling floor of a uniform histogram") {
  GridSpec bins(TorusGeometry(1, 2 * kPi), 16, 1, true);
  DensityField u(bins, std::vector<double>(16, 1.0 / (2 * kPi)));
  const double p = 1.0 / 16, M = 1000;
  CHECK(l1_sampling_floor(u, M) == doctest::Approx(16 * std::sqrt(2 * p * (1 - p) / (kPi * M))));
}

TEST_CASE("relative entropy against quadrature and CKP") {
  const auto f = cosine(256, 0.8);
  DensityField u(line(256), std::vector<double>(256, 1.0 / (2 * kPi)));
  const double ref = simpson(
      [](double x) {
        const double v = (1.0 + 0.8 * std::cos(x)) / (2 * kPi);
        return v * std::log(v * 2 * kPi);
      },
      0.0, 2 * kPi, 4096);
  CHECK(relative_entropy(f, u, 1) == doctest::Approx(ref).epsilon(1e-10));
  CHECK(relative_entropy(f, f, 1) == 0.0);
  const auto ckp = ckp_check(f, u, 1);
  CHECK(ckp.holds);
  CHECK(ckp.lhs <= ckp.rhs);
}

TEST_CASE("chaos distance and interpolation") {
  const auto f = cosine(32, 0.3);
  CHECK(chaos_distance(tensor_power(f, 2), f, 2, 1.5) < 1e-15);
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> a(32), b(32);
    for (int i = 0; i < 32; ++i) {
      a[i] = u(rng);
      b[i] = u(rng);
    }
    const auto r = interpolation_check(DensityField(line(32), a), DensityField(line(32), b), 1.5);
    CHECK(r.holds);
  }
  CHECK(lp_distance(f, cosine(32, 0.1), 1.0) == doctest::Approx(chaos_distance(f, cosine(32, 0.1), 1, 1.0)));
  CHECK_THROWS_AS(chaos_distance(f, f, 1, 2.5), DomainError);
}

TEST_CASE("bound ledger flags growth beyond slack") {
  std::vector<L2Observation> obs = {
      {0.0, 1, 1.0, 0.01}, {0.0, 2, 1.1, 0.01}, {1.0, 1, 1.02, 0.01}, {1.0, 2, 1.5, 0.01}};
  const auto led = l2_bound_check(BoundMode::exponential, 1.0, obs, 0.0, 3.0);
  CHECK(led.C == doctest::Approx(1.1));
  REQUIRE(led.violations.size() == 1);
  CHECK(led.violations[0].k == 2);
  CHECK(bound_shape(BoundMode::super_exponential, 0.5, 4) == doctest::Approx(16.0));
  CHECK(default_alpha(0.1, 2) == doctest::Approx(0.55));
}

TEST_CASE("rate fit recovers an exact exponential") {
  DiagnosticSeries s;
  for (int i = 0; i <= 10; ++i) s.add(0.5 * i, "d", 3.0 * std::exp(-0.7 * 0.5 * i));
  const auto fit = decay_rate_fit(s, "d", 0.0, 5.0);
  CHECK(fit.beta_hat == doctest::Approx(0.7).epsilon(1e-12));
  CHECK(fit.r2 == doctest::Approx(1.0));
  CHECK_THROWS_AS(decay_rate_fit(s, "d", 0.0, 1.0), DomainError);
  CHECK_THROWS_AS(s.add(1.0, "d", 1.0), DomainError);
  const auto lf = linear_fit({1, 2, 3}, {2, 4, 6});
  CHECK(lf.slope == doctest::Approx(2.0));
  CHECK(relaxation_rate(1.0, 2 * kPi) == doctest::Approx(1.0));
}

TEST_CASE("sigma0 of the single-mode kernel") {
  CHECK(sigma0(2.0, KernelSpec::kuramoto(2 * kPi), TorusGeometry(1, 2 * kPi), 8) ==
        doctest::Approx(std::sqrt(2.0)));
  CHECK(sigma0(3.0, KernelSpec::zero(1, 1.0), TorusGeometry(1, 1.0), 8) == 0.0);
}
