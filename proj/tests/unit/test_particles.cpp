#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>

#include "chaoslab/diagnostics.hpp"
#include "chaoslab/error.hpp"
#include "chaoslab/particles.hpp"
#include "chaoslab/rng.hpp"
#include "doctest.h"

using namespace chaoslab;

namespace {
constexpr double kPi = std::numbers::pi;

DensityField cosine(int n, double a) {
  GridSpec g(TorusGeometry(1, 2 * kPi), n, 1);
  return DensityField::from_function(
      g, [=](std::span<const double> x) { return (1.0 + a * std::cos(x[0])) / (2 * kPi); });
}

std::filesystem::path temp_file(const char* name) {
  return std::filesystem::temp_directory_path() / name;
}
}  // namespace

TEST_CASE("Philox4x32-10 known-answer vectors") {
  using C = Philox4x32::Counter;
  CHECK(Philox4x32(Philox4x32::Key{0, 0})(C{0, 0, 0, 0}) ==
        C{0x6627e8d5u, 0xe169c58du, 0xbc57ac4cu, 0x9b00dbd8u});
  CHECK(Philox4x32(Philox4x32::Key{0xffffffffu, 0xffffffffu})(
            C{0xffffffffu, 0xffffffffu, 0xffffffffu, 0xffffffffu}) ==
        C{0x408f276du, 0x41c83b0eu, 0xa20bc7c6u, 0x6d5451fdu});
  CHECK(Philox4x32(Philox4x32::Key{0xa4093822u, 0x299f31d0u})(
            C{0x243f6a88u, 0x85a308d3u, 0x13198a2eu, 0x03707344u}) ==
        C{0xd16cfe09u, 0x94fdccebu, 0x5001e420u, 0x24126ea1u});
}

TEST_CASE("counter streams are reproducible and roughly standard normal") {
  CounterRng a(42), b(42), c(43);
  CHECK(a.normals(1, 2, 3, 0) == b.normals(1, 2, 3, 0));
  CHECK(a.normals(1, 2, 3, 0) != c.normals(1, 2, 3, 0));
  CHECK(a.normals(1, 2, 3, 0, StreamTag::noise) != a.normals(1, 2, 3, 0, StreamTag::initial));
  double s = 0.0, s2 = 0.0;
  const int n = 200000;
  for (int i = 0; i < n / 2; ++i) {
    const auto z = a.normals(0, i, 0, 0);
    s += z[0] + z[1];
    s2 += z[0] * z[0] + z[1] * z[1];
  }
  CHECK(std::abs(s / n) < 0.01);
  CHECK(s2 / n == doctest::Approx(1.0).epsilon(0.01));
}

TEST_CASE("two-particle Kuramoto drift by hand") {
  const std::vector<double> x = {0.3, 1.1};
  const auto v = drift(x, KernelSpec::kuramoto(2 * kPi), 2);
  CHECK(v[0] == doctest::Approx(-0.5 * std::sin(0.3 - 1.1)));
  CHECK(v[1] == doctest::Approx(-0.5 * std::sin(1.1 - 0.3)));
}

TEST_CASE("fast and generic drift paths agree") {
  const double L = 2 * kPi;
  std::vector<double> x(2 * 7);
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = std::fmod(1.37 * i * i + 0.2, L);
  const auto k = mollify(KernelSpec::biot_savart_2d(L, 32), 0.3);
  const auto fast = drift(x, k, 7);
  for (int i = 0; i < 7; ++i) {
    double ref[2] = {0.0, 0.0};
    for (int j = 0; j < 7; ++j) {
      if (j == i) continue;
      const double dx[] = {min_image(x[2 * i], x[2 * j], L), min_image(x[2 * i + 1], x[2 * j + 1], L)};
      const auto kv = eval_kernel(k, dx);
      ref[0] += kv[0] / 7;
      ref[1] += kv[1] / 7;
    }
    CHECK(fast[2 * i] == doctest::Approx(ref[0]).epsilon(5e-3).scale(1.0));
    CHECK(fast[2 * i + 1] == doctest::Approx(ref[1]).epsilon(5e-3).scale(1.0));
  }
}

TEST_CASE("initial sampling reproduces the density") {
  const auto f = cosine(128, 0.8);
  const auto e = sample_initial(f, 4, 20000, 5);
  const auto est = estimate_marginal(e, 1, 16);
  const auto ref = bin_average(f, est.bin_spec);
  CHECK(lp_distance(est.field, ref, 1.0) < 3.0 * est.stderr_l1);
  CHECK(sample_initial(f, 4, 20000, 5) == e);
  CHECK_THROWS_AS(sample_initial(cosine(128, 1.5), 4, 10, 1), DomainError);
}

TEST_CASE("pure diffusion matches the heat kernel") {
  SimConfig c;
  c.N = 4;
  c.sigma = 0.25;
  c.dt = 0.02;
  c.t_max = 1.0;
  c.M = 20000;
  c.seed = 3;
  c.snapshot_times = {1.0};
  ParticleEnsemble last;
  run_ensemble(c, sample_initial(cosine(128, 0.9), c.N, c.M, 9),
               [&](const SnapshotInfo&, const ParticleEnsemble& e) { last = e; });
  const auto est = estimate_marginal(last, 1, 16);
  const auto ref = bin_average(cosine(128, 0.9 * std::exp(-c.sigma * c.t_max)), est.bin_spec);
  CHECK(lp_distance(est.field, ref, 1.0) < 3.0 * est.stderr_l1);
}

TEST_CASE("runs are independent of the worker count and snapshots round-trip") {
  SimConfig c;
  c.N = 8;
  c.sigma = 0.5;
  c.dt = 0.01;
  c.t_max = 0.5;
  c.kernel = KernelSpec::kuramoto(2 * kPi);
  c.M = 37;
  c.seed = 17;
  c.snapshot_times = {0.25, 0.5};
  std::vector<ParticleEnsemble> by_workers;
  for (int w : {1, 4}) {
    c.workers = w;
    ParticleEnsemble last;
    run_ensemble(c, sample_initial(cosine(64, 0.5), c.N, c.M, 1),
                 [&](const SnapshotInfo&, const ParticleEnsemble& e) { last = e; });
    by_workers.push_back(last);
  }
  CHECK(by_workers[0] == by_workers[1]);

  const auto path = temp_file("chaoslab_unit.snap").string();
  write_snapshot(path, by_workers[0], 17);
  std::uint64_t seed = 0;
  CHECK(read_snapshot(path, 2 * kPi, &seed) == by_workers[0]);
  CHECK(seed == 17);
  std::filesystem::resize_file(path, std::filesystem::file_size(path) - 3);
  CHECK_THROWS_AS(read_snapshot(path, 2 * kPi), Error);
  std::ofstream(path, std::ios::binary) << "NOTASNAPSHOT";
  CHECK_THROWS_AS(read_snapshot(path, 2 * kPi), Error);
  std::filesystem::remove(path);
}

TEST_CASE("resume from a mid-run snapshot is bitwise identical") {
  SimConfig c;
  c.N = 5;
  c.sigma = 0.4;
  c.dt = 0.01;
  c.t_max = 0.4;
  c.kernel = KernelSpec::kuramoto(2 * kPi);
  c.M = 11;
  c.seed = 99;
  c.snapshot_times = {0.2, 0.4};
  const auto init = sample_initial(cosine(64, 0.5), c.N, c.M, 2);
  ParticleEnsemble mid, straight;
  run_ensemble(c, init, [&](const SnapshotInfo& s, const ParticleEnsemble& e) {
    (s.step == 20 ? mid : straight) = e;
  });
  ParticleEnsemble resumed;
  run_ensemble(c, mid, [&](const SnapshotInfo& s, const ParticleEnsemble& e) {
    if (s.step == 40) resumed = e;
  });
  CHECK(resumed == straight);
}

TEST_CASE("configuration checks") {
  SimConfig c;
  c.N = 0;
  CHECK_THROWS_AS(validate(c), DomainError);
  c.N = 2;
  c.dt = -1.0;
  CHECK_THROWS_AS(validate(c), DomainError);
  c.dt = 0.5;
  c.kernel = KernelSpec::kuramoto(2 * kPi);
  CHECK_FALSE(validate(c).empty());
  c.d = 2;
  CHECK_THROWS_AS(validate(c), DomainError);
}

TEST_CASE("unmollified singular kernel refuses coincident particles") {
  const std::vector<double> x = {1.0, 1.0, 1.0, 1.0};
  CHECK_THROWS_AS(drift(x, KernelSpec::biot_savart_2d(2 * kPi), 2), SingularityError);
}
