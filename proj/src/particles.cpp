#include "chaoslab/particles.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <exception>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <thread>

#include "chaoslab/error.hpp"

namespace chaoslab {

static_assert(std::endian::native == std::endian::little, "snapshot format assumes little-endian");

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

// Amplitude A when K(x) = -A sin(2 pi x / length); nullopt otherwise.
std::optional<double> kuramoto_amplitude(const KernelSpec& spec) {
  if (spec.kind() == KernelKind::kuramoto) return 1.0;
  if (spec.kind() == KernelKind::mollified && spec.base().kind() == KernelKind::kuramoto)
    return mollifier_transform(1, spec.epsilon(), kTwoPi / spec.length());
  return std::nullopt;
}

bool is_odd(const KernelSpec& spec) {
  const KernelSpec* s = &spec;
  while (s->kind() == KernelKind::mollified) s = &s->base();
  if (s->kind() != KernelKind::smooth_fourier) return true;
  for (const auto& t : s->terms())
    for (const auto& c : t.coefficient)
      if (c.real() != 0.0) return false;
  return true;
}

struct DriftWork {
  std::vector<double> out;
  std::vector<double> sin_t, cos_t;
};

void drift_impl(const double* x, const KernelEvaluator& kernel, int N, int d, DriftWork& w) {
  w.out.assign(static_cast<std::size_t>(N) * d, 0.0);
  const KernelSpec& spec = kernel.spec();
  if (spec.kind() == KernelKind::zero || N < 2) return;
  const double length = spec.length();
  const double invN = 1.0 / N;

  if (auto amp = kuramoto_amplitude(spec)) {
    // sum_j -sin(t_i - t_j) = -(sin t_i sum cos t_j - cos t_i sum sin t_j)
    w.sin_t.resize(N);
    w.cos_t.resize(N);
    double sc = 0.0, ss = 0.0;
    for (int j = 0; j < N; ++j) {
      const double t = kTwoPi * x[j] / length;
      w.sin_t[j] = std::sin(t);
      w.cos_t[j] = std::cos(t);
      sc += w.cos_t[j];
      ss += w.sin_t[j];
    }
    const double a = *amp * invN;
    for (int i = 0; i < N; ++i) w.out[i] = -a * (w.sin_t[i] * sc - w.cos_t[i] * ss);
    return;
  }

  if (kernel.tabulated() && d == 2 && is_odd(spec)) {
    // Same bilinear lookup as KernelEvaluator::evaluate, inlined for the pair loop.
    const int n = kernel.table_points();
    const double* t0 = kernel.table(0);
    const double* t1 = kernel.table(1);
    const double inv_h = n / length, half = 0.5 * length;
    const double guard2 = kernel.guard_radius() * kernel.guard_radius();
    for (int i = 0; i < N; ++i) {
      const double xi = x[2 * i], yi = x[2 * i + 1];
      double ax = 0.0, ay = 0.0;
      for (int j = i + 1; j < N; ++j) {
        double dx = xi - x[2 * j], dy = yi - x[2 * j + 1];
        if (dx >= half) dx -= length;
        else if (dx < -half) dx += length;
        if (dy >= half) dy -= length;
        else if (dy < -half) dy += length;
        if (guard2 > 0.0 && dx * dx + dy * dy < guard2)
          throw SingularityError("pair distance inside the singular core of " + spec.name() +
                                 "; mollify the kernel");
        const double u = (dx < 0.0 ? dx + length : dx) * inv_h;
        const double v = (dy < 0.0 ? dy + length : dy) * inv_h;
        int i0 = static_cast<int>(u), j0 = static_cast<int>(v);
        const double fu = u - i0, fv = v - j0;
        if (i0 >= n) i0 -= n;
        if (j0 >= n) j0 -= n;
        const int i1 = i0 + 1 == n ? 0 : i0 + 1, j1 = j0 + 1 == n ? 0 : j0 + 1;
        const std::size_t r0 = static_cast<std::size_t>(i0) * n, r1 = static_cast<std::size_t>(i1) * n;
        const double w00 = (1 - fu) * (1 - fv), w01 = (1 - fu) * fv, w10 = fu * (1 - fv), w11 = fu * fv;
        const double kx = w00 * t0[r0 + j0] + w01 * t0[r0 + j1] + w10 * t0[r1 + j0] + w11 * t0[r1 + j1];
        const double ky = w00 * t1[r0 + j0] + w01 * t1[r0 + j1] + w10 * t1[r1 + j0] + w11 * t1[r1 + j1];
        ax += kx;
        ay += ky;
        w.out[2 * j] -= kx;
        w.out[2 * j + 1] -= ky;
      }
      w.out[2 * i] += ax;
      w.out[2 * i + 1] += ay;
    }
    for (double& v : w.out) v *= invN;
    return;
  }

  double disp[4], k[4];
  if (is_odd(spec)) {
    for (int i = 0; i < N; ++i) {
      for (int j = i + 1; j < N; ++j) {
        for (int a = 0; a < d; ++a) disp[a] = min_image(x[i * d + a], x[j * d + a], length);
        kernel.evaluate(disp, k);
        for (int a = 0; a < d; ++a) {
          w.out[i * d + a] += k[a];
          w.out[j * d + a] -= k[a];
        }
      }
    }
  } else {
    for (int i = 0; i < N; ++i) {
      for (int j = 0; j < N; ++j) {
        if (j == i) continue;
        for (int a = 0; a < d; ++a) disp[a] = min_image(x[i * d + a], x[j * d + a], length);
        kernel.evaluate(disp, k);
        for (int a = 0; a < d; ++a) w.out[i * d + a] += k[a];
      }
    }
  }
  for (double& v : w.out) v *= invN;
}

void check_noise_index(const NoiseIndex& idx, int N) {
  if (!idx) return;
  if (static_cast<int>(idx->size()) != N) throw DomainError("noise index must have N entries");
  std::vector<int> sorted(*idx);
  std::sort(sorted.begin(), sorted.end());
  for (int i = 0; i < N; ++i)
    if (sorted[i] != i) throw DomainError("noise index is not a permutation");
}

// Advances replica r from step `from` to step `to`.
void advance_replica(double* x, std::size_t r, long from, long to, const SimConfig& cfg,
                     const KernelEvaluator& kernel, const CounterRng& rng,
                     const NoiseIndex& noise_index, DriftWork& w) {
  const int N = cfg.N, d = cfg.d;
  const double length = cfg.kernel.length();
  const double amp = std::sqrt(2.0 * cfg.sigma * cfg.dt);
  const int lanes = (d + 1) / 2;
  for (long s = from; s < to; ++s) {
    drift_impl(x, kernel, N, d, w);
    for (int i = 0; i < N; ++i) {
      const std::uint32_t p = static_cast<std::uint32_t>(noise_index ? (*noise_index)[i] : i);
      for (int lane = 0; lane < lanes; ++lane) {
        std::array<double, 2> xi{0.0, 0.0};
        if (cfg.sigma > 0.0)
          xi = rng.normals(static_cast<std::uint32_t>(r), static_cast<std::uint32_t>(s), p,
                           static_cast<std::uint32_t>(lane));
        for (int c = 0; c < 2 && 2 * lane + c < d; ++c) {
          const int a = 2 * lane + c;
          double& xa = x[i * d + a];
          const double next = xa + w.out[i * d + a] * cfg.dt + amp * xi[c];
          if (!std::isfinite(next)) {
            std::ostringstream os;
            os << "non-finite particle position in replica " << r << " at step " << s + 1
               << " (particle " << i << ")";
            throw NumericalBlowup(os.str());
          }
          xa = wrap(next, length);
        }
      }
    }
  }
}

}  // namespace

// --- configuration ---------------------------------------------------------------------

long snap_step(double t, double dt) { return std::lround(t / dt); }

double lipschitz_estimate(const KernelSpec& kernel, int points) {
  KernelEvaluator ev(kernel);
  const int d = kernel.dim();
  if (d > 2) throw UnsupportedError("Lipschitz estimate supports d <= 2");
  const double h = kernel.length() / points;
  const double guard = 2.0 * ev.guard_radius();
  double lip = 0.0;
  double x[2] = {0.0, 0.0}, y[2], kx[2], ky[2];
  const int ny = d == 2 ? points : 1;
  for (int i = 0; i < points; ++i) {
    for (int j = 0; j < ny; ++j) {
      x[0] = min_image(i * h, 0.0, kernel.length());
      if (d == 2) x[1] = min_image(j * h, 0.0, kernel.length());
      if (guard > 0.0 && std::hypot(x[0], x[1]) < guard + h) continue;
      ev.evaluate(x, kx);
      for (int a = 0; a < d; ++a) {
        y[0] = x[0];
        y[1] = x[1];
        y[a] += h;
        if (guard > 0.0 && std::hypot(y[0], y[1]) < guard + h) continue;
        ev.evaluate(y, ky);
        double diff = 0.0;
        for (int b = 0; b < d; ++b) diff += (kx[b] - ky[b]) * (kx[b] - ky[b]);
        lip = std::max(lip, std::sqrt(diff) / h);
      }
    }
  }
  return lip;
}

std::vector<std::string> validate(const SimConfig& c) {
  if (c.N < 1) throw DomainError("N must be >= 1");
  if (c.d != c.kernel.dim()) throw DomainError("d does not match the kernel dimension");
  if (c.d > 2) throw UnsupportedError("particle simulation supports d = 1 and d = 2");
  if (!(c.sigma >= 0.0) || !std::isfinite(c.sigma)) throw DomainError("sigma must be >= 0");
  if (!(c.dt > 0.0)) throw DomainError("dt must be positive");
  if (!(c.t_max >= 0.0)) throw DomainError("t_max must be >= 0");
  if (c.t_max > 0.0 && c.t_max < c.dt) throw DomainError("t_max must be 0 or >= dt");
  if (c.workers < 1) throw DomainError("workers must be >= 1");
  if (!std::is_sorted(c.snapshot_times.begin(), c.snapshot_times.end()))
    throw DomainError("snapshot_times must be sorted");
  for (double t : c.snapshot_times)
    if (t < 0.0 || t > c.t_max + 0.5 * c.dt)
      throw DomainError("snapshot time " + std::to_string(t) + " outside [0, t_max]");
  if (c.N > 1 && static_cast<double>(c.N) * c.N > 1e9)
    throw ResourceError("pair loop over N = " + std::to_string(c.N) + " is beyond desk scale");

  std::vector<std::string> warnings;
  const double lip = c.kernel.kind() == KernelKind::zero ? 0.0 : lipschitz_estimate(c.kernel);
  const double limit = 0.1 * std::min(1.0, lip > 0.0 ? 1.0 / lip : 1.0);
  if (c.dt > limit) {
    std::ostringstream os;
    os << "dt = " << c.dt << " exceeds the stability guard 0.1 min(1, 1/Lip) = " << limit
       << " (Lip ~ " << lip << ")";
    warnings.push_back(os.str());
  }
  return warnings;
}

// --- ensemble ------------------------------------------------------------------------------

ParticleEnsemble::ParticleEnsemble(std::size_t M, int N, int d, double length)
    : positions(M * N * d, 0.0), M_(M), N_(N), d_(d), length_(length) {
  if (N < 1 || d < 1) throw DomainError("ensemble needs N >= 1 and d >= 1");
  if (!(length > 0.0)) throw DomainError("length must be positive");
}

bool ParticleEnsemble::operator==(const ParticleEnsemble& o) const {
  return M_ == o.M_ && N_ == o.N_ && d_ == o.d_ && length_ == o.length_ && step == o.step &&
         time == o.time && positions == o.positions;
}

ParticleEnsemble sample_initial(const DensityField& density, int N, std::size_t M,
                                std::uint64_t seed, double tol_neg, double tol_mass) {
  const GridSpec& grid = density.grid();
  const int d = grid.total_dims();
  const double length = grid.length();
  ParticleEnsemble ens(M, N, d, length);
  auto v = density.values();
  const double vmax = *std::max_element(v.begin(), v.end());
  const double vmin = *std::min_element(v.begin(), v.end());
  if (vmin < -tol_neg)
    throw DomainError("initial density has negative values (min " + std::to_string(vmin) + ")");
  if (std::abs(density.mass() - 1.0) > tol_mass)
    throw DomainError("initial density is not normalized (mass " +
                      std::to_string(density.mass()) + ")");
  if (M == 0) return ens;
  const CounterRng rng(seed);
  const int n = grid.points_per_dim();
  const double h = grid.spacing();
  const double x0 = grid.coordinate(0);

  if (d == 1) {
    std::vector<double> val(v.begin(), v.end());
    for (double& y : val) y = std::max(y, 0.0);
    std::vector<double> cdf(n + 1, 0.0);
    for (int i = 0; i < n; ++i) cdf[i + 1] = cdf[i] + 0.5 * h * (val[i] + val[(i + 1) % n]);
    const double total = cdf[n];
    for (std::size_t r = 0; r < M; ++r) {
      for (int p = 0; p < N; ++p) {
        const auto u = rng.uniforms(static_cast<std::uint32_t>(r), 0, static_cast<std::uint32_t>(p),
                                    0, StreamTag::initial);
        const double target = u[0] * total;
        int cell = static_cast<int>(std::upper_bound(cdf.begin(), cdf.end(), target) - cdf.begin()) - 1;
        cell = std::clamp(cell, 0, n - 1);
        const double s = target - cdf[cell];
        const double a = val[cell];
        const double slope = (val[(cell + 1) % n] - a) / h;
        const double disc = std::max(0.0, a * a + 2.0 * slope * s);
        const double denom = a + std::sqrt(disc);
        double t = denom > 0.0 ? 2.0 * s / denom : 0.0;
        t = std::clamp(t, 0.0, h);
        ens.at(r, p, 0) = wrap(x0 + cell * h + t, length);
      }
    }
    return ens;
  }
  if (d != 2) throw UnsupportedError("sample_initial supports d = 1 and d = 2");

  auto interp = [&](double x, double y) {
    const double u = wrap(x - x0, length) / h, w = wrap(y - x0, length) / h;
    int i0 = std::min(static_cast<int>(u), n - 1), j0 = std::min(static_cast<int>(w), n - 1);
    const double fu = u - i0, fw = w - j0;
    const int i1 = (i0 + 1) % n, j1 = (j0 + 1) % n;
    auto at = [&](int i, int j) { return std::max(0.0, v[static_cast<std::size_t>(i) * n + j]); };
    return (1 - fu) * ((1 - fw) * at(i0, j0) + fw * at(i0, j1)) +
           fu * ((1 - fw) * at(i1, j0) + fw * at(i1, j1));
  };
  constexpr std::uint32_t kMaxAttempts = 1u << 24;
  for (std::size_t r = 0; r < M; ++r) {
    for (int p = 0; p < N; ++p) {
      bool accepted = false;
      for (std::uint32_t attempt = 0; attempt < kMaxAttempts && !accepted; ++attempt) {
        const auto pos = rng.uniforms(static_cast<std::uint32_t>(r), attempt,
                                      static_cast<std::uint32_t>(p), 0, StreamTag::initial);
        const auto acc = rng.uniforms(static_cast<std::uint32_t>(r), attempt,
                                      static_cast<std::uint32_t>(p), 1, StreamTag::initial);
        const double x = pos[0] * length, y = pos[1] * length;
        if (acc[0] * vmax <= interp(x, y)) {
          ens.at(r, p, 0) = wrap(x, length);
          ens.at(r, p, 1) = wrap(y, length);
          accepted = true;
        }
      }
      if (!accepted) throw NumericalBlowup("rejection sampler failed to accept a draw");
    }
  }
  return ens;
}

void drift(std::span<const double> positions, const KernelEvaluator& kernel, int N,
           std::span<double> out) {
  const int d = kernel.spec().dim();
  if (positions.size() != static_cast<std::size_t>(N) * d || out.size() != positions.size())
    throw DomainError("drift: buffers must hold N*d values");
  DriftWork w;
  drift_impl(positions.data(), kernel, N, d, w);
  std::copy(w.out.begin(), w.out.end(), out.begin());
}

std::vector<double> drift(std::span<const double> positions, const KernelSpec& kernel, int N) {
  KernelEvaluator ev(kernel);
  std::vector<double> out(positions.size());
  drift(positions, ev, N, out);
  return out;
}

void em_step(ParticleEnsemble& ens, const SimConfig& config, const KernelEvaluator& kernel,
             const CounterRng& rng, const NoiseIndex& noise_index) {
  if (ens.particles() != config.N || ens.dim() != config.d)
    throw DomainError("ensemble shape does not match config");
  if (ens.time + config.dt > config.t_max + 0.5 * config.dt)
    throw DomainError("em_step would pass t_max");
  check_noise_index(noise_index, config.N);
  DriftWork w;
  for (std::size_t r = 0; r < ens.replicas(); ++r)
    advance_replica(ens.replica(r), r, ens.step, ens.step + 1, config, kernel, rng, noise_index, w);
  ++ens.step;
  ens.time = ens.step * config.dt;
}

void run_ensemble(const SimConfig& config, ParticleEnsemble ens, const SnapshotSink& sink,
                  const NoiseIndex& noise_index) {
  validate(config);
  check_noise_index(noise_index, config.N);
  if (ens.particles() != config.N || ens.dim() != config.d || ens.replicas() != config.M)
    throw DomainError("initial ensemble shape does not match config");
  const KernelEvaluator kernel(config.kernel, config.table_points);
  const CounterRng rng(config.seed);
  const std::size_t M = ens.replicas();
  const int workers = static_cast<int>(std::min<std::size_t>(config.workers, std::max<std::size_t>(M, 1)));

  auto advance_all = [&](long from, long to) {
    if (to <= from || M == 0) return;
    std::vector<std::exception_ptr> errors(workers);
    auto block = [&](int w) {
      try {
        DriftWork work;
        const std::size_t lo = M * w / workers, hi = M * (w + 1) / workers;
        for (std::size_t r = lo; r < hi; ++r)
          advance_replica(ens.replica(r), r, from, to, config, kernel, rng, noise_index, work);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    };
    if (workers == 1) {
      block(0);
    } else {
      std::vector<std::thread> pool;
      for (int w = 0; w < workers; ++w) pool.emplace_back(block, w);
      for (auto& t : pool) t.join();
    }
    for (auto& e : errors)
      if (e) std::rethrow_exception(e);
  };

  for (double t : config.snapshot_times) {
    const long target = snap_step(t, config.dt);
    if (target < ens.step) continue;
    advance_all(ens.step, target);
    ens.step = target;
    ens.time = target * config.dt;
    sink(SnapshotInfo{t, ens.time, target}, ens);
  }
}

// --- serialization -------------------------------------------------------------------------

namespace {

template <class T>
void put(std::ostream& os, T v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <class T>
T get(std::istream& is, const std::string& path) {
  T v{};
  if (!is.read(reinterpret_cast<char*>(&v), sizeof(T)))
    throw Error("truncated snapshot header in " + path);
  return v;
}

constexpr char kMagic[8] = {'C', 'H', 'L', 'B', 'S', 'N', 'A', 'P'};

}  // namespace

void write_snapshot(const std::string& path, const ParticleEnsemble& e, std::uint64_t seed) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw Error("cannot open " + path + " for writing");
  os.write(kMagic, sizeof(kMagic));
  put<std::uint32_t>(os, kSnapshotVersion);
  put<std::uint32_t>(os, static_cast<std::uint32_t>(e.particles()));
  put<std::uint32_t>(os, static_cast<std::uint32_t>(e.dim()));
  put<std::uint64_t>(os, e.replicas());
  put<double>(os, e.time);
  put<std::uint64_t>(os, seed);
  put<std::uint64_t>(os, static_cast<std::uint64_t>(e.step));
  os.write(reinterpret_cast<const char*>(e.positions.data()),
           static_cast<std::streamsize>(e.positions.size() * sizeof(double)));
  if (!os) throw Error("write failed for " + path);
}

ParticleEnsemble read_snapshot(const std::string& path, double length, std::uint64_t* seed) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error("cannot open snapshot " + path);
  char magic[8];
  if (!is.read(magic, 8) || std::memcmp(magic, kMagic, 8) != 0)
    throw Error("bad snapshot magic in " + path);
  const auto version = get<std::uint32_t>(is, path);
  if (version != kSnapshotVersion)
    throw Error("unsupported snapshot version " + std::to_string(version) + " in " + path);
  const auto N = get<std::uint32_t>(is, path);
  const auto d = get<std::uint32_t>(is, path);
  const auto M = get<std::uint64_t>(is, path);
  const auto time = get<double>(is, path);
  const auto s = get<std::uint64_t>(is, path);
  const auto step = get<std::uint64_t>(is, path);
  if (seed) *seed = s;
  ParticleEnsemble e(M, static_cast<int>(N), static_cast<int>(d), length);
  e.time = time;
  e.step = static_cast<long>(step);
  if (!is.read(reinterpret_cast<char*>(e.positions.data()),
               static_cast<std::streamsize>(e.positions.size() * sizeof(double))))
    throw Error("truncated snapshot payload in " + path);
  if (is.peek() != std::char_traits<char>::eof()) throw Error("trailing bytes in snapshot " + path);
  return e;
}

void write_snapshot_csv(const std::string& path, const ParticleEnsemble& e, std::uint64_t seed) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw Error("cannot open " + path + " for writing");
  os << "# N,d,M,time,seed\n# " << e.particles() << ',' << e.dim() << ',' << e.replicas() << ','
     << std::setprecision(17) << e.time << ',' << seed << '\n';
  os << "replica,particle";
  for (int a = 0; a < e.dim(); ++a) os << ",x" << a;
  os << '\n';
  for (std::size_t r = 0; r < e.replicas(); ++r)
    for (int i = 0; i < e.particles(); ++i) {
      os << r << ',' << i;
      for (int a = 0; a < e.dim(); ++a) os << ',' << e.at(r, i, a);
      os << '\n';
    }
}

}  // namespace chaoslab
