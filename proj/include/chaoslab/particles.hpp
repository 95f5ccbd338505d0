#pragma once

// Euler-Maruyama ensembles for
//   dX_i = (1/N) sum_{j != i} K(X_i - X_j) dt + sqrt(2 sigma) dW_i   on T^d.

#include <cstdint>
#include <functional>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "chaoslab/kernels.hpp"
#include "chaoslab/rng.hpp"
#include "chaoslab/torus.hpp"

namespace chaoslab {

struct SimConfig {
  int N = 2;
  int d = 1;
  double sigma = 0.0;
  double dt = 1e-2;
  double t_max = 0.0;
  KernelSpec kernel = KernelSpec::zero(1, 2.0 * std::numbers::pi);
  std::size_t M = 1;
  std::uint64_t seed = 0;
  std::vector<double> snapshot_times;
  int workers = 1;
  /// Lattice size of the interpolation table for series kernels.
  int table_points = 256;
};

/// Throws DomainError on hard violations; returns advisory warnings
/// (the dt <= 0.1 min(1, 1/Lip) stability guard).
std::vector<std::string> validate(const SimConfig& config);

/// Grid estimate of the kernel's Lipschitz constant (pairs inside the
/// singular guard are skipped).
double lipschitz_estimate(const KernelSpec& kernel, int points = 64);

/// Step index a requested time is snapped to.
long snap_step(double t, double dt);

class ParticleEnsemble {
 public:
  ParticleEnsemble() = default;
  ParticleEnsemble(std::size_t M, int N, int d, double length);

  std::size_t replicas() const { return M_; }
  int particles() const { return N_; }
  int dim() const { return d_; }
  double length() const { return length_; }

  double time = 0.0;
  long step = 0;

  /// Row-major [M][N][d].
  std::vector<double> positions;

  double* replica(std::size_t r) { return positions.data() + r * N_ * d_; }
  const double* replica(std::size_t r) const { return positions.data() + r * N_ * d_; }
  double& at(std::size_t r, int i, int a) { return positions[(r * N_ + i) * d_ + a]; }
  double at(std::size_t r, int i, int a) const { return positions[(r * N_ + i) * d_ + a]; }

  bool operator==(const ParticleEnsemble& o) const;

 private:
  std::size_t M_ = 0;
  int N_ = 0;
  int d_ = 0;
  double length_ = 1.0;
};

/// I.i.d. draws from `density` (inverse CDF of the piecewise-linear
/// interpolant for d = 1, rejection from the uniform envelope for d = 2).
ParticleEnsemble sample_initial(const DensityField& density, int N, std::size_t M,
                                std::uint64_t seed, double tol_neg = 1e-10,
                                double tol_mass = 1e-6);

/// drift_i = (1/N) sum_{j != i} K(min_image(X_i, X_j)) for one replica.
void drift(std::span<const double> positions, const KernelEvaluator& kernel, int N,
           std::span<double> out);
std::vector<double> drift(std::span<const double> positions, const KernelSpec& kernel, int N);

/// Optional particle relabelling of the noise stream: particle i draws the
/// noise of particle noise_index[i].
using NoiseIndex = std::optional<std::vector<int>>;

/// Advances every replica by one Euler-Maruyama step.
void em_step(ParticleEnsemble& ensemble, const SimConfig& config, const KernelEvaluator& kernel,
             const CounterRng& rng, const NoiseIndex& noise_index = std::nullopt);

struct SnapshotInfo {
  double requested_time;
  double time;  // step * dt
  long step;
};

using SnapshotSink = std::function<void(const SnapshotInfo&, const ParticleEnsemble&)>;

/// Runs from `initial` (at step `initial.step`) to t_max, calling `sink` at
/// each snapshot time not before the starting step. Replicas are split
/// into fixed contiguous blocks over `config.workers` threads.
void run_ensemble(const SimConfig& config, ParticleEnsemble initial, const SnapshotSink& sink,
                  const NoiseIndex& noise_index = std::nullopt);

/// Binary snapshot: "CHLBSNAP", u32 version, u32 N, u32 d, u64 M, f64 time,
/// u64 seed, u64 step, then M*N*d little-endian doubles (row-major).
inline constexpr std::uint32_t kSnapshotVersion = 1;
void write_snapshot(const std::string& path, const ParticleEnsemble& ensemble, std::uint64_t seed);
ParticleEnsemble read_snapshot(const std::string& path, double length,
                               std::uint64_t* seed = nullptr);
/// CSV variant: comment header "# N,d,M,time,seed" then rows replica,particle,x0[,x1].
void write_snapshot_csv(const std::string& path, const ParticleEnsemble& ensemble,
                        std::uint64_t seed);

}  // namespace chaoslab
