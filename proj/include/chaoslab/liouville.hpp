#pragma once

// Direct spectral solver for the N-particle forward equation on T^N (d = 1)
//   d_t f_N + (1/N) sum_{i != j} d_{x_i}(K(x_i - x_j) f_N) = sigma sum_i Lap_{x_i} f_N,
// its marginals, the Kuramoto Gibbs state and the hierarchy residual.

#include <vector>

#include "chaoslab/kernels.hpp"
#include "chaoslab/spectral.hpp"
#include "chaoslab/torus.hpp"

namespace chaoslab {

inline constexpr int kMaxLiouvilleParticles = 3;

struct JointDensity {
  JointDensity(DensityField field, int N);

  DensityField field;
  int N;
  double time = 0.0;
};

/// Integrating-factor RK2 stepper sharing the mean-field numerics
/// (exact diffusion, 2/3-rule dealiasing).
class LiouvilleSolver {
 public:
  LiouvilleSolver(KernelSpec kernel, GridSpec grid, double sigma, double dt);

  const GridSpec& grid() const { return ops_.grid(); }
  int particles() const { return ops_.grid().total_dims(); }
  double dt() const { return dt_; }

  JointDensity step(const JointDensity& joint) const;
  /// -sum_i d_i(v_i f) in spectral form, dealiased.
  std::vector<Complex> transport(const std::vector<Complex>& fhat) const;

 private:
  KernelSpec kernel_;
  SpectralOperators ops_;
  double sigma_;
  double dt_;
  std::vector<std::vector<double>> velocity_;  // v_i at every node
  std::vector<double> factor_;
  double max_speed_ = 0.0;
};

JointDensity liouville_step(const JointDensity& joint, const KernelSpec& kernel, double sigma,
                            double dt);

/// Joint states at the requested times (snapped to the step grid).
std::vector<JointDensity> liouville_solve(const JointDensity& initial, const KernelSpec& kernel,
                                          double sigma, double dt, const std::vector<double>& t_grid);

/// Integrates out the trailing axes of a joint field (one axis per particle, d = 1).
DensityField extract_marginal(const DensityField& joint, int k);
DensityField extract_marginal(const JointDensity& joint, int k);

/// c exp((L / (2 pi sigma N)) sum_{i<j} cos(2 pi (x_i - x_j) / L)) on the N-fold grid.
JointDensity gibbs_stationary_kuramoto(int N, double sigma, const GridSpec& grid);

/// L^2 norm over T^k of
///   dfdt + (1/N) sum_{i != j <= k} d_i(K f_k)
///        + ((N - k)/N) sum_i d_i int K(x_i - y) f_{k+1} dy - sigma sum Lap f_k.
/// `include_coupling = false` drops the f_{k+1} term (ablation).
double bbgky_residual(const DensityField& f_k, const DensityField& f_k1, const KernelSpec& kernel,
                      double sigma, int N, const DensityField& dfdt, bool include_coupling = true);

}  // namespace chaoslab
