#pragma once

// Pseudo-spectral solver for  d_t f + div((K * f) f) = sigma Lap f  on T^d,
// d in {1, 2}, and the stationary Kuramoto (Bessel) states.

#include <optional>
#include <vector>

#include "chaoslab/kernels.hpp"
#include "chaoslab/spectral.hpp"
#include "chaoslab/torus.hpp"

namespace chaoslab {

struct MeanFieldState {
  DensityField field;
  double time = 0.0;
};

/// Integrating-factor RK2 stepper. Diffusion is applied exactly through
/// exp(-sigma |k|^2 dt); the transport term uses 2/3-rule dealiasing; the
/// mode-0 coefficient of the transport term is identically zero.
class VlasovFokkerPlanckSolver {
 public:
  VlasovFokkerPlanckSolver(KernelSpec kernel, GridSpec grid, double sigma, double dt);

  const GridSpec& grid() const { return ops_.grid(); }
  double dt() const { return dt_; }
  double sigma() const { return sigma_; }

  /// One step. Throws StepSizeError when max|K * f| dt > 0.5 spacing.
  MeanFieldState step(const MeanFieldState& state) const;

  /// -div((K * f) f) in spectral form, dealiased.
  std::vector<Complex> transport(const std::vector<Complex>& fhat) const;
  /// max |K * f| over the grid.
  double max_velocity(const std::vector<Complex>& fhat) const;

 private:
  std::vector<std::vector<Complex>> velocity_field(const std::vector<Complex>& fhat) const;

  KernelSpec kernel_;
  SpectralOperators ops_;
  double sigma_;
  double dt_;
  std::vector<std::vector<Complex>> symbol_;  // length^d Khat(m) per component
  std::vector<double> factor_;                // exp(-sigma |k|^2 dt)
};

MeanFieldState vfp_step(const MeanFieldState& state, const KernelSpec& kernel, double sigma,
                        double dt);

struct SolveRecord {
  MeanFieldState state;
  double l2_norm = 0.0;
};

/// States at the requested output times (each snapped to the nearest step
/// boundary). The L^2 norm is recorded at each output.
std::vector<SolveRecord> solve(const DensityField& initial, const KernelSpec& kernel, double sigma,
                               const std::vector<double>& t_grid, double dt);

/// I1(x)/I0(x): power series for x <= 10, continued fraction beyond.
double bessel_i1_over_i0(double x);
/// I0(x) by its power series (used for analytic normalization checks).
double bessel_i0(double x);

struct StationaryKuramoto {
  double sigma = 0.0;
  double order_parameter = 0.0;  // r
  double phase = 0.0;            // rotation psi
  DensityField density;
};

/// Maximal fixed point of r = I1(r/sigma)/I0(r/sigma) and its density
/// exp((r/sigma) cos(2 pi (x - psi)/length)) normalized on `grid`.
StationaryKuramoto kuramoto_stationary(double sigma, const GridSpec& grid, double phase = 0.0);
/// Root only.
double kuramoto_order_parameter(double sigma);

/// L^2 norm of div((K * f) f) - sigma Lap f.
double stationary_residual(const DensityField& field, const KernelSpec& kernel, double sigma);

}  // namespace chaoslab
