#pragma once

// Interaction kernels K on T^d.
//
// Fourier convention (shared with DensityField):
//   K(x) = sum_m Khat(m) exp(i k.x),  k = 2 pi m / length,
// so (K * f)^(m) = length^d Khat(m) fhat(m).
//
// Singular kernels are the fields of the periodic Green function G with
// -Lap G = delta - 1/|T|^2, i.e. Ghat(m) = 1 / (|T|^2 |k|^2):
//   BiotSavart2D       K = grad^perp G   Khat = i k^perp / (|T|^2 |k|^2)
//   AttractiveLog2D    K = grad G        Khat = i k      / (|T|^2 |k|^2)
// The second points toward the origin (attraction); both are mean-zero.

#include <array>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "chaoslab/torus.hpp"

namespace chaoslab {

enum class KernelKind { zero, kuramoto, biot_savart_2d, attractive_log_2d, smooth_fourier, mollified };

/// Claimed regularity class; recorded as metadata only.
enum class RegularityClass { h_minus1, w_theta, smooth };

/// One entry of a SmoothFourier mode table.
struct FourierTerm {
  std::vector<int> mode;
  std::vector<Complex> coefficient;  // one per vector component
};

using KernelVector = std::array<double, 3>;

class KernelSpec {
 public:
  static KernelSpec zero(int dim, double length);
  /// K(x) = -sin(2 pi x / length); the length 2 pi case is -sin x.
  static KernelSpec kuramoto(double length);
  static KernelSpec biot_savart_2d(double length, int series_cutoff = 32);
  static KernelSpec attractive_log_2d(double length, int series_cutoff = 32);
  /// Finite mode table; throws DomainError unless the table is
  /// conjugate-symmetric (K real-valued).
  static KernelSpec smooth_fourier(int dim, double length, std::vector<FourierTerm> terms);

  KernelKind kind() const { return kind_; }
  int dim() const { return dim_; }
  double length() const { return length_; }
  std::string name() const;

  bool divergence_free() const { return divergence_free_; }
  RegularityClass regularity() const { return regularity_; }
  /// theta = 2/(d+2) of the W^{-theta, 2/theta} assumption (metadata).
  double theta() const { return 2.0 / (dim_ + 2.0); }

  /// True for BiotSavart2D / AttractiveLog2D that are not mollified.
  bool singular() const;
  /// Mode cutoff of the truncated series used for pointwise evaluation.
  int series_cutoff() const { return series_cutoff_; }
  /// Radius of the singular core refused by eval_kernel (half the spacing of
  /// the grid that resolves the series).
  double eval_guard() const;

  /// Mollification radius (0 unless kind() == mollified).
  double epsilon() const { return epsilon_; }
  const KernelSpec& base() const;

  const std::vector<FourierTerm>& terms() const { return terms_; }

 private:
  friend KernelSpec mollify(const KernelSpec&, double);
  KernelSpec(KernelKind kind, int dim, double length) : kind_(kind), dim_(dim), length_(length) {}

  KernelKind kind_;
  int dim_;
  double length_;
  bool divergence_free_ = false;
  RegularityClass regularity_ = RegularityClass::smooth;
  int series_cutoff_ = 0;
  double epsilon_ = 0.0;
  std::shared_ptr<const KernelSpec> base_;
  std::vector<FourierTerm> terms_;
};

struct KernelDecomposition {
  KernelSpec k_plus;   // attractive part
  KernelSpec k_minus;  // repulsive part
  /// min over the audit grid of div K_-.
  double min_div_k_minus;
  /// Reported bound: max(0, -min_div_k_minus).
  double div_bound;
};

/// K^eps = rho_eps * K with rho_eps proportional to (1 - |x/eps|^2)^2 on |x| < eps.
KernelSpec mollify(const KernelSpec& spec, double epsilon);

/// Fourier transform of the unit-mass bump rho_eps at |xi| = wavenumber.
/// It changes sign but always satisfies |rho_hat| <= 1.
double mollifier_transform(int dim, double epsilon, double wavenumber);

std::vector<Complex> fourier_coefficients(const KernelSpec& spec, std::span<const int> mode);

/// Drift vector K(displacement); components beyond dim() are zero.
KernelVector eval_kernel(const KernelSpec& spec, std::span<const double> displacement);

/// (sum_{0 < |m|_inf <= cutoff} |Khat(m)|^2 / |k|^2)^{1/2}. This is the
/// divergence-form infimum for mean-zero fields in the module's normalized
/// Fourier convention.
double h_minus1_norm(const KernelSpec& spec, const TorusGeometry& geometry, int mode_cutoff);

/// L^2 norm of (1/2pi) log|x| over the square [-length/2, length/2]^2: the
/// non-periodized, non-centred log potential on one cell.
double log_potential_cell_l2(double length);

/// Components of K * field, computed as length^d Khat fhat.
std::vector<DensityField> convolve(const KernelSpec& spec, const DensityField& field);

KernelDecomposition decompose(const KernelSpec& spec, int audit_points = 64);

/// max over grid modes of |k . Khat(m)|.
double check_divergence_free(const KernelSpec& spec, const GridSpec& grid);

/// Fast pointwise evaluator for pair loops. Closed forms are used where they
/// exist; series kernels are tabulated once on a periodic lattice and
/// interpolated (multi-linear).
class KernelEvaluator {
 public:
  explicit KernelEvaluator(KernelSpec spec, int table_points = 256);

  const KernelSpec& spec() const { return spec_; }
  /// Pair distance below which evaluation is refused (0 when never refused).
  double guard_radius() const { return guard_; }
  bool tabulated() const { return !table_.empty(); }
  int table_points() const { return table_n_; }
  /// Component a of the lattice table, row-major table_points()^2.
  const double* table(int a) const { return table_.data() + a * table_n_ * table_n_; }

  /// Writes dim() components into out. Throws SingularityError inside the guard.
  void evaluate(const double* displacement, double* out) const;

 private:
  KernelSpec spec_;
  double guard_ = 0.0;
  double amplitude_ = 1.0;  // mollified Kuramoto scaling
  int table_n_ = 0;
  std::vector<double> table_;  // [component][node]
};

}  // namespace chaoslab
