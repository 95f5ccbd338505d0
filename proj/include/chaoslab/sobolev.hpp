#pragma once

// Sobolev inequality on T^n with explicit dimension dependence:
//   ||f||_{L^{2*}} <= sqrt(2e) K_n (||grad f||_2^2 + (4 n^2 / |T|^2) ||f||_2^2)^{1/2},
// 2* = 2n/(n-2), plus its dimension-scaled forms and the cutoff profile.

#include <cstdint>
#include <optional>
#include <random>
#include <vector>

#include "chaoslab/torus.hpp"

namespace chaoslab {

/// Optimal Sobolev constant on R^n (n >= 3), evaluated through lgamma.
double sobolev_constant(int n);

/// 2n/(n-2) for n >= 3; 2 below.
double critical_exponent(int n);

/// c_0 + sum_m (a_m cos(2 pi m x / L) + b_m sin(2 pi m x / L)), m >= 1.
struct TrigPolynomial {
  double constant = 0.0;
  std::vector<double> cos_coef;  // index m - 1
  std::vector<double> sin_coef;

  double value(double x, double length) const;
  double derivative(double x, double length) const;
  int degree() const;
};

TrigPolynomial random_trig_polynomial(std::mt19937_64& rng, int max_degree);

class TestFunction {
 public:
  /// Product g_1(x_1) ... g_n(x_n) on T^n.
  static TestFunction tensorized(std::vector<TrigPolynomial> factors, double length,
                                 int quadrature_points = 4096);
  /// Full-grid function on T^n, n <= 4.
  static TestFunction grid(DensityField field);

  int n() const { return n_; }
  double length() const { return length_; }
  bool is_tensorized() const { return !factors_.empty(); }
  const std::vector<TrigPolynomial>& factors() const { return factors_; }

  double lp_norm(double p) const;
  double l2_norm() const { return lp_norm(2.0); }
  double gradient_l2() const;
  /// lambda * f.
  TestFunction scaled(double lambda) const;

 private:
  TestFunction() = default;
  double factor_lp(int i, double p) const;  // 1-D integral of |g_i|^p

  int n_ = 0;
  double length_ = 1.0;
  double scale_ = 1.0;
  int quad_ = 4096;
  std::vector<TrigPolynomial> factors_;
  std::optional<DensityField> field_;
};

struct InequalityResult {
  double lhs;
  double rhs;
  double ratio;  // lhs / rhs
  bool holds;
};

InequalityResult verify_inequality(const TestFunction& f, const TorusGeometry& geometry);

/// ||f||_{L^{2*_k}(T^{dk})} <= C (k^{-1/2} ||grad f|| + k^{1/2} ||f||_2).
struct EffectiveResult {
  double lhs;
  double rhs;
  double margin;
  bool holds;
};
EffectiveResult effective_inequality_check(const TestFunction& f, int d, int k, double C);

/// ||f||_2 <= (C / sqrt k) max(||grad f||^{dk/(dk+2)}, C^k k^{dk/4}).
struct GradientBoundResult {
  double lhs;
  double rhs;
  bool first_branch;  // gradient term is the larger one
  bool holds;
};
GradientBoundResult l2_gradient_bound_check(const TestFunction& f, int d, int k, double C);

/// Calibration family at (d, k): constants, single modes 1..8, `random_count`
/// random tensorized polynomials and normalized bumps.
std::vector<TestFunction> calibration_family(int d, int k, double length, std::uint64_t seed,
                                             int random_count = 64);

struct Calibration {
  int d;
  int k;
  double effective_C;  // 1.1 x smallest constant covering the family
  double gradient_C;
  double safety = 1.1;
};
/// Default calibration order: k = 2 for d >= 2, k = 3 for d = 1 (dk >= 3).
int calibration_order(int d);
Calibration calibrate(int d, double length, std::uint64_t seed = 7, int random_count = 64);

/// Piecewise-linear cutoff: 1 on |x| <= 1/2, 0 beyond (1 + eta)/2, linear between.
struct CutoffProfile {
  /// Profile with eta = 1 / inverse_eta (kept exactly, so 4/eta is exact).
  static CutoffProfile from_inverse(double inverse_eta) { return {1.0 / inverse_eta, inverse_eta}; }

  double eta;
  double inverse_eta;

  double value(double x) const;
  double derivative(double x) const;
  double support_width() const { return 1.0 + eta; }
  /// int |phi'|^2: each ramp has length eta/2 and slope 2/eta, giving 2/eta.
  double energy() const;
  /// int phi^2 = 1 + eta/3.
  double l2_squared() const;
  /// sum_{k in Z} |phi(x + k)|^p.
  double periodized(double x, double p) const;
};

struct CutoffAudit {
  CutoffProfile profile;
  int n;
  double energy;
  double energy_target;  // 4n
  double l2_squared;
  double min_periodized;  // over the sample points (product over coordinates)
  bool energy_exact;
  bool l2_within;
  bool covering;
};

/// Profile with eta = 1/n and its audits over `samples` points in [0, 1]^n.
CutoffAudit cutoff_profile(int n, int samples = 10000, std::uint64_t seed = 11);

}  // namespace chaoslab
