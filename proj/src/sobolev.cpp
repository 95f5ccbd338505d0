#include "chaoslab/sobolev.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>

#include "chaoslab/error.hpp"
#include "chaoslab/spectral.hpp"

namespace chaoslab {

namespace {
constexpr double kPi = std::numbers::pi;

TrigPolynomial trig_from_function(const std::function<double(double)>& g, int degree) {
  const int q = 4 * (degree + 1);
  TrigPolynomial t;
  t.cos_coef.assign(degree, 0.0);
  t.sin_coef.assign(degree, 0.0);
  for (int j = 0; j < q; ++j) {
    const double th = 2.0 * kPi * j / q;
    const double v = g(th);
    t.constant += v / q;
    for (int m = 1; m <= degree; ++m) {
      t.cos_coef[m - 1] += 2.0 * v * std::cos(m * th) / q;
      t.sin_coef[m - 1] += 2.0 * v * std::sin(m * th) / q;
    }
  }
  return t;
}

TrigPolynomial single_mode(int m) {
  TrigPolynomial t;
  t.cos_coef.assign(m, 0.0);
  t.cos_coef[m - 1] = 1.0;
  return t;
}

}  // namespace

double sobolev_constant(int n) {
  if (n < 3) throw DomainError("sobolev_constant needs n >= 3 (2* is undefined below)");
  const double dn = n;
  const double log_ratio = std::lgamma(dn + 1.0) - std::lgamma(0.5 * dn + 1.0) - std::log(2.0) -
                           0.5 * dn * std::log(kPi);
  return std::exp(-0.5 * std::log(dn * (dn - 2.0)) + log_ratio / dn);
}

double critical_exponent(int n) { return n >= 3 ? 2.0 * n / (n - 2.0) : 2.0; }

// --- trig polynomials ---------------------------------------------------------------------

double TrigPolynomial::value(double x, double length) const {
  const double th = 2.0 * kPi * x / length;
  double s = constant;
  for (std::size_t m = 1; m <= cos_coef.size(); ++m) s += cos_coef[m - 1] * std::cos(m * th);
  for (std::size_t m = 1; m <= sin_coef.size(); ++m) s += sin_coef[m - 1] * std::sin(m * th);
  return s;
}

double TrigPolynomial::derivative(double x, double length) const {
  const double w = 2.0 * kPi / length;
  const double th = w * x;
  double s = 0.0;
  for (std::size_t m = 1; m <= cos_coef.size(); ++m) s -= m * w * cos_coef[m - 1] * std::sin(m * th);
  for (std::size_t m = 1; m <= sin_coef.size(); ++m) s += m * w * sin_coef[m - 1] * std::cos(m * th);
  return s;
}

int TrigPolynomial::degree() const {
  return static_cast<int>(std::max(cos_coef.size(), sin_coef.size()));
}

TrigPolynomial random_trig_polynomial(std::mt19937_64& rng, int max_degree) {
  std::uniform_int_distribution<int> deg(1, std::max(1, max_degree));
  std::uniform_real_distribution<double> c0(-1.0, 1.0);
  std::normal_distribution<double> z(0.0, 1.0);
  TrigPolynomial t;
  const int m = deg(rng);
  t.constant = c0(rng);
  for (int j = 1; j <= m; ++j) {
    t.cos_coef.push_back(z(rng) / j);
    t.sin_coef.push_back(z(rng) / j);
  }
  return t;
}

// --- test functions -------------------------------------------------------------------------

TestFunction TestFunction::tensorized(std::vector<TrigPolynomial> factors, double length,
                                      int quadrature_points) {
  if (factors.empty()) throw DomainError("tensorized test function needs >= 1 factor");
  if (!(length > 0.0)) throw DomainError("length must be positive");
  TestFunction f;
  f.n_ = static_cast<int>(factors.size());
  f.length_ = length;
  f.quad_ = quadrature_points;
  f.factors_ = std::move(factors);
  return f;
}

TestFunction TestFunction::grid(DensityField field) {
  if (field.grid().total_dims() > 4) throw DomainError("grid test functions need n <= 4");
  TestFunction f;
  f.n_ = field.grid().total_dims();
  f.length_ = field.grid().length();
  f.field_ = std::move(field);
  return f;
}

TestFunction TestFunction::scaled(double lambda) const {
  TestFunction f(*this);
  f.scale_ *= lambda;
  return f;
}

double TestFunction::factor_lp(int i, double p) const {
  const auto& g = factors_[i];
  const double h = length_ / quad_;
  double s = 0.0;
  for (int j = 0; j < quad_; ++j) s += std::pow(std::abs(g.value((j + 0.5) * h, length_)), p);
  return s * h;
}

double TestFunction::lp_norm(double p) const {
  if (!(p >= 1.0)) throw DomainError("p must be >= 1");
  if (field_) return std::abs(scale_) * chaoslab::lp_norm(*field_, p);
  double log_int = 0.0;
  for (int i = 0; i < n_; ++i) {
    const double v = factor_lp(i, p);
    if (v == 0.0) return 0.0;
    log_int += std::log(v);
  }
  return std::abs(scale_) * std::exp(log_int / p);
}

double TestFunction::gradient_l2() const {
  if (field_) {
    const GridSpec& g = field_->grid();
    const auto c = spectrum_of(*field_);
    SpectralOperators ops(g);
    double s = 0.0;
    for (std::size_t f = 0; f < g.size(); ++f) s += ops.k_squared(f) * std::norm(c[f]);
    return std::abs(scale_) * std::sqrt(s * g.volume());
  }
  std::vector<double> l2(n_), d2(n_);
  const double h = length_ / quad_;
  for (int i = 0; i < n_; ++i) {
    double a = 0.0, b = 0.0;
    for (int j = 0; j < quad_; ++j) {
      const double x = (j + 0.5) * h;
      const double v = factors_[i].value(x, length_);
      const double dv = factors_[i].derivative(x, length_);
      a += v * v;
      b += dv * dv;
    }
    l2[i] = a * h;
    d2[i] = b * h;
  }
  double s = 0.0;
  for (int i = 0; i < n_; ++i) {
    double term = d2[i];
    for (int j = 0; j < n_; ++j)
      if (j != i) term *= l2[j];
    s += term;
  }
  return std::abs(scale_) * std::sqrt(s);
}

// --- inequalities ------------------------------------------------------------------------------

InequalityResult verify_inequality(const TestFunction& f, const TorusGeometry& geometry) {
  const int n = f.n();
  if (n < 3) throw DomainError("the torus Sobolev inequality needs n >= 3");
  if (geometry.length() != f.length()) throw DomainError("test function and torus lengths differ");
  const double lhs = f.lp_norm(critical_exponent(n));
  const double g = f.gradient_l2();
  const double l2 = f.l2_norm();
  const double L = geometry.length();
  const double rhs = std::sqrt(2.0 * std::numbers::e) * sobolev_constant(n) *
                     std::sqrt(g * g + 4.0 * n * n / (L * L) * l2 * l2);
  return {lhs, rhs, rhs > 0.0 ? lhs / rhs : 0.0, lhs <= rhs};
}

namespace {

void check_dk(const TestFunction& f, int d, int k) {
  if (d < 1 || k < 1) throw DomainError("d and k must be >= 1");
  if (f.n() != d * k) throw DomainError("test function dimension must equal d*k");
  if (d * k < 3) throw DomainError("the scaled Sobolev forms need d*k >= 3");
}

double effective_ratio(const TestFunction& f, int d, int k) {
  const int n = d * k;
  const double denom = f.gradient_l2() / std::sqrt(k) + std::sqrt(k) * f.l2_norm();
  return f.lp_norm(critical_exponent(n)) / denom;
}

double gradient_rhs(double G, double C, int d, int k) {
  const int n = d * k;
  const double first = std::pow(G, static_cast<double>(n) / (n + 2.0));
  const double second = std::pow(C, k) * std::pow(static_cast<double>(k), n / 4.0);
  return C / std::sqrt(k) * std::max(first, second);
}

// Smallest C with ||f||_2 <= gradient_rhs(C); rhs is increasing in C.
double minimal_gradient_constant(const TestFunction& f, int d, int k) {
  const double lhs = f.l2_norm();
  const double G = f.gradient_l2();
  double lo = 1e-8, hi = 1.0;
  while (gradient_rhs(G, hi, d, k) < lhs) hi *= 2.0;
  for (int it = 0; it < 200; ++it) {
    const double mid = std::sqrt(lo * hi);
    if (gradient_rhs(G, mid, d, k) >= lhs) hi = mid;
    else lo = mid;
  }
  return hi;
}

}  // namespace

EffectiveResult effective_inequality_check(const TestFunction& f, int d, int k, double C) {
  check_dk(f, d, k);
  const double lhs = f.lp_norm(critical_exponent(d * k));
  const double rhs = C * (f.gradient_l2() / std::sqrt(k) + std::sqrt(k) * f.l2_norm());
  return {lhs, rhs, rhs - lhs, lhs <= rhs};
}

GradientBoundResult l2_gradient_bound_check(const TestFunction& f, int d, int k, double C) {
  check_dk(f, d, k);
  const int n = d * k;
  const double lhs = f.l2_norm();
  const double G = f.gradient_l2();
  const double first = std::pow(G, static_cast<double>(n) / (n + 2.0));
  const double second = std::pow(C, k) * std::pow(static_cast<double>(k), n / 4.0);
  const double rhs = C / std::sqrt(k) * std::max(first, second);
  return {lhs, rhs, first >= second, lhs <= rhs};
}

std::vector<TestFunction> calibration_family(int d, int k, double length, std::uint64_t seed,
                                             int random_count) {
  const int n = d * k;
  std::vector<TestFunction> out;
  TrigPolynomial one;
  one.constant = 1.0;
  out.push_back(TestFunction::tensorized(std::vector<TrigPolynomial>(n, one), length));
  for (int m = 1; m <= 8; ++m) {
    out.push_back(TestFunction::tensorized(std::vector<TrigPolynomial>(n, single_mode(m)), length));
    TrigPolynomial shifted = single_mode(m);
    shifted.constant = 1.0;
    shifted.cos_coef[m - 1] = 0.5;
    out.push_back(TestFunction::tensorized(std::vector<TrigPolynomial>(n, shifted), length));
  }
  for (int q : {2, 4, 8, 16}) {
    auto bump = trig_from_function([q](double th) { return std::pow(1.0 + std::cos(th), q); }, q);
    out.push_back(TestFunction::tensorized(std::vector<TrigPolynomial>(n, bump), length));
  }
  std::mt19937_64 rng(seed);
  for (int r = 0; r < random_count; ++r) {
    std::vector<TrigPolynomial> fs;
    for (int i = 0; i < n; ++i) fs.push_back(random_trig_polynomial(rng, 4));
    out.push_back(TestFunction::tensorized(std::move(fs), length));
  }
  return out;
}

int calibration_order(int d) {
  if (d < 1) throw DomainError("d must be >= 1");
  return d >= 2 ? 2 : 3;
}

Calibration calibrate(int d, double length, std::uint64_t seed, int random_count) {
  const int k = calibration_order(d);
  Calibration c{d, k, 0.0, 0.0, 1.1};
  for (const auto& f : calibration_family(d, k, length, seed, random_count)) {
    c.effective_C = std::max(c.effective_C, effective_ratio(f, d, k));
    c.gradient_C = std::max(c.gradient_C, minimal_gradient_constant(f, d, k));
  }
  c.effective_C *= c.safety;
  c.gradient_C *= c.safety;
  return c;
}

// --- cutoff profile ----------------------------------------------------------------------------------

double CutoffProfile::value(double x) const {
  const double a = std::abs(x);
  if (a <= 0.5) return 1.0;
  if (a >= 0.5 * (1.0 + eta)) return 0.0;
  return (eta + 1.0) / eta - 2.0 * a / eta;
}

double CutoffProfile::derivative(double x) const {
  const double a = std::abs(x);
  if (a <= 0.5 || a >= 0.5 * (1.0 + eta)) return 0.0;
  return x > 0.0 ? -2.0 * inverse_eta : 2.0 * inverse_eta;
}

double CutoffProfile::energy() const {
  const double ramp = 2.0 * inverse_eta;
  return ramp + ramp;
}

double CutoffProfile::l2_squared() const { return 1.0 + eta / 3.0; }

double CutoffProfile::periodized(double x, double p) const {
  double s = 0.0;
  for (int k = -3; k <= 3; ++k) {
    const double v = value(x + k);
    if (v > 0.0) s += std::pow(v, p);
  }
  return s;
}

CutoffAudit cutoff_profile(int n, int samples, std::uint64_t seed) {
  if (n < 1) throw DomainError("cutoff_profile needs n >= 1");
  const auto phi = CutoffProfile::from_inverse(n);
  CutoffAudit a{phi, n, phi.energy(), 4.0 * n, phi.l2_squared(), 0.0, false, false, false};
  a.energy_exact = a.energy == a.energy_target;
  a.l2_within = a.l2_squared <= 1.0 + phi.eta;
  const double p = critical_exponent(n);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double m = std::numeric_limits<double>::infinity();
  for (int s = 0; s < samples; ++s) {
    double prod = 1.0;
    for (int i = 0; i < n; ++i) prod *= phi.periodized(u(rng), p);
    m = std::min(m, prod);
  }
  a.min_periodized = m;
  a.covering = m >= 1.0;
  return a;
}

}  // namespace chaoslab
