#include "chaoslab/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <sstream>

#include "chaoslab/error.hpp"

namespace chaoslab {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

bool is_series_kind(KernelKind k) {
  return k == KernelKind::biot_savart_2d || k == KernelKind::attractive_log_2d;
}

std::vector<Complex> singular_coefficients(KernelKind kind, double length,
                                           std::span<const int> mode) {
  std::vector<Complex> out(2, 0.0);
  if (mode[0] == 0 && mode[1] == 0) return out;
  const double k1 = kTwoPi * mode[0] / length;
  const double k2 = kTwoPi * mode[1] / length;
  const double g = 1.0 / (length * length * (k1 * k1 + k2 * k2));
  if (kind == KernelKind::biot_savart_2d) {
    out[0] = Complex(0.0, -k2 * g);
    out[1] = Complex(0.0, k1 * g);
  } else {
    out[0] = Complex(0.0, k1 * g);
    out[1] = Complex(0.0, k2 * g);
  }
  return out;
}

// Re sum_m c(m) exp(i k.x) over a finite term list.
void sum_terms(const std::vector<FourierTerm>& terms, double length, double scale_eps, int dim,
               const double* x, double* out) {
  for (int a = 0; a < dim; ++a) out[a] = 0.0;
  for (const auto& t : terms) {
    double phase = 0.0;
    double kmag2 = 0.0;
    for (int a = 0; a < dim; ++a) {
      const double ka = kTwoPi * t.mode[a] / length;
      phase += ka * x[a];
      kmag2 += ka * ka;
    }
    const double rho = scale_eps > 0.0 ? mollifier_transform(dim, scale_eps, std::sqrt(kmag2)) : 1.0;
    const Complex e(std::cos(phase), std::sin(phase));
    for (int a = 0; a < dim; ++a) out[a] += rho * (t.coefficient[a] * e).real();
  }
}

// Truncated series of a singular kernel, optionally multiplied by rho_hat.
void sum_singular_series(KernelKind kind, double length, int cutoff, double eps, const double* x,
                         double* out) {
  out[0] = out[1] = 0.0;
  std::array<int, 2> m{};
  // Half plane (m1 > 0, or m1 == 0 and m2 > 0); the conjugate mode doubles it.
  for (int m1 = 0; m1 <= cutoff; ++m1) {
    for (int m2 = -cutoff; m2 <= cutoff; ++m2) {
      if (m1 == 0 && m2 <= 0) continue;
      m = {m1, m2};
      auto c = singular_coefficients(kind, length, m);
      const double k1 = kTwoPi * m1 / length, k2 = kTwoPi * m2 / length;
      double rho = 1.0;
      if (eps > 0.0) rho = mollifier_transform(2, eps, std::hypot(k1, k2));
      const double phase = k1 * x[0] + k2 * x[1];
      const Complex e(std::cos(phase), std::sin(phase));
      out[0] += 2.0 * rho * (c[0] * e).real();
      out[1] += 2.0 * rho * (c[1] * e).real();
    }
  }
}

const KernelSpec* innermost(const KernelSpec& spec) {
  const KernelSpec* s = &spec;
  while (s->kind() == KernelKind::mollified) s = &s->base();
  return s;
}

}  // namespace

// --- construction -------------------------------------------------------------

KernelSpec KernelSpec::zero(int dim, double length) {
  static_cast<void>(TorusGeometry(dim, length));  // validates
  KernelSpec s(KernelKind::zero, dim, length);
  s.divergence_free_ = true;
  return s;
}

KernelSpec KernelSpec::kuramoto(double length) {
  static_cast<void>(TorusGeometry(1, length));  // validates
  return KernelSpec(KernelKind::kuramoto, 1, length);
}

KernelSpec KernelSpec::biot_savart_2d(double length, int series_cutoff) {
  static_cast<void>(TorusGeometry(2, length));  // validates
  if (series_cutoff < 1) throw DomainError("series cutoff must be >= 1");
  KernelSpec s(KernelKind::biot_savart_2d, 2, length);
  s.divergence_free_ = true;
  s.regularity_ = RegularityClass::h_minus1;
  s.series_cutoff_ = series_cutoff;
  return s;
}

KernelSpec KernelSpec::attractive_log_2d(double length, int series_cutoff) {
  static_cast<void>(TorusGeometry(2, length));  // validates
  if (series_cutoff < 1) throw DomainError("series cutoff must be >= 1");
  KernelSpec s(KernelKind::attractive_log_2d, 2, length);
  s.regularity_ = RegularityClass::h_minus1;
  s.series_cutoff_ = series_cutoff;
  return s;
}

KernelSpec KernelSpec::smooth_fourier(int dim, double length, std::vector<FourierTerm> terms) {
  static_cast<void>(TorusGeometry(dim, length));  // validates
  std::map<std::vector<int>, std::vector<Complex>> table;
  for (const auto& t : terms) {
    if (static_cast<int>(t.mode.size()) != dim || static_cast<int>(t.coefficient.size()) != dim)
      throw DomainError("smooth_fourier term has wrong dimension");
    table[t.mode] = t.coefficient;
  }
  double div_residual = 0.0;
  for (const auto& [mode, c] : table) {
    std::vector<int> neg(mode);
    for (int& v : neg) v = -v;
    auto it = table.find(neg);
    for (int a = 0; a < dim; ++a) {
      const Complex partner = (it == table.end()) ? Complex(0.0) : it->second[a];
      if (std::abs(c[a] - std::conj(partner)) > 1e-12 * (1.0 + std::abs(c[a])))
        throw DomainError("smooth_fourier table is not conjugate-symmetric; kernel would be complex");
    }
    Complex div = 0.0;
    for (int a = 0; a < dim; ++a) div += (kTwoPi * mode[a] / length) * c[a];
    div_residual = std::max(div_residual, std::abs(div));
  }
  KernelSpec s(KernelKind::smooth_fourier, dim, length);
  s.terms_ = std::move(terms);
  s.divergence_free_ = div_residual <= 1e-8;
  return s;
}

KernelSpec mollify(const KernelSpec& spec, double epsilon) {
  if (!(epsilon > 0.0)) throw DomainError("mollification radius must be positive");
  if (epsilon >= spec.length() / 4.0)
    throw DomainError("mollification radius must be below length/4");
  KernelSpec s(KernelKind::mollified, spec.dim(), spec.length());
  s.base_ = std::make_shared<const KernelSpec>(spec);
  s.epsilon_ = epsilon;
  s.divergence_free_ = spec.divergence_free();
  s.regularity_ = RegularityClass::smooth;
  s.series_cutoff_ = spec.series_cutoff();
  return s;
}

std::string KernelSpec::name() const {
  switch (kind_) {
    case KernelKind::zero: return "zero";
    case KernelKind::kuramoto: return "kuramoto";
    case KernelKind::biot_savart_2d: return "biot_savart_2d";
    case KernelKind::attractive_log_2d: return "attractive_log_2d";
    case KernelKind::smooth_fourier: return "smooth_fourier";
    case KernelKind::mollified: {
      std::ostringstream os;
      os << "mollified(" << base_->name() << "," << epsilon_ << ")";
      return os.str();
    }
  }
  return "unknown";
}

bool KernelSpec::singular() const { return is_series_kind(kind_); }

double KernelSpec::eval_guard() const {
  if (!singular()) return 0.0;
  return 0.5 * length_ / (2.0 * series_cutoff_);
}

const KernelSpec& KernelSpec::base() const {
  if (!base_) throw DomainError("kernel '" + name() + "' has no base kernel");
  return *base_;
}

// --- mollifier ------------------------------------------------------------------

double mollifier_transform(int dim, double epsilon, double wavenumber) {
  // rho(x) ~ (1 - |x/eps|^2)^2 has transform
  //   Gamma(nu + 1) 2^nu J_nu(b) / b^nu,  nu = d/2 + 2,  b = eps |xi|.
  const double nu = 0.5 * dim + 2.0;
  const double b = epsilon * std::abs(wavenumber);
  if (b < 2.0) {
    // Power series of Gamma(nu+1) (2/b)^nu J_nu(b).
    const double q = 0.25 * b * b;
    double term = 1.0, sum = 1.0;
    for (int j = 1; j < 40; ++j) {
      term *= -q / (j * (j + nu));
      sum += term;
      if (std::abs(term) < 1e-18) break;
    }
    return sum;
  }
  return std::exp(std::lgamma(nu + 1.0) + nu * std::log(2.0 / b)) * std::cyl_bessel_j(nu, b);
}

// --- coefficients & evaluation ----------------------------------------------------

std::vector<Complex> fourier_coefficients(const KernelSpec& spec, std::span<const int> mode) {
  if (static_cast<int>(mode.size()) != spec.dim())
    throw DomainError("mode dimension does not match kernel dimension");
  std::vector<Complex> out(spec.dim(), 0.0);
  switch (spec.kind()) {
    case KernelKind::zero: break;
    case KernelKind::kuramoto:
      if (mode[0] == 1) out[0] = Complex(0.0, 0.5);
      if (mode[0] == -1) out[0] = Complex(0.0, -0.5);
      break;
    case KernelKind::biot_savart_2d:
    case KernelKind::attractive_log_2d:
      out = singular_coefficients(spec.kind(), spec.length(), mode);
      break;
    case KernelKind::smooth_fourier:
      for (const auto& t : spec.terms())
        if (std::equal(t.mode.begin(), t.mode.end(), mode.begin())) out = t.coefficient;
      break;
    case KernelKind::mollified: {
      out = fourier_coefficients(spec.base(), mode);
      double k2 = 0.0;
      for (int a = 0; a < spec.dim(); ++a) {
        const double ka = kTwoPi * mode[a] / spec.length();
        k2 += ka * ka;
      }
      const double rho = mollifier_transform(spec.dim(), spec.epsilon(), std::sqrt(k2));
      for (auto& c : out) c *= rho;
      break;
    }
  }
  return out;
}

KernelVector eval_kernel(const KernelSpec& spec, std::span<const double> displacement) {
  if (static_cast<int>(displacement.size()) != spec.dim())
    throw DomainError("displacement dimension does not match kernel dimension");
  KernelVector out{0.0, 0.0, 0.0};
  const double* x = displacement.data();
  switch (spec.kind()) {
    case KernelKind::zero: break;
    case KernelKind::kuramoto: out[0] = -std::sin(kTwoPi * x[0] / spec.length()); break;
    case KernelKind::smooth_fourier:
      sum_terms(spec.terms(), spec.length(), 0.0, spec.dim(), x, out.data());
      break;
    case KernelKind::biot_savart_2d:
    case KernelKind::attractive_log_2d: {
      const double r = std::hypot(x[0], x[1]);
      if (r < spec.eval_guard())
        throw SingularityError("evaluation of " + spec.name() + " at distance " +
                               std::to_string(r) + " inside its singular core (guard " +
                               std::to_string(spec.eval_guard()) + "); mollify the kernel");
      sum_singular_series(spec.kind(), spec.length(), spec.series_cutoff(), 0.0, x, out.data());
      break;
    }
    case KernelKind::mollified: {
      const KernelSpec* inner = innermost(spec);
      if (&spec.base() != inner)
        throw UnsupportedError("nested mollification is not supported");
      switch (inner->kind()) {
        case KernelKind::zero: break;
        case KernelKind::kuramoto: {
          const double rho = mollifier_transform(1, spec.epsilon(), kTwoPi / spec.length());
          out[0] = -rho * std::sin(kTwoPi * x[0] / spec.length());
          break;
        }
        case KernelKind::smooth_fourier:
          sum_terms(inner->terms(), spec.length(), spec.epsilon(), spec.dim(), x, out.data());
          break;
        default:
          sum_singular_series(inner->kind(), spec.length(), inner->series_cutoff(),
                              spec.epsilon(), x, out.data());
      }
      break;
    }
  }
  return out;
}

// --- norms, convolution, audits ---------------------------------------------------

double h_minus1_norm(const KernelSpec& spec, const TorusGeometry& geometry, int mode_cutoff) {
  if (geometry.dim() != spec.dim() || geometry.length() != spec.length())
    throw DomainError("geometry does not match the kernel's torus");
  if (mode_cutoff < 1) throw DomainError("mode cutoff must be >= 1");
  std::vector<int> zero(spec.dim(), 0);
  for (const auto& c : fourier_coefficients(spec, zero))
    if (std::abs(c) > 1e-14)
      throw DomainError("kernel has nonzero mean; its H^-1 norm is infinite");

  const int d = spec.dim();
  const int side = 2 * mode_cutoff + 1;
  long total = 1;
  for (int a = 0; a < d; ++a) total *= side;
  std::vector<int> m(d);
  double sum = 0.0;
  for (long flat = 0; flat < total; ++flat) {
    long rest = flat;
    double k2 = 0.0;
    bool is_zero = true;
    for (int a = d - 1; a >= 0; --a) {
      m[a] = static_cast<int>(rest % side) - mode_cutoff;
      rest /= side;
      const double ka = kTwoPi * m[a] / spec.length();
      k2 += ka * ka;
      if (m[a] != 0) is_zero = false;
    }
    if (is_zero) continue;
    double c2 = 0.0;
    for (const auto& c : fourier_coefficients(spec, m)) c2 += std::norm(c);
    sum += c2 / k2;
  }
  return std::sqrt(sum);
}

double log_potential_cell_l2(double length) {
  if (!(length > 0.0)) throw DomainError("length must be positive");
  // 8 int_0^{pi/4} int_0^{R(t)} r log^2 r dr dt with R = length / (2 cos t);
  // the inner integral is R^2/2 (log^2 R - log R + 1/2). Composite Simpson in t.
  const int n = 4096;
  const double a = std::numbers::pi / 4.0, h = a / n;
  auto inner = [length](double t) {
    const double R = length / (2.0 * std::cos(t));
    const double lr = std::log(R);
    return 0.5 * R * R * (lr * lr - lr + 0.5);
  };
  double s = inner(0.0) + inner(a);
  for (int i = 1; i < n; ++i) s += (i % 2 ? 4.0 : 2.0) * inner(i * h);
  const double integral = 8.0 * s * h / 3.0;
  return std::sqrt(integral) / kTwoPi;
}

std::vector<DensityField> convolve(const KernelSpec& spec, const DensityField& field) {
  const GridSpec& grid = field.grid();
  if (grid.total_dims() != spec.dim())
    throw DomainError("convolve: field has " + std::to_string(grid.total_dims()) +
                      " dimensions, kernel has " + std::to_string(spec.dim()));
  if (grid.length() != spec.length()) throw DomainError("convolve: torus length mismatch");
  const auto fhat = spectrum_of(field);
  const double vol = grid.volume();
  const int n = grid.points_per_dim();
  std::vector<std::vector<Complex>> comps(spec.dim(), std::vector<Complex>(grid.size()));
  std::vector<int> idx(spec.dim()), mode(spec.dim());
  for (std::size_t f = 0; f < grid.size(); ++f) {
    grid.unflatten(f, idx);
    bool nyquist = false;
    for (int a = 0; a < spec.dim(); ++a) {
      mode[a] = grid.mode(idx[a]);
      if (idx[a] == n / 2) nyquist = true;
    }
    if (nyquist) continue;
    auto c = fourier_coefficients(spec, mode);
    for (int a = 0; a < spec.dim(); ++a) comps[a][f] = vol * c[a] * fhat[f];
  }
  std::vector<DensityField> out;
  for (auto& c : comps) out.push_back(DensityField::from_spectral(grid, std::move(c)));
  return out;
}

double check_divergence_free(const KernelSpec& spec, const GridSpec& grid) {
  if (grid.total_dims() != spec.dim()) throw DomainError("grid dimension does not match kernel");
  std::vector<int> idx(spec.dim()), mode(spec.dim());
  double residual = 0.0;
  for (std::size_t f = 0; f < grid.size(); ++f) {
    grid.unflatten(f, idx);
    for (int a = 0; a < spec.dim(); ++a) mode[a] = grid.mode(idx[a]);
    auto c = fourier_coefficients(spec, mode);
    Complex div = 0.0;
    for (int a = 0; a < spec.dim(); ++a) div += (kTwoPi * mode[a] / spec.length()) * c[a];
    residual = std::max(residual, std::abs(div));
  }
  return residual;
}

namespace {

double min_divergence(const KernelSpec& spec, int points) {
  GridSpec grid(TorusGeometry(spec.dim(), spec.length()), points);
  std::vector<Complex> div(grid.size());
  std::vector<int> idx(spec.dim()), mode(spec.dim());
  for (std::size_t f = 0; f < grid.size(); ++f) {
    grid.unflatten(f, idx);
    bool nyquist = false;
    for (int a = 0; a < spec.dim(); ++a) {
      mode[a] = grid.mode(idx[a]);
      if (idx[a] == points / 2) nyquist = true;
    }
    if (nyquist) continue;
    auto c = fourier_coefficients(spec, mode);
    for (int a = 0; a < spec.dim(); ++a)
      div[f] += Complex(0.0, kTwoPi * mode[a] / spec.length()) * c[a];
  }
  auto v = fft::inverse_real(grid, div);
  return *std::min_element(v.begin(), v.end());
}

KernelDecomposition make_decomposition(KernelSpec plus, KernelSpec minus, int points) {
  const double m = min_divergence(minus, points);
  return KernelDecomposition{std::move(plus), std::move(minus), m, std::max(0.0, -m)};
}

}  // namespace

KernelDecomposition decompose(const KernelSpec& spec, int audit_points) {
  const auto zero = KernelSpec::zero(spec.dim(), spec.length());
  switch (spec.kind()) {
    case KernelKind::zero: return make_decomposition(zero, zero, audit_points);
    case KernelKind::kuramoto:
    case KernelKind::biot_savart_2d:
      // Bounded divergence: the whole kernel is the repulsive-type part.
      return make_decomposition(zero, spec, audit_points);
    case KernelKind::attractive_log_2d:
    case KernelKind::smooth_fourier:
      return make_decomposition(spec, zero, audit_points);
    case KernelKind::mollified: {
      auto inner = decompose(spec.base(), audit_points);
      return make_decomposition(mollify(inner.k_plus, spec.epsilon()),
                                mollify(inner.k_minus, spec.epsilon()), audit_points);
    }
  }
  throw UnsupportedError("kernel '" + spec.name() + "' has no attraction/repulsion split");
}

// --- evaluator -----------------------------------------------------------------------

KernelEvaluator::KernelEvaluator(KernelSpec spec, int table_points) : spec_(std::move(spec)) {
  const KernelSpec* inner = innermost(spec_);
  const bool mollified = spec_.kind() == KernelKind::mollified;
  if (mollified && inner->kind() == KernelKind::kuramoto)
    amplitude_ = mollifier_transform(1, spec_.epsilon(), kTwoPi / spec_.length());
  if (!is_series_kind(inner->kind())) return;

  guard_ = spec_.singular() ? spec_.eval_guard() : 0.0;
  if (table_points < 8 || table_points % 2) throw DomainError("table_points must be even >= 8");
  table_n_ = table_points;
  GridSpec grid(TorusGeometry(2, spec_.length()), table_points);
  const int cutoff = std::min(inner->series_cutoff(), table_points / 2 - 1);
  std::vector<Complex> c0(grid.size()), c1(grid.size());
  std::vector<int> idx(2), mode(2);
  for (std::size_t f = 0; f < grid.size(); ++f) {
    grid.unflatten(f, idx);
    mode = {grid.mode(idx[0]), grid.mode(idx[1])};
    if (std::abs(mode[0]) > cutoff || std::abs(mode[1]) > cutoff) continue;
    auto c = fourier_coefficients(spec_, mode);
    c0[f] = c[0];
    c1[f] = c[1];
  }
  auto v0 = fft::inverse_real(grid, c0);
  auto v1 = fft::inverse_real(grid, c1);
  table_.reserve(2 * grid.size());
  table_.insert(table_.end(), v0.begin(), v0.end());
  table_.insert(table_.end(), v1.begin(), v1.end());
}

void KernelEvaluator::evaluate(const double* x, double* out) const {
  switch (spec_.kind()) {
    case KernelKind::zero:
      for (int a = 0; a < spec_.dim(); ++a) out[a] = 0.0;
      return;
    case KernelKind::kuramoto:
      out[0] = -std::sin(kTwoPi * x[0] / spec_.length());
      return;
    default: break;
  }
  if (table_.empty()) {
    if (spec_.kind() == KernelKind::mollified && innermost(spec_)->kind() == KernelKind::kuramoto) {
      out[0] = -amplitude_ * std::sin(kTwoPi * x[0] / spec_.length());
      return;
    }
    auto v = eval_kernel(spec_, std::span<const double>(x, spec_.dim()));
    for (int a = 0; a < spec_.dim(); ++a) out[a] = v[a];
    return;
  }
  if (guard_ > 0.0 && std::hypot(x[0], x[1]) < guard_)
    throw SingularityError("pair distance inside the singular core of " + spec_.name() +
                           "; mollify the kernel");
  const int n = table_n_;
  const double inv_h = n / spec_.length();
  const double u = wrap(x[0], spec_.length()) * inv_h;
  const double v = wrap(x[1], spec_.length()) * inv_h;
  int i0 = static_cast<int>(u), j0 = static_cast<int>(v);
  const double fu = u - i0, fv = v - j0;
  i0 %= n;
  j0 %= n;
  const int i1 = (i0 + 1) % n, j1 = (j0 + 1) % n;
  const std::size_t plane = static_cast<std::size_t>(n) * n;
  for (int a = 0; a < 2; ++a) {
    const double* t = table_.data() + a * plane;
    const double f00 = t[static_cast<std::size_t>(i0) * n + j0];
    const double f01 = t[static_cast<std::size_t>(i0) * n + j1];
    const double f10 = t[static_cast<std::size_t>(i1) * n + j0];
    const double f11 = t[static_cast<std::size_t>(i1) * n + j1];
    out[a] = (1 - fu) * ((1 - fv) * f00 + fv * f01) + fu * ((1 - fv) * f10 + fv * f11);
  }
}

}  // namespace chaoslab
