#include "chaoslab/meanfield.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "chaoslab/error.hpp"

namespace chaoslab {

VlasovFokkerPlanckSolver::VlasovFokkerPlanckSolver(KernelSpec kernel, GridSpec grid, double sigma,
                                                   double dt)
    : kernel_(std::move(kernel)), ops_(grid), sigma_(sigma), dt_(dt) {
  const int d = grid.total_dims();
  if (d != kernel_.dim())
    throw DomainError("kernel dimension " + std::to_string(kernel_.dim()) +
                      " does not match state dimension " + std::to_string(d));
  if (d > 2) throw UnsupportedError("mean-field solver supports d = 1 and d = 2 only");
  if (d == 2 && !kernel_.divergence_free())
    throw UnsupportedError("the d = 2 mean-field solver requires a divergence-free kernel");
  if (grid.length() != kernel_.length()) throw DomainError("kernel and grid torus lengths differ");
  if (!(sigma >= 0.0)) throw DomainError("sigma must be non-negative");
  if (!(dt > 0.0)) throw DomainError("dt must be positive");

  const double vol = grid.volume();
  symbol_.assign(d, std::vector<Complex>(grid.size()));
  std::vector<int> idx(d), mode(d);
  for (std::size_t f = 0; f < grid.size(); ++f) {
    grid.unflatten(f, idx);
    for (int a = 0; a < d; ++a) mode[a] = grid.mode(idx[a]);
    auto c = fourier_coefficients(kernel_, mode);
    for (int a = 0; a < d; ++a) symbol_[a][f] = vol * c[a];
  }
  factor_ = ops_.heat_factors(sigma_, dt_);
}

std::vector<std::vector<Complex>> VlasovFokkerPlanckSolver::velocity_field(
    const std::vector<Complex>& fhat) const {
  const GridSpec& grid = ops_.grid();
  std::vector<std::vector<Complex>> u;
  std::vector<Complex> tmp(grid.size());
  for (const auto& sym : symbol_) {
    for (std::size_t f = 0; f < grid.size(); ++f) tmp[f] = ops_.kept(f) ? sym[f] * fhat[f] : 0.0;
    u.push_back(fft::inverse(grid, tmp));
  }
  return u;
}

double VlasovFokkerPlanckSolver::max_velocity(const std::vector<Complex>& fhat) const {
  auto u = velocity_field(fhat);
  double m = 0.0;
  for (std::size_t i = 0; i < ops_.grid().size(); ++i) {
    double s = 0.0;
    for (const auto& ua : u) s += ua[i].real() * ua[i].real();
    m = std::max(m, std::sqrt(s));
  }
  return m;
}

std::vector<Complex> VlasovFokkerPlanckSolver::transport(const std::vector<Complex>& fhat) const {
  const GridSpec& grid = ops_.grid();
  std::vector<Complex> fd(fhat);
  ops_.dealias(fd);
  auto f = fft::inverse(grid, fd);
  auto u = velocity_field(fhat);
  std::vector<Complex> out(grid.size(), 0.0);
  std::vector<Complex> prod(grid.size());
  for (int a = 0; a < grid.total_dims(); ++a) {
    for (std::size_t i = 0; i < grid.size(); ++i) prod[i] = u[a][i].real() * f[i].real();
    auto ph = fft::forward(grid, std::span<const Complex>(prod));
    ops_.differentiate(ph, a);
    for (std::size_t i = 0; i < grid.size(); ++i) out[i] -= ph[i];
  }
  ops_.dealias(out);
  return out;
}

MeanFieldState VlasovFokkerPlanckSolver::step(const MeanFieldState& state) const {
  if (!(state.field.grid() == ops_.grid())) throw DomainError("state grid does not match solver");
  const auto fhat = spectrum_of(state.field);
  const double vmax = max_velocity(fhat);
  const double spacing = ops_.grid().spacing();
  if (vmax * dt_ > 0.5 * spacing) {
    const double suggested = 0.5 * spacing / vmax;
    std::ostringstream os;
    os << "transport CFL violated: max|K*f| dt = " << vmax * dt_ << " > 0.5 spacing = "
       << 0.5 * spacing << "; use dt <= " << suggested;
    throw StepSizeError(os.str(), suggested);
  }
  const std::size_t n = fhat.size();
  const auto n0 = transport(fhat);
  std::vector<Complex> a(n);
  for (std::size_t i = 0; i < n; ++i) a[i] = factor_[i] * (fhat[i] + dt_ * n0[i]);
  const auto n1 = transport(a);
  std::vector<Complex> next(n);
  for (std::size_t i = 0; i < n; ++i)
    next[i] = factor_[i] * fhat[i] + 0.5 * dt_ * (factor_[i] * n0[i] + n1[i]);
  for (std::size_t i = 0; i < n; ++i)
    if (!std::isfinite(next[i].real()) || !std::isfinite(next[i].imag()))
      throw NumericalBlowup("mean-field state became non-finite at t = " +
                            std::to_string(state.time + dt_));
  return MeanFieldState{DensityField::from_spectral(ops_.grid(), std::move(next)),
                        state.time + dt_};
}

MeanFieldState vfp_step(const MeanFieldState& state, const KernelSpec& kernel, double sigma,
                        double dt) {
  return VlasovFokkerPlanckSolver(kernel, state.field.grid(), sigma, dt).step(state);
}

std::vector<SolveRecord> solve(const DensityField& initial, const KernelSpec& kernel, double sigma,
                               const std::vector<double>& t_grid, double dt) {
  std::vector<SolveRecord> out;
  if (t_grid.empty()) return out;
  if (std::abs(initial.mass() - 1.0) > 1e-6)
    throw DomainError("initial datum is not a probability density (mass " +
                      std::to_string(initial.mass()) + ")");
  VlasovFokkerPlanckSolver solver(kernel, initial.grid(), sigma, dt);
  MeanFieldState state{transform(initial, Direction::forward), 0.0};
  long step = 0;
  for (double t : t_grid) {
    if (t < 0.0) throw DomainError("output times must be non-negative");
    const long target = std::lround(t / dt);
    if (target < step) throw DomainError("output times must be non-decreasing");
    while (step < target) {
      state = solver.step(state);
      ++step;
    }
    state.time = step * dt;
    out.push_back({state, lp_norm(state.field, 2.0)});
  }
  return out;
}

// --- Bessel ratio and stationary states --------------------------------------------

double bessel_i0(double x) {
  const double q = 0.25 * x * x;
  double term = 1.0, sum = 1.0;
  for (int k = 1; k < 500; ++k) {
    term *= q / (static_cast<double>(k) * k);
    sum += term;
    if (term < 1e-17 * sum) break;
  }
  return sum;
}

double bessel_i1_over_i0(double x) {
  if (x < 0.0) return -bessel_i1_over_i0(-x);
  if (x == 0.0) return 0.0;
  if (x <= 10.0) {
    const double q = 0.25 * x * x;
    double t0 = 1.0, s0 = 1.0;  // I0 series
    double t1 = 1.0, s1 = 1.0;  // I1 / (x/2) series
    for (int k = 1; k < 200; ++k) {
      t0 *= q / (static_cast<double>(k) * k);
      t1 *= q / (static_cast<double>(k) * (k + 1));
      s0 += t0;
      s1 += t1;
      if (t0 < 1e-18 * s0 && t1 < 1e-18 * s1) break;
    }
    return 0.5 * x * s1 / s0;
  }
  // I1/I0 = 1/F with F = b1 + 1/(b2 + 1/(b3 + ...)), b_j = 2j/x (modified Lentz).
  const double tiny = 1e-300;
  double f = 2.0 / x, c = f, d = 0.0;
  for (int j = 2; j < 100000; ++j) {
    const double b = 2.0 * j / x;
    d = b + d;
    if (std::abs(d) < tiny) d = tiny;
    c = b + 1.0 / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double delta = c * d;
    f *= delta;
    if (std::abs(delta - 1.0) <= 2e-16) break;
  }
  return 1.0 / f;
}

double kuramoto_order_parameter(double sigma) {
  if (!(sigma > 0.0)) throw DomainError("sigma must be positive");
  auto g = [sigma](double r) { return bessel_i1_over_i0(r / sigma) - r; };
  // g(1) < 0 always; scan downward for the first positive value.
  double hi = 1.0, lo = -1.0;
  for (int j = 1; j < 1000 && lo < 0.0; ++j) {
    const double r = 1.0 - j * 1e-3;
    if (g(r) > 0.0) lo = r;
    else hi = r;
  }
  for (int i = 1; i <= 60 && lo < 0.0; ++i) {
    const double r = 1e-3 * std::pow(0.5, i);
    if (g(r) > 0.0) lo = r;
    else hi = r;
  }
  if (lo < 0.0) return 0.0;
  for (int it = 0; it < 200 && hi - lo > 1e-16; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (g(mid) > 0.0) lo = mid;
    else hi = mid;
  }
  return 0.5 * (lo + hi);
}

StationaryKuramoto kuramoto_stationary(double sigma, const GridSpec& grid, double phase) {
  if (grid.total_dims() != 1) throw DomainError("Kuramoto stationary states live on T^1");
  const double r = kuramoto_order_parameter(sigma);
  const double kappa = r / sigma;
  const double length = grid.length();
  DensityField density(grid);
  auto v = density.mutable_values();
  if (r == 0.0) {
    std::fill(v.begin(), v.end(), 1.0 / length);
  } else {
    double sum = 0.0;
    for (int i = 0; i < grid.points_per_dim(); ++i) {
      v[i] = std::exp(kappa * (std::cos(2.0 * std::numbers::pi * (grid.coordinate(i) - phase) /
                                        length) - 1.0));
      sum += v[i];
    }
    const double norm = 1.0 / (sum * grid.cell_volume());
    for (double& x : v) x *= norm;
  }
  return StationaryKuramoto{sigma, r, phase, std::move(density)};
}

double stationary_residual(const DensityField& field, const KernelSpec& kernel, double sigma) {
  VlasovFokkerPlanckSolver solver(kernel, field.grid(), sigma, 1.0);
  const auto fhat = spectrum_of(field);
  auto res = solver.transport(fhat);
  SpectralOperators ops(field.grid());
  double s = 0.0;
  for (std::size_t i = 0; i < res.size(); ++i) {
    const Complex r = -res[i] + sigma * ops.k_squared(i) * fhat[i];
    s += std::norm(r);
  }
  return std::sqrt(s * field.grid().volume());
}

}  // namespace chaoslab
