#include "chaoslab/liouville.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "chaoslab/error.hpp"

namespace chaoslab {

namespace {

void check_joint_grid(const GridSpec& grid, int N) {
  if (grid.geometry().dim() != 1)
    throw UnsupportedError("joint densities are implemented for d = 1 only");
  if (N < 1) throw DomainError("particle count must be >= 1");
  if (N > kMaxLiouvilleParticles)
    throw ResourceError("direct joint solves are limited to " +
                        std::to_string(kMaxLiouvilleParticles) + " grid dimensions (requested " +
                        std::to_string(N) + ")");
  if (grid.total_dims() != N) throw DomainError("joint grid must have one axis per particle");
}

// K at every node difference (i - j) h, i.e. kernel_at[(i - j) mod n].
std::vector<double> kernel_on_lattice(const KernelSpec& kernel, const GridSpec& grid) {
  if (kernel.dim() != 1) throw UnsupportedError("joint solver needs a d = 1 kernel");
  if (kernel.length() != grid.length()) throw DomainError("kernel and grid lengths differ");
  KernelEvaluator ev(kernel);
  const int n = grid.points_per_dim();
  std::vector<double> out(n);
  for (int s = 0; s < n; ++s) {
    const double x = min_image(s * grid.spacing(), 0.0, grid.length());
    ev.evaluate(&x, &out[s]);
  }
  return out;
}

double l2_of_spectrum(const std::vector<Complex>& c, double volume) {
  double s = 0.0;
  for (const auto& z : c) s += std::norm(z);
  return std::sqrt(s * volume);
}

}  // namespace

JointDensity::JointDensity(DensityField f, int n) : field(std::move(f)), N(n) {
  check_joint_grid(field.grid(), N);
}

LiouvilleSolver::LiouvilleSolver(KernelSpec kernel, GridSpec grid, double sigma, double dt)
    : kernel_(std::move(kernel)), ops_(grid), sigma_(sigma), dt_(dt) {
  const int N = grid.total_dims();
  check_joint_grid(grid, N);
  if (!(sigma >= 0.0)) throw DomainError("sigma must be non-negative");
  if (!(dt > 0.0)) throw DomainError("dt must be positive");
  const auto K = kernel_on_lattice(kernel_, grid);
  const int n = grid.points_per_dim();
  velocity_.assign(N, std::vector<double>(grid.size(), 0.0));
  std::vector<int> idx(N);
  for (std::size_t f = 0; f < grid.size(); ++f) {
    grid.unflatten(f, idx);
    for (int i = 0; i < N; ++i) {
      double v = 0.0;
      for (int j = 0; j < N; ++j)
        if (j != i) v += K[((idx[i] - idx[j]) % n + n) % n];
      velocity_[i][f] = v / N;
      max_speed_ = std::max(max_speed_, std::abs(velocity_[i][f]));
    }
  }
  factor_ = ops_.heat_factors(sigma_, dt_);
}

std::vector<Complex> LiouvilleSolver::transport(const std::vector<Complex>& fhat) const {
  const GridSpec& grid = ops_.grid();
  std::vector<Complex> fd(fhat);
  ops_.dealias(fd);
  const auto f = fft::inverse_real(grid, fd);
  std::vector<Complex> out(grid.size(), 0.0);
  std::vector<double> prod(grid.size());
  for (int i = 0; i < grid.total_dims(); ++i) {
    for (std::size_t p = 0; p < grid.size(); ++p) prod[p] = velocity_[i][p] * f[p];
    auto ph = fft::forward(grid, std::span<const double>(prod));
    ops_.differentiate(ph, i);
    for (std::size_t p = 0; p < grid.size(); ++p) out[p] -= ph[p];
  }
  ops_.dealias(out);
  return out;
}

JointDensity LiouvilleSolver::step(const JointDensity& joint) const {
  if (!(joint.field.grid() == ops_.grid())) throw DomainError("joint grid does not match solver");
  const double spacing = ops_.grid().spacing();
  if (max_speed_ * dt_ > 0.5 * spacing) {
    const double suggested = 0.5 * spacing / max_speed_;
    std::ostringstream os;
    os << "transport CFL violated: max|v| dt = " << max_speed_ * dt_ << "; use dt <= " << suggested;
    throw StepSizeError(os.str(), suggested);
  }
  const auto fhat = spectrum_of(joint.field);
  const std::size_t n = fhat.size();
  const auto n0 = transport(fhat);
  std::vector<Complex> a(n);
  for (std::size_t i = 0; i < n; ++i) a[i] = factor_[i] * (fhat[i] + dt_ * n0[i]);
  const auto n1 = transport(a);
  std::vector<Complex> next(n);
  for (std::size_t i = 0; i < n; ++i) {
    next[i] = factor_[i] * fhat[i] + 0.5 * dt_ * (factor_[i] * n0[i] + n1[i]);
    if (!std::isfinite(next[i].real()) || !std::isfinite(next[i].imag()))
      throw NumericalBlowup("joint density became non-finite at t = " +
                            std::to_string(joint.time + dt_));
  }
  JointDensity out(DensityField::from_spectral(ops_.grid(), std::move(next)), joint.N);
  out.time = joint.time + dt_;
  return out;
}

JointDensity liouville_step(const JointDensity& joint, const KernelSpec& kernel, double sigma,
                            double dt) {
  return LiouvilleSolver(kernel, joint.field.grid(), sigma, dt).step(joint);
}

std::vector<JointDensity> liouville_solve(const JointDensity& initial, const KernelSpec& kernel,
                                          double sigma, double dt, const std::vector<double>& t_grid) {
  std::vector<JointDensity> out;
  if (t_grid.empty()) return out;
  LiouvilleSolver solver(kernel, initial.field.grid(), sigma, dt);
  JointDensity state(transform(initial.field, Direction::forward), initial.N);
  long step = 0;
  for (double t : t_grid) {
    const long target = std::lround(t / dt);
    if (target < step) throw DomainError("output times must be non-decreasing");
    while (step < target) {
      state = solver.step(state);
      ++step;
    }
    state.time = step * dt;
    out.push_back(state);
  }
  return out;
}

DensityField extract_marginal(const DensityField& joint, int k) {
  const GridSpec& g = joint.grid();
  const int n_axes = g.total_dims();
  if (k < 1 || k > n_axes)
    throw DomainError("marginal order " + std::to_string(k) + " outside [1, " +
                      std::to_string(n_axes) + "]");
  if (k == n_axes) return DensityField(g, std::vector<double>(joint.values().begin(), joint.values().end()));
  const GridSpec mg = g.with_dims(k);
  const std::size_t inner = g.size() / mg.size();
  const double w = std::pow(g.spacing(), n_axes - k);
  std::vector<double> out(mg.size(), 0.0);
  auto v = joint.values();
  for (std::size_t o = 0; o < mg.size(); ++o) {
    double s = 0.0;
    for (std::size_t r = 0; r < inner; ++r) s += v[o * inner + r];
    out[o] = s * w;
  }
  return DensityField(mg, std::move(out));
}

DensityField extract_marginal(const JointDensity& joint, int k) {
  return extract_marginal(joint.field, k);
}

JointDensity gibbs_stationary_kuramoto(int N, double sigma, const GridSpec& grid) {
  check_joint_grid(grid, N);
  if (!(sigma > 0.0)) throw DomainError("sigma must be positive");
  const double L = grid.length();
  const double kw = 2.0 * std::numbers::pi / L;
  const double beta = 1.0 / (sigma * N * kw);
  std::vector<double> vals(grid.size());
  std::vector<int> idx(N);
  double energy_max = 0.5 * N * (N - 1);  // shift keeps exp() bounded by 1
  for (std::size_t f = 0; f < grid.size(); ++f) {
    grid.unflatten(f, idx);
    double e = 0.0;
    for (int i = 0; i < N; ++i)
      for (int j = i + 1; j < N; ++j)
        e += std::cos(kw * (grid.coordinate(idx[i]) - grid.coordinate(idx[j])));
    vals[f] = std::exp(beta * (e - energy_max));
  }
  double mass = 0.0;
  for (double v : vals) mass += v;
  mass *= grid.cell_volume();
  for (double& v : vals) v /= mass;
  return JointDensity(DensityField(grid, std::move(vals)), N);
}

double bbgky_residual(const DensityField& f_k, const DensityField& f_k1, const KernelSpec& kernel,
                      double sigma, int N, const DensityField& dfdt, bool include_coupling) {
  const GridSpec& g = f_k.grid();
  const int k = g.total_dims();
  if (!(dfdt.grid() == g)) throw DomainError("bbgky_residual: dfdt grid differs from f_k grid");
  if (!(f_k1.grid() == g.with_dims(k + 1)))
    throw DomainError("bbgky_residual: f_{k+1} must live on the (k+1)-fold grid of f_k");
  if (N < k + 1) throw DomainError("bbgky_residual: N must exceed k");
  const auto K = kernel_on_lattice(kernel, g);
  const int n = g.points_per_dim();
  const double h = g.spacing();
  SpectralOperators ops(g);

  auto fk = f_k.values();
  auto fk1 = f_k1.values();
  std::vector<Complex> total(g.size(), 0.0);
  std::vector<double> flux(g.size());
  std::vector<int> idx(k);
  for (int i = 0; i < k; ++i) {
    for (std::size_t f = 0; f < g.size(); ++f) {
      g.unflatten(f, idx);
      double w = 0.0;
      for (int j = 0; j < k; ++j)
        if (j != i) w += K[((idx[i] - idx[j]) % n + n) % n];
      double value = w / N * fk[f];
      if (include_coupling) {
        double c = 0.0;
        for (int y = 0; y < n; ++y) c += K[((idx[i] - y) % n + n) % n] * fk1[f * n + y];
        value += static_cast<double>(N - k) / N * c * h;
      }
      flux[f] = value;
    }
    auto ph = fft::forward(g, std::span<const double>(flux));
    ops.differentiate(ph, i);
    for (std::size_t f = 0; f < g.size(); ++f) total[f] += ph[f];
  }
  const auto fkh = spectrum_of(f_k);
  const auto dth = spectrum_of(dfdt);
  for (std::size_t f = 0; f < g.size(); ++f)
    total[f] += dth[f] + sigma * ops.k_squared(f) * fkh[f];
  return l2_of_spectrum(total, g.volume());
}

}  // namespace chaoslab
