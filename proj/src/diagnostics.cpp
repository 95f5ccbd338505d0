#include "chaoslab/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "chaoslab/error.hpp"

namespace chaoslab {

int default_bins(int kd) {
  if (kd < 1 || kd > kMaxHistogramDims)
    throw DomainError("histogram dimension k*d = " + std::to_string(kd) + " exceeds the cap of " +
                      std::to_string(kMaxHistogramDims));
  if (kd <= 2) return 64;
  if (kd == 3) return 32;
  return 16;
}

MarginalEstimate estimate_marginal(const ParticleEnsemble& e, int k, std::optional<int> bins,
                                   std::optional<int> block) {
  const int N = e.particles(), d = e.dim();
  if (k < 1 || k > N) throw DomainError("marginal order must lie in [1, N]");
  const int kd = k * d;
  const int nb = bins.value_or(default_bins(kd));
  if (kd > kMaxHistogramDims)
    throw DomainError("histogram dimension k*d = " + std::to_string(kd) + " exceeds the cap");
  const int blocks = N / k;
  if (block && (*block < 0 || *block >= blocks)) throw DomainError("block index out of range");
  GridSpec grid(TorusGeometry(d, e.length()), nb, kd, true);

  std::vector<double> counts(grid.size(), 0.0);
  const double inv_h = nb / e.length();
  const int b_lo = block.value_or(0), b_hi = block ? *block + 1 : blocks;
  std::vector<int> idx(kd);
  for (std::size_t r = 0; r < e.replicas(); ++r) {
    for (int b = b_lo; b < b_hi; ++b) {
      for (int p = 0; p < k; ++p)
        for (int a = 0; a < d; ++a) {
          const int c = static_cast<int>(e.at(r, b * k + p, a) * inv_h);
          idx[p * d + a] = std::clamp(c, 0, nb - 1);
        }
      counts[grid.flatten(idx)] += 1.0;
    }
  }
  const double m_eff = static_cast<double>(e.replicas()) * (b_hi - b_lo);
  if (m_eff == 0) throw DomainError("estimate_marginal needs at least one sample");

  const double cv = grid.cell_volume();
  double s2 = 0.0, s3 = 0.0;
  std::vector<double> dens(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double p = counts[i] / m_eff;
    s2 += p * p;
    s3 += p * p * p;
    dens[i] = p / cv;
  }
  MarginalEstimate est{k,
                       DensityField(grid, std::move(dens)),
                       m_eff,
                       grid,
                       std::sqrt(2.0 / std::numbers::pi) * std::sqrt(grid.size() / m_eff),
                       0.0,
                       0.0,
                       0.0};
  est.l2_raw = std::sqrt(s2 / cv);
  const double inflation = (1.0 - s2) / (m_eff * cv);
  est.l2_corrected = std::sqrt(std::max(0.0, s2 / cv - inflation));
  const double var_s2 = std::max(0.0, 4.0 * (s3 - s2 * s2) / m_eff + 2.0 * s2 / (m_eff * m_eff));
  est.l2_stderr = est.l2_raw > 0.0 ? std::sqrt(var_s2) / cv / (2.0 * est.l2_raw) : 0.0;
  return est;
}

DensityField bin_average(const DensityField& field, const GridSpec& bins) {
  const GridSpec& g = field.grid();
  if (g.total_dims() != bins.total_dims() || g.length() != bins.length())
    throw DomainError("bin_average: field and bin grids describe different tori");
  if (g.cell_centered()) throw DomainError("bin_average expects a node-grid field");
  if (!bins.cell_centered()) throw DomainError("bin_average expects a cell-centred bin grid");
  const int n = g.points_per_dim(), B = bins.points_per_dim();
  if (n < B || n % B) throw DomainError("bin count must divide the field resolution");
  const int D = g.total_dims();
  const double H = bins.spacing();
  auto c = spectrum_of(field);
  std::vector<int> idx(D);
  for (std::size_t f = 0; f < g.size(); ++f) {
    g.unflatten(f, idx);
    Complex factor = 1.0;
    for (int a = 0; a < D; ++a) {
      if (idx[a] == n / 2) {
        factor = 0.0;
        break;
      }
      const double k = g.wavenumber(idx[a]);
      const double x = 0.5 * k * H;
      const double sinc = x == 0.0 ? 1.0 : std::sin(x) / x;
      factor *= sinc * Complex(std::cos(x), std::sin(x));  // shift by half a cell
    }
    c[f] *= factor;
  }
  const auto shifted = fft::inverse_real(g, c);
  const int stride = n / B;
  std::vector<double> out(bins.size());
  std::vector<int> bidx(D), fidx(D);
  for (std::size_t b = 0; b < bins.size(); ++b) {
    bins.unflatten(b, bidx);
    for (int a = 0; a < D; ++a) fidx[a] = bidx[a] * stride;
    out[b] = shifted[g.flatten(fidx)];
  }
  return DensityField(bins, std::move(out));
}

double l1_sampling_floor(const DensityField& reference, double sample_count) {
  const double cv = reference.grid().cell_volume();
  double s = 0.0;
  for (double v : reference.values()) {
    const double p = std::clamp(v * cv, 0.0, 1.0);
    s += std::sqrt(2.0 * p * (1.0 - p) / (std::numbers::pi * sample_count));
  }
  return s;
}

// --- bound ledger ---------------------------------------------------------------------------

double bound_shape(BoundMode mode, double parameter, int k) {
  if (mode == BoundMode::super_exponential) return std::pow(static_cast<double>(k), parameter * k);
  return std::pow(parameter, k);
}

double default_alpha(double beta_data, int d) { return std::max(beta_data, 0.25 * d) + 0.05; }

BoundLedger l2_bound_check(BoundMode mode, double parameter,
                           const std::vector<L2Observation>& obs, double fit_time, double slack) {
  bool has1 = false, has2 = false;
  for (const auto& o : obs) {
    has1 |= o.k == 1;
    has2 |= o.k == 2;
  }
  if (!has1 || !has2) throw DomainError("l2_bound_check needs observations for k = 1 and k = 2");
  if (!(parameter > 0.0)) throw DomainError("bound parameter must be positive");

  BoundLedger ledger{mode, parameter, 0.0, fit_time, slack, {}, {}};
  bool fitted = false;
  for (const auto& o : obs) {
    if (std::abs(o.t - fit_time) > 1e-9 * std::max(1.0, std::abs(fit_time))) continue;
    ledger.C = std::max(ledger.C, o.value / bound_shape(mode, parameter, o.k));
    fitted = true;
  }
  if (!fitted) throw DomainError("no observations at the fit time");
  for (const auto& o : obs) {
    const double bound = ledger.C * bound_shape(mode, parameter, o.k);
    const bool violated = o.value > bound + slack * o.stderr;
    BoundPoint p{o.t, o.k, o.value, o.stderr, bound, violated};
    ledger.series.push_back(p);
    if (violated) ledger.violations.push_back(p);
  }
  return ledger;
}

// --- entropy and distances -----------------------------------------------------------------

double relative_entropy(const DensityField& f, const DensityField& g, int k) {
  if (!(f.grid() == g.grid())) throw DomainError("relative_entropy: grid mismatch");
  if (k < 1) throw DomainError("normalizer k must be >= 1");
  auto fv = f.values();
  auto gv = g.values();
  double s = 0.0;
  for (std::size_t i = 0; i < fv.size(); ++i) {
    if (!(gv[i] > 0.0))
      throw DomainError("relative_entropy: reference vanishes at node " + std::to_string(i));
    const double a = std::max(fv[i], 0.0);
    if (a > 0.0) s += a * std::log(a / gv[i]);
  }
  return s * f.grid().cell_volume() / k;
}

CkpResult ckp_check(const DensityField& f, const DensityField& g, int k) {
  const double l1 = lp_distance(f, g, 1.0);
  const double h = relative_entropy(f, g, k);
  CkpResult r{l1 * l1, 2.0 * k * h, false};
  r.holds = r.lhs <= r.rhs * (1.0 + 1e-12) + 1e-15;
  return r;
}

double chaos_distance(const DensityField& f_kN, const DensityField& fbar, int k, double p) {
  if (!(p >= 1.0 && p <= 2.0)) throw DomainError("chaos_distance needs 1 <= p <= 2");
  const int kd = f_kN.grid().total_dims();
  if (kd != k * fbar.grid().total_dims())
    throw DomainError("chaos_distance: f_kN must live on the k-fold grid of fbar");
  if (kd > kMaxHistogramDims) throw DomainError("chaos_distance: k*d exceeds the cap");
  return lp_distance(f_kN, tensor_power(fbar, k), p);
}

InterpolationCheck interpolation_check(const DensityField& a, const DensityField& b, double p) {
  if (!(p >= 1.0 && p <= 2.0)) throw DomainError("interpolation exponent must lie in [1, 2]");
  const double lp = lp_distance(a, b, p);
  const double l1 = lp_distance(a, b, 1.0);
  const double l2 = lp_distance(a, b, 2.0);
  const double bound = std::pow(l1, (2.0 - p) / p) * std::pow(l2, 2.0 * (p - 1.0) / p);
  return {lp, bound, lp <= bound * (1.0 + 1e-12) + 1e-300};
}

double sigma0(double R, const KernelSpec& kernel, const TorusGeometry& geometry, int cutoff) {
  if (!(R >= 0.0)) throw DomainError("R must be non-negative");
  return R * h_minus1_norm(kernel, geometry, cutoff);
}

// --- series ----------------------------------------------------------------------------------

void DiagnosticSeries::add(double t, const std::string& metric, double value, double error) {
  auto it = last_.find(metric);
  if (it != last_.end() && !(t > it->second))
    throw DomainError("time " + std::to_string(t) + " is not after the last '" + metric + "' record");
  last_[metric] = t;
  records_.push_back({t, metric, value, error});
}

std::vector<DiagnosticRecord> DiagnosticSeries::metric(const std::string& name) const {
  std::vector<DiagnosticRecord> out;
  for (const auto& r : records_)
    if (r.metric == name) out.push_back(r);
  return out;
}

LinearFit linear_fit(const std::vector<double>& x, const std::vector<double>& y) {
  const std::size_t n = x.size();
  if (n < 2 || y.size() != n) throw DomainError("linear_fit needs >= 2 paired points");
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx == 0.0) throw DomainError("linear_fit: abscissae are all equal");
  const double b = sxy / sxx;
  const double r2 = syy == 0.0 ? 1.0 : (sxy * sxy) / (sxx * syy);
  return {b, my - b * mx, r2};
}

RateFit decay_rate_fit(const DiagnosticSeries& series, const std::string& metric, double t_lo,
                       double t_hi) {
  RateFit fit{0.0, 0.0, 0.0, 0, {}};
  std::vector<double> t, y;
  int trimmed = 0;
  for (const auto& r : series.metric(metric)) {
    if (r.t < t_lo || r.t > t_hi) continue;
    if (!(r.value > 0.0)) {
      ++trimmed;
      continue;
    }
    t.push_back(r.t);
    y.push_back(std::log(r.value));
  }
  if (trimmed > 0)
    fit.warnings.push_back(std::to_string(trimmed) + " non-positive value(s) trimmed from '" +
                           metric + "'");
  if (t.size() < 5)
    throw DomainError("decay_rate_fit needs >= 5 positive points in the window (have " +
                      std::to_string(t.size()) + ")");
  const auto lf = linear_fit(t, y);
  fit.beta_hat = -lf.slope;
  fit.intercept = lf.intercept;
  fit.r2 = lf.r2;
  fit.points = static_cast<int>(t.size());
  return fit;
}

double relaxation_rate(double sigma, double length) {
  return 4.0 * std::numbers::pi * std::numbers::pi * sigma / (length * length);
}

}  // namespace chaoslab
