#pragma once

// Histogram marginals and the inequality audits built on them.

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "chaoslab/kernels.hpp"
#include "chaoslab/particles.hpp"
#include "chaoslab/torus.hpp"

namespace chaoslab {

/// Histogram dimensionality cap (k * d).
inline constexpr int kMaxHistogramDims = 4;

/// Bins per axis: 64 for k*d <= 2, 32 for 3, 16 for 4.
int default_bins(int kd);

struct MarginalEstimate {
  int k = 0;
  DensityField field;     // histogram density on a cell-centred grid
  double sample_count;    // M_eff = M * floor(N / k) (or M for a single block)
  GridSpec bin_spec;
  double stderr_l1;       // sqrt(2/pi) sqrt(bins / M_eff)
  double l2_raw;          // ||histogram||_2
  double l2_corrected;    // with the i.i.d. inflation removed
  double l2_stderr;       // delta-method standard error of l2_raw
};

/// Histogram of the first-k-particle block of every replica, pooled over
/// floor(N/k) disjoint blocks (or only block `block` when given).
MarginalEstimate estimate_marginal(const ParticleEnsemble& ensemble, int k,
                                   std::optional<int> bins = std::nullopt,
                                   std::optional<int> block = std::nullopt);

/// Cell averages of a node-grid field over the cells of `bins` (cell-centred,
/// same length and axis count). Exact for the trigonometric interpolant.
DensityField bin_average(const DensityField& field, const GridSpec& bins);

/// Expected L^1 histogram error sum_b sqrt(2 p_b (1 - p_b) / (pi M)) for the
/// bin probabilities of `reference` (a histogram-grid density).
double l1_sampling_floor(const DensityField& reference, double sample_count);

// --- bound ledger -------------------------------------------------------------------

enum class BoundMode { super_exponential, exponential };

struct L2Observation {
  double t;
  int k;
  double value;
  double stderr;
};

struct BoundPoint {
  double t;
  int k;
  double value;
  double stderr;
  double bound;
  bool violated;
};

struct BoundLedger {
  BoundMode mode;
  double parameter;  // alpha (super-exponential) or R (exponential)
  double C;
  double fit_time;
  double slack;
  std::vector<BoundPoint> series;
  std::vector<BoundPoint> violations;
};

/// k^{alpha k} or R^k.
double bound_shape(BoundMode mode, double parameter, int k);

/// Fits the smallest C with value <= C shape(k) over observations at
/// `fit_time`, then flags every point with value > C shape(k) + slack * stderr.
BoundLedger l2_bound_check(BoundMode mode, double parameter,
                           const std::vector<L2Observation>& observations, double fit_time = 0.0,
                           double slack = 3.0);

/// max(beta, d/4) + 0.05.
double default_alpha(double beta_data, int d);

// --- entropy and distances -------------------------------------------------------------

/// (1/k) int f log(f/g) with 0 log 0 = 0; f is clipped at zero.
double relative_entropy(const DensityField& f, const DensityField& g, int k);

struct CkpResult {
  double lhs;  // ||f - g||_1^2
  double rhs;  // 2 k H_k(f|g)
  bool holds;
};
CkpResult ckp_check(const DensityField& f, const DensityField& g, int k);

/// ||f_kN - fbar^{(x)k}||_p, 1 <= p <= 2.
double chaos_distance(const DensityField& f_kN, const DensityField& fbar, int k, double p);

struct InterpolationCheck {
  double lp;
  double bound;  // ||h||_1^{(2-p)/p} ||h||_2^{2(p-1)/p}
  bool holds;
};
InterpolationCheck interpolation_check(const DensityField& a, const DensityField& b, double p);

/// R ||K||_{H^-1}.
double sigma0(double R, const KernelSpec& kernel, const TorusGeometry& geometry, int cutoff);

// --- time series -------------------------------------------------------------------------

struct DiagnosticRecord {
  double t;
  std::string metric;
  double value;
  double error;
};

class DiagnosticSeries {
 public:
  /// Throws DomainError unless t is strictly after the metric's last time.
  void add(double t, const std::string& metric, double value, double error = 0.0);
  const std::vector<DiagnosticRecord>& records() const { return records_; }
  std::vector<DiagnosticRecord> metric(const std::string& name) const;

 private:
  std::vector<DiagnosticRecord> records_;
  std::map<std::string, double> last_;
};

struct RateFit {
  double beta_hat;  // decay rate: log value ~ a - beta_hat t
  double intercept;
  double r2;
  int points;
  std::vector<std::string> warnings;
};

/// Least squares of log(value) on t over window [t_lo, t_hi]; non-positive
/// values are trimmed with a warning. Needs >= 5 usable points.
RateFit decay_rate_fit(const DiagnosticSeries& series, const std::string& metric, double t_lo,
                       double t_hi);

/// Plain least squares y = a + b x with r^2.
struct LinearFit {
  double slope;
  double intercept;
  double r2;
};
LinearFit linear_fit(const std::vector<double>& x, const std::vector<double>& y);

/// 4 pi^2 sigma / length^2.
double relaxation_rate(double sigma, double length);

}  // namespace chaoslab
