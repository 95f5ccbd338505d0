#include "chaoslab/torus.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <map>
#include <mutex>
#include <numbers>
#include <string>
#include <tuple>

#include "chaoslab/error.hpp"

namespace chaoslab {

TorusGeometry::TorusGeometry(int dim, double length) : dim_(dim), length_(length) {
  if (dim < 1) throw DomainError("torus dimension must be >= 1, got " + std::to_string(dim));
  if (!(length > 0.0) || !std::isfinite(length))
    throw DomainError("torus length must be positive and finite");
}

double TorusGeometry::volume() const { return std::pow(length_, dim_); }

GridSpec::GridSpec(TorusGeometry geometry, int points_per_dim, int total_dims, bool cell_centered,
                   std::size_t max_nodes)
    : geometry_(geometry), n_(points_per_dim), dims_(total_dims), cell_centered_(cell_centered) {
  if (n_ < 4 || n_ % 2 != 0)
    throw DomainError("points_per_dim must be even and >= 4, got " + std::to_string(n_));
  if (dims_ < 1) throw DomainError("grid needs at least one axis");
  if (dims_ > kMaxGridDims)
    throw ResourceError("grid with " + std::to_string(dims_) + " dimensions exceeds the cap of " +
                        std::to_string(kMaxGridDims));
  long double nodes = std::pow(static_cast<long double>(n_), dims_);
  if (nodes > static_cast<long double>(max_nodes))
    throw ResourceError("grid with " + std::to_string(dims_) + " dimensions at " +
                        std::to_string(n_) + " points per dimension exceeds the node budget of " +
                        std::to_string(max_nodes));
  size_ = static_cast<std::size_t>(nodes);
}

double GridSpec::cell_volume() const { return std::pow(spacing(), dims_); }
double GridSpec::volume() const { return std::pow(geometry_.length(), dims_); }

double GridSpec::wavenumber(int i) const {
  return 2.0 * std::numbers::pi * mode(i) / geometry_.length();
}

std::size_t GridSpec::stride(int axis) const {
  std::size_t s = 1;
  for (int a = dims_ - 1; a > axis; --a) s *= static_cast<std::size_t>(n_);
  return s;
}

int GridSpec::axis_index(std::size_t flat, int axis) const {
  return static_cast<int>((flat / stride(axis)) % static_cast<std::size_t>(n_));
}

void GridSpec::unflatten(std::size_t flat, std::span<int> out) const {
  for (int a = dims_ - 1; a >= 0; --a) {
    out[a] = static_cast<int>(flat % static_cast<std::size_t>(n_));
    flat /= static_cast<std::size_t>(n_);
  }
}

std::size_t GridSpec::flatten(std::span<const int> idx) const {
  std::size_t flat = 0;
  for (int a = 0; a < dims_; ++a) {
    int i = idx[a] % n_;
    if (i < 0) i += n_;
    flat = flat * static_cast<std::size_t>(n_) + static_cast<std::size_t>(i);
  }
  return flat;
}

GridSpec GridSpec::with_dims(int total_dims) const {
  return GridSpec(geometry_, n_, total_dims, cell_centered_);
}

bool GridSpec::operator==(const GridSpec& o) const {
  return geometry_.length() == o.geometry_.length() && n_ == o.n_ && dims_ == o.dims_ &&
         cell_centered_ == o.cell_centered_;
}

// --- DensityField -----------------------------------------------------------

DensityField::DensityField(GridSpec grid) : grid_(grid), values_(grid.size(), 0.0) {}

DensityField::DensityField(GridSpec grid, std::vector<double> values)
    : grid_(grid), values_(std::move(values)) {
  if (values_.size() != grid_.size())
    throw DomainError("value array of size " + std::to_string(values_.size()) +
                      " does not match grid size " + std::to_string(grid_.size()));
}

DensityField DensityField::from_function(
    GridSpec grid, const std::function<double(std::span<const double>)>& f) {
  DensityField out(grid);
  std::vector<int> idx(grid.total_dims());
  std::vector<double> x(grid.total_dims());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    grid.unflatten(i, idx);
    for (int a = 0; a < grid.total_dims(); ++a) x[a] = grid.coordinate(idx[a]);
    out.values_[i] = f(x);
  }
  return out;
}

DensityField DensityField::from_spectral(GridSpec grid, std::vector<Complex> spectral) {
  if (spectral.size() != grid.size()) throw DomainError("spectral array does not match grid");
  DensityField out(grid);
  out.values_ = fft::inverse_real(grid, spectral);
  out.spectral_ = std::move(spectral);
  return out;
}

std::span<double> DensityField::mutable_values() {
  spectral_.clear();
  return values_;
}

const std::vector<Complex>& DensityField::spectral() const {
  if (spectral_.empty())
    throw DomainError("field has no synchronized spectral side; call transform(forward)");
  return spectral_;
}

double DensityField::mass() const {
  double s = 0.0;
  for (double v : values_) s += v;
  return s * grid_.cell_volume();
}

DensityField transform(const DensityField& field, Direction direction) {
  DensityField out = field;
  if (direction == Direction::forward) {
    out.spectral_ = fft::forward(field.grid(), field.values());
  } else {
    out.values_ = fft::inverse_real(field.grid(), field.spectral());
  }
  return out;
}

std::vector<Complex> spectrum_of(const DensityField& field) {
  if (field.has_spectral()) return field.spectral();
  return fft::forward(field.grid(), field.values());
}

double lp_norm(const DensityField& field, double p) {
  if (!(p >= 1.0)) throw DomainError("L^p norm needs p >= 1");
  auto v = field.values();
  if (std::isinf(p)) {
    double m = 0.0;
    for (double x : v) m = std::max(m, std::abs(x));
    return m;
  }
  double s = 0.0;
  if (p == 1.0) {
    for (double x : v) s += std::abs(x);
    return s * field.grid().cell_volume();
  }
  if (p == 2.0) {
    for (double x : v) s += x * x;
    return std::sqrt(s * field.grid().cell_volume());
  }
  for (double x : v) s += std::pow(std::abs(x), p);
  return std::pow(s * field.grid().cell_volume(), 1.0 / p);
}

double lp_distance(const DensityField& a, const DensityField& b, double p) {
  if (!(a.grid() == b.grid())) throw DomainError("lp_distance: grid mismatch");
  std::vector<double> diff(a.values().begin(), a.values().end());
  for (std::size_t i = 0; i < diff.size(); ++i) diff[i] -= b[i];
  return lp_norm(DensityField(a.grid(), std::move(diff)), p);
}

// --- periodic arithmetic ------------------------------------------------------

double wrap(double x, double length) {
  double r = std::fmod(x, length);
  if (r < 0.0) r += length;
  if (r >= length) r = 0.0;  // r + length may round up to length
  return r;
}

void wrap(std::span<double> x, double length) {
  for (double& v : x) v = wrap(v, length);
}

std::vector<double> wrap(std::span<const double> x, const TorusGeometry& geometry) {
  std::vector<double> out(x.begin(), x.end());
  wrap(out, geometry.length());
  return out;
}

double min_image(double x, double y, double length) {
  double d = x - y;
  d -= length * std::floor(d / length + 0.5);
  const double half = 0.5 * length;
  if (d >= half) d -= length;
  if (d < -half) d += length;
  return d;
}

std::vector<double> min_image(std::span<const double> x, std::span<const double> y,
                              const TorusGeometry& geometry) {
  if (x.size() != y.size()) throw DomainError("min_image: dimension mismatch");
  std::vector<double> out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = min_image(x[i], y[i], geometry.length());
  return out;
}

// --- FFT backend --------------------------------------------------------------

DensityField tensor_power(const DensityField& field, int k) {
  const GridSpec& g = field.grid();
  if (k < 1) throw DomainError("tensor power order must be >= 1");
  GridSpec joint = g.with_dims(g.total_dims() * k);
  const std::size_t base = g.size();
  std::vector<double> out(joint.size());
  auto v = field.values();
  for (std::size_t f = 0; f < joint.size(); ++f) {
    std::size_t rest = f;
    double prod = 1.0;
    for (int b = 0; b < k; ++b) {
      prod *= v[rest % base];
      rest /= base;
    }
    out[f] = prod;
  }
  return DensityField(joint, std::move(out));
}

void write_field_csv(const std::string& path, const DensityField& field) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw Error("cannot open " + path + " for writing");
  const GridSpec& g = field.grid();
  for (int a = 0; a < g.total_dims(); ++a) os << 'x' << a << ',';
  os << "value\n" << std::setprecision(17);
  std::vector<int> idx(g.total_dims());
  for (std::size_t f = 0; f < g.size(); ++f) {
    g.unflatten(f, idx);
    for (int i : idx) os << g.coordinate(i) << ',';
    os << field[f] << '\n';
  }
}

namespace fft {
namespace {

struct PlanCache {
  std::mutex mutex;
  std::map<std::tuple<int, int, int>, fftw_plan> plans;

  ~PlanCache() {
    for (auto& [key, plan] : plans) fftw_destroy_plan(plan);
  }

  fftw_plan get(int n, int dims, int sign) {
    std::lock_guard lock(mutex);
    auto key = std::make_tuple(n, dims, sign);
    if (auto it = plans.find(key); it != plans.end()) return it->second;
    std::vector<int> shape(dims, n);
    std::size_t total = 1;
    for (int a = 0; a < dims; ++a) total *= static_cast<std::size_t>(n);
    fftw_complex* in = fftw_alloc_complex(total);
    fftw_complex* out = fftw_alloc_complex(total);
    // ESTIMATE keeps plan selection (and hence rounding) identical across runs.
    fftw_plan plan = fftw_plan_dft(dims, shape.data(), in, out, sign,
                                   FFTW_ESTIMATE | FFTW_UNALIGNED);
    fftw_free(in);
    fftw_free(out);
    plans.emplace(key, plan);
    return plan;
  }
};

PlanCache& cache() {
  static PlanCache c;
  return c;
}

}  // namespace

void execute(int n, int dims, int sign, const Complex* in, Complex* out) {
  fftw_plan plan = cache().get(n, dims, sign);
  fftw_execute_dft(plan,
                   reinterpret_cast<fftw_complex*>(const_cast<Complex*>(in)),
                   reinterpret_cast<fftw_complex*>(out));
}

std::vector<Complex> forward(const GridSpec& grid, std::span<const Complex> values) {
  std::vector<Complex> out(grid.size());
  execute(grid.points_per_dim(), grid.total_dims(), FFTW_FORWARD, values.data(), out.data());
  const double scale = 1.0 / static_cast<double>(grid.size());
  for (auto& c : out) c *= scale;
  return out;
}

std::vector<Complex> forward(const GridSpec& grid, std::span<const double> values) {
  std::vector<Complex> in(values.begin(), values.end());
  return forward(grid, std::span<const Complex>(in));
}

std::vector<Complex> inverse(const GridSpec& grid, std::span<const Complex> spectral) {
  std::vector<Complex> out(grid.size());
  execute(grid.points_per_dim(), grid.total_dims(), FFTW_BACKWARD, spectral.data(), out.data());
  return out;
}

std::vector<double> inverse_real(const GridSpec& grid, std::span<const Complex> spectral) {
  auto c = inverse(grid, spectral);
  std::vector<double> out(c.size());
  for (std::size_t i = 0; i < c.size(); ++i) out[i] = c[i].real();
  return out;
}

}  // namespace fft

}  // namespace chaoslab
