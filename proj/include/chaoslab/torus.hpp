#pragma once

// Periodic geometry, uniform grids and grid functions on T^D.
//
// Grid nodes sit at i * spacing (or (i + 1/2) * spacing for cell-centred
// grids such as histograms). Flat storage is row-major with the last axis
// fastest. The forward transform carries the 1/n^D factor, so spectral
// mode 0 is the mean of the grid values:
//
//   values[x] = sum_m spectral[m] * exp(2 pi i m.x / length).

#include <complex>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <span>
#include <string>
#include <vector>

namespace chaoslab {

using Complex = std::complex<double>;

class TorusGeometry {
 public:
  TorusGeometry(int dim, double length);

  int dim() const { return dim_; }
  double length() const { return length_; }
  double volume() const;

  bool operator==(const TorusGeometry&) const = default;

 private:
  int dim_;
  double length_;
};

/// Largest grid (in nodes) a GridSpec may describe unless a caller raises it.
inline constexpr std::size_t kDefaultMaxGridNodes = std::size_t{1} << 22;
/// Hard cap on the number of grid axes.
inline constexpr int kMaxGridDims = 4;

class GridSpec {
 public:
  /// `total_dims` is k*d for a joint grid on T^{dk}; the geometry's own
  /// dimension is the single-particle d and only supplies the length.
  GridSpec(TorusGeometry geometry, int points_per_dim, int total_dims,
           bool cell_centered = false, std::size_t max_nodes = kDefaultMaxGridNodes);

  /// Grid on T^d with total_dims = geometry.dim().
  GridSpec(TorusGeometry geometry, int points_per_dim)
      : GridSpec(geometry, points_per_dim, geometry.dim()) {}

  const TorusGeometry& geometry() const { return geometry_; }
  double length() const { return geometry_.length(); }
  int points_per_dim() const { return n_; }
  int total_dims() const { return dims_; }
  bool cell_centered() const { return cell_centered_; }
  std::size_t size() const { return size_; }

  double spacing() const { return geometry_.length() / n_; }
  double cell_volume() const;
  double volume() const;

  /// Coordinate of node index i along any axis.
  double coordinate(int i) const { return (i + (cell_centered_ ? 0.5 : 0.0)) * spacing(); }
  /// Signed Fourier mode of index i: 0..n/2-1 then -n/2..-1.
  int mode(int i) const { return i < n_ / 2 ? i : i - n_; }
  /// Angular wavenumber 2 pi m / length of index i.
  double wavenumber(int i) const;

  /// Index of `axis` inside flat index `flat`.
  int axis_index(std::size_t flat, int axis) const;
  std::size_t stride(int axis) const;
  void unflatten(std::size_t flat, std::span<int> out) const;
  std::size_t flatten(std::span<const int> idx) const;

  /// Same lattice with a different number of axes.
  GridSpec with_dims(int total_dims) const;

  bool operator==(const GridSpec& o) const;

 private:
  TorusGeometry geometry_;
  int n_;
  int dims_;
  bool cell_centered_;
  std::size_t size_;
};

enum class Direction { forward, inverse };

/// Real grid function with an optional synchronized spectral copy.
class DensityField {
 public:
  explicit DensityField(GridSpec grid);
  DensityField(GridSpec grid, std::vector<double> values);

  /// Samples f at every node; f receives the node coordinates.
  static DensityField from_function(GridSpec grid,
                                    const std::function<double(std::span<const double>)>& f);
  /// Builds values by inverse transform of the given coefficients.
  static DensityField from_spectral(GridSpec grid, std::vector<Complex> spectral);

  const GridSpec& grid() const { return grid_; }
  std::span<const double> values() const { return values_; }
  /// Mutable access drops the spectral copy.
  std::span<double> mutable_values();
  double operator[](std::size_t i) const { return values_[i]; }

  bool has_spectral() const { return !spectral_.empty(); }
  /// Throws DomainError when no synchronized spectral copy exists.
  const std::vector<Complex>& spectral() const;

  double mass() const;

 private:
  friend DensityField transform(const DensityField&, Direction);
  GridSpec grid_;
  std::vector<double> values_;
  std::vector<Complex> spectral_;
};

/// forward: refresh the spectral side from values. inverse: refresh values
/// from the spectral side (the imaginary residue is discarded).
DensityField transform(const DensityField& field, Direction direction);

/// Coefficients of `field` (computes them if the field carries none).
std::vector<Complex> spectrum_of(const DensityField& field);

/// Midpoint-rule L^p norm; p = +inf gives max |f|.
double lp_norm(const DensityField& field, double p);
double lp_distance(const DensityField& a, const DensityField& b, double p);

/// Componentwise reduction into [0, length).
double wrap(double x, double length);
void wrap(std::span<double> x, double length);
std::vector<double> wrap(std::span<const double> x, const TorusGeometry& geometry);

/// Minimal-image displacement x - y, each component in [-length/2, length/2).
double min_image(double x, double y, double length);
std::vector<double> min_image(std::span<const double> x, std::span<const double> y,
                              const TorusGeometry& geometry);

/// f(x_1) ... f(x_k) on the k-fold joint grid (total_dims = k * dims of f).
DensityField tensor_power(const DensityField& field, int k);

/// Two-column CSV per node: the node coordinates then the value.
void write_field_csv(const std::string& path, const DensityField& field);

namespace fft {

/// Unnormalized in-place-capable c2c transforms on an n^D lattice.
/// sign = -1 forward, +1 backward. Safe to call concurrently.
void execute(int n, int dims, int sign, const Complex* in, Complex* out);

std::vector<Complex> forward(const GridSpec& grid, std::span<const double> values);
std::vector<Complex> forward(const GridSpec& grid, std::span<const Complex> values);
std::vector<double> inverse_real(const GridSpec& grid, std::span<const Complex> spectral);
std::vector<Complex> inverse(const GridSpec& grid, std::span<const Complex> spectral);

}  // namespace fft

}  // namespace chaoslab
