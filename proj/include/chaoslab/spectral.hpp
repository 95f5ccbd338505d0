#pragma once

// Shared pseudo-spectral machinery for the mean-field and Liouville solvers.

#include <span>
#include <vector>

#include "chaoslab/torus.hpp"

namespace chaoslab {

class SpectralOperators {
 public:
  explicit SpectralOperators(GridSpec grid);

  const GridSpec& grid() const { return grid_; }

  /// Angular wavenumber along `axis` at flat spectral index `flat`;
  /// the Nyquist index returns 0 so derivatives stay real.
  double k(std::size_t flat, int axis) const;
  /// |k|^2 summed over all axes (Nyquist included).
  double k_squared(std::size_t flat) const { return k2_[flat]; }
  /// 2/3-rule mask: true where every |m_a| < n/3.
  bool kept(std::size_t flat) const { return keep_[flat] != 0; }

  void dealias(std::span<Complex> spectral) const;
  /// In-place multiplication by i*k_axis.
  void differentiate(std::span<Complex> spectral, int axis) const;
  /// Integrating factor exp(-sigma |k|^2 dt) per mode.
  std::vector<double> heat_factors(double sigma, double dt) const;

 private:
  GridSpec grid_;
  std::vector<double> axis_k_;  // per index along an axis, Nyquist zeroed
  std::vector<double> k2_;
  std::vector<unsigned char> keep_;
};

}  // namespace chaoslab
