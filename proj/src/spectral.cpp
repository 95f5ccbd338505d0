#include "chaoslab/spectral.hpp"

#include <cmath>
#include <cstdlib>

namespace chaoslab {

SpectralOperators::SpectralOperators(GridSpec grid)
    : grid_(grid),
      axis_k_(grid.points_per_dim()),
      k2_(grid.size()),
      keep_(grid.size()) {
  const int n = grid.points_per_dim();
  for (int i = 0; i < n; ++i) axis_k_[i] = (i == n / 2) ? 0.0 : grid.wavenumber(i);
  std::vector<int> idx(grid.total_dims());
  for (std::size_t f = 0; f < grid.size(); ++f) {
    grid.unflatten(f, idx);
    double s = 0.0;
    bool keep = true;
    for (int a = 0; a < grid.total_dims(); ++a) {
      const double ka = grid.wavenumber(idx[a]);
      s += ka * ka;
      if (3 * std::abs(grid.mode(idx[a])) >= n) keep = false;
    }
    k2_[f] = s;
    keep_[f] = keep ? 1 : 0;
  }
}

double SpectralOperators::k(std::size_t flat, int axis) const {
  return axis_k_[grid_.axis_index(flat, axis)];
}

void SpectralOperators::dealias(std::span<Complex> spectral) const {
  for (std::size_t f = 0; f < spectral.size(); ++f)
    if (!keep_[f]) spectral[f] = 0.0;
}

void SpectralOperators::differentiate(std::span<Complex> spectral, int axis) const {
  const std::size_t stride = grid_.stride(axis);
  const std::size_t n = static_cast<std::size_t>(grid_.points_per_dim());
  for (std::size_t f = 0; f < spectral.size(); ++f) {
    const double ka = axis_k_[(f / stride) % n];
    spectral[f] *= Complex(0.0, ka);
  }
}

std::vector<double> SpectralOperators::heat_factors(double sigma, double dt) const {
  std::vector<double> out(k2_.size());
  for (std::size_t f = 0; f < k2_.size(); ++f) out[f] = std::exp(-sigma * k2_[f] * dt);
  return out;
}

}  // namespace chaoslab
