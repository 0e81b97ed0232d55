#pragma once

#include "ifgsim/core/fft.hpp"
#include "ifgsim/core/grid.hpp"

#include <cmath>
#include <numbers>
#include <vector>

namespace ifgsim {

/// Background-subtracted, normalised transmission image S(x, y) on an
/// object-space grid (fractional change in transmission).
struct Interferogram {
  Grid grid{16, 1.0};
  std::vector<double> signal;  ///< row-major, grid.size() values
  double detuning = 0.0;       ///< Hz
  double defocus_object = 0.0; ///< m, positive = observation plane upstream of the atom
  double smoothed_with = 0.0;  ///< m, Gaussian sigma applied for display (0 = raw)

  double at(std::size_t row, std::size_t col) const { return signal[grid.index(row, col)]; }
};

/// Periodic Gaussian convolution applied through its transfer function
/// exp(-2 pi^2 sigma^2 |nu|^2). The kernel has unit sum, so the image total
/// is preserved, and successive filters compose exactly in quadrature.
inline std::vector<double> gaussian_filter(const std::vector<double>& values, const Grid& grid,
                                           double sigma) {
  if (!(sigma >= 0.0) || !std::isfinite(sigma)) throw InputError("filter sigma must be >= 0");
  if (sigma == 0.0) return values;
  const std::size_t n = grid.n();
  std::vector<complex> data(values.begin(), values.end());
  fft::transform2d(data, n, Direction::forward);
  std::vector<double> axis(n);
  const double a = 2.0 * std::numbers::pi * std::numbers::pi * sigma * sigma;
  for (std::size_t k = 0; k < n; ++k) {
    const double nu = fft::frequency(k, n, grid.pitch());
    axis[k] = std::exp(-a * nu * nu);
  }
  const double norm = 1.0 / static_cast<double>(n * n);
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t c = 0; c < n; ++c) data[r * n + c] *= axis[r] * axis[c] * norm;
  fft::transform2d(data, n, Direction::inverse);
  std::vector<double> out(values.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = data[i].real();
  return out;
}

/// Display copy smoothed with a Gaussian of width sigma. The input is left
/// untouched; fits consume raw images only.
inline Interferogram render_smoothed(const Interferogram& img, double sigma) {
  Interferogram out = img;
  out.signal = gaussian_filter(img.signal, img.grid, sigma);
  out.smoothed_with = std::hypot(img.smoothed_with, sigma);
  return out;
}

/// Phenomenological blur for thermal motion of the emitter: convolution of S
/// with a Gaussian of width sigma_thermal. Part of the physical model, so
/// `smoothed_with` is unchanged.
inline Interferogram motional_blur(const Interferogram& img, double sigma_thermal) {
  Interferogram out = img;
  out.signal = gaussian_filter(img.signal, img.grid, sigma_thermal);
  return out;
}

} // namespace ifgsim
