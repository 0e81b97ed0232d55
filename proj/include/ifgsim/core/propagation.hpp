#pragma once

#include "ifgsim/core/fft.hpp"
#include "ifgsim/core/field.hpp"

#include <cmath>
#include <numbers>
#include <sstream>
#include <vector>

namespace ifgsim {

/// Largest |dz| for which the Fresnel transfer-function phase
/// pi*lambda*dz*nu^2 changes by at most pi between adjacent frequency bins.
inline double max_fresnel_step(const Grid& grid, double wavelength) {
  const double n = static_cast<double>(grid.n());
  const double p = grid.pitch();
  return n * n * p * p / ((n - 1.0) * wavelength);
}

namespace detail {
inline void check_fresnel_step(const Field& field, double dz) {
  if (!std::isfinite(dz)) throw InputError("propagation distance must be finite");
  const double limit = max_fresnel_step(field.grid(), field.wavelength());
  if (std::abs(dz) > limit) {
    std::ostringstream msg;
    msg << "Fresnel transfer function undersampled for |dz| = " << std::abs(dz)
        << " m; maximum safe |dz| on this grid is " << limit << " m";
    throw SamplingError(msg.str(), limit);
  }
}
} // namespace detail

/// Advances the field by dz with the Fresnel transfer function
///   H(nu) = exp(i k dz) exp(-i pi lambda dz |nu|^2)
/// applied on the periodic grid. Unitary and exactly composable.
inline Field fresnel_propagate(const Field& field, double dz) {
  detail::check_fresnel_step(field, dz);
  if (dz == 0.0) return field;
  const Grid& g = field.grid();
  const std::size_t n = g.n();
  const double lambda = field.wavelength();
  std::vector<complex> data(field.samples().begin(), field.samples().end());
  fft::transform2d(data, n, Direction::forward);
  const complex carrier = std::polar(1.0, 2.0 * std::numbers::pi * dz / lambda);
  std::vector<complex> axis(n);
  for (std::size_t k = 0; k < n; ++k) {
    const double nu = fft::frequency(k, n, g.pitch());
    axis[k] = std::polar(1.0, -std::numbers::pi * lambda * dz * nu * nu);
  }
  const double norm = 1.0 / static_cast<double>(n * n);
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t c = 0; c < n; ++c) data[r * n + c] *= carrier * axis[r] * axis[c] * norm;
  fft::transform2d(data, n, Direction::inverse);
  return field.with_samples(std::move(data), field.z() + dz);
}

/// Largest grid accepted by quadrature_propagate.
inline constexpr std::size_t max_quadrature_grid = 64;

/// Fresnel propagation by direct summation: circular convolution with the
/// discrete Fresnel kernel of the grid, K[d] = (1/n) sum_k H(nu_k) e^{2 pi i k d/n}
/// per axis, each kernel value and each output sample summed explicitly.
/// O(n^4); used to cross-check fresnel_propagate.
inline Field quadrature_propagate(const Field& field, double dz) {
  const Grid& g = field.grid();
  const std::size_t n = g.n();
  if (n > max_quadrature_grid) {
    std::ostringstream msg;
    msg << "direct quadrature needs O(n^4) work; n = " << n << " exceeds " << max_quadrature_grid;
    throw ResourceError(msg.str(), static_cast<double>(max_quadrature_grid));
  }
  detail::check_fresnel_step(field, dz);
  if (dz == 0.0) return field;
  const double lambda = field.wavelength();
  const double pi = std::numbers::pi;
  std::vector<complex> kernel(n);
  for (std::size_t d = 0; d < n; ++d) {
    complex sum = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      const double nu = fft::frequency(k, n, g.pitch());
      const double phase = -pi * lambda * dz * nu * nu +
                           2.0 * pi * static_cast<double>((k * d) % n) / static_cast<double>(n);
      sum += std::polar(1.0, phase);
    }
    kernel[d] = sum / static_cast<double>(n);
  }
  const complex carrier = std::polar(1.0, 2.0 * pi * dz / lambda);
  const auto in = field.samples();
  std::vector<complex> out(g.size());
  parallel::for_each_index(n, [&](std::size_t r) {
    for (std::size_t c = 0; c < n; ++c) {
      complex sum = 0.0;
      for (std::size_t rs = 0; rs < n; ++rs) {
        const complex ky = kernel[(r + n - rs) % n];
        complex row_sum = 0.0;
        for (std::size_t cs = 0; cs < n; ++cs) row_sum += in[rs * n + cs] * kernel[(c + n - cs) % n];
        sum += ky * row_sum;
      }
      out[r * n + c] = carrier * sum;
    }
  });
  return field.with_samples(std::move(out), field.z() + dz);
}

} // namespace ifgsim
