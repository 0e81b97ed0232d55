#pragma once

#include "ifgsim/core/errors.hpp"
#include "ifgsim/core/grid.hpp"

#include <cmath>
#include <complex>
#include <numbers>
#include <span>
#include <sstream>
#include <utility>
#include <vector>

namespace ifgsim {

using complex = std::complex<double>;

/// Complex scalar optical amplitude sampled on a Grid at axial position z.
/// |amplitude|^2 is proportional to intensity.
class Field {
public:
  Field(Grid grid, double wavelength, double z = 0.0)
      : Field(grid, std::vector<complex>(grid.size()), wavelength, z) {}

  Field(Grid grid, std::vector<complex> samples, double wavelength, double z = 0.0)
      : grid_(grid), samples_(std::move(samples)), wavelength_(wavelength), z_(z) {
    if (samples_.size() != grid_.size()) {
      std::ostringstream msg;
      msg << "field has " << samples_.size() << " samples, grid needs " << grid_.size();
      throw InputError(msg.str());
    }
    if (!(wavelength_ > 0.0) || !std::isfinite(wavelength_))
      throw ConfigError("wavelength must be positive");
    if (!std::isfinite(z_)) throw ConfigError("plane position must be finite");
    for (const auto& v : samples_)
      if (!std::isfinite(v.real()) || !std::isfinite(v.imag()))
        throw InputError("field contains non-finite samples");
  }

  const Grid& grid() const noexcept { return grid_; }
  double wavelength() const noexcept { return wavelength_; }
  double z() const noexcept { return z_; }
  std::span<const complex> samples() const noexcept { return samples_; }

  const complex& operator()(std::size_t row, std::size_t col) const {
    return samples_[grid_.index(row, col)];
  }

  /// Sum of |amplitude|^2 * pitch^2.
  double power() const noexcept {
    double total = 0.0;
    for (const auto& v : samples_) total += std::norm(v);
    return total * grid_.pitch() * grid_.pitch();
  }

  Field with_samples(std::vector<complex> samples, double z) const {
    return Field(grid_, std::move(samples), wavelength_, z);
  }

private:
  Grid grid_;
  std::vector<complex> samples_;
  double wavelength_;
  double z_;
};

/// Gaussian illumination at its waist: flat phase, intensity
/// power_scale^2 * 2^(-(2r/fwhm)^2), centered on the optic axis.
inline Field gaussian_beam(const Grid& grid, double fwhm, double wavelength, double power_scale) {
  if (!(fwhm > 0.0)) throw ConfigError("beam FWHM must be positive");
  if (fwhm < 4.0 * grid.pitch()) {
    std::ostringstream msg;
    msg << "beam FWHM not resolvable: fwhm/pitch = " << fwhm / grid.pitch() << " < 4";
    throw ConfigError(msg.str());
  }
  // amplitude = sqrt(intensity) = power_scale * exp(-2 ln2 r^2 / fwhm^2)
  const double k = 2.0 * std::numbers::ln2 / (fwhm * fwhm);
  std::vector<complex> samples(grid.size());
  for (std::size_t row = 0; row < grid.n(); ++row) {
    const double y = grid.y(row);
    for (std::size_t col = 0; col < grid.n(); ++col) {
      const double x = grid.x(col);
      samples[grid.index(row, col)] = power_scale * std::exp(-k * (x * x + y * y));
    }
  }
  return Field(grid, std::move(samples), wavelength, 0.0);
}

} // namespace ifgsim
