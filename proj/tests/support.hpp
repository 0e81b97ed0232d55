#pragma once

#include "ifgsim/ifgsim.hpp"

namespace ifgsim::test_support {

/// Object-space FWHM of |U_sc| measured on a simulated in-focus image along
/// the row through the emitter, with linear interpolation of the crossing.
inline double simulated_fwhm(const ImagingSystem& sys) {
  const std::size_t n = 256;
  const Grid object(n, 2.5e-9);
  const double m = sys.magnification();
  const Field u = scattered_image_field({0.0, 1.0, std::numbers::pi / 2}, sys, 0.0, object.scaled(m));
  const std::size_t row = n / 2;
  const double peak = std::abs(u(row, n / 2));
  std::size_t c = n / 2;
  while (c + 1 < n && std::abs(u(row, c + 1)) > 0.5 * peak) ++c;
  const double a = std::abs(u(row, c)), b = std::abs(u(row, c + 1));
  const double x = object.x(c) + (a - 0.5 * peak) / (a - b) * object.pitch();
  return 2.0 * x;
}

inline ImagingSystem calibrated_system(double target = 370e-9) {
  ImagingSystem sys;
  sys.rho0 = calibrate_rho0(sys, target).rho0;
  return sys;
}

inline double max_abs(const std::vector<double>& v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

} // namespace ifgsim::test_support
