#pragma once

#include "ifgsim/core/errors.hpp"
#include "ifgsim/core/field.hpp"

#include <cmath>
#include <cstddef>

namespace ifgsim {

/// Collection optics: a high-NA Fresnel lens of focal length f_F modeled as a
/// thin complex transmittance, followed by a weak reimaging lens f_R.
struct ImagingSystem {
  double f_fresnel = 3e-3;        ///< m
  double f_reimage = 585 * 3e-3;  ///< m
  double na = 0.64;
  double rho0 = 1.5e-3;           ///< super-Gaussian pupil width, m
  double aberration = 0.0;        ///< spherical aberration coefficient A, rad/m^4
  double wavelength = 369.5e-9;   ///< m
  std::size_t pupil_samples = 128; ///< lattice samples across the aperture diameter

  static ImagingSystem with_magnification(double f_fresnel, double magnification) {
    ImagingSystem sys;
    sys.f_fresnel = f_fresnel;
    sys.f_reimage = magnification * f_fresnel;
    return sys;
  }

  double magnification() const noexcept { return f_reimage / f_fresnel; }

  /// Radius of the aperture stop in the Fresnel-lens plane, f_F tan(asin NA).
  double pupil_radius() const noexcept { return f_fresnel * std::tan(std::asin(na)); }

  /// Spacing of the pupil lattice.
  double pupil_step() const noexcept {
    return 2.0 * pupil_radius() / static_cast<double>(pupil_samples);
  }

  void validate() const {
    auto positive = [](double v) { return v > 0.0 && std::isfinite(v); };
    if (!positive(f_fresnel)) throw ConfigError("Fresnel lens focal length must be positive");
    if (!positive(f_reimage)) throw ConfigError("reimaging lens focal length must be positive");
    if (!positive(wavelength)) throw ConfigError("wavelength must be positive");
    if (!(na > 0.0 && na < 1.0)) throw ConfigError("numerical aperture must lie in (0, 1)");
    if (!(rho0 > 0.0)) throw ConfigError("pupil width rho0 must be positive");
    if (!std::isfinite(aberration)) throw ConfigError("aberration coefficient must be finite");
    if (pupil_samples < 8 || pupil_samples % 2 != 0)
      throw ConfigError("pupil lattice needs an even number (>= 8) of samples");
  }
};

/// Axial displacements scale with the square of the transverse magnification.
inline double image_defocus(double zeta_object, const ImagingSystem& sys) {
  const double m = sys.magnification();
  return m * m * zeta_object;
}

inline double object_defocus(double zeta_image, const ImagingSystem& sys) {
  const double m = sys.magnification();
  return zeta_image / (m * m);
}

/// Fresnel-lens transmittance left after removal of the ideal lens phase:
/// super-Gaussian modulus exp(-rho^4/rho0^4) times the spherical aberration
/// phase exp(i A rho^4).
inline complex pupil_transmittance(double rho, const ImagingSystem& sys) {
  if (!(rho >= 0.0)) throw InputError("pupil radius must be >= 0");
  const double r4 = rho * rho * rho * rho;
  const double s = rho / sys.rho0;
  return std::polar(std::exp(-(s * s) * (s * s)), sys.aberration * r4);
}

} // namespace ifgsim
