#pragma once

#include "ifgsim/atom/response.hpp"
#include "ifgsim/imaging/interferogram.hpp"
#include "ifgsim/imaging/pupil.hpp"
#include "ifgsim/imaging/system.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <vector>

namespace ifgsim {

/// Largest object-space defocus handled by the quadratic defocus phase.
inline double max_defocus_object(const ImagingSystem& sys) { return 0.05 * sys.f_fresnel; }

namespace detail {

inline void check_defocus_window(double zeta_image, const ImagingSystem& sys) {
  const double zeta_obj = object_defocus(zeta_image, sys);
  if (!std::isfinite(zeta_image) || std::abs(zeta_obj) > max_defocus_object(sys)) {
    std::ostringstream msg;
    msg << "defocus " << zeta_obj << " m (object space) outside the small-defocus window |zeta| <= "
        << max_defocus_object(sys) << " m";
    throw RangeError(msg.str(), max_defocus_object(sys));
  }
}

inline std::vector<double> axis_frequencies(const Grid& grid, bool y_axis, double origin, double scale) {
  std::vector<double> nu(grid.n());
  for (std::size_t k = 0; k < grid.n(); ++k) nu[k] = ((y_axis ? grid.y(k) : grid.x(k)) - origin) * scale;
  return nu;
}

inline double max_abs(const std::vector<double>& v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

} // namespace detail

/// Scattered field in the image plane for an emitter at `source` (image-plane
/// coordinates) and viewing-plane deviation zeta_image from best focus:
///   u(xi) = i a_sc e^{i phi_sc} u~((xi - source) / (lambda f_R)) / N0,
///   u~(nu) = sum over the pupil lattice of g(rho) e^{-2 pi i rho.nu} drho^2.
/// The amplitude is expressed relative to the imaged illumination field. The
/// relay factor 1/M, the propagation phase exp(-i k (f_F + f_R)) and the sign
/// of the inverted image are common to both fields and cancel; N0 is
/// PupilLattice::normalization().
inline Field scattered_image_field(const ScatterResponse& resp, const ImagingSystem& sys,
                                   const PupilLattice& lattice, double zeta_image,
                                   const Grid& image_grid, Point2 source = {}) {
  if (!(resp.amplitude >= 0.0) || !std::isfinite(resp.phase))
    throw InputError("scatter response needs amplitude >= 0 and a finite phase");
  detail::check_defocus_window(zeta_image, sys);
  const double scale = 1.0 / (sys.wavelength * sys.f_reimage);
  const auto nu_x = detail::axis_frequencies(image_grid, false, source.x, scale);
  const auto nu_y = detail::axis_frequencies(image_grid, true, source.y, scale);
  lattice.check_sampling(zeta_image, sys.aberration, sys.rho0,
                         std::max(detail::max_abs(nu_x), detail::max_abs(nu_y)));
  const Eigen::MatrixXcd g = lattice.integrand(zeta_image, sys.aberration, sys.rho0);
  const Eigen::MatrixXcd u = PupilLattice::transform(g, lattice.kernel(nu_y), lattice.kernel(nu_x));
  const complex prefactor = complex(0.0, 1.0) * std::polar(resp.amplitude, resp.phase) /
                            lattice.normalization();
  const std::size_t n = image_grid.n();
  std::vector<complex> samples(image_grid.size());
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t c = 0; c < n; ++c)
      samples[image_grid.index(r, c)] =
          prefactor * u(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c));
  return Field(image_grid, std::move(samples), sys.wavelength, zeta_image);
}

inline Field scattered_image_field(const ScatterResponse& resp, const ImagingSystem& sys,
                                   double zeta_image, const Grid& image_grid, Point2 source = {}) {
  return scattered_image_field(resp, sys, PupilLattice(sys), zeta_image, image_grid, source);
}

/// Homodyne image S = 2 Re[U_sc / U_0] on an object-space grid, with the
/// illumination taken as uniform over the field of view. The Gaussian fall-off
/// of the illumination across the window is neglected. `source` is the
/// emitter's transverse position in object space.
inline Interferogram interferogram(const ScatterResponse& resp, const ImagingSystem& sys,
                                   const PupilLattice& lattice, double zeta_object,
                                   const Grid& object_grid, Point2 source = {}) {
  const double m = sys.magnification();
  const Field u = scattered_image_field(resp, sys, lattice, image_defocus(zeta_object, sys),
                                        object_grid.scaled(m), {source.x * m, source.y * m});
  Interferogram img;
  img.grid = object_grid;
  img.detuning = resp.detuning;
  img.defocus_object = zeta_object;
  img.signal.resize(object_grid.size());
  const auto s = u.samples();
  for (std::size_t i = 0; i < s.size(); ++i) img.signal[i] = 2.0 * s[i].real();
  return img;
}

inline Interferogram interferogram(const ScatterResponse& resp, const ImagingSystem& sys,
                                   double zeta_object, const Grid& object_grid, Point2 source = {}) {
  return interferogram(resp, sys, PupilLattice(sys), zeta_object, object_grid, source);
}

/// Object-space FWHM of the in-focus amplitude spot |U_sc| for an unaberrated
/// system with pupil width rho0 (rho0 = +inf gives the bare stop).
inline double spot_fwhm(const ImagingSystem& sys, const PupilLattice& lattice, double rho0) {
  const Eigen::MatrixXcd g = lattice.integrand(0.0, 0.0, rho0);
  // Profile along x through the axis: collapse the y sum first.
  const Eigen::VectorXcd column = g.colwise().sum().transpose();
  const auto coords = lattice.coords();
  auto amplitude = [&](double r_object) {
    const double nu = r_object / (sys.wavelength * sys.f_fresnel);
    complex sum = 0.0;
    for (std::size_t j = 0; j < coords.size(); ++j)
      sum += column(static_cast<Eigen::Index>(j)) * std::polar(1.0, -2.0 * std::numbers::pi * coords[j] * nu);
    return std::abs(sum);
  };
  const double peak = amplitude(0.0);
  if (!(peak > 0.0)) throw SamplingError("pupil transmits no light");
  const double step = sys.wavelength / 200.0;
  double lo = 0.0;
  double hi = step;
  while (amplitude(hi) > 0.5 * peak) {
    lo = hi;
    hi += step;
    if (hi > 20.0 * sys.wavelength) throw SamplingError("spot profile never reaches half maximum");
  }
  for (int it = 0; it < 80; ++it) {
    const double mid = 0.5 * (lo + hi);
    (amplitude(mid) > 0.5 * peak ? lo : hi) = mid;
  }
  return lo + hi;
}

inline double spot_fwhm(const ImagingSystem& sys) { return spot_fwhm(sys, PupilLattice(sys), sys.rho0); }

struct ResolutionCalibration {
  double rho0 = 0.0;         ///< m
  double fwhm = 0.0;         ///< achieved object-space FWHM, m
  double min_fwhm = 0.0;     ///< limit for rho0 -> infinity (bare stop)
  double max_fwhm = 0.0;     ///< at the smallest rho0 the lattice resolves
};

/// Finds rho0 such that the in-focus object-space spot FWHM equals `target`.
/// The FWHM decreases monotonically in rho0; the search is a bisection in
/// log(rho0) between the lattice sampling floor and the bare stop.
inline ResolutionCalibration calibrate_rho0(const ImagingSystem& sys, double target) {
  const PupilLattice lattice(sys);
  ResolutionCalibration cal;
  const double rho_lo = 8.0 * lattice.step();
  cal.min_fwhm = spot_fwhm(sys, lattice, std::numeric_limits<double>::infinity());
  cal.max_fwhm = spot_fwhm(sys, lattice, rho_lo);
  if (!(target > cal.min_fwhm && target <= cal.max_fwhm)) {
    std::ostringstream msg;
    msg << "resolution target " << target * 1e9 << " nm is unreachable; achievable range on this "
        << "pupil lattice is (" << cal.min_fwhm * 1e9 << ", " << cal.max_fwhm * 1e9 << "] nm";
    throw RangeError(msg.str(), cal.min_fwhm);
  }
  double lo = std::log(rho_lo);
  double hi = std::log(1e3 * lattice.radius());
  if (spot_fwhm(sys, lattice, std::exp(hi)) > target) {
    throw RangeError("resolution target too close to the bare-stop limit", cal.min_fwhm);
  }
  for (int it = 0; it < 100; ++it) {
    const double mid = 0.5 * (lo + hi);
    (spot_fwhm(sys, lattice, std::exp(mid)) > target ? lo : hi) = mid;
  }
  cal.rho0 = std::exp(0.5 * (lo + hi));
  cal.fwhm = spot_fwhm(sys, lattice, cal.rho0);
  return cal;
}

/// Azimuthally averaged profile of S about `center` in bins of one pixel.
inline std::vector<double> radial_profile(const Interferogram& img, Point2 center = {}) {
  const Grid& g = img.grid;
  const std::size_t bins = g.n() / 2;
  std::vector<double> sum(bins, 0.0);
  std::vector<double> count(bins, 0.0);
  for (std::size_t r = 0; r < g.n(); ++r) {
    for (std::size_t c = 0; c < g.n(); ++c) {
      const double radius = std::hypot(g.x(c) - center.x, g.y(r) - center.y) / g.pitch();
      const auto bin = static_cast<std::size_t>(std::lround(radius));
      if (bin >= bins) continue;
      sum[bin] += img.at(r, c);
      count[bin] += 1.0;
    }
  }
  for (std::size_t b = 0; b < bins; ++b) sum[b] = count[b] > 0 ? sum[b] / count[b] : 0.0;
  return sum;
}

/// Radius (m) of the outermost ring of the bullseye: the outermost local
/// extremum of the radial profile whose magnitude reaches `fraction` of the
/// profile's largest magnitude. Returns 0 for a featureless image.
inline double bullseye_radius(const Interferogram& img, double fraction = 0.1, Point2 center = {}) {
  const auto profile = radial_profile(img, center);
  double peak = 0.0;
  for (double v : profile) peak = std::max(peak, std::abs(v));
  if (peak == 0.0) return 0.0;
  double outer = 0.0;
  for (std::size_t b = 1; b + 1 < profile.size(); ++b) {
    const double v = profile[b];
    const bool extremum = (v > profile[b - 1] && v >= profile[b + 1]) ||
                          (v < profile[b - 1] && v <= profile[b + 1]);
    if (extremum && std::abs(v) >= fraction * peak) outer = static_cast<double>(b) * img.grid.pitch();
  }
  return outer;
}

} // namespace ifgsim
