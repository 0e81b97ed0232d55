#pragma once

// Brute-force reference implementations. They share no code with the fast
// paths they check: every exponential and every sum is evaluated directly.

#include "ifgsim/core/field.hpp"
#include "ifgsim/imaging/system.hpp"

#include <cmath>
#include <numbers>
#include <vector>

namespace ifgsim::oracle {

/// Centered unitary DFT by explicit double sum, O(n^4).
inline std::vector<complex> direct_dft2(const std::vector<complex>& in, std::size_t n, bool inverse) {
  const double sign = inverse ? 1.0 : -1.0;
  const double half = static_cast<double>(n / 2);
  const double nn = static_cast<double>(n);
  std::vector<complex> out(n * n);
  for (std::size_t kr = 0; kr < n; ++kr)
    for (std::size_t kc = 0; kc < n; ++kc) {
      complex sum = 0.0;
      for (std::size_t r = 0; r < n; ++r)
        for (std::size_t c = 0; c < n; ++c) {
          const double phase = sign * 2.0 * std::numbers::pi *
                               ((static_cast<double>(kr) - half) * (static_cast<double>(r) - half) +
                                (static_cast<double>(kc) - half) * (static_cast<double>(c) - half)) /
                               nn;
          sum += in[r * n + c] * std::polar(1.0, phase);
        }
      out[kr * n + kc] = sum / nn;
    }
  return out;
}

/// Image-plane transform of the pupil integrand by direct double sum over the
/// pupil lattice for every output point (image-plane coordinates xi).
///   u~(xi) = sum_rho g(rho) exp(-2 pi i rho . xi / (lambda f_R)) drho^2
///   g(rho) = [rho <= R] exp(i pi zeta rho^2/(f_R^2 lambda)) exp(-rho^4/rho0^4)
///            exp(i A rho^4) / sqrt(f_F^2 + rho^2)
inline std::vector<complex> direct_pupil_transform(const ImagingSystem& sys, double zeta_image,
                                                   const std::vector<double>& xi_x,
                                                   const std::vector<double>& xi_y) {
  const std::size_t m = sys.pupil_samples;
  const double radius = sys.f_fresnel * std::tan(std::asin(sys.na));
  const double step = 2.0 * radius / static_cast<double>(m);
  const double pi = std::numbers::pi;
  std::vector<complex> out(xi_x.size() * xi_y.size());
  for (std::size_t a = 0; a < xi_y.size(); ++a)
    for (std::size_t b = 0; b < xi_x.size(); ++b) {
      complex sum = 0.0;
      for (std::size_t i = 0; i < m; ++i) {
        const double ry = (static_cast<double>(i) + 0.5) * step - radius;
        for (std::size_t j = 0; j < m; ++j) {
          const double rx = (static_cast<double>(j) + 0.5) * step - radius;
          const double r2 = rx * rx + ry * ry;
          if (r2 > radius * radius) continue;
          const double amplitude = std::exp(-std::pow(std::sqrt(r2) / sys.rho0, 4)) /
                                   std::sqrt(sys.f_fresnel * sys.f_fresnel + r2);
          const double phase = pi * zeta_image * r2 / (sys.f_reimage * sys.f_reimage * sys.wavelength) +
                               sys.aberration * r2 * r2 -
                               2.0 * pi * (rx * xi_x[b] + ry * xi_y[a]) / (sys.wavelength * sys.f_reimage);
          sum += std::polar(amplitude, phase);
        }
      }
      out[a * xi_x.size() + b] = sum * step * step;
    }
  return out;
}

} // namespace ifgsim::oracle
