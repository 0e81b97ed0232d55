#pragma once

#include "ifgsim/core/errors.hpp"

#include <cmath>
#include <numbers>
#include <string>

namespace ifgsim {

/// Weak-field line parameters. All frequencies are linear frequencies in Hz.
struct LineParams {
  double gamma = 34e6;  ///< full width at half maximum
  double delta0 = 0.0;  ///< resonance offset from the nominal resonance
  double a0 = 0.1;      ///< scattering amplitude on resonance

  void validate() const {
    if (!(gamma > 0.0) || !std::isfinite(gamma)) throw ConfigError("linewidth gamma must be positive");
    if (!(a0 >= 0.0) || !std::isfinite(a0)) throw ConfigError("on-resonance amplitude a0 must be >= 0");
    if (!std::isfinite(delta0)) throw ConfigError("resonance offset must be finite");
  }
};

/// Scattered-wave parameters at one detuning.
struct ScatterResponse {
  double detuning = 0.0;  ///< Hz, laser minus nominal resonance
  double amplitude = 0.0; ///< a_sc >= 0
  double phase = std::numbers::pi / 2; ///< phi_sc in (0, pi)
};

/// phi = atan((delta - delta0) / gamma) + pi/2.
///
/// Gamma is the full width at half maximum and enters without a factor of
/// two, so the phase passes pi/4 and 3pi/4 at delta0 -/+ gamma. Textbook
/// forms with gamma/2 in the denominator describe the same line with a
/// different meaning of gamma.
inline double scatter_phase(double delta, const LineParams& line) {
  return std::atan((delta - line.delta0) / line.gamma) + std::numbers::pi / 2;
}

/// a_sc = a0 * gamma / sqrt(gamma^2 + (delta - delta0)^2) = a0 * sin(phi).
///
/// The amplitude law is the weak-field response that pairs with the phase
/// law above (a modeling choice; the phase law alone fixes it up to a0).
/// Its square, the scattering probability, is Lorentzian with FWHM 2*gamma.
inline double scatter_amplitude(double delta, const LineParams& line) {
  return line.a0 * std::sin(scatter_phase(delta, line));
}

inline ScatterResponse scatter_response(double delta, const LineParams& line) {
  line.validate();
  const double phase = scatter_phase(delta, line);
  return {delta, line.a0 * std::sin(phase), phase};
}

/// Detuning half-width k*gamma for which the phase spans `span` radians over
/// [delta0 - k gamma, delta0 + k gamma]: span = 2 atan(k).
inline double half_width_for_phase_span(double span, const LineParams& line) {
  if (!(span > 0.0 && span < std::numbers::pi))
    throw InputError("phase span must lie in (0, pi)");
  return line.gamma * std::tan(span / 2.0);
}

/// Saturation intensity of the driven transition, W/cm^2.
inline constexpr double saturation_intensity_w_cm2 = 600.0;
/// Fraction of saturation above which the linear-response model is flagged.
inline constexpr double saturation_warning_fraction = 0.1;

enum class SaturationStatus { ok, warning };

struct SaturationCheck {
  SaturationStatus status = SaturationStatus::ok;
  std::string message;
};

inline SaturationCheck saturation_guard(double intensity_w_cm2) {
  if (!(intensity_w_cm2 >= 0.0) || !std::isfinite(intensity_w_cm2))
    throw InputError("illumination intensity must be a finite value >= 0");
  const double threshold = saturation_warning_fraction * saturation_intensity_w_cm2;
  if (intensity_w_cm2 < threshold) return {};
  return {SaturationStatus::warning,
          "illumination intensity " + std::to_string(intensity_w_cm2) +
              " W/cm^2 is at or above 10% of saturation (600 W/cm^2); the weak-field "
              "phase and amplitude laws are outside their validity regime"};
}

} // namespace ifgsim
