#include "ifgsim/oracle.hpp"
#include "support.hpp"

#include <gtest/gtest.h>

using namespace ifgsim;
using ifgsim::test_support::calibrated_system;

namespace {

const Grid view_window(128, 3.4e-6 / 128);

double relative_error(std::span<const complex> a, std::span<const complex> b) {
  double d = 0.0, s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    d = std::max(d, std::abs(a[i] - b[i]));
    s = std::max(s, std::abs(b[i]));
  }
  return d / s;
}

} // namespace

TEST(Pupil, TransmittanceValues) {
  ImagingSystem sys;
  sys.rho0 = 1e-3;
  sys.aberration = 2e11;
  EXPECT_EQ(pupil_transmittance(0.0, sys), complex(1.0, 0.0));
  const complex t = pupil_transmittance(1e-3, sys);
  EXPECT_NEAR(std::abs(t), std::exp(-1.0), 1e-15);
  EXPECT_NEAR(std::arg(t), 0.2, 1e-12);
  EXPECT_THROW(pupil_transmittance(-1e-6, sys), InputError);
}

TEST(Pupil, StopRadiusAndLattice) {
  ImagingSystem sys;
  EXPECT_NEAR(sys.pupil_radius(), 3e-3 * std::tan(std::asin(0.64)), 1e-15);
  const PupilLattice lattice(sys);
  EXPECT_EQ(lattice.size(), 128u);
  EXPECT_NEAR(lattice.coords().front(), -sys.pupil_radius() + 0.5 * sys.pupil_step(), 1e-15);
  const double r = sys.pupil_radius(), f = sys.f_fresnel;
  EXPECT_NEAR(lattice.normalization(), 2 * std::numbers::pi * (std::hypot(f, r) - f), 1e-18);
}

TEST(ImageField, MatchesDirectPupilSum) {
  ImagingSystem sys;
  sys.pupil_samples = 32;
  sys.rho0 = 0.7 * sys.pupil_radius();
  const Grid object(32, 3.4e-6 / 32);
  const Grid image = object.scaled(sys.magnification());
  const double zmax = 0.9 * PupilLattice(sys).max_defocus_image();
  std::vector<double> xs(32), ys(32);
  for (std::size_t k = 0; k < 32; ++k) {
    xs[k] = image.x(k);
    ys[k] = image.y(k);
  }
  const double n0 = PupilLattice(sys).normalization();
  for (double a : {0.0, 0.5 / std::pow(sys.rho0, 4)}) {
    sys.aberration = a;
    for (double zeta : {0.0, zmax, -zmax}) {
      const Field fast = scattered_image_field({0.0, 1.0, 0.0}, sys, zeta, image);
      auto slow = oracle::direct_pupil_transform(sys, zeta, xs, ys);
      for (auto& v : slow) v *= complex(0.0, 1.0) / n0;
      EXPECT_LT(relative_error(fast.samples(), slow), 1e-8) << a << ' ' << zeta;
    }
  }
}

TEST(ImageField, LinearInComplexScatterAmplitude) {
  const ImagingSystem sys = calibrated_system();
  const Grid image = view_window.scaled(sys.magnification());
  const double zeta = image_defocus(1.7e-6, sys);
  const Field base = scattered_image_field({0.0, 1.0, 0.0}, sys, zeta, image);
  const Field other = scattered_image_field({0.0, 0.3, 1.1}, sys, zeta, image);
  const complex factor = std::polar(0.3, 1.1);
  for (std::size_t i = 0; i < base.samples().size(); ++i)
    EXPECT_NEAR(std::abs(other.samples()[i] - factor * base.samples()[i]), 0.0, 1e-14);
}

TEST(ImageField, InFocusPeakIsNormalized) {
  ImagingSystem sys;
  sys.rho0 = 1e3;  // effectively the bare stop
  const Grid image = view_window.scaled(sys.magnification());
  const Field u = scattered_image_field({0.0, 1.0, 0.0}, sys, 0.0, image);
  // sum of the midpoint lattice approximates the stop integral
  EXPECT_NEAR(std::abs(u(64, 64)), 1.0, 2e-3);
}

TEST(ImageField, DefocusMatchesFresnelPropagation) {
  const ImagingSystem sys = calibrated_system();
  const Grid object(128, 6.8e-6 / 128);
  const Grid image = object.scaled(sys.magnification());
  const Field focus = scattered_image_field({0.0, 1.0, 0.0}, sys, 0.0, image);
  const double zeta = image_defocus(0.8e-6, sys);
  ASSERT_LT(zeta, max_fresnel_step(image, sys.wavelength));
  const Field direct = scattered_image_field({0.0, 1.0, 0.0}, sys, zeta, image);
  // a viewing plane upstream of focus is reached by propagating backwards
  const Field propagated = fresnel_propagate(focus, -zeta);
  const complex carrier = std::polar(1.0, -2.0 * std::numbers::pi * zeta / sys.wavelength);
  std::vector<complex> stripped(propagated.samples().begin(), propagated.samples().end());
  for (auto& v : stripped) v /= carrier;
  EXPECT_LT(relative_error(stripped, direct.samples()), 2e-2);
}

TEST(Interferogram, InFocusDipIsNegativeAcrossTheLine) {
  const ImagingSystem sys = calibrated_system();
  const LineParams line{34e6, 5e6, 0.1};
  const Grid g(32, 3.4e-6 / 32);
  const PupilLattice lattice(sys);
  const double u0 = lattice.integrand(0.0, 0.0, sys.rho0).sum().real() / lattice.normalization();
  for (double d = line.delta0 - 2 * line.gamma; d <= line.delta0 + 2 * line.gamma; d += 2e6) {
    const Interferogram img = interferogram(scatter_response(d, line), sys, 0.0, g);
    EXPECT_LT(img.at(16, 16), 0.0) << d;
    // S(0) = -2 a sin(phi) u~(0)/N0 with u~(0) the real lattice sum
    const auto r = scatter_response(d, line);
    EXPECT_NEAR(img.at(16, 16), -2 * r.amplitude * std::sin(r.phase) * u0, 1e-15);
  }
}

TEST(Interferogram, DefocusSignMirrorsPhase) {
  const ImagingSystem sys = calibrated_system();
  for (double phi : {0.4, 1.2, 2.0}) {
    const Interferogram a = interferogram({0.0, 0.1, phi}, sys, 1.7e-6, view_window);
    const Interferogram b = interferogram({0.0, 0.1, std::numbers::pi - phi}, sys, -1.7e-6, view_window);
    for (std::size_t i = 0; i < a.signal.size(); ++i) EXPECT_NEAR(a.signal[i], b.signal[i], 1e-14);
  }
}

TEST(Interferogram, DetuningsDifferOnAxisWhenDefocused) {
  const ImagingSystem sys = calibrated_system();
  const LineParams line{34e6, 5e6, 0.1};
  const Interferogram red = interferogram(scatter_response(-13e6, line), sys, 1.7e-6, view_window);
  const Interferogram blue = interferogram(scatter_response(9e6, line), sys, 1.7e-6, view_window);
  EXPECT_GT(std::abs(red.at(64, 64) - blue.at(64, 64)), 0.05 * test_support::max_abs(red.signal));
}

TEST(Interferogram, BullseyeGrowsWithDefocus) {
  const ImagingSystem sys = calibrated_system();
  const LineParams line{34e6, 5e6, 0.1};
  const Grid wide(512, 3.4e-6 / 256);
  const PupilLattice lattice(sys);
  for (double d : {-13e6, 9e6}) {
    const auto r = scatter_response(d, line);
    const double near = bullseye_radius(interferogram(r, sys, lattice, 1.7e-6, wide));
    const double far = bullseye_radius(interferogram(r, sys, lattice, 3.3e-6, wide));
    EXPECT_GT(far, near) << d;
    EXPECT_GT(near, 0.0);
  }
}

TEST(Interferogram, SourceOffsetTranslatesImage) {
  const ImagingSystem sys = calibrated_system();
  const Grid g(64, 3.4e-6 / 64);
  const ScatterResponse r{0.0, 0.1, 1.0};
  const Interferogram centered = interferogram(r, sys, 1.0e-6, g);
  const Interferogram shifted = interferogram(r, sys, 1.0e-6, g, {3 * g.pitch(), -2 * g.pitch()});
  for (std::size_t row = 4; row < 60; ++row)
    for (std::size_t col = 4; col < 60; ++col)
      EXPECT_NEAR(shifted.at(row, col), centered.at(row + 2, col - 3), 1e-14);
}

TEST(Interferogram, RejectsDefocusOutsideWindow) {
  const ImagingSystem sys = calibrated_system();
  EXPECT_THROW(interferogram({0.0, 0.1, 1.0}, sys, 0.051 * sys.f_fresnel, view_window), RangeError);
}

TEST(Interferogram, RejectsUndersampledPupil) {
  ImagingSystem sys;
  sys.rho0 = 4 * sys.pupil_step();
  EXPECT_THROW(interferogram({0.0, 0.1, 1.0}, sys, 0.0, view_window), SamplingError);
  sys = ImagingSystem{};
  EXPECT_THROW(interferogram({0.0, 0.1, 1.0}, sys, 0.0, Grid(128, 1e-6)), SamplingError);
}

TEST(Resolution, FwhmDecreasesWithPupilWidth) {
  ImagingSystem sys;
  const PupilLattice lattice(sys);
  double last = 1.0;
  for (double rho0 : {0.5e-3, 1e-3, 1.5e-3, 2e-3, 3e-3, 1e-1}) {
    const double w = spot_fwhm(sys, lattice, rho0);
    EXPECT_LT(w, last);
    last = w;
  }
}

TEST(Resolution, CalibrationReproducesTargetWhenResimulated) {
  ImagingSystem sys;
  const auto cal = calibrate_rho0(sys, 370e-9);
  EXPECT_NEAR(cal.fwhm, 370e-9, 1e-12);
  sys.rho0 = cal.rho0;
  EXPECT_NEAR(test_support::simulated_fwhm(sys), 370e-9, 2e-9);
}

TEST(Resolution, RejectsTargetBelowBareStopLimit) {
  const ImagingSystem sys;
  try {
    calibrate_rho0(sys, 289e-9);
    FAIL();
  } catch (const RangeError& e) {
    EXPECT_NE(std::string(e.what()).find("achievable range"), std::string::npos);
    EXPECT_GT(e.limit(), 289e-9);
  }
  EXPECT_THROW(calibrate_rho0(sys, 10e-6), RangeError);
}
