#include "ifgsim/estimator/phase_curve.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace ifgsim;

namespace {

const double sweep_mhz[] = {-30, -20, -13, -5, 0, 5, 9, 15, 25};

std::vector<PhasePoint> synthetic(const LineParams& line, double sigma, std::mt19937_64* rng) {
  std::normal_distribution<double> noise(0.0, sigma);
  std::vector<PhasePoint> out;
  for (double d : sweep_mhz) {
    const double phi = scatter_phase(d * 1e6, line) + (rng ? noise(*rng) : 0.0);
    out.push_back({d * 1e6, phi, sigma});
  }
  return out;
}

} // namespace

TEST(PhaseCurve, NoiselessClosedLoop) {
  const LineParams line{34e6, 5e6, 0.1};
  const auto fit = fit_phase_curve(synthetic(line, 0.1, nullptr));
  EXPECT_NEAR(fit.gamma, 34e6, 0.1e6);
  EXPECT_NEAR(fit.delta0, 5e6, 0.05e6);
  EXPECT_LT(fit.chi2, 1e-12);
}

TEST(PhaseCurve, UncertaintiesAtPaperScale) {
  const LineParams line{34e6, 5e6, 0.1};
  const auto fit = fit_phase_curve(synthetic(line, 0.1, nullptr));
  // several MHz on both parameters for 0.1 rad per point
  EXPECT_GT(fit.gamma_sigma, 1e6);
  EXPECT_LT(fit.gamma_sigma, 20e6);
  EXPECT_GT(fit.delta0_sigma, 0.5e6);
  EXPECT_LT(fit.delta0_sigma, 10e6);
}

TEST(PhaseCurve, UncertaintyMatchesScatterOverSeeds) {
  const LineParams line{34e6, 5e6, 0.1};
  std::mt19937_64 rng(2024);
  double sum = 0.0, sum2 = 0.0, quoted = 0.0;
  const int runs = 400;
  for (int k = 0; k < runs; ++k) {
    const auto fit = fit_phase_curve(synthetic(line, 0.02, &rng));
    sum += fit.gamma;
    sum2 += fit.gamma * fit.gamma;
    quoted += fit.gamma_sigma;
  }
  const double mean = sum / runs;
  const double sd = std::sqrt(sum2 / runs - mean * mean);
  EXPECT_NEAR(sd / (quoted / runs), 1.0, 0.1);
}

TEST(PhaseCurve, EqualDetuningsAreRankDeficient) {
  std::vector<PhasePoint> pts = {{5e6, 1.5, 0.1}, {5e6, 1.6, 0.1}};
  EXPECT_THROW(fit_phase_curve(pts), SingularityError);
  pts.push_back({5e6, 1.55, 0.1});
  EXPECT_THROW(fit_phase_curve(pts), SingularityError);
}

TEST(PhaseCurve, InputValidation) {
  std::vector<PhasePoint> pts = {{0, 1.5, 0.1}, {1e6, 1.6, 0.1}};
  EXPECT_THROW(fit_phase_curve(pts), InputError);
  pts.push_back({2e6, 1.7, 0.0});
  EXPECT_THROW(fit_phase_curve(pts), InputError);
}

TEST(PhaseCurve, RobustStartFarFromTruth) {
  const LineParams line{80e6, -40e6, 0.1};
  const auto fit = fit_phase_curve(synthetic(line, 0.05, nullptr));
  EXPECT_NEAR(fit.gamma, 80e6, 1e3);
  EXPECT_NEAR(fit.delta0, -40e6, 1e3);
}
