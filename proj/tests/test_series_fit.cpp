#include "support.hpp"

#include <gtest/gtest.h>

#include <cstdio>
#include <random>

using namespace ifgsim;
using ifgsim::test_support::calibrated_system;

namespace {

const double planes[] = {0.0, 1.7e-6, 3.3e-6};

const ImagingSystem& system_370() {
  static const ImagingSystem sys = calibrated_system();
  return sys;
}

/// Series rendered at the true planes (nominal + offset) with the emitter at
/// `center`, labelled with the nominal planes.
SeriesObservation make_series(const ScatterResponse& r, const ImagingSystem& sys, const Grid& grid,
                              Point2 center = {}, std::vector<double> offsets = {0, 0, 0}) {
  SeriesObservation obs;
  const PupilLattice lattice(sys);
  for (std::size_t k = 0; k < 3; ++k) {
    Interferogram img = interferogram(r, sys, lattice, planes[k] + offsets[k], grid, center);
    img.defocus_object = planes[k];
    obs.images.push_back(std::move(img));
  }
  return obs;
}

} // namespace

TEST(SeriesFit, NoiselessClosedLoop) {
  const ImagingSystem& sys = system_370();
  const Grid grid(128, 3.4e-6 / 128);
  const ScatterResponse truth{-13e6, 0.1, 1.2056};
  const auto obs = make_series(truth, sys, grid, {20e-9, -15e-9}, {0.05e-6, -0.08e-6, 0.1e-6});
  SeriesInit init;
  const SeriesFit fit = fit_series(obs, sys, init);
  EXPECT_NEAR(fit.amplitude / 0.1, 1.0, 0.005);
  EXPECT_NEAR(fit.phase, 1.2056, 0.005);
  EXPECT_NEAR(fit.shared.center.x, 20e-9, 1e-10);
  EXPECT_NEAR(fit.shared.center.y, -15e-9, 1e-10);
  EXPECT_NEAR(fit.shared.defocus_offsets[2], 0.1e-6, 1e-10);
  EXPECT_LT(fit.residual_rms, 1e-8);
  EXPECT_TRUE(fit.converged);
  EXPECT_GT(fit.iterations, 0);
}

TEST(SeriesFit, CovarianceIsSymmetricPositive) {
  const ImagingSystem& sys = system_370();
  const Grid grid(64, 3.4e-6 / 64);
  auto obs = make_series({0.0, 0.1, 2.0}, sys, grid);
  double peak = 0.0;
  for (const auto& img : obs.images) peak = std::max(peak, test_support::max_abs(img.signal));
  obs.noise_sigma = 0.1 * peak;
  for (std::size_t k = 0; k < 3; ++k) obs.images[k] = inject_noise(obs.images[k], obs.noise_sigma, 50 + k);
  const SeriesFit fit = fit_series(obs, sys);
  EXPECT_LT((fit.covariance - fit.covariance.transpose()).norm(), 1e-15 * fit.covariance.norm());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(fit.covariance);
  EXPECT_GT(eig.eigenvalues().minCoeff(), 0.0);
  EXPECT_GE(fit.residual_rms, 0.0);
  EXPECT_GT(fit.phase, -std::numbers::pi);
  EXPECT_LE(fit.phase, std::numbers::pi);
}

TEST(SeriesFit, NoisyMonteCarloCoverage) {
  const ImagingSystem& sys = system_370();
  const Grid grid(64, 3.4e-6 / 64);
  const ScatterResponse truth{-13e6, 0.1, 1.2056};
  const auto clean = make_series(truth, sys, grid);
  double peak = 0.0;
  for (const auto& img : clean.images) peak = std::max(peak, test_support::max_abs(img.signal));
  int within2 = 0, within3 = 0;
  const int runs = 100;
  for (int seed = 0; seed < runs; ++seed) {
    SeriesObservation obs = clean;
    obs.noise_sigma = 0.2 * peak;
    for (std::size_t k = 0; k < 3; ++k)
      obs.images[k] = inject_noise(clean.images[k], obs.noise_sigma, 1000 * seed + k);
    const SeriesFit fit = fit_series(obs, sys);
    const double pull = std::abs(fit.phase - truth.phase) / fit.phase_sigma;
    within2 += pull <= 2.0;
    within3 += pull <= 3.0;
  }
  std::printf("phase within 2 sigma: %d/%d, within 3 sigma: %d/%d\n", within2, runs, within3, runs);
  EXPECT_EQ(within3, runs);
  EXPECT_GE(within2, 95);
}

TEST(SeriesFit, ZeroAmplitudeIsSingular) {
  const ImagingSystem& sys = system_370();
  const auto obs = make_series({0.0, 0.0, 1.0}, sys, Grid(32, 3.4e-6 / 32));
  try {
    fit_series(obs, sys);
    FAIL();
  } catch (const SingularityError& e) {
    ASSERT_FALSE(e.null_direction().empty());
    EXPECT_EQ(e.null_direction().front(), "phase");
  }
}

TEST(SeriesFit, PureNoiseIsFlaggedUnidentifiable) {
  const ImagingSystem& sys = system_370();
  auto obs = make_series({0.0, 0.0, 1.0}, sys, Grid(32, 3.4e-6 / 32));
  obs.noise_sigma = 1e-3;
  for (std::size_t k = 0; k < 3; ++k) obs.images[k] = inject_noise(obs.images[k], 1e-3, 7 + k);
  SeriesOptions opt;
  opt.fit_center = false;
  opt.fit_defocus_offsets = false;
  EXPECT_THROW(fit_series(obs, sys, {}, opt), SingularityError);
}

TEST(SeriesFit, NeedsTwoPlanes) {
  const ImagingSystem& sys = system_370();
  auto obs = make_series({0.0, 0.1, 1.0}, sys, Grid(32, 3.4e-6 / 32));
  for (auto& img : obs.images) img.defocus_object = 0.0;
  EXPECT_THROW(fit_series(obs, sys), InputError);
  SeriesInit init;
  init.amplitude = -1.0;
  init.phase = 1.0;
  EXPECT_THROW(fit_series(make_series({0.0, 0.1, 1.0}, sys, Grid(32, 3.4e-6 / 32)), sys, init), InputError);
}

TEST(SeriesFit, IterationLimitReportsTrace) {
  const ImagingSystem& sys = system_370();
  const auto obs = make_series({0.0, 0.1, 1.0}, sys, Grid(32, 3.4e-6 / 32), {30e-9, 0.0});
  SeriesOptions opt;
  opt.lm.max_iterations = 1;
  try {
    fit_series(obs, sys, {}, opt);
    FAIL();
  } catch (const ConvergenceError& e) {
    EXPECT_GT(e.final_cost(), 0.0);
    EXPECT_FALSE(e.trace().empty());
  }
}

TEST(SeriesFit, JacobianMatchesCentralDifferences) {
  ImagingSystem sys = system_370();
  sys.aberration = 0.05e12;
  const auto obs = make_series({0.0, 0.1, 1.0}, sys, Grid(32, 3.4e-6 / 32));
  SeriesOptions opt;
  opt.fit_aberration = true;
  opt.fit_rho0 = true;
  detail::SeriesProblem problem(obs, sys, opt);
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int trial = 0; trial < 20; ++trial) {
    Eigen::VectorXd x(problem.size());
    x(0) = 0.1 * u(rng);
    x(1) = 0.1 * u(rng);
    x(problem.center_index()) = 0.05 * u(rng);
    x(problem.center_index() + 1) = 0.05 * u(rng);
    for (Eigen::Index k = 0; k < 3; ++k) x(problem.defocus_index() + k) = 0.2 * u(rng);
    x(problem.aberration_index()) = 0.05 + 0.02 * u(rng);
    x(problem.rho0_index()) = sys.rho0 * 1e3 * (1.0 + 0.1 * u(rng));
    const Eigen::MatrixXd jac = problem.jacobian(x);
    for (Eigen::Index j = 0; j < problem.size(); ++j) {
      const double h = 1e-5 * std::max(1.0, std::abs(x(j)));
      Eigen::VectorXd xp = x, xm = x;
      xp(j) += h;
      xm(j) -= h;
      const Eigen::VectorXd fd = (problem.residuals(xp) - problem.residuals(xm)) / (2 * h);
      EXPECT_LT((jac.col(j) - fd).norm() / fd.norm(), 1e-5) << problem.names()[static_cast<std::size_t>(j)];
    }
  }
}

TEST(SeriesFit, ScalingImagesScalesAmplitudeOnly) {
  const ImagingSystem& sys = system_370();
  const Grid grid(64, 3.4e-6 / 64);
  const auto obs = make_series({9e6, 0.08, 1.69}, sys, grid, {10e-9, 0.0});
  SeriesObservation scaled = obs;
  for (auto& img : scaled.images)
    for (auto& v : img.signal) v *= 2.5;
  const SeriesFit a = fit_series(obs, sys);
  const SeriesFit b = fit_series(scaled, sys);
  EXPECT_NEAR(b.amplitude / a.amplitude, 2.5, 1e-6);
  EXPECT_NEAR(b.phase, a.phase, 1e-6);
}

TEST(SeriesFit, AberrationErrorShiftsPhasesInCommon) {
  ImagingSystem truth = system_370();
  truth.aberration = 0.1e12;
  const Grid grid(64, 3.4e-6 / 64);
  const LineParams line{34e6, 5e6, 0.1};
  std::vector<double> base, up;
  for (double d : {-20e6, 9e6}) {
    const auto obs = make_series(scatter_response(d, line), truth, grid);
    base.push_back(fit_series(obs, truth).phase);
    ImagingSystem wrong = truth;
    wrong.aberration *= 1.1;
    up.push_back(fit_series(obs, wrong).phase);
  }
  EXPECT_GT(std::abs(up[0] - base[0]), 1e-3);
  EXPECT_LT(std::abs((up[1] - up[0]) - (base[1] - base[0])), 0.01);
}

TEST(SeriesFit, CalibrationSeriesRecoversAberration) {
  ImagingSystem truth = system_370();
  truth.aberration = 0.08e12;
  const auto obs = make_series({0.0, 0.1, 1.3}, truth, Grid(64, 3.4e-6 / 64));
  ImagingSystem start = truth;
  start.aberration = 0.05e12;
  SeriesOptions opt;
  opt.fit_aberration = true;
  const SeriesFit fit = fit_series(obs, start, {}, opt);
  EXPECT_NEAR(fit.shared.aberration / truth.aberration, 1.0, 1e-6);
  EXPECT_NEAR(fit.phase, 1.3, 1e-6);
}
