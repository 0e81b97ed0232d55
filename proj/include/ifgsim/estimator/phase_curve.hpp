#pragma once

#include "ifgsim/atom/response.hpp"
#include "ifgsim/estimator/levenberg_marquardt.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>
#include <span>
#include <vector>

namespace ifgsim {

struct PhasePoint {
  double detuning = 0.0; ///< Hz
  double phase = 0.0;    ///< rad
  double sigma = 0.0;    ///< rad, > 0
};

struct PhaseCurveFit {
  double gamma = 0.0;        ///< Hz
  double delta0 = 0.0;       ///< Hz
  double gamma_sigma = 0.0;  ///< Hz
  double delta0_sigma = 0.0; ///< Hz
  double chi2 = 0.0;
  int iterations = 0;

  LineParams line(double a0 = 1.0) const { return {gamma, delta0, a0}; }
};

namespace detail {

// Parameters are (gamma, delta0) in MHz so that both are O(1-100).
class PhaseCurveProblem {
public:
  explicit PhaseCurveProblem(std::span<const PhasePoint> points) : points_(points) {}

  Eigen::VectorXd residuals(const Eigen::VectorXd& x) const {
    Eigen::VectorXd r(static_cast<Eigen::Index>(points_.size()));
    for (std::size_t i = 0; i < points_.size(); ++i) {
      const auto& p = points_[i];
      const double u = (p.detuning * 1e-6 - x(1)) / x(0);
      r(static_cast<Eigen::Index>(i)) = (std::atan(u) + std::numbers::pi / 2 - p.phase) / p.sigma;
    }
    return r;
  }

  Eigen::MatrixXd jacobian(const Eigen::VectorXd& x) const {
    Eigen::MatrixXd j(static_cast<Eigen::Index>(points_.size()), 2);
    for (std::size_t i = 0; i < points_.size(); ++i) {
      const auto& p = points_[i];
      const double u = (p.detuning * 1e-6 - x(1)) / x(0);
      const double d = 1.0 / (x(0) * (1.0 + u * u) * p.sigma);
      j(static_cast<Eigen::Index>(i), 0) = -u * d;
      j(static_cast<Eigen::Index>(i), 1) = -d;
    }
    return j;
  }

  bool admissible(const Eigen::VectorXd& x) const { return x(0) > 0.0 && x.allFinite(); }

private:
  std::span<const PhasePoint> points_;
};

} // namespace detail

/// Weighted least-squares fit of phi(delta) = atan((delta - delta0)/gamma) + pi/2.
/// Uncertainties are the square roots of the diagonal of the inverse
/// curvature matrix (J^T W J)^-1, not rescaled by chi2.
inline PhaseCurveFit fit_phase_curve(std::span<const PhasePoint> points, const lm::Options& opt = {}) {
  std::set<double> distinct;
  for (const auto& p : points) {
    if (!std::isfinite(p.detuning) || !std::isfinite(p.phase))
      throw InputError("phase points must be finite");
    if (!(p.sigma > 0.0)) throw InputError("phase uncertainties must be positive");
    distinct.insert(p.detuning);
  }
  if (distinct.size() < 2)
    throw SingularityError("phase curve is rank deficient: all detunings are equal",
                           {"gamma", "delta0"});
  if (points.size() < 3) throw InputError("phase curve fit needs at least 3 points");

  // Start from the linearized law tan(phi - pi/2) = (delta - delta0)/gamma,
  // using points away from the asymptotes.
  double sw = 0, sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (const auto& p : points) {
    const double t = p.phase - std::numbers::pi / 2;
    if (std::abs(t) > 1.2) continue;
    const double c = std::cos(t);
    const double w = std::pow(c * c / p.sigma, 2);
    const double x = p.detuning * 1e-6;
    const double y = std::tan(t);
    sw += w;
    sx += w * x;
    sy += w * y;
    sxx += w * x * x;
    sxy += w * x * y;
  }
  Eigen::VectorXd x0(2);
  const double det = sw * sxx - sx * sx;
  const double slope = det > 0 ? (sw * sxy - sx * sy) / det : 0.0;
  if (slope > 0.0) {
    const double intercept = (sy - slope * sx) / sw;
    x0 << 1.0 / slope, -intercept / slope;
  } else {
    const auto [lo, hi] = std::minmax_element(points.begin(), points.end(),
        [](const PhasePoint& a, const PhasePoint& b) { return a.detuning < b.detuning; });
    const auto mid = std::min_element(points.begin(), points.end(), [](const PhasePoint& a, const PhasePoint& b) {
      return std::abs(a.phase - std::numbers::pi / 2) < std::abs(b.phase - std::numbers::pi / 2);
    });
    x0 << 0.5 * (hi->detuning - lo->detuning) * 1e-6, mid->detuning * 1e-6;
  }

  const detail::PhaseCurveProblem problem(points);
  const lm::Result res = lm::minimize(problem, x0, opt);
  if (!lm::null_directions(res.jacobian).empty())
    throw SingularityError("phase curve is rank deficient at the optimum", {"gamma", "delta0"});
  const Eigen::MatrixXd cov = (res.jacobian.transpose() * res.jacobian).inverse();

  PhaseCurveFit fit;
  fit.gamma = res.x(0) * 1e6;
  fit.delta0 = res.x(1) * 1e6;
  fit.gamma_sigma = std::sqrt(cov(0, 0)) * 1e6;
  fit.delta0_sigma = std::sqrt(cov(1, 1)) * 1e6;
  fit.chi2 = res.residuals.squaredNorm();
  fit.iterations = res.iterations;
  return fit;
}

} // namespace ifgsim
