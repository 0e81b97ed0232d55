#pragma once

#include "ifgsim/core/errors.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

namespace ifgsim::lm {

struct Options {
  int max_iterations = 200;
  double cost_tolerance = 1e-10; ///< relative decrease of the cost on an accepted step
  double step_tolerance = 1e-12; ///< step norm relative to the parameter norm
  double initial_damping = 1e-3;
  /// Lower bound on the damping scale of each parameter, as a fraction of the
  /// largest diagonal entry of J^T J. Keeps weakly determined parameters from
  /// forcing a large damping onto every other direction.
  double scaling_floor = 1e-2;
};

struct Result {
  Eigen::VectorXd x;
  double cost = 0.0; ///< 0.5 * |r|^2
  int iterations = 0;
  std::string stop_reason;
  Eigen::MatrixXd jacobian;
  Eigen::VectorXd residuals;
  std::vector<std::vector<double>> trace;
};

/// Damped Gauss-Newton with floored Marquardt diagonal scaling and gain-ratio control
/// of the damping (trust region in the scaled metric).
///
/// `Problem` provides
///   Eigen::VectorXd residuals(const Eigen::VectorXd& x) const;
///   Eigen::MatrixXd jacobian(const Eigen::VectorXd& x) const;
///   bool admissible(const Eigen::VectorXd& x) const;
/// Throws ConvergenceError if no stopping test is met within max_iterations.
template <class Problem>
Result minimize(const Problem& problem, Eigen::VectorXd x, const Options& opt = {}) {
  Result res;
  Eigen::VectorXd r = problem.residuals(x);
  double cost = 0.5 * r.squaredNorm();
  Eigen::MatrixXd jac = problem.jacobian(x);
  double damping = opt.initial_damping;
  double growth = 2.0;
  auto record = [&] { res.trace.emplace_back(x.data(), x.data() + x.size()); };
  record();

  for (int iter = 1; iter <= opt.max_iterations; ++iter) {
    res.iterations = iter;
    if (cost == 0.0) {
      res.stop_reason = "zero residual";
      break;
    }
    const Eigen::MatrixXd jtj = jac.transpose() * jac;
    const Eigen::VectorXd gradient = jac.transpose() * r;
    Eigen::VectorXd diag = jtj.diagonal();
    const double floor = opt.scaling_floor * diag.maxCoeff();
    for (Eigen::Index i = 0; i < diag.size(); ++i) {
      if (diag(i) < floor) diag(i) = floor;
      if (!(diag(i) > 0.0)) diag(i) = 1.0;
    }

    bool accepted = false;
    double new_cost = cost;
    Eigen::VectorXd step;
    Eigen::VectorXd trial_r;
    Eigen::VectorXd trial;
    while (!accepted) {
      Eigen::MatrixXd lhs = jtj;
      lhs.diagonal() += damping * diag;
      step = lhs.ldlt().solve(-gradient);
      if (!step.allFinite()) {
        damping *= growth;
        growth *= 2.0;
        if (damping > 1e30) break;
        continue;
      }
      trial = x + step;
      if (!problem.admissible(trial)) {
        damping *= growth;
        growth *= 2.0;
        if (damping > 1e30) break;
        continue;
      }
      trial_r = problem.residuals(trial);
      new_cost = 0.5 * trial_r.squaredNorm();
      const double predicted = -(gradient.dot(step) + 0.5 * step.dot(jtj * step));
      const double gain = predicted > 0.0 ? (cost - new_cost) / predicted : -1.0;
      if (std::isfinite(new_cost) && new_cost < cost && gain > 0.0) {
        accepted = true;
        damping *= std::max(1.0 / 3.0, 1.0 - std::pow(2.0 * gain - 1.0, 3));
        growth = 2.0;
      } else {
        damping *= growth;
        growth *= 2.0;
        if (damping > 1e30) break;
      }
    }

    const double step_norm = accepted ? step.norm() : 0.0;
    if (!accepted) {
      // No descent possible at any damping: the gradient is numerically zero.
      res.stop_reason = "no further descent";
      break;
    }
    const double decrease = cost - new_cost;
    x = trial;
    r = trial_r;
    const double old_cost = cost;
    cost = new_cost;
    jac = problem.jacobian(x);
    record();
    if (decrease < opt.cost_tolerance * old_cost) {
      res.stop_reason = "relative cost decrease below tolerance";
      break;
    }
    if (step_norm < opt.step_tolerance * (x.norm() + opt.step_tolerance)) {
      res.stop_reason = "step below tolerance";
      break;
    }
    if (iter == opt.max_iterations) {
      std::ostringstream msg;
      msg << "least squares did not converge in " << opt.max_iterations
          << " iterations; final cost " << cost;
      throw ConvergenceError(msg.str(), cost, res.trace);
    }
  }
  res.x = x;
  res.cost = cost;
  res.jacobian = std::move(jac);
  res.residuals = std::move(r);
  return res;
}

/// Columns of `jac` that carry no information, then near-null combinations of
/// the column-normalized normal matrix. Returns the indices of the
/// parameters involved (empty when the Jacobian has full rank).
inline std::vector<Eigen::Index> null_directions(const Eigen::MatrixXd& jac, double tolerance = 1e-12) {
  std::vector<Eigen::Index> out;
  const Eigen::Index p = jac.cols();
  Eigen::VectorXd norms(p);
  for (Eigen::Index j = 0; j < p; ++j) norms(j) = jac.col(j).norm();
  const double largest = norms.maxCoeff();
  for (Eigen::Index j = 0; j < p; ++j)
    if (!(norms(j) > tolerance * largest)) out.push_back(j);
  if (!out.empty() || !(largest > 0.0)) {
    if (!(largest > 0.0)) {
      out.clear();
      for (Eigen::Index j = 0; j < p; ++j) out.push_back(j);
    }
    return out;
  }
  Eigen::MatrixXd scaled = jac;
  for (Eigen::Index j = 0; j < p; ++j) scaled.col(j) /= norms(j);
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(scaled.transpose() * scaled);
  if (eig.eigenvalues()(0) < tolerance * eig.eigenvalues()(p - 1)) {
    const Eigen::VectorXd v = eig.eigenvectors().col(0);
    for (Eigen::Index j = 0; j < p; ++j)
      if (std::abs(v(j)) > 0.3) out.push_back(j);
  }
  return out;
}

} // namespace ifgsim::lm
