#pragma once

#include "ifgsim/estimator/levenberg_marquardt.hpp"
#include "ifgsim/imaging/model.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

namespace ifgsim {

/// Images of one detuning recorded at several viewing planes.
struct SeriesObservation {
  std::vector<Interferogram> images;
  double noise_sigma = 0.0; ///< per-pixel standard deviation, 0 = unknown/noiseless

  void validate() const {
    if (images.empty()) throw InputError("series has no images");
    std::set<double> planes;
    for (const auto& img : images) {
      if (!(img.grid == images.front().grid))
        throw InputError("all images of a series must share one grid");
      if (img.detuning != images.front().detuning)
        throw InputError("all images of a series must share one detuning");
      if (img.signal.size() != img.grid.size()) throw InputError("image size does not match its grid");
      planes.insert(img.defocus_object);
    }
    if (planes.size() < 2)
      throw InputError("series needs at least two distinct viewing planes to identify the phase");
    if (!(noise_sigma >= 0.0)) throw InputError("noise sigma must be >= 0");
  }
};

struct SeriesOptions {
  bool fit_center = true;
  bool fit_defocus_offsets = true;
  bool fit_aberration = false; ///< calibration series only
  bool fit_rho0 = false;       ///< calibration series only
  double thermal_sigma = 0.0;  ///< motional blur included in the model, m
  lm::Options lm;
};

/// Starting point. Without amplitude/phase the scattering amplitude is found
/// by linear least squares at the initial nonlinear parameters (the model is
/// linear in a_sc e^{i phi_sc}).
struct SeriesInit {
  std::optional<double> amplitude;
  std::optional<double> phase;
  Point2 center{};                    ///< object space, m
  std::vector<double> defocus_offsets; ///< object space, m, one per image (empty = zeros)
};

struct SharedParams {
  double aberration = 0.0; ///< rad/m^4
  double rho0 = 0.0;       ///< m
  Point2 center{};         ///< m
  std::vector<double> defocus_offsets; ///< m
};

struct SeriesFit {
  double amplitude = 0.0;
  double phase = 0.0; ///< rad, in (-pi, pi]
  double amplitude_sigma = 0.0;
  double phase_sigma = 0.0;
  SharedParams shared;
  double residual_rms = 0.0;
  /// Fitted parameters in internal units: re/im of a_sc e^{i phi} (a.u.),
  /// center and defocus offsets in um, aberration in rad/mm^4, rho0 in mm.
  std::vector<std::string> parameter_names;
  Eigen::VectorXd parameters;
  Eigen::MatrixXd covariance;
  bool converged = false;
  int iterations = 0;
  std::string stop_reason;
};

namespace detail {

class SeriesProblem {
public:
  SeriesProblem(const SeriesObservation& obs, const ImagingSystem& sys, const SeriesOptions& opt)
      : obs_(obs), sys_(sys), opt_(opt), lattice_(sys) {
    const Grid& g = obs.images.front().grid;
    pixels_ = g.size();
    planes_ = obs.images.size();
    x_.resize(g.n());
    y_.resize(g.n());
    for (std::size_t k = 0; k < g.n(); ++k) {
      x_[k] = g.x(k);
      y_[k] = g.y(k);
    }
    names_ = {"re_amplitude", "im_amplitude"};
    if (opt.fit_center) {
      center_index_ = static_cast<Eigen::Index>(names_.size());
      names_.push_back("center_x_um");
      names_.push_back("center_y_um");
    }
    if (opt.fit_defocus_offsets) {
      defocus_index_ = static_cast<Eigen::Index>(names_.size());
      for (std::size_t k = 0; k < planes_; ++k)
        names_.push_back("defocus_offset_" + std::to_string(k) + "_um");
    }
    if (opt.fit_aberration) {
      aberration_index_ = static_cast<Eigen::Index>(names_.size());
      names_.push_back("aberration_rad_per_mm4");
    }
    if (opt.fit_rho0) {
      rho0_index_ = static_cast<Eigen::Index>(names_.size());
      names_.push_back("rho0_mm");
    }
    observed_.resize(static_cast<Eigen::Index>(pixels_ * planes_));
    for (std::size_t k = 0; k < planes_; ++k)
      for (std::size_t i = 0; i < pixels_; ++i)
        observed_(static_cast<Eigen::Index>(k * pixels_ + i)) = obs.images[k].signal[i];
  }

  const std::vector<std::string>& names() const noexcept { return names_; }
  Eigen::Index size() const noexcept { return static_cast<Eigen::Index>(names_.size()); }
  const Eigen::VectorXd& observed() const noexcept { return observed_; }

  struct State {
    double aberration;
    double rho0;
    Point2 center;
    std::vector<double> defocus; // object space, m (nominal + offset)
  };

  State state(const Eigen::VectorXd& x, const SeriesInit& init) const {
    State s{sys_.aberration, sys_.rho0, init.center, {}};
    if (center_index_ >= 0) s.center = {x(center_index_) * 1e-6, x(center_index_ + 1) * 1e-6};
    for (std::size_t k = 0; k < planes_; ++k) {
      double offset = init.defocus_offsets.empty() ? 0.0 : init.defocus_offsets[k];
      if (defocus_index_ >= 0) offset = x(defocus_index_ + static_cast<Eigen::Index>(k)) * 1e-6;
      s.defocus.push_back(obs_.images[k].defocus_object + offset);
    }
    if (aberration_index_ >= 0) s.aberration = x(aberration_index_) * 1e12;
    if (rho0_index_ >= 0) s.rho0 = x(rho0_index_) * 1e-3;
    return s;
  }

  void set_fixed(const SeriesInit& init) { fixed_ = init; }

  Eigen::VectorXd residuals(const Eigen::VectorXd& x) const { return evaluate(x, nullptr) - observed_; }

  Eigen::MatrixXd jacobian(const Eigen::VectorXd& x) const {
    Eigen::MatrixXd jac;
    evaluate(x, &jac);
    return jac;
  }

  bool admissible(const Eigen::VectorXd& x) const {
    if (!x.allFinite()) return false;
    const State s = state(x, fixed_);
    if (!(s.rho0 > 0.0)) return false;
    try {
      for (double z : s.defocus) check(s, z);
    } catch (const SamplingError&) {
      return false;
    }
    return true;
  }

  void check(const State& s, double zeta_object) const {
    detail::check_defocus_window(image_defocus(zeta_object, sys_), sys_);
    double nu_max = 0.0;
    for (double v : x_) nu_max = std::max(nu_max, std::abs(v - s.center.x));
    for (double v : y_) nu_max = std::max(nu_max, std::abs(v - s.center.y));
    nu_max /= sys_.wavelength * sys_.f_fresnel;
    lattice_.check_sampling(image_defocus(zeta_object, sys_), s.aberration, s.rho0, nu_max);
  }

  /// Complex image transform u~ per plane at fixed nonlinear parameters, as
  /// the two real design columns multiplying re/im of the amplitude.
  Eigen::MatrixXd design(const Eigen::VectorXd& x) const {
    const State s = state(x, fixed_);
    Eigen::MatrixXd cols(observed_.size(), 2);
    const Kernels k = kernels(s.center);
    for (std::size_t p = 0; p < planes_; ++p) {
      const Eigen::MatrixXcd u = plane_transform(s, p, k, Eigen::ArrayXXcd());
      const complex unit_re = complex(0.0, 1.0) * scale();
      const complex unit_im = complex(0.0, 1.0) * complex(0.0, 1.0) * scale();
      cols.col(0).segment(static_cast<Eigen::Index>(p * pixels_), static_cast<Eigen::Index>(pixels_)) =
          real_image(u, unit_re);
      cols.col(1).segment(static_cast<Eigen::Index>(p * pixels_), static_cast<Eigen::Index>(pixels_)) =
          real_image(u, unit_im);
    }
    return cols;
  }

private:
  struct Kernels {
    Eigen::MatrixXcd kx, ky;
  };

  double scale() const noexcept { return 2.0 / lattice_.normalization(); }

  Kernels kernels(Point2 center) const {
    const double s = 1.0 / (sys_.wavelength * sys_.f_fresnel);
    std::vector<double> nx(x_.size()), ny(y_.size());
    for (std::size_t k = 0; k < x_.size(); ++k) nx[k] = (x_[k] - center.x) * s;
    for (std::size_t k = 0; k < y_.size(); ++k) ny[k] = (y_[k] - center.y) * s;
    return {lattice_.kernel(nx), lattice_.kernel(ny)};
  }

  // u~ for plane p, optionally with the integrand multiplied by `weight`.
  Eigen::MatrixXcd plane_transform(const State& s, std::size_t p, const Kernels& k,
                                   const Eigen::ArrayXXcd& weight) const {
    Eigen::MatrixXcd g = lattice_.integrand(image_defocus(s.defocus[p], sys_), s.aberration, s.rho0);
    if (weight.size() != 0) g = (g.array() * weight).matrix();
    return PupilLattice::transform(g, k.ky, k.kx);
  }

  // Re[c * u] flattened row-major, blurred if the model includes motion.
  Eigen::VectorXd real_image(const Eigen::MatrixXcd& u, complex c) const {
    const Eigen::Index n = u.rows();
    std::vector<double> img(static_cast<std::size_t>(n * n));
    for (Eigen::Index r = 0; r < n; ++r)
      for (Eigen::Index col = 0; col < n; ++col)
        img[static_cast<std::size_t>(r * n + col)] = (c * u(r, col)).real();
    if (opt_.thermal_sigma > 0.0) img = gaussian_filter(img, obs_.images.front().grid, opt_.thermal_sigma);
    return Eigen::Map<const Eigen::VectorXd>(img.data(), static_cast<Eigen::Index>(img.size()));
  }

  Eigen::VectorXd evaluate(const Eigen::VectorXd& x, Eigen::MatrixXd* jac) const {
    const State s = state(x, fixed_);
    const complex w(x(0), x(1));
    const complex i(0.0, 1.0);
    const Kernels k = kernels(s.center);
    Eigen::VectorXd model(observed_.size());
    if (jac) jac->setZero(observed_.size(), size());
    const Eigen::Index np = static_cast<Eigen::Index>(pixels_);

    const auto coords = lattice_.coords();
    const Eigen::Index m = static_cast<Eigen::Index>(lattice_.size());
    const double two_pi_over = 2.0 * std::numbers::pi / (sys_.wavelength * sys_.f_fresnel);
    const double defocus_rate = std::numbers::pi / (sys_.f_fresnel * sys_.f_fresnel * sys_.wavelength);

    for (std::size_t p = 0; p < planes_; ++p) {
      const Eigen::Index off = static_cast<Eigen::Index>(p) * np;
      const Eigen::MatrixXcd u = plane_transform(s, p, k, Eigen::ArrayXXcd());
      model.segment(off, np) = real_image(u, i * w * scale());
      if (!jac) continue;
      jac->col(0).segment(off, np) = real_image(u, i * scale());
      jac->col(1).segment(off, np) = real_image(u, i * i * scale());
      const complex c = i * w * scale();
      if (center_index_ >= 0) {
        Eigen::ArrayXXcd wx(m, m), wy(m, m);
        for (Eigen::Index a = 0; a < m; ++a)
          for (Eigen::Index b = 0; b < m; ++b) {
            wx(a, b) = complex(0.0, two_pi_over * coords[static_cast<std::size_t>(b)] * 1e-6);
            wy(a, b) = complex(0.0, two_pi_over * coords[static_cast<std::size_t>(a)] * 1e-6);
          }
        jac->col(center_index_).segment(off, np) = real_image(plane_transform(s, p, k, wx), c);
        jac->col(center_index_ + 1).segment(off, np) = real_image(plane_transform(s, p, k, wy), c);
      }
      const Eigen::ArrayXXd& r2 = lattice_.rho2();
      if (defocus_index_ >= 0) {
        const Eigen::ArrayXXcd wz = r2.cast<complex>() * complex(0.0, defocus_rate * 1e-6);
        jac->col(defocus_index_ + static_cast<Eigen::Index>(p)).segment(off, np) =
            real_image(plane_transform(s, p, k, wz), c);
      }
      if (aberration_index_ >= 0) {
        const Eigen::ArrayXXcd wa = (r2 * r2).cast<complex>() * complex(0.0, 1e12);
        jac->col(aberration_index_).segment(off, np) = real_image(plane_transform(s, p, k, wa), c);
      }
      if (rho0_index_ >= 0) {
        const double r05 = std::pow(s.rho0, 5);
        const Eigen::ArrayXXcd wr = (r2 * r2 * (4.0e-3 / r05)).cast<complex>();
        jac->col(rho0_index_).segment(off, np) = real_image(plane_transform(s, p, k, wr), c);
      }
    }
    return model;
  }

  const SeriesObservation& obs_;
  ImagingSystem sys_;
  SeriesOptions opt_;
  PupilLattice lattice_;
  std::size_t pixels_ = 0;
  std::size_t planes_ = 0;
  std::vector<double> x_, y_;
  std::vector<std::string> names_;
  Eigen::Index center_index_ = -1;
  Eigen::Index defocus_index_ = -1;
  Eigen::Index aberration_index_ = -1;
  Eigen::Index rho0_index_ = -1;
  Eigen::VectorXd observed_;
  SeriesInit fixed_;

public:
  Eigen::Index center_index() const noexcept { return center_index_; }
  Eigen::Index defocus_index() const noexcept { return defocus_index_; }
  Eigen::Index aberration_index() const noexcept { return aberration_index_; }
  Eigen::Index rho0_index() const noexcept { return rho0_index_; }
};

} // namespace detail

/// Fits one detuning series to the forward model by damped least squares on
/// sum over planes and pixels of (S_obs - S_model)^2.
///
/// Free parameters: a_sc e^{i phi_sc} as (re, im), the emitter's transverse
/// position, one defocus offset per plane, and optionally A and rho0. The
/// Jacobian is analytic: each column is the image transform of the integrand
/// times the derivative of its exponent. The covariance is the Gauss-Newton
/// estimate s^2 (J^T J)^-1 with s = noise_sigma, or the residual standard
/// deviation when noise_sigma is 0.
///
/// Throws SingularityError when a parameter combination is not constrained;
/// in particular a vanishing scattering amplitude leaves the phase undefined.
inline SeriesFit fit_series(const SeriesObservation& obs, const ImagingSystem& sys_init,
                            const SeriesInit& init = {}, const SeriesOptions& opt = {}) {
  obs.validate();
  sys_init.validate();
  if (!init.defocus_offsets.empty() && init.defocus_offsets.size() != obs.images.size())
    throw InputError("need one initial defocus offset per image");
  if (init.amplitude && !(*init.amplitude > 0.0))
    throw InputError("initial scattering amplitude must be positive");

  detail::SeriesProblem problem(obs, sys_init, opt);
  problem.set_fixed(init);
  const Eigen::Index p = problem.size();
  Eigen::VectorXd x0 = Eigen::VectorXd::Zero(p);
  if (problem.center_index() >= 0) {
    x0(problem.center_index()) = init.center.x * 1e6;
    x0(problem.center_index() + 1) = init.center.y * 1e6;
  }
  if (problem.defocus_index() >= 0 && !init.defocus_offsets.empty())
    for (std::size_t k = 0; k < init.defocus_offsets.size(); ++k)
      x0(problem.defocus_index() + static_cast<Eigen::Index>(k)) = init.defocus_offsets[k] * 1e6;
  if (problem.aberration_index() >= 0) x0(problem.aberration_index()) = sys_init.aberration * 1e-12;
  if (problem.rho0_index() >= 0) x0(problem.rho0_index()) = sys_init.rho0 * 1e3;
  if (!problem.admissible(x0)) {
    // Surface the specific sampling or range violation.
    const auto s = problem.state(x0, init);
    for (double z : s.defocus) problem.check(s, z);
    throw InputError("initial parameters are not admissible");
  }

  if (init.amplitude && init.phase) {
    x0(0) = *init.amplitude * std::cos(*init.phase);
    x0(1) = *init.amplitude * std::sin(*init.phase);
  } else {
    const Eigen::MatrixXd d = problem.design(x0);
    const Eigen::Vector2d ls = (d.transpose() * d).ldlt().solve(d.transpose() * problem.observed());
    x0(0) = ls(0);
    x0(1) = ls(1);
  }
  if (std::hypot(x0(0), x0(1)) == 0.0 || problem.observed().squaredNorm() == 0.0) {
    std::vector<std::string> null = {"phase"};
    for (Eigen::Index j = 2; j < p; ++j) null.push_back(problem.names()[static_cast<std::size_t>(j)]);
    throw SingularityError("scattering amplitude is zero: the phase and all position parameters are "
                           "unidentifiable",
                           null);
  }

  const lm::Result res = lm::minimize(problem, x0, opt.lm);

  const auto null = lm::null_directions(res.jacobian);
  if (!null.empty()) {
    std::vector<std::string> names;
    std::ostringstream msg;
    msg << "singular Jacobian at the optimum; null direction involves";
    for (auto j : null) {
      names.push_back(problem.names()[static_cast<std::size_t>(j)]);
      msg << ' ' << names.back();
    }
    throw SingularityError(msg.str(), names);
  }

  const Eigen::Index n = res.residuals.size();
  const double s2 = obs.noise_sigma > 0.0
                        ? obs.noise_sigma * obs.noise_sigma
                        : res.residuals.squaredNorm() / static_cast<double>(std::max<Eigen::Index>(1, n - p));
  const Eigen::MatrixXd jtj = res.jacobian.transpose() * res.jacobian;
  Eigen::MatrixXd cov = s2 * jtj.ldlt().solve(Eigen::MatrixXd::Identity(p, p));
  cov = 0.5 * (cov + cov.transpose());

  SeriesFit fit;
  const double re = res.x(0);
  const double im = res.x(1);
  fit.amplitude = std::hypot(re, im);
  fit.phase = std::atan2(im, re);
  if (fit.phase == -std::numbers::pi) fit.phase = std::numbers::pi;
  const double a2 = fit.amplitude * fit.amplitude;
  const Eigen::Vector2d grad_a(re / fit.amplitude, im / fit.amplitude);
  const Eigen::Vector2d grad_phi(-im / a2, re / a2);
  const Eigen::Matrix2d c2 = cov.topLeftCorner(2, 2);
  fit.amplitude_sigma = std::sqrt(std::max(0.0, grad_a.dot(c2 * grad_a)));
  fit.phase_sigma = std::sqrt(std::max(0.0, grad_phi.dot(c2 * grad_phi)));
  if (obs.noise_sigma > 0.0 && fit.amplitude <= 3.0 * fit.amplitude_sigma) {
    std::ostringstream msg;
    msg << "scattering amplitude " << fit.amplitude << " is consistent with zero (sigma "
        << fit.amplitude_sigma << "); the phase is unidentifiable";
    throw SingularityError(msg.str(), {"phase"});
  }

  const auto s = problem.state(res.x, init);
  fit.shared.aberration = s.aberration;
  fit.shared.rho0 = s.rho0;
  fit.shared.center = s.center;
  for (std::size_t k = 0; k < obs.images.size(); ++k)
    fit.shared.defocus_offsets.push_back(s.defocus[k] - obs.images[k].defocus_object);
  fit.residual_rms = std::sqrt(res.residuals.squaredNorm() / static_cast<double>(n));
  fit.parameter_names = problem.names();
  fit.parameters = res.x;
  fit.covariance = cov;
  fit.converged = true;
  fit.iterations = res.iterations;
  fit.stop_reason = res.stop_reason;
  return fit;
}

} // namespace ifgsim
