#pragma once

#include "ifgsim/imaging/system.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <numbers>
#include <sstream>
#include <span>
#include <vector>

namespace ifgsim {

/// Square midpoint lattice over the aperture stop of the Fresnel lens.
///
/// The lattice spans [-R, R]^2 with R = f_F tan(asin NA) and never depends on
/// rho0 or A, so the discretized model is smooth in both. Samples outside the
/// stop carry zero weight. The integrand of the image-plane transform is
///   g(rho) = exp(i pi zeta rho^2 / (f_R^2 lambda)) p_S(rho) exp(i A rho^4) / sqrt(f_F^2 + rho^2)
/// with zeta the image-space defocus; pi zeta/f_R^2 equals pi zeta_obj/f_F^2
/// for the object-space displacement zeta_obj = zeta / M^2.
class PupilLattice {
public:
  explicit PupilLattice(const ImagingSystem& sys)
      : f_fresnel_(sys.f_fresnel), f_reimage_(sys.f_reimage), wavelength_(sys.wavelength),
        radius_(sys.pupil_radius()), step_(sys.pupil_step()), coords_(sys.pupil_samples) {
    sys.validate();
    const std::size_t n = sys.pupil_samples;
    for (std::size_t j = 0; j < n; ++j)
      coords_[j] = (static_cast<double>(j) - static_cast<double>(n / 2) + 0.5) * step_;
    rho2_.resize(n, n);
    weight_.resize(n, n);
    const double area = step_ * step_;
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        const double r2 = coords_[i] * coords_[i] + coords_[j] * coords_[j];
        rho2_(i, j) = r2;
        weight_(i, j) = r2 <= radius_ * radius_ ? area / std::sqrt(f_fresnel_ * f_fresnel_ + r2) : 0.0;
      }
    }
    normalization_ = 2.0 * std::numbers::pi *
                     (std::sqrt(f_fresnel_ * f_fresnel_ + radius_ * radius_) - f_fresnel_);
  }

  std::size_t size() const noexcept { return coords_.size(); }
  double step() const noexcept { return step_; }
  double radius() const noexcept { return radius_; }
  std::span<const double> coords() const noexcept { return coords_; }
  const Eigen::ArrayXXd& rho2() const noexcept { return rho2_; }

  /// Integral of 1/sqrt(f_F^2 + rho^2) over the unapodized stop. Image fields
  /// are expressed in units of this on-axis value so that a_sc is
  /// dimensionless and independent of rho0.
  double normalization() const noexcept { return normalization_; }

  /// Largest |zeta_image| keeping the defocus phase step between adjacent
  /// lattice samples at the stop edge below pi.
  double max_defocus_image() const noexcept {
    return f_reimage_ * f_reimage_ * wavelength_ / (2.0 * radius_ * step_);
  }

  /// Sampled integrand g (including the lattice cell area), rows = y.
  Eigen::MatrixXcd integrand(double zeta_image, double aberration, double rho0) const {
    const std::size_t n = size();
    const double defocus = std::numbers::pi * zeta_image / (f_reimage_ * f_reimage_ * wavelength_);
    const double inv_r04 = 1.0 / (rho0 * rho0 * rho0 * rho0);
    Eigen::MatrixXcd g(n, n);
    for (std::size_t j = 0; j < n; ++j) {
      for (std::size_t i = 0; i < n; ++i) {
        const double w = weight_(i, j);
        if (w == 0.0) {
          g(i, j) = 0.0;
          continue;
        }
        const double r2 = rho2_(i, j);
        const double r4 = r2 * r2;
        g(i, j) = std::polar(w * std::exp(-r4 * inv_r04), defocus * r2 + aberration * r4);
      }
    }
    return g;
  }

  /// Kernel rows exp(-2 pi i rho_j nu_a) for the requested spatial frequencies.
  Eigen::MatrixXcd kernel(std::span<const double> nu) const {
    Eigen::MatrixXcd k(static_cast<Eigen::Index>(nu.size()), static_cast<Eigen::Index>(size()));
    for (std::size_t j = 0; j < size(); ++j)
      for (std::size_t a = 0; a < nu.size(); ++a)
        k(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(j)) =
            std::polar(1.0, -2.0 * std::numbers::pi * coords_[j] * nu[a]);
    return k;
  }

  /// Separable Fourier sum: result(a, b) = sum_ij ky(a,i) g(i,j) kx(b,j).
  static Eigen::MatrixXcd transform(const Eigen::MatrixXcd& g, const Eigen::MatrixXcd& ky,
                                    const Eigen::MatrixXcd& kx) {
    const Eigen::MatrixXcd partial = ky * g;
    return partial * kx.transpose();
  }

  /// Throws unless the lattice resolves the pupil width, the defocus and
  /// aberration phases, and the requested frequency window.
  void check_sampling(double zeta_image, double aberration, double rho0, double max_frequency) const {
    if (rho0 < 8.0 * step_) {
      std::ostringstream msg;
      msg << "pupil undersampled: rho0 spans " << rho0 / step_
          << " lattice samples (< 8); increase pupil_samples";
      throw SamplingError(msg.str(), 8.0 * step_);
    }
    const double zeta_limit = max_defocus_image();
    if (std::abs(zeta_image) > zeta_limit) {
      std::ostringstream msg;
      msg << "defocus phase undersampled on the pupil lattice: |zeta_image| = " << std::abs(zeta_image)
          << " m exceeds " << zeta_limit << " m";
      throw SamplingError(msg.str(), zeta_limit);
    }
    const double aberration_step = 4.0 * std::abs(aberration) * radius_ * radius_ * radius_ * step_;
    if (aberration_step > std::numbers::pi) {
      const double limit = std::numbers::pi / (4.0 * radius_ * radius_ * radius_ * step_);
      std::ostringstream msg;
      msg << "aberration phase undersampled on the pupil lattice: |A| = " << std::abs(aberration)
          << " rad/m^4 exceeds " << limit;
      throw SamplingError(msg.str(), limit);
    }
    if (max_frequency * step_ >= 0.5) {
      std::ostringstream msg;
      msg << "image window exceeds the pupil lattice bandwidth (nu_max * step = "
          << max_frequency * step_ << " >= 0.5)";
      throw SamplingError(msg.str(), 0.5 / step_);
    }
  }

private:
  double f_fresnel_;
  double f_reimage_;
  double wavelength_;
  double radius_;
  double step_;
  std::vector<double> coords_;
  Eigen::ArrayXXd rho2_;
  Eigen::ArrayXXd weight_;
  double normalization_ = 1.0;
};

} // namespace ifgsim
