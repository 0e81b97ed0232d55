#pragma once

#include "ifgsim/core/errors.hpp"

#include <cmath>
#include <cstddef>
#include <sstream>

namespace ifgsim {

struct Point2 {
  double x = 0.0;
  double y = 0.0;
};

/// Square sampling grid. Sample (row, col) sits at
///   x = center.x + (col - n/2) * pitch,  y = center.y + (row - n/2) * pitch
/// so that index n/2 lies on the grid center. Storage is row-major (row = y).
class Grid {
public:
  Grid(std::size_t n, double pitch, Point2 center = {}) : n_(n), pitch_(pitch), center_(center) {
    if (n < 16 || (n & (n - 1)) != 0) {
      std::ostringstream msg;
      msg << "grid size must be a power of two >= 16, got " << n;
      throw ConfigError(msg.str());
    }
    if (!(pitch > 0.0) || !std::isfinite(pitch)) throw ConfigError("grid pitch must be positive");
    if (!std::isfinite(center.x) || !std::isfinite(center.y))
      throw ConfigError("grid center offset must be finite");
  }

  std::size_t n() const noexcept { return n_; }
  std::size_t size() const noexcept { return n_ * n_; }
  double pitch() const noexcept { return pitch_; }
  Point2 center() const noexcept { return center_; }
  double side_length() const noexcept { return static_cast<double>(n_) * pitch_; }

  double x(std::size_t col) const noexcept {
    return center_.x + (static_cast<double>(col) - static_cast<double>(n_ / 2)) * pitch_;
  }
  double y(std::size_t row) const noexcept {
    return center_.y + (static_cast<double>(row) - static_cast<double>(n_ / 2)) * pitch_;
  }
  std::size_t index(std::size_t row, std::size_t col) const noexcept { return row * n_ + col; }

  /// Same sample layout with every length multiplied by `factor` (e.g. the
  /// object-to-image magnification).
  Grid scaled(double factor) const {
    return Grid(n_, pitch_ * factor, {center_.x * factor, center_.y * factor});
  }

  friend bool operator==(const Grid& a, const Grid& b) noexcept {
    return a.n_ == b.n_ && a.pitch_ == b.pitch_ && a.center_.x == b.center_.x &&
           a.center_.y == b.center_.y;
  }

private:
  std::size_t n_;
  double pitch_;
  Point2 center_;
};

} // namespace ifgsim
