#pragma once

#include "ifgsim/core/field.hpp"
#include "ifgsim/core/parallel.hpp"

#include <cmath>
#include <complex>
#include <cstddef>
#include <numbers>
#include <span>
#include <vector>

namespace ifgsim {

enum class Direction { forward, inverse };

namespace fft {

/// Iterative radix-2 transform of length n (power of two). Twiddles are
/// evaluated directly rather than by recurrence so that accuracy does not
/// degrade with n. No normalization is applied.
class Plan {
public:
  explicit Plan(std::size_t n) : n_(n), twiddle_(n / 2), bitrev_(n) {
    std::size_t bits = 0;
    while ((std::size_t{1} << bits) < n) ++bits;
    for (std::size_t i = 0; i < n; ++i) {
      std::size_t r = 0;
      for (std::size_t b = 0; b < bits; ++b)
        if (i & (std::size_t{1} << b)) r |= std::size_t{1} << (bits - 1 - b);
      bitrev_[i] = r;
    }
    for (std::size_t k = 0; k < n / 2; ++k) {
      const double angle = -2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(n);
      twiddle_[k] = {std::cos(angle), std::sin(angle)};
    }
  }

  std::size_t size() const noexcept { return n_; }

  void execute(std::span<complex> data, Direction dir) const {
    for (std::size_t i = 0; i < n_; ++i)
      if (i < bitrev_[i]) std::swap(data[i], data[bitrev_[i]]);
    for (std::size_t len = 2; len <= n_; len <<= 1) {
      const std::size_t half = len / 2;
      const std::size_t stride = n_ / len;
      for (std::size_t start = 0; start < n_; start += len) {
        for (std::size_t j = 0; j < half; ++j) {
          complex w = twiddle_[j * stride];
          if (dir == Direction::inverse) w = std::conj(w);
          const complex t = w * data[start + j + half];
          data[start + j + half] = data[start + j] - t;
          data[start + j] += t;
        }
      }
    }
  }

private:
  std::size_t n_;
  std::vector<complex> twiddle_;
  std::vector<std::size_t> bitrev_;
};

/// Unnormalized 2-D transform of an n x n row-major array, origin at index 0.
/// Rows and then columns are transformed; each line is an independent task.
inline void transform2d(std::vector<complex>& data, std::size_t n, Direction dir) {
  const Plan plan(n);
  parallel::for_each_index(n, [&](std::size_t row) {
    plan.execute(std::span<complex>(data.data() + row * n, n), dir);
  });
  parallel::for_each_index(n, [&](std::size_t col) {
    std::vector<complex> line(n);
    for (std::size_t r = 0; r < n; ++r) line[r] = data[r * n + col];
    plan.execute(line, dir);
    for (std::size_t r = 0; r < n; ++r) data[r * n + col] = line[r];
  });
}

/// Spatial frequency of DFT bin k for n samples of spacing `pitch`
/// (standard ordering: non-negative frequencies first).
inline double frequency(std::size_t k, std::size_t n, double pitch) {
  const auto kk = static_cast<double>(k);
  const auto nn = static_cast<double>(n);
  return (k < n / 2 ? kk : kk - nn) / (nn * pitch);
}

} // namespace fft

/// Unitary 2-D DFT with the origin at sample n/2 in both domains:
///   F[k] = (1/n) sum_m f[m] exp(-+2 pi i (k - n/2)(m - n/2) / n).
/// The result is sampled on the spatial-frequency grid (pitch 1/(n*pitch),
/// centered on zero frequency). The inverse maps the frequency grid back to
/// a spatial grid of the original pitch; the spatial center offset is not
/// tracked through the transform.
inline Field unitary_dft2(const Field& field, Direction dir) {
  const Grid& g = field.grid();
  const std::size_t n = g.n();
  std::vector<complex> data(field.samples().begin(), field.samples().end());
  // Centering by (-1)^(row+col) on both sides is exact for n divisible by 4.
  auto checkerboard = [&] {
    for (std::size_t r = 0; r < n; ++r)
      for (std::size_t c = (r & 1); c < n; c += 2) data[r * n + c] = -data[r * n + c];
  };
  checkerboard();
  fft::transform2d(data, n, dir);
  checkerboard();
  const double scale = 1.0 / static_cast<double>(n);
  for (auto& v : data) v *= scale;
  const Grid out(n, 1.0 / (static_cast<double>(n) * g.pitch()));
  return Field(out, std::move(data), field.wavelength(), field.z());
}

} // namespace ifgsim
