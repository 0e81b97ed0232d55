#pragma once

#include "ifgsim/imaging/interferogram.hpp"

#include <cstdint>
#include <random>

namespace ifgsim {

/// Adds independent zero-mean Gaussian noise of standard deviation sigma to
/// every pixel. The sequence depends only on `seed`.
inline Interferogram inject_noise(const Interferogram& img, double sigma, std::uint64_t seed) {
  if (!(sigma >= 0.0) || !std::isfinite(sigma)) throw InputError("noise sigma must be >= 0");
  Interferogram out = img;
  if (sigma == 0.0) return out;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, sigma);
  for (auto& v : out.signal) v += normal(rng);
  return out;
}

} // namespace ifgsim
