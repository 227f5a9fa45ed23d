// Synthetic stand-in for the MNIST-derived datasets: binary images whose
// pixels are independent Bernoulli draws from a fixed digit-like activation
// map (a ring, bright where strokes of a "0" would be). Used when no MNIST
// files are available.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "dpr/dataio.hpp"
#include "dpr/model.hpp"

namespace dpr {

/// Per-pixel activation probability for a side x side image:
/// 0.02 + 0.6 exp(-(d - R)^2 / (2 w^2)), d the distance to the centre,
/// R = 0.28 side, w = 0.09 side.
inline std::vector<double> ring_activation_map(std::size_t side) {
  std::vector<double> rho(side * side);
  const double c = 0.5 * (static_cast<double>(side) - 1.0);
  const double radius = 0.28 * static_cast<double>(side);
  const double width = 0.09 * static_cast<double>(side);
  for (std::size_t r = 0; r < side; ++r) {
    for (std::size_t k = 0; k < side; ++k) {
      const double d = std::hypot(static_cast<double>(r) - c, static_cast<double>(k) - c);
      rho[r * side + k] = 0.02 + 0.6 * std::exp(-(d - radius) * (d - radius) / (2.0 * width * width));
    }
  }
  return rho;
}

/// `count` images with pixel i ~ Bernoulli(rho[i]); all-zero draws are redrawn.
inline BinaryImageSet sample_binary_images(std::span<const double> rho, std::size_t height, std::size_t width,
                                           std::size_t count, std::uint64_t seed) {
  if (rho.size() != height * width) throw ArgumentError("sample_binary_images: map size mismatch");
  if (std::any_of(rho.begin(), rho.end(), [](double p) { return !(p >= 0.0 && p <= 1.0); })) {
    throw ArgumentError("sample_binary_images: probabilities must lie in [0,1]");
  }
  if (count > 0 && std::all_of(rho.begin(), rho.end(), [](double p) { return p == 0.0; })) {
    throw ArgumentError("sample_binary_images: all-zero map cannot produce a non-empty image");
  }
  Rng rng = seeded_rng(seed, kPatternStream);
  Matrix<std::uint8_t> bits(count, rho.size());
  for (std::size_t k = 0; k < count; ++k) {
    bool any = false;
    while (!any) {
      for (std::size_t i = 0; i < rho.size(); ++i) {
        bits(k, i) = uniform01(rng) < rho[i] ? 1 : 0;
        any = any || bits(k, i);
      }
    }
  }
  return {height, width, PatternSet(std::move(bits))};
}

inline BinaryImageSet synthetic_digits(std::size_t side, std::size_t count, std::uint64_t seed) {
  const auto rho = ring_activation_map(side);
  return sample_binary_images(rho, side, side, count, seed);
}

}  // namespace dpr
