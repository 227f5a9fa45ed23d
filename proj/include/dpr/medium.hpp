// Simulated multiply scattering medium: i.i.d. circular complex Gaussian
// transmission matrices and intensity-only (amplitude) measurements.
#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <variant>
#include <vector>

#include "dpr/model.hpp"

namespace dpr {

struct NoNoise {};
/// y = max(|Hx| + w, 0), w ~ N(0, sigma^2).
struct AmplitudeGaussianNoise {
  double sigma = 0.0;
};
/// I = |Hx|^2 + w, w ~ N(0, sigma^2); y = sqrt(max(I, 0)).
struct IntensityGaussianNoise {
  double sigma = 0.0;
};

using NoiseModel = std::variant<NoNoise, AmplitudeGaussianNoise, IntensityGaussianNoise>;

/// M x N matrix with entries CN(0, 1/N).
inline TransmissionMatrix generate_tm(std::size_t rows, std::size_t cols, std::uint64_t seed) {
  if (rows == 0 || cols == 0) throw ArgumentError("generate_tm: dimensions must be >= 1");
  Rng rng = seeded_rng(seed, kMediumStream);
  const double sd = std::sqrt(0.5 / static_cast<double>(cols));
  Matrix<complex> h(rows, cols);
  for (auto& z : h.data()) {
    const double re = standard_normal(rng);
    const double im = standard_normal(rng);
    z = {sd * re, sd * im};
  }
  return TransmissionMatrix(std::move(h));
}

namespace detail {

inline void check_noise(const NoiseModel& noise) {
  std::visit(
      [](const auto& n) {
        if constexpr (!std::is_same_v<std::decay_t<decltype(n)>, NoNoise>) {
          if (!(n.sigma >= 0.0) || !std::isfinite(n.sigma)) throw ArgumentError("noise sigma must be >= 0");
        }
      },
      noise);
}

template <class X>
std::vector<double> measure_impl(const TransmissionMatrix& h, std::span<const X> x, const NoiseModel& noise,
                                 std::uint64_t seed) {
  if (x.size() != h.cols()) {
    throw ArgumentError("measure: input has length " + std::to_string(x.size()) + ", medium expects " +
                        std::to_string(h.cols()));
  }
  check_noise(noise);
  std::vector<double> y(h.rows());
  for (std::size_t m = 0; m < h.rows(); ++m) {
    const auto row = h.row(m);
    complex acc{};
    for (std::size_t i = 0; i < row.size(); ++i) acc += row[i] * static_cast<complex>(x[i]);
    y[m] = std::abs(acc);
  }
  if (std::holds_alternative<NoNoise>(noise)) return y;

  Rng rng = seeded_rng(seed, kNoiseStream);
  if (const auto* a = std::get_if<AmplitudeGaussianNoise>(&noise)) {
    for (double& v : y) v = std::max(v + a->sigma * standard_normal(rng), 0.0);
  } else {
    const double sigma = std::get<IntensityGaussianNoise>(noise).sigma;
    for (double& v : y) v = std::sqrt(std::max(v * v + sigma * standard_normal(rng), 0.0));
  }
  return y;
}

}  // namespace detail

inline std::vector<double> measure(const TransmissionMatrix& h, std::span<const complex> x,
                                   const NoiseModel& noise = NoNoise{}, std::uint64_t seed = 0) {
  return detail::measure_impl(h, x, noise, seed);
}
inline std::vector<double> measure(const TransmissionMatrix& h, std::span<const double> x,
                                   const NoiseModel& noise = NoNoise{}, std::uint64_t seed = 0) {
  return detail::measure_impl(h, x, noise, seed);
}
inline std::vector<double> measure(const TransmissionMatrix& h, std::span<const std::uint8_t> x,
                                   const NoiseModel& noise = NoNoise{}, std::uint64_t seed = 0) {
  std::vector<double> real(x.begin(), x.end());
  return detail::measure_impl(h, std::span<const double>(real), noise, seed);
}

/// Column p holds measure(H, pattern p, noise, seed ^ p).
inline MeasurementSet measure_batch(const TransmissionMatrix& h, const PatternSet& patterns,
                                    const NoiseModel& noise = NoNoise{}, std::uint64_t seed = 0) {
  if (patterns.dim() != h.cols()) {
    throw ArgumentError("measure_batch: patterns have dimension " + std::to_string(patterns.dim()) +
                        ", medium expects " + std::to_string(h.cols()));
  }
  Matrix<double> y(h.rows(), patterns.count());
  for (std::size_t p = 0; p < patterns.count(); ++p) {
    const auto col = measure(h, patterns.pattern(p), noise, seed ^ static_cast<std::uint64_t>(p));
    for (std::size_t m = 0; m < h.rows(); ++m) y(m, p) = col[m];
  }
  return MeasurementSet(std::move(y));
}

}  // namespace dpr
