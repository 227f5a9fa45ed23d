// Input denoisers: posterior mean and variance of one coefficient x given the
// pseudo-measurement r = x + noise of variance s.
#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "dpr/model.hpp"

namespace dpr {

struct Posterior {
  complex mean;
  double var = 0.0;
};

/// Bernoulli prior on {0,1} with P(x = 1) = rho and Gaussian likelihood
/// exp(-|x - r|^2 / (2 s)).
///
/// The posterior probability of x = 1 is evaluated as a logistic function of
/// its log-odds, logit(rho) + (2 Re r - 1) / (2 s); this is the exponent
/// difference of the two mixture terms with the larger one factored out, so
/// nothing underflows as s -> 0.
inline Posterior binary_denoiser(complex r, double s, double rho) {
  if (!detail::is_finite(r) || !std::isfinite(s)) {
    throw ArgumentError("binary_denoiser: non-finite input");
  }
  if (!(s > 0.0)) throw ArgumentError("binary_denoiser: s must be positive");
  if (!(rho >= 0.0 && rho <= 1.0)) throw ArgumentError("binary_denoiser: rho outside [0,1]");
  if (rho == 0.0) return {0.0, 0.0};
  if (rho == 1.0) return {1.0, 0.0};

  const double evidence = 2.0 * r.real() - 1.0;
  const double log_odds = std::log(rho) - std::log1p(-rho) + (evidence == 0.0 ? 0.0 : evidence / (2.0 * s));
  double mean;
  if (log_odds >= 0.0) {
    mean = 1.0 / (1.0 + std::exp(-log_odds));
  } else {
    const double e = std::exp(log_odds);
    mean = e / (1.0 + e);
  }
  return {mean, mean * (1.0 - mean)};
}

/// Zero-mean circular complex Gaussian prior of variance v0 (conjugate update).
/// Written in forms that stay finite for s -> infinity.
inline Posterior complex_gaussian_denoiser(complex r, double s, double v0) {
  if (!detail::is_finite(r) || std::isnan(s) || !std::isfinite(v0)) {
    throw ArgumentError("complex_gaussian_denoiser: non-finite input");
  }
  if (!(s > 0.0) || !(v0 > 0.0)) {
    throw ArgumentError("complex_gaussian_denoiser: s and v0 must be positive");
  }
  const complex mean = r / (1.0 + s / v0);
  const double var = v0 / (1.0 + v0 / s);
  return {mean, var};
}

/// Per-pixel activation frequency over a training set, clamped to
/// [floor, 1 - floor].
inline std::vector<double> local_prior_estimate(const PatternSet& training, double floor = 1e-3) {
  if (training.count() == 0) throw ArgumentError("local_prior_estimate: empty training set");
  if (!(floor >= 0.0 && floor <= 0.5)) throw ArgumentError("local_prior_estimate: floor outside [0, 0.5]");
  std::vector<double> rho(training.dim(), 0.0);
  for (std::size_t p = 0; p < training.count(); ++p) {
    const auto pattern = training.pattern(p);
    for (std::size_t i = 0; i < rho.size(); ++i) rho[i] += pattern[i];
  }
  for (double& r : rho) {
    r = std::clamp(r / static_cast<double>(training.count()), floor, 1.0 - floor);
  }
  return rho;
}

}  // namespace dpr
