// Output channels: the GAMP scores g = p_out and g' = p'_out of one
// measurement given the Gaussian belief z ~ CN(omega, v) on its noiseless
// linear projection.
#pragma once

#include <algorithm>
#include <cmath>

#include "dpr/bessel.hpp"
#include "dpr/model.hpp"

namespace dpr {

enum class Channel { Gaussian, PhaseRetrieval };

struct ChannelOutput {
  complex g;
  double g_prime = 0.0;
};

namespace detail {

inline void check_channel_args(const char* who, double y, const complex& omega, double v, double sigma2) {
  if (!std::isfinite(y) || !is_finite(omega) || !std::isfinite(v) || !std::isfinite(sigma2)) {
    throw ArgumentError(std::string(who) + ": non-finite input");
  }
  if (v < 0.0 || !(sigma2 > 0.0)) {
    throw ArgumentError(std::string(who) + ": requires v >= 0 and sigma2 > 0");
  }
}

inline ChannelOutput pr_output_unchecked(double y, complex omega, double v, double sigma2,
                                         double omega_guard) {
  const double total = v + sigma2;
  const double inv = 1.0 / total;
  const double mag = std::max(std::sqrt(std::norm(omega)), omega_guard);
  const double phi = 2.0 * y * mag * inv;
  const double r0 = phi == 0.0 ? 0.0
                    : phi < kBesselSeriesLimit ? bessel_ratio_series(phi)
                                               : bessel_ratio_asymptotic(phi);
  const complex g = omega * (inv * (r0 * y / mag - 1.0));
  const double g_prime = ((1.0 - r0 * r0) * y * y * inv - 1.0) * inv;
  return {g, g_prime};
}

}  // namespace detail

/// Linear channel y = z + w, w ~ N(0, sigma2).
inline ChannelOutput gaussian_output(double y, complex omega, double v, double sigma2) {
  detail::check_channel_args("gaussian_output", y, omega, v, sigma2);
  const double inv = 1.0 / (v + sigma2);
  return {(y - omega) * inv, -inv};
}

/// Phase retrieval channel y = |z + w|, w ~ CN(0, sigma2).
///
/// g' is evaluated as (1 - r0^2) y^2 / (v+sigma2)^2 - 1/(v+sigma2), which is
/// the usual sigma2/v - 1/v form with the cancellation done by hand; it stays
/// finite as v -> 0. |omega| is floored at omega_guard.
inline ChannelOutput pr_output(double y, complex omega, double v, double sigma2,
                               double omega_guard = 1e-12) {
  detail::check_channel_args("pr_output", y, omega, v, sigma2);
  return detail::pr_output_unchecked(y, omega, v, sigma2, omega_guard);
}

namespace detail {

/// Solver hot path: arguments are already known to be finite and in range.
inline ChannelOutput channel_output_unchecked(Channel channel, double y, complex omega, double v,
                                              double sigma2, double omega_guard) {
  if (channel == Channel::Gaussian) {
    const double inv = 1.0 / (v + sigma2);
    return {(y - omega) * inv, -inv};
  }
  return pr_output_unchecked(y, omega, v, sigma2, omega_guard);
}

}  // namespace detail

}  // namespace dpr
