// Ratio I1(x)/I0(x) of modified Bessel functions of the first kind.
//
// I0 overflows doubles near x = 713, so the ratio is never formed from the
// functions themselves. Below kBesselSeriesLimit both power series are summed
// (their common scale cancels); above it the Hankel asymptotic series of
// I1 and I0 are summed without the shared e^x / sqrt(2 pi x) factor.
#pragma once

#include <array>
#include <cmath>
#include <string>

#include "dpr/model.hpp"

namespace dpr {

inline constexpr double kBesselSeriesLimit = 20.0;

namespace detail {

struct BesselTables {
  static constexpr int kTerms = 96;
  std::array<double, kTerms> inv_k{};     // 1/k
  std::array<double, kTerms> inv_kk{};    // 1/k^2
  std::array<double, kTerms> inv_kk1{};   // 1/(k(k+1))

  constexpr BesselTables() {
    for (int k = 1; k < kTerms; ++k) {
      inv_k[k] = 1.0 / k;
      inv_kk[k] = 1.0 / (static_cast<double>(k) * k);
      inv_kk1[k] = 1.0 / (static_cast<double>(k) * (k + 1));
    }
  }
};

inline constexpr BesselTables kBesselTables{};

inline double bessel_ratio_series(double x) {
  const auto& t = kBesselTables;
  const double q = 0.25 * x * x;
  double a = 1.0, b = 1.0;  // k-th terms of I0 and 2 I1 / x
  double sum_a = 1.0, sum_b = 1.0;
  for (int k = 1; k < BesselTables::kTerms; ++k) {
    a *= q * t.inv_kk[k];
    b *= q * t.inv_kk1[k];
    sum_a += a;
    sum_b += b;
    if (a < 1e-17 * sum_a) break;  // b_k <= a_k and sum_b <= sum_a
  }
  return 0.5 * x * sum_b / sum_a;
}

inline double bessel_ratio_asymptotic(double x) {
  // term_k(nu) = term_{k-1}(nu) * ((2k-1)^2 - 4 nu^2) / (8 k x), nu = 0, 1
  const auto& t = kBesselTables;
  const double inv8x = 0.125 / x;
  double t0 = 1.0, t1 = 1.0;
  double s0 = 1.0, s1 = 1.0;
  for (int k = 1; k < BesselTables::kTerms; ++k) {
    const double odd2 = (2.0 * k - 1.0) * (2.0 * k - 1.0);
    const double step = inv8x * t.inv_k[k];
    const double n0 = t0 * odd2 * step;
    if (n0 > t0) break;  // past the smallest term
    t1 *= (odd2 - 4.0) * step;
    t0 = n0;
    s0 += t0;
    s1 += t1;
    if (t0 < 1e-17 * s0) break;
  }
  return s1 / s0;
}

}  // namespace detail

/// I1(phi)/I0(phi) for finite phi >= 0. Result lies in [0, 1).
inline double bessel_ratio(double phi) {
  if (!(phi >= 0.0) || !std::isfinite(phi)) {
    throw ArgumentError("bessel_ratio: argument must be finite and >= 0, got " + std::to_string(phi));
  }
  if (phi == 0.0) return 0.0;
  return phi < kBesselSeriesLimit ? detail::bessel_ratio_series(phi)
                                  : detail::bessel_ratio_asymptotic(phi);
}

}  // namespace dpr
