// Independent reference computations used by the tests. Nothing here calls
// into the library's numerical code.
#pragma once

#include <cmath>
#include <complex>
#include <vector>

namespace oracle {

using complex = std::complex<double>;

/// I1(x)/I0(x) from the standard library Bessel functions where they do not
/// overflow, otherwise from 1 - 1/(2x) - 1/(8x^2) - 1/(8x^3) - 25/(128x^4).
inline double bessel_ratio(double x) {
  if (x == 0.0) return 0.0;
  if (x <= 700.0) return std::cyl_bessel_i(1.0, x) / std::cyl_bessel_i(0.0, x);
  const double u = 1.0 / x;
  return 1.0 - 0.5 * u - 0.125 * u * u - 0.125 * u * u * u - 25.0 / 128.0 * u * u * u * u;
}

/// log I0(x) for x >= 0 without overflow.
inline double log_i0(double x) {
  if (x <= 600.0) return std::log(std::cyl_bessel_i(0.0, x));
  const double u = 1.0 / (8.0 * x);
  return x - 0.5 * std::log(2.0 * M_PI * x) + std::log1p(u + 4.5 * u * u);
}

struct PosteriorMoments {
  complex mean;
  double var = 0.0;  // E|z - mean|^2
};

/// Posterior of z given y for z ~ CN(omega, v) and y = |z + w|,
/// w ~ CN(0, sigma2) (Rician likelihood), by 2-D trapezoidal quadrature in
/// polar coordinates z = r e^{it} with r = u^2. The first pass covers the whole disc that
/// can hold posterior mass; two further passes shrink the radial and angular
/// windows to +-10 posterior standard deviations around the mode region.
inline PosteriorMoments rician_posterior(double y, complex omega, double v, double sigma2, int n = 401) {
  double r_lo = 0.0;
  double r_hi = std::max(std::abs(omega), y) + 10.0 * (std::sqrt(v) + std::sqrt(sigma2));
  double t_mid = std::arg(omega), t_half = M_PI;
  PosteriorMoments out;
  std::vector<double> logw(static_cast<std::size_t>(n) * n);
  for (int pass = 0; pass < 3; ++pass) {
    // r = u^2 so that the integrand vanishes to higher order at r = 0
    const double u_lo = std::sqrt(r_lo), u_hi = std::sqrt(r_hi);
    const double hu = (u_hi - u_lo) / (n - 1);
    const bool full = t_half >= M_PI;
    const double ht = full ? 2.0 * M_PI / n : 2.0 * t_half / (n - 1);
    auto radius = [&](int a) {
      const double u = u_lo + a * hu;
      return u * u;
    };
    auto angle = [&](int b) { return full ? t_mid + b * ht : t_mid - t_half + b * ht; };
    auto weight = [&](int a, int b) {  // trapezoid weights; periodic in t over the full circle
      double w = (a == 0 || a == n - 1) ? 0.5 : 1.0;
      if (!full && (b == 0 || b == n - 1)) w *= 0.5;
      return w;
    };
    double peak = -INFINITY;
    for (int a = 0; a < n; ++a) {
      const double r = radius(a);
      const double ll = -(y * y + r * r) / sigma2 + log_i0(2.0 * y * r / sigma2);
      for (int b = 0; b < n; ++b) {
        const complex z = std::polar(r, angle(b));
        const double lw = ll - std::norm(z - omega) / v + 1.5 * std::log(std::max(r, 1e-300));  // r dr = 2 u^3 du
        logw[static_cast<std::size_t>(a) * n + b] = lw;
        peak = std::max(peak, lw);
      }
    }
    double z0 = 0.0, r1 = 0.0, r2 = 0.0, z2 = 0.0;
    complex z1{}, unit{};
    double t1 = 0.0, t2 = 0.0;
    for (int a = 0; a < n; ++a) {
      const double r = radius(a);
      for (int b = 0; b < n; ++b) {
        const double t = angle(b);
        const complex z = std::polar(r, t);
        const double w = weight(a, b) * std::exp(logw[static_cast<std::size_t>(a) * n + b] - peak);
        z0 += w;
        z1 += w * z;
        z2 += w * r * r;
        r1 += w * r;
        r2 += w * r * r;
        unit += w * std::polar(1.0, t);
        const double dt = std::remainder(t - t_mid, 2.0 * M_PI);
        t1 += w * dt;
        t2 += w * dt * dt;
      }
    }
    out.mean = z1 / z0;
    out.var = std::max(z2 / z0 - std::norm(out.mean), 0.0);

    const double r_mean = r1 / z0;
    const double r_sd = std::sqrt(std::max(r2 / z0 - r_mean * r_mean, 0.0));
    r_lo = std::max(0.0, r_mean - 10.0 * r_sd);
    r_hi = r_mean + 10.0 * r_sd;
    const double resultant = std::abs(unit) / z0;
    if (resultant > 0.999) {  // concentrated in angle
      const double t_mean = t_mid + t1 / z0;
      const double t_sd = std::sqrt(std::max(t2 / z0 - (t1 / z0) * (t1 / z0), 0.0));
      t_mid = t_mean;
      t_half = std::min(M_PI, 10.0 * t_sd);
    } else {
      t_half = M_PI;
    }
  }
  return out;
}

}  // namespace oracle
