#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <random>

#include "dpr/channels.hpp"
#include "oracles.hpp"

using dpr::complex;

TEST(PrOutput, ZeroMeasurement) {
  const auto out = dpr::pr_output(0.0, {1.0, 0.0}, 0.5, 0.5);
  EXPECT_DOUBLE_EQ(out.g.real(), -1.0);
  EXPECT_DOUBLE_EQ(out.g.imag(), 0.0);
}

TEST(PrOutput, ConsistentMeasurementVanishingVariance) {
  // r0 -> 1 cancels the leading term of g; what is left is the 1/(2 phi)
  // tail of the Bessel ratio, so g -> -omega / (4 y |omega|) while the mean
  // correction g (v + sigma2) vanishes.
  const complex omega = std::polar(1.3, 0.4);
  const double y = std::abs(omega);
  for (double t : {1e-5, 1e-7, 1e-9}) {
    const auto out = dpr::pr_output(y, omega, t, t);
    const complex limit = -omega / (4.0 * y * y);
    EXPECT_LT(std::abs(out.g - limit), 2.0 * t * std::abs(limit) + 1e-6) << t;
    EXPECT_LT(std::abs(out.g) * 2.0 * t, t);
    EXPECT_TRUE(std::isfinite(out.g_prime));
  }
}

TEST(PrOutput, ScalarExampleMatchesQuadrature) {
  const double y = 1.0, v = 0.1, s2 = 0.01;
  const complex omega{1.0, 0.0};
  const auto out = dpr::pr_output(y, omega, v, s2);
  const auto post = oracle::rician_posterior(y, omega, v, s2, 201);
  const complex g_ref = (post.mean - omega) / v;
  EXPECT_NEAR(out.g.real(), g_ref.real(), 1e-6);
  EXPECT_NEAR(out.g.imag(), 0.0, 1e-15);
  EXPECT_LT(out.g.real(), 0.0);
  EXPECT_NEAR(std::abs(out.g), 0.25, 0.03);
}

TEST(PrOutput, MatchesRicianPosteriorOnGrid) {
  const double ys[] = {0.1, 1.5, 3.0};
  const double ws[] = {0.1, 1.5, 3.0};
  const double vs[] = {0.01, 0.3, 1.0};
  const double ss[] = {0.01, 0.3, 1.0};
  for (double y : ys)
    for (double w : ws)
      for (double v : vs)
        for (double s2 : ss) {
          const complex omega = std::polar(w, -2.1);
          const auto out = dpr::pr_output(y, omega, v, s2);
          const auto post = oracle::rician_posterior(y, omega, v, s2, 151);
          const complex g_ref = (post.mean - omega) / v;
          const double gp_ref = (post.var / v - 1.0) / v;
          EXPECT_LT(std::abs(out.g - g_ref), 1e-4) << y << ' ' << w << ' ' << v << ' ' << s2;
          EXPECT_LT(std::abs(out.g_prime - gp_ref), 1e-4 * std::max(1.0, std::abs(gp_ref)))
              << y << ' ' << w << ' ' << v << ' ' << s2;
        }
}

TEST(PrOutput, PhaseCovariance) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.05, 3.0), t(-M_PI, M_PI);
  for (int k = 0; k < 200; ++k) {
    const double y = u(rng), v = u(rng) / 3, s2 = u(rng) / 3, theta = t(rng);
    const complex omega = std::polar(u(rng), t(rng));
    const auto a = dpr::pr_output(y, omega, v, s2);
    const auto b = dpr::pr_output(y, omega * std::polar(1.0, theta), v, s2);
    EXPECT_LT(std::abs(b.g - a.g * std::polar(1.0, theta)), 1e-12 * (1 + std::abs(a.g)));
    EXPECT_NEAR(a.g_prime, b.g_prime, 1e-12 * (1 + std::abs(a.g_prime)));
    // collinear with omega
    EXPECT_LT(std::abs(std::imag(a.g * std::conj(omega))), 1e-12 * (1 + std::abs(a.g) * std::abs(omega)));
  }
}

TEST(PrOutput, FiniteAtEdges) {
  for (double w : {0.0, 1e-300, 1e-12, 1.0, 1e6}) {
    for (double y : {0.0, 1e-8, 1.0, 1e6}) {
      for (double v : {0.0, 1e-12, 1.0}) {
        const auto out = dpr::pr_output(y, {w, 0.0}, v, 1e-6);
        EXPECT_TRUE(std::isfinite(out.g.real()) && std::isfinite(out.g.imag())) << w << ' ' << y << ' ' << v;
        EXPECT_TRUE(std::isfinite(out.g_prime)) << w << ' ' << y << ' ' << v;
      }
    }
  }
}

TEST(PrOutput, RejectsNonFiniteInputs) {
  const double nan = std::numeric_limits<double>::quiet_NaN();
  const double inf = std::numeric_limits<double>::infinity();
  EXPECT_THROW(dpr::pr_output(nan, {1, 0}, 1, 1), dpr::ArgumentError);
  EXPECT_THROW(dpr::pr_output(1, {inf, 0}, 1, 1), dpr::ArgumentError);
  EXPECT_THROW(dpr::pr_output(1, {1, 0}, nan, 1), dpr::ArgumentError);
  EXPECT_THROW(dpr::pr_output(1, {1, 0}, 1, inf), dpr::ArgumentError);
  EXPECT_THROW(dpr::pr_output(1, {1, 0}, -1, 1), dpr::ArgumentError);
  EXPECT_THROW(dpr::pr_output(1, {1, 0}, 1, 0), dpr::ArgumentError);
}

TEST(GaussianOutput, Examples) {
  auto a = dpr::gaussian_output(1.0, {1.0, 0.0}, 1.0, 1.0);
  EXPECT_EQ(a.g, complex(0.0, 0.0));
  EXPECT_EQ(a.g_prime, -0.5);
  auto b = dpr::gaussian_output(2.0, {0.0, 0.0}, 0.5, 0.5);
  EXPECT_EQ(b.g, complex(2.0, 0.0));
  EXPECT_EQ(b.g_prime, -1.0);
}

TEST(GaussianOutput, ClosedFormExact) {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(-2.0, 2.0), p(0.01, 2.0);
  for (int k = 0; k < 100; ++k) {
    const double y = u(rng), v = p(rng), s2 = p(rng);
    const complex omega{u(rng), u(rng)};
    const auto out = dpr::gaussian_output(y, omega, v, s2);
    EXPECT_EQ(out.g_prime, -1.0 / (v + s2));
    EXPECT_EQ(out.g, (y - omega) * (1.0 / (v + s2)));
  }
}

TEST(GaussianOutput, FiniteDifferenceOfScore) {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(-2.0, 2.0), p(0.05, 2.0);
  const double h = 1e-6;
  for (int k = 0; k < 50; ++k) {
    const double y = u(rng), v = p(rng), s2 = p(rng);
    const complex omega{u(rng), u(rng)};
    const auto plus = dpr::gaussian_output(y, omega + h, v, s2);
    const auto minus = dpr::gaussian_output(y, omega - h, v, s2);
    const double fd = (plus.g.real() - minus.g.real()) / (2 * h);
    EXPECT_NEAR(fd, dpr::gaussian_output(y, omega, v, s2).g_prime, 1e-6);
  }
}
