#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <random>

#include "dpr/priors.hpp"
#include "dpr/synthetic.hpp"

using dpr::complex;

namespace {

// Two-point posterior over x in {0, 1} by direct enumeration.
std::pair<double, double> two_point(complex r, double s, double rho) {
  const double w1 = rho * std::exp(-std::norm(1.0 - r) / (2 * s));
  const double w0 = (1 - rho) * std::exp(-std::norm(r) / (2 * s));
  const double mean = w1 / (w0 + w1);
  return {mean, mean - mean * mean};
}

}  // namespace

TEST(BinaryDenoiser, ZeroPriorMass) {
  for (double s : {1e-6, 0.1, 10.0}) {
    for (double r : {-3.0, 0.0, 0.5, 1.0, 7.0}) {
      const auto p = dpr::binary_denoiser({r, 0.2}, s, 0.0);
      EXPECT_EQ(p.mean, complex(0.0, 0.0));
      EXPECT_EQ(p.var, 0.0);
      const auto q = dpr::binary_denoiser({r, -0.4}, s, 1.0);
      EXPECT_EQ(q.mean, complex(1.0, 0.0));
      EXPECT_EQ(q.var, 0.0);
    }
  }
}

TEST(BinaryDenoiser, MidpointIsUndecided) {
  for (double s : {1e-8, 0.1, 100.0}) {
    const auto p = dpr::binary_denoiser({0.5, 0.0}, s, 0.5);
    EXPECT_DOUBLE_EQ(p.mean.real(), 0.5);
    EXPECT_DOUBLE_EQ(p.var, 0.25);
  }
}

TEST(BinaryDenoiser, TwoPointEnumeration) {
  const auto p = dpr::binary_denoiser({0.8, 0.0}, 0.1, 0.5);
  // log-odds (2r - 1) / (2s) = 3
  const auto [mean3, var3] = two_point({0.8, 0.0}, 0.1, 0.5);
  EXPECT_NEAR(mean3, 1.0 / (1.0 + std::exp(-3.0)), 1e-15);
  EXPECT_NEAR(p.mean.real(), 0.9525741268, 1e-10);
  EXPECT_NEAR(p.var, 0.0451766597, 1e-10);
  EXPECT_NEAR(var3, 0.0451766597, 1e-10);

  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-1.0, 2.0), sp(0.05, 2.0), rp(0.01, 0.99);
  for (int k = 0; k < 500; ++k) {
    const complex r{u(rng), u(rng)};
    const double s = sp(rng), rho = rp(rng);
    const auto [mean, var] = two_point(r, s, rho);
    const auto p = dpr::binary_denoiser(r, s, rho);
    EXPECT_NEAR(p.mean.real(), mean, 1e-12);
    EXPECT_EQ(p.mean.imag(), 0.0);
    EXPECT_NEAR(p.var, var, 1e-12);
  }
}

TEST(BinaryDenoiser, VarianceIdentity) {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(-50.0, 50.0), ls(-12.0, 3.0), rp(0.0, 1.0);
  for (int k = 0; k < 2000; ++k) {
    const auto p = dpr::binary_denoiser({u(rng), u(rng)}, std::pow(10.0, ls(rng)), rp(rng));
    EXPECT_EQ(p.var, p.mean.real() * (1.0 - p.mean.real()));
    EXPECT_GE(p.mean.real(), 0.0);
    EXPECT_LE(p.mean.real(), 1.0);
  }
}

TEST(BinaryDenoiser, ReflectionSymmetry) {
  // x -> 1 - x swaps the roles of 0 and 1
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-2.0, 3.0), sp(0.01, 3.0), rp(0.01, 0.99);
  for (int k = 0; k < 500; ++k) {
    const double r = u(rng), s = sp(rng), rho = rp(rng);
    const auto a = dpr::binary_denoiser({r, 0.0}, s, rho);
    const auto b = dpr::binary_denoiser({1.0 - r, 0.0}, s, 1.0 - rho);
    EXPECT_NEAR(a.mean.real(), 1.0 - b.mean.real(), 1e-12);
    EXPECT_NEAR(a.var, b.var, 1e-12);
  }
}

TEST(BinaryDenoiser, StableForTinyVariance) {
  const auto a = dpr::binary_denoiser({0.6, 0.0}, 1e-300, 0.5);
  EXPECT_EQ(a.mean.real(), 1.0);
  const auto b = dpr::binary_denoiser({0.4, 0.0}, 1e-300, 0.5);
  EXPECT_EQ(b.mean.real(), 0.0);
  const auto c = dpr::binary_denoiser({1e5, 0.0}, 1e-3, 1e-3);
  EXPECT_TRUE(std::isfinite(c.mean.real()));
}

TEST(BinaryDenoiser, ContinuousInR) {
  for (double s : {0.05, 0.5}) {
    // |d mean / d r| <= 1 / (4 s) for the logistic in (2r - 1) / (2s)
    const double lipschitz = 1.0 / (4 * s);
    const double h = 1e-3;
    double prev = dpr::binary_denoiser({-2.0, 0.0}, s, 0.3).mean.real();
    for (double r = -2.0 + h; r <= 3.0; r += h) {
      const double cur = dpr::binary_denoiser({r, 0.0}, s, 0.3).mean.real();
      ASSERT_LE(std::abs(cur - prev), lipschitz * h * 1.001 + 1e-15) << r;
      prev = cur;
    }
  }
}

TEST(BinaryDenoiser, RejectsBadArguments) {
  const double nan = std::numeric_limits<double>::quiet_NaN();
  EXPECT_THROW(dpr::binary_denoiser({nan, 0.0}, 1.0, 0.5), dpr::ArgumentError);
  EXPECT_THROW(dpr::binary_denoiser({0.0, 0.0}, nan, 0.5), dpr::ArgumentError);
  EXPECT_THROW(dpr::binary_denoiser({0.0, 0.0}, 0.0, 0.5), dpr::ArgumentError);
  EXPECT_THROW(dpr::binary_denoiser({0.0, 0.0}, 1.0, 1.5), dpr::ArgumentError);
}

TEST(GaussianDenoiser, Examples) {
  const auto a = dpr::complex_gaussian_denoiser({0.0, 0.0}, 2.0, 3.0);
  EXPECT_EQ(a.mean, complex(0.0, 0.0));
  EXPECT_NEAR(a.var, 3.0 * 2.0 / 5.0, 1e-15);
  const auto b = dpr::complex_gaussian_denoiser({2.0, 0.0}, 1.0, 1.0);
  EXPECT_NEAR(b.mean.real(), 1.0, 1e-15);
  EXPECT_EQ(b.mean.imag(), 0.0);
  EXPECT_NEAR(b.var, 0.5, 1e-15);
  const auto c = dpr::complex_gaussian_denoiser({5.0, 0.0}, 1e12, 1.0);
  EXPECT_NEAR(c.mean.real(), 5e-12, 1e-20);
  EXPECT_NEAR(c.var, 1.0, 1e-11);
}

TEST(GaussianDenoiser, ConjugateUpdateIdentity) {
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> u(-5.0, 5.0), ls(-4.0, 4.0);
  for (int k = 0; k < 1000; ++k) {
    const complex r{u(rng), u(rng)};
    const double s = std::pow(10.0, ls(rng)), v0 = std::pow(10.0, ls(rng));
    const auto p = dpr::complex_gaussian_denoiser(r, s, v0);
    EXPECT_LT(std::abs(p.mean * (v0 + s) - r * v0), 1e-12 * std::abs(r) * (v0 + s) + 1e-300);
    EXPECT_GT(p.var, 0.0);
    EXPECT_LE(p.var, std::min(v0, s));
  }
}

TEST(GaussianDenoiser, RejectsBadArguments) {
  EXPECT_THROW(dpr::complex_gaussian_denoiser({1.0, 0.0}, 0.0, 1.0), dpr::ArgumentError);
  EXPECT_THROW(dpr::complex_gaussian_denoiser({1.0, 0.0}, 1.0, -1.0), dpr::ArgumentError);
  EXPECT_THROW(dpr::complex_gaussian_denoiser({std::numeric_limits<double>::infinity(), 0.0}, 1.0, 1.0),
               dpr::ArgumentError);
}

TEST(LocalPrior, ClampsAllOnes) {
  const dpr::PatternSet ones(dpr::Matrix<std::uint8_t>(3, 5, 1));
  for (double r : dpr::local_prior_estimate(ones)) EXPECT_DOUBLE_EQ(r, 0.999);
}

TEST(LocalPrior, DirectCount) {
  dpr::Matrix<std::uint8_t> bits(2, 4);
  bits(0, 0) = 1;
  const auto rho = dpr::local_prior_estimate(dpr::PatternSet(bits));
  EXPECT_DOUBLE_EQ(rho[0], 0.5);
  for (int j = 1; j < 4; ++j) EXPECT_DOUBLE_EQ(rho[j], 1e-3);
}

TEST(LocalPrior, EmptySetRejected) {
  EXPECT_THROW(dpr::local_prior_estimate(dpr::PatternSet(dpr::Matrix<std::uint8_t>(0, 4))), dpr::ArgumentError);
}

TEST(LocalPrior, SyntheticDigitsShape) {
  const auto set = dpr::synthetic_digits(20, 3000, 7);
  const auto rho = dpr::local_prior_estimate(set.images);
  EXPECT_LT(rho[0], 0.05);                 // corner
  EXPECT_LT(rho[10 * 20 + 10], 0.1);       // centre of the ring
  EXPECT_GT(rho[10 * 20 + 4], 0.3);        // on the ring
}
