#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "dpr/calibration.hpp"
#include "dpr/medium.hpp"

using namespace dpr;

namespace {

// Largest eigenvalue of the Hermitian matrix G = H^* H - shift I by power
// iteration.
double top_eigenvalue(const TransmissionMatrix& h, double shift, int iters = 1500) {
  const std::size_t n = h.cols(), m = h.rows();
  std::vector<complex> x(n, complex(1.0, 0.0)), hx(m), y(n);
  for (std::size_t i = 0; i < n; ++i) x[i] = {std::cos(0.37 * i), std::sin(1.3 * i)};
  double lambda = 0.0;
  for (int it = 0; it < iters; ++it) {
    std::fill(hx.begin(), hx.end(), complex{});
    for (std::size_t r = 0; r < m; ++r)
      for (std::size_t i = 0; i < n; ++i) hx[r] += h(r, i) * x[i];
    std::fill(y.begin(), y.end(), complex{});
    for (std::size_t r = 0; r < m; ++r)
      for (std::size_t i = 0; i < n; ++i) y[i] += std::conj(h(r, i)) * hx[r];
    for (std::size_t i = 0; i < n; ++i) y[i] -= shift * x[i];
    double norm = 0.0, dot = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      norm += std::norm(y[i]);
      dot += std::real(std::conj(x[i]) * y[i]);
    }
    double xn = 0.0;
    for (auto& v : x) xn += std::norm(v);
    lambda = dot / xn;
    norm = std::sqrt(norm);
    for (std::size_t i = 0; i < n; ++i) x[i] = y[i] / norm;
  }
  return lambda;
}

}  // namespace

TEST(GenerateTm, Moments) {
  const auto h = generate_tm(1000, 100, 12);
  complex mean{};
  double power = 0.0, re2 = 0.0;
  for (const auto& z : h.values().data()) {
    mean += z;
    power += std::norm(z);
    re2 += z.real() * z.real();
  }
  const double n = 1000.0 * 100.0;
  EXPECT_LT(std::abs(mean / n), 0.005);
  EXPECT_GE(power / n, 0.0095);
  EXPECT_LE(power / n, 0.0105);
  EXPECT_NEAR(re2 / n, 0.005, 0.0003);
}

TEST(GenerateTm, DeterministicAndDegenerate) {
  EXPECT_EQ(generate_tm(6, 4, 3), generate_tm(6, 4, 3));
  EXPECT_NE(generate_tm(6, 4, 3), generate_tm(6, 4, 4));
  const auto one = generate_tm(1, 1, 0);
  EXPECT_TRUE(std::isfinite(one(0, 0).real()) && std::isfinite(one(0, 0).imag()));
  EXPECT_THROW(generate_tm(0, 3, 0), ArgumentError);
  EXPECT_THROW(generate_tm(3, 0, 0), ArgumentError);
}

TEST(GenerateTm, MarchenkoPasturEdges) {
  // singular values of H (entries CN(0, 1/N)) fill [sqrt(M/N) - 1, sqrt(M/N) + 1]
  const std::size_t m = 800, n = 200;
  const auto h = generate_tm(m, n, 31);
  const double c = std::sqrt(static_cast<double>(m) / n);
  const double lmax = top_eigenvalue(h, 0.0);
  const double lmin = lmax + top_eigenvalue(h, lmax);  // top of (H^*H - lmax I) is lmin - lmax
  EXPECT_NEAR(std::sqrt(lmax), c + 1.0, 0.1 * (c + 1.0));
  EXPECT_NEAR(std::sqrt(std::max(lmin, 0.0)), c - 1.0, 0.1 * (c - 1.0));
}

TEST(Measure, IdentityImpulse) {
  Matrix<complex> eye(4, 4);
  for (int i = 0; i < 4; ++i) eye(i, i) = 1.0;
  const std::vector<double> e1{1, 0, 0, 0};
  const auto y = measure(TransmissionMatrix(eye), std::span<const double>(e1));
  EXPECT_EQ(y, e1);
}

TEST(Measure, GlobalPhaseOfInputIgnored) {
  const auto h = generate_tm(10, 6, 1);
  const std::vector<double> x{1, 0, 1, 1, 0, 1};
  std::vector<complex> rotated(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) rotated[i] = x[i] * std::polar(1.0, 2.2);
  const auto a = measure(h, std::span<const double>(x));
  const auto b = measure(h, std::span<const complex>(rotated));
  for (std::size_t m = 0; m < a.size(); ++m) EXPECT_NEAR(a[m], b[m], 1e-14);
}

TEST(Measure, RowPhaseInvariance) {
  const auto h = generate_tm(12, 8, 5);
  Matrix<complex> rotated = h.values();
  Rng rng = seeded_rng(9, 9);
  for (std::size_t m = 0; m < 12; ++m) {
    const complex phase = std::polar(1.0, 6.283 * uniform01(rng));
    for (auto& z : rotated.row(m)) z *= phase;
  }
  const auto x = gen_bernoulli_patterns(20, 8, 0.5, 2);
  const auto a = measure_batch(h, x);
  const auto b = measure_batch(TransmissionMatrix(rotated), x);
  for (std::size_t m = 0; m < 12; ++m)
    for (std::size_t p = 0; p < 20; ++p) EXPECT_NEAR(a(m, p), b(m, p), 1e-14);
}

TEST(Measure, ZeroNoiseEquivalence) {
  const auto h = generate_tm(30, 64, 2);
  const auto x = gen_bernoulli_patterns(1, 64, 0.5, 1);
  const auto clean = measure(h, x.pattern(0));
  EXPECT_EQ(measure(h, x.pattern(0), IntensityGaussianNoise{0.0}, 3), clean);
  EXPECT_EQ(measure(h, x.pattern(0), AmplitudeGaussianNoise{0.0}, 3), clean);
}

TEST(Measure, NoiseClampsAndIsSeeded) {
  const auto h = generate_tm(200, 16, 2);
  const auto x = gen_bernoulli_patterns(1, 16, 0.5, 1);
  const auto a = measure(h, x.pattern(0), AmplitudeGaussianNoise{5.0}, 3);
  const auto b = measure(h, x.pattern(0), AmplitudeGaussianNoise{5.0}, 3);
  const auto c = measure(h, x.pattern(0), AmplitudeGaussianNoise{5.0}, 4);
  EXPECT_EQ(a, b);
  EXPECT_NE(a, c);
  EXPECT_TRUE(std::any_of(a.begin(), a.end(), [](double v) { return v == 0.0; }));
  for (double v : measure(h, x.pattern(0), IntensityGaussianNoise{5.0}, 3)) EXPECT_GE(v, 0.0);
  EXPECT_THROW(measure(h, x.pattern(0), AmplitudeGaussianNoise{-1.0}, 3), ArgumentError);
}

TEST(Measure, DimensionMismatch) {
  const auto h = generate_tm(3, 4, 0);
  const std::vector<double> x(5, 1.0);
  EXPECT_THROW(measure(h, std::span<const double>(x)), ArgumentError);
  EXPECT_THROW(measure_batch(h, gen_bernoulli_patterns(2, 5, 0.5, 0)), ArgumentError);
}

TEST(MeasureBatch, MatchesLoopAndPermutes) {
  const auto h = generate_tm(9, 12, 4);
  const auto x = gen_bernoulli_patterns(7, 12, 0.5, 5);
  const NoiseModel noise = IntensityGaussianNoise{0.05};
  const auto batch = measure_batch(h, x, noise, 77);
  for (std::size_t p = 0; p < 7; ++p) {
    const auto col = measure(h, x.pattern(p), noise, 77 ^ p);
    for (std::size_t m = 0; m < 9; ++m) EXPECT_EQ(batch(m, p), col[m]);
  }
  // single pattern reduces to measure
  Matrix<std::uint8_t> one(1, 12);
  std::copy_n(x.pattern(3).begin(), 12, one.row(0).begin());
  const auto single = measure_batch(h, PatternSet(one));
  const auto direct = measure(h, x.pattern(3));
  for (std::size_t m = 0; m < 9; ++m) EXPECT_EQ(single(m, 0), direct[m]);
  // permuting noiseless patterns permutes columns
  Matrix<std::uint8_t> rev(7, 12);
  for (std::size_t p = 0; p < 7; ++p) std::copy_n(x.pattern(6 - p).begin(), 12, rev.row(p).begin());
  const auto a = measure_batch(h, x);
  const auto b = measure_batch(h, PatternSet(rev));
  for (std::size_t p = 0; p < 7; ++p)
    for (std::size_t m = 0; m < 9; ++m) EXPECT_EQ(a(m, p), b(m, 6 - p));
}
