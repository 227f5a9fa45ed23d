// Core value types shared by every stage of the double phase retrieval
// pipeline: dense matrices, the transmission matrix, calibration pattern and
// measurement sets, solver options, input priors, and seeded random streams.
#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace dpr {

using complex = std::complex<double>;

/// Raised for precondition violations: bad dimensions, out-of-domain values.
class ArgumentError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

namespace detail {

inline bool is_finite(double x) { return std::isfinite(x); }
inline bool is_finite(const complex& z) {
  return std::isfinite(z.real()) && std::isfinite(z.imag());
}
inline bool is_finite(std::uint8_t) { return true; }

}  // namespace detail

/// Dense row-major matrix. Zero-sized dimensions are allowed; they model the
/// vacuous M = 0 calibration.
template <class T>
class Matrix {
 public:
  using value_type = T;

  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, T fill = T{})
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
  Matrix(std::size_t rows, std::size_t cols, std::vector<T> data)
      : rows_(rows), cols_(cols), data_(std::move(data)) {
    if (data_.size() != rows_ * cols_) {
      throw ArgumentError("matrix payload has " + std::to_string(data_.size()) +
                          " entries, expected " + std::to_string(rows_) + "x" +
                          std::to_string(cols_));
    }
  }

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  T& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  const T& operator()(std::size_t r, std::size_t c) const {
    return data_[r * cols_ + c];
  }

  std::span<T> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const T> row(std::size_t r) const {
    return {data_.data() + r * cols_, cols_};
  }

  std::span<T> data() { return data_; }
  std::span<const T> data() const { return data_; }

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<T> data_;
};

/// Complex M x N medium operator H (true or estimated).
class TransmissionMatrix {
 public:
  TransmissionMatrix() = default;
  explicit TransmissionMatrix(Matrix<complex> values) : values_(std::move(values)) {
    for (const auto& z : values_.data()) {
      if (!detail::is_finite(z)) throw ArgumentError("transmission matrix has non-finite entry");
    }
  }

  std::size_t rows() const { return values_.rows(); }
  std::size_t cols() const { return values_.cols(); }
  const complex& operator()(std::size_t r, std::size_t c) const { return values_(r, c); }
  std::span<const complex> row(std::size_t r) const { return values_.row(r); }
  const Matrix<complex>& values() const { return values_; }

  friend bool operator==(const TransmissionMatrix&, const TransmissionMatrix&) = default;

 private:
  Matrix<complex> values_;
};

/// P binary input patterns of dimension N, one pattern per row.
class PatternSet {
 public:
  PatternSet() = default;
  explicit PatternSet(Matrix<std::uint8_t> bits) : bits_(std::move(bits)) {
    for (auto b : bits_.data()) {
      if (b > 1) throw ArgumentError("pattern value outside {0,1}");
    }
  }

  std::size_t count() const { return bits_.rows(); }
  std::size_t dim() const { return bits_.cols(); }
  std::uint8_t operator()(std::size_t p, std::size_t i) const { return bits_(p, i); }
  std::span<const std::uint8_t> pattern(std::size_t p) const { return bits_.row(p); }
  const Matrix<std::uint8_t>& bits() const { return bits_; }

  /// Index of the first all-zero pattern, or count() if there is none.
  std::size_t first_zero_pattern() const {
    for (std::size_t p = 0; p < count(); ++p) {
      auto row = pattern(p);
      if (std::all_of(row.begin(), row.end(), [](auto b) { return b == 0; })) return p;
    }
    return count();
  }

  /// The patterns viewed as a real 0/1 operator (P x N).
  Matrix<double> as_real() const {
    Matrix<double> out(count(), dim());
    std::transform(bits_.data().begin(), bits_.data().end(), out.data().begin(),
                   [](auto b) { return static_cast<double>(b); });
    return out;
  }

  friend bool operator==(const PatternSet&, const PatternSet&) = default;

 private:
  Matrix<std::uint8_t> bits_;
};

/// Nonnegative amplitude measurements: M x P for calibration, M x 1 for imaging.
class MeasurementSet {
 public:
  MeasurementSet() = default;
  explicit MeasurementSet(Matrix<double> values) : values_(std::move(values)) {
    for (double y : values_.data()) {
      if (!(y >= 0.0) || !std::isfinite(y)) {
        throw ArgumentError("measurement values must be finite and nonnegative");
      }
    }
  }

  std::size_t rows() const { return values_.rows(); }
  std::size_t cols() const { return values_.cols(); }
  double operator()(std::size_t m, std::size_t p) const { return values_(m, p); }
  std::span<const double> row(std::size_t m) const { return values_.row(m); }
  std::vector<double> column(std::size_t p) const {
    std::vector<double> out(rows());
    for (std::size_t m = 0; m < rows(); ++m) out[m] = values_(m, p);
    return out;
  }
  const Matrix<double>& values() const { return values_; }

  friend bool operator==(const MeasurementSet&, const MeasurementSet&) = default;

 private:
  Matrix<double> values_;
};

struct SolverOptions {
  double sigma2 = 1e-3;
  int max_sweeps = 200;
  double tol = 1e-7;
  double damping = 1.0;
  int restarts = 3;
  std::uint64_t seed = 0;
  double omega_guard = 1e-12;

  void validate() const {
    if (!(sigma2 > 0.0) || !std::isfinite(sigma2)) throw ArgumentError("sigma2 must be positive");
    if (!(tol > 0.0)) throw ArgumentError("tol must be positive");
    if (max_sweeps < 1) throw ArgumentError("max_sweeps must be >= 1");
    if (restarts < 1) throw ArgumentError("restarts must be >= 1");
    if (!(damping > 0.0 && damping <= 1.0)) throw ArgumentError("damping must lie in (0,1]");
    if (!(omega_guard > 0.0)) throw ArgumentError("omega_guard must be positive");
  }
};

/// Zero-mean circular complex Gaussian prior with variance v0 = E|x|^2.
struct ComplexGaussianPrior {
  double v0 = 1.0;
};

/// Bernoulli {0,1} prior; rho holds one global value or one value per pixel.
struct BinaryPrior {
  std::vector<double> rho;

  double at(std::size_t i) const { return rho.size() == 1 ? rho.front() : rho[i]; }
};

using PriorSpec = std::variant<ComplexGaussianPrior, BinaryPrior>;

inline void validate_prior(const PriorSpec& prior, std::size_t dim) {
  if (const auto* g = std::get_if<ComplexGaussianPrior>(&prior)) {
    if (!(g->v0 > 0.0) || !std::isfinite(g->v0)) throw ArgumentError("prior variance v0 must be positive");
    return;
  }
  const auto& b = std::get<BinaryPrior>(prior);
  if (b.rho.size() != 1 && b.rho.size() != dim) {
    throw ArgumentError("binary prior has " + std::to_string(b.rho.size()) +
                        " probabilities for dimension " + std::to_string(dim));
  }
  for (double r : b.rho) {
    if (!(r >= 0.0 && r <= 1.0)) throw ArgumentError("binary prior probability outside [0,1]");
  }
}

/// Per-coefficient AMP messages of one solver run, plus the cached channel
/// scores g = p_out and g_prime = p'_out for every measurement.
struct SolverState {
  std::vector<complex> x_a;
  std::vector<double> x_v;
  std::vector<complex> omega;
  std::vector<double> v;
  std::vector<double> s;
  std::vector<complex> r;
  std::vector<complex> g;
  std::vector<double> g_prime;
};

using Rng = std::mt19937_64;

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace detail

/// Deterministic engine for (seed, stream). Distinct streams of one seed are
/// decorrelated through SplitMix64 mixing.
inline Rng seeded_rng(std::uint64_t seed, std::uint64_t stream) {
  const std::uint64_t a = detail::splitmix64(seed);
  const std::uint64_t b = detail::splitmix64(a ^ detail::splitmix64(stream + 0x632be59bd9b4e019ULL));
  std::seed_seq seq{static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(a >> 32),
                    static_cast<std::uint32_t>(b), static_cast<std::uint32_t>(b >> 32)};
  return Rng(seq);
}

// Stream identifiers for the different consumers of one base seed.
inline constexpr std::uint64_t kNoiseStream = 0x6e6f697365ULL;
inline constexpr std::uint64_t kPatternStream = 0x70617474ULL;
inline constexpr std::uint64_t kShuffleStream = 0x73687566ULL;
inline constexpr std::uint64_t kMediumStream = 0x6d656469ULL;

/// Standard normal draw. Box-Muller on the engine's raw output, so sequences
/// do not depend on the standard library's distribution implementations.
inline double standard_normal(Rng& rng) {
  constexpr double kTwoPi = 6.283185307179586476925286766559;
  const double u1 = (static_cast<double>(rng() >> 11) + 1.0) * 0x1.0p-53;  // (0,1]
  const double u2 = static_cast<double>(rng() >> 11) * 0x1.0p-53;          // [0,1)
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(kTwoPi * u2);
}

/// Uniform draw in [0, 1).
inline double uniform01(Rng& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

/// Fisher-Yates shuffle driven only by the raw engine output.
template <class T>
void shuffle(std::span<T> values, Rng& rng) {
  for (std::size_t i = values.size(); i > 1; --i) {
    const std::size_t j = static_cast<std::size_t>(uniform01(rng) * static_cast<double>(i));
    std::swap(values[i - 1], values[std::min(j, i - 1)]);
  }
}

}  // namespace dpr
