// Evaluation metrics for calibration and reconstruction quality.
#pragma once

#include <cmath>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "dpr/medium.hpp"
#include "dpr/model.hpp"

namespace dpr {

namespace detail {

template <class T>
double norm2(std::span<const T> a) {
  double acc = 0.0;
  for (const auto& v : a) acc += std::norm(static_cast<complex>(v));
  return std::sqrt(acc);
}

}  // namespace detail

/// Normalized cross-correlation without mean removal, <a/|a|, b/|b|>.
inline double dependence(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw ArgumentError("dependence: length mismatch");
  const double na = detail::norm2(a);
  const double nb = detail::norm2(b);
  if (!(na > 0.0) || !(nb > 0.0)) throw ArgumentError("dependence: zero vector");
  return std::min(1.0, std::inner_product(a.begin(), a.end(), b.begin(), 0.0) / (na * nb));
}

/// Dependence that scores an empty estimate as 0 instead of raising.
inline double dependence_or_zero(std::span<const double> estimate, std::span<const double> truth) {
  if (detail::norm2(estimate) == 0.0 || detail::norm2(truth) == 0.0) return 0.0;
  return dependence(estimate, truth);
}

/// Mean-removed (Pearson) correlation; 0 when either input is constant.
inline double pearson_correlation(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size() || a.empty()) throw ArgumentError("pearson_correlation: length mismatch");
  const double n = static_cast<double>(a.size());
  const double ma = std::accumulate(a.begin(), a.end(), 0.0) / n;
  const double mb = std::accumulate(b.begin(), b.end(), 0.0) / n;
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  return saa > 0.0 && sbb > 0.0 ? sab / std::sqrt(saa * sbb) : 0.0;
}

/// Agreement of two transmission-matrix rows modulo the ambiguities of
/// y = |X h| for a real X: a global phase and complex conjugation.
///   max(|<a, b>|, |<conj a, b>|) / (|a| |b|)
inline double row_recovery(std::span<const complex> estimate, std::span<const complex> truth) {
  if (estimate.size() != truth.size()) throw ArgumentError("row_recovery: length mismatch");
  const double ne = detail::norm2(estimate);
  const double nt = detail::norm2(truth);
  if (!(ne > 0.0) || !(nt > 0.0)) throw ArgumentError("row_recovery: zero vector");
  complex direct{}, conjugate{};
  for (std::size_t i = 0; i < truth.size(); ++i) {
    direct += std::conj(estimate[i]) * truth[i];
    conjugate += estimate[i] * truth[i];
  }
  return std::min(1.0, std::max(std::abs(direct), std::abs(conjugate)) / (ne * nt));
}

/// |<a, b>| / (|a| |b|): global phase only.
inline double phase_aligned_correlation(std::span<const complex> estimate, std::span<const complex> truth) {
  if (estimate.size() != truth.size()) throw ArgumentError("phase_aligned_correlation: length mismatch");
  const double ne = detail::norm2(estimate);
  const double nt = detail::norm2(truth);
  if (!(ne > 0.0) || !(nt > 0.0)) throw ArgumentError("phase_aligned_correlation: zero vector");
  complex direct{};
  for (std::size_t i = 0; i < truth.size(); ++i) direct += std::conj(estimate[i]) * truth[i];
  return std::min(1.0, std::abs(direct) / (ne * nt));
}

/// Mean over test patterns of dependence(observed, |H_est x|).
inline double held_out_dependence(const TransmissionMatrix& h_est, const PatternSet& patterns,
                                  const MeasurementSet& observed) {
  if (patterns.dim() != h_est.cols() || observed.rows() != h_est.rows() ||
      observed.cols() != patterns.count()) {
    throw ArgumentError("held_out_dependence: dimension mismatch");
  }
  if (patterns.count() == 0) throw ArgumentError("held_out_dependence: no test patterns");
  double total = 0.0;
  for (std::size_t p = 0; p < patterns.count(); ++p) {
    const auto predicted = measure(h_est, patterns.pattern(p));
    const auto y = observed.column(p);
    total += dependence_or_zero(predicted, y);
  }
  return total / static_cast<double>(patterns.count());
}

}  // namespace dpr
