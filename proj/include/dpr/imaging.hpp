// Compressive reconstruction of sparse binary images from amplitude-only
// measurements through a (calibrated) medium.
#pragma once

#include <span>
#include <variant>
#include <vector>

#include "dpr/calibration.hpp"
#include "dpr/model.hpp"
#include "dpr/solver.hpp"

namespace dpr {

/// Every pixel shares one activation probability (the image sparsity).
struct GlobalPrior {
  double rho = 0.1;
};
/// Per-pixel activation probabilities, e.g. from local_prior_estimate.
struct LocalPrior {
  std::vector<double> rho;
};
using PriorMode = std::variant<GlobalPrior, LocalPrior>;

struct Reconstruction {
  std::vector<double> x_soft;       // posterior means, clamped to [0,1]
  std::vector<std::uint8_t> x_bin;  // x_soft > 0.5
  double residual = 0.0;
  int sweeps_used = 0;
  bool converged = false;
};

inline double sparsity_of(std::span<const std::uint8_t> image) {
  if (image.empty()) throw ArgumentError("sparsity_of: empty image");
  std::size_t ones = 0;
  for (auto b : image) ones += b != 0;
  return static_cast<double>(ones) / static_cast<double>(image.size());
}

namespace detail {

inline Reconstruction to_reconstruction(const SolveResult& r) {
  Reconstruction out;
  out.x_soft.resize(r.x_a.size());
  out.x_bin.resize(r.x_a.size());
  for (std::size_t i = 0; i < r.x_a.size(); ++i) {
    out.x_soft[i] = std::clamp(r.x_a[i].real(), 0.0, 1.0);
    out.x_bin[i] = out.x_soft[i] > 0.5 ? 1 : 0;
  }
  out.residual = r.residual;
  out.sweeps_used = r.sweeps_used;
  out.converged = r.converged;
  return out;
}

}  // namespace detail

/// Binary-prior phase retrieval with the estimated medium. Rows with
/// keep_row[m] == false are left out of the problem (empty = keep all).
/// The reported residual is ||y - |H x_soft||| / ||y|| over the kept rows.
inline Reconstruction reconstruct(const TransmissionMatrix& h_est, std::span<const double> y, const PriorMode& mode,
                                  const SolverOptions& options, const std::vector<bool>& keep_row = {}) {
  if (y.size() != h_est.rows()) {
    throw ArgumentError("reconstruct: " + std::to_string(y.size()) + " measurements for a medium with " +
                        std::to_string(h_est.rows()) + " rows");
  }
  if (!keep_row.empty() && keep_row.size() != h_est.rows()) {
    throw ArgumentError("reconstruct: row mask length does not match the medium");
  }
  BinaryPrior prior;
  if (const auto* g = std::get_if<GlobalPrior>(&mode)) {
    prior.rho = {g->rho};
  } else {
    prior.rho = std::get<LocalPrior>(mode).rho;
  }
  validate_prior(prior, h_est.cols());

  Matrix<complex> kept;
  std::vector<double> y_kept;
  if (keep_row.empty()) {
    kept = h_est.values();
    y_kept.assign(y.begin(), y.end());
  } else {
    const auto n_keep = static_cast<std::size_t>(std::count(keep_row.begin(), keep_row.end(), true));
    kept = Matrix<complex>(n_keep, h_est.cols());
    std::size_t k = 0;
    for (std::size_t m = 0; m < h_est.rows(); ++m) {
      if (!keep_row[m]) continue;
      std::copy_n(h_est.row(m).begin(), h_est.cols(), kept.row(k).begin());
      y_kept.push_back(y[m]);
      ++k;
    }
  }
  const Operator<complex> op(kept);
  const Problem<complex> problem{op, y_kept, Channel::PhaseRetrieval, prior};
  Reconstruction out = detail::to_reconstruction(solve(problem, options));
  const std::vector<complex> soft(out.x_soft.begin(), out.x_soft.end());
  out.residual = residual(problem, std::span<const complex>(soft));
  return out;
}

/// Drops the rows a calibration report flags.
inline Reconstruction reconstruct(const TransmissionMatrix& h_est, std::span<const double> y, const PriorMode& mode,
                                  const SolverOptions& options, const CalibrationReport& report) {
  if (report.rows.size() != h_est.rows()) throw ArgumentError("reconstruct: report row count mismatch");
  std::vector<bool> keep(h_est.rows());
  for (std::size_t m = 0; m < keep.size(); ++m) keep[m] = !report.rows[m].flagged();
  return reconstruct(h_est, y, mode, options, keep);
}

}  // namespace dpr
