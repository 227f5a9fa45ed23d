// Transmission-matrix calibration: calibration pattern generation and the
// row-by-row phase retrieval y_m = |X h_m| over known binary patterns X.
#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "dpr/dataio.hpp"
#include "dpr/model.hpp"
#include "dpr/solver.hpp"

namespace dpr {

/// Each bit is 1 with probability p; all-zero patterns are redrawn.
inline PatternSet gen_bernoulli_patterns(std::size_t count, std::size_t dim, double p, std::uint64_t seed) {
  if (count == 0 || dim == 0) throw ArgumentError("gen_bernoulli_patterns: count and dimension must be >= 1");
  if (!(p > 0.0 && p < 1.0)) throw ArgumentError("gen_bernoulli_patterns: p must lie in (0,1)");
  Rng rng = seeded_rng(seed, kPatternStream);
  Matrix<std::uint8_t> bits(count, dim);
  for (std::size_t k = 0; k < count; ++k) {
    bool any = false;
    while (!any) {
      for (std::size_t i = 0; i < dim; ++i) {
        bits(k, i) = uniform01(rng) < p ? 1 : 0;
        any = any || bits(k, i);
      }
    }
  }
  return PatternSet(std::move(bits));
}

/// Block-shuffled copies of `images`: the images are cut into block x block
/// tiles and, independently for every tile position, the tiles at that
/// position are permuted across the set. Per-position tile multisets are
/// preserved.
inline PatternSet gen_structured_patterns(const BinaryImageSet& images, std::size_t block, std::uint64_t seed) {
  if (block == 0 || images.height % block != 0 || images.width % block != 0) {
    throw ArgumentError("gen_structured_patterns: block size " + std::to_string(block) + " does not divide " +
                        std::to_string(images.height) + "x" + std::to_string(images.width));
  }
  const std::size_t n = images.count();
  Rng rng = seeded_rng(seed, kShuffleStream);
  Matrix<std::uint8_t> out(n, images.pixels());
  std::vector<std::size_t> source(n);
  for (std::size_t br = 0; br < images.height; br += block) {
    for (std::size_t bc = 0; bc < images.width; bc += block) {
      std::iota(source.begin(), source.end(), std::size_t{0});
      shuffle(std::span<std::size_t>(source), rng);
      for (std::size_t k = 0; k < n; ++k) {
        for (std::size_t r = br; r < br + block; ++r) {
          for (std::size_t c = bc; c < bc + block; ++c) {
            out(k, r * images.width + c) = images.images(source[k], r * images.width + c);
          }
        }
      }
    }
  }
  return PatternSet(std::move(out));
}

/// ceil(alpha N) patterns: N Bernoulli(0.5) patterns followed by non-empty
/// block-shuffled training images.
inline PatternSet build_calibration_set(const BinaryImageSet& training, double alpha, std::size_t dim,
                                        std::uint64_t seed, std::size_t block = 5) {
  if (!(alpha >= 1.0) || !std::isfinite(alpha)) throw ArgumentError("build_calibration_set: alpha must be >= 1");
  if (dim != training.pixels()) {
    throw ArgumentError("build_calibration_set: training images have " + std::to_string(training.pixels()) +
                        " pixels, expected " + std::to_string(dim));
  }
  // Round before ceil so that products like 5 * 400 stay exact.
  const auto total = static_cast<std::size_t>(std::ceil(std::round(alpha * static_cast<double>(dim) * 1e9) / 1e9));
  const std::size_t structured = total - dim;

  const PatternSet random = gen_bernoulli_patterns(dim, dim, 0.5, seed);
  Matrix<std::uint8_t> bits(total, dim);
  for (std::size_t p = 0; p < dim; ++p) std::copy_n(random.pattern(p).begin(), dim, bits.row(p).begin());
  if (structured > 0) {
    if (training.count() == 0) throw ArgumentError("build_calibration_set: empty training set");
    const PatternSet shuffled = gen_structured_patterns(training, block, seed);
    std::size_t filled = 0;
    for (std::size_t k = 0; k < shuffled.count() && filled < structured; ++k) {
      const auto pat = shuffled.pattern(k);
      if (std::none_of(pat.begin(), pat.end(), [](auto b) { return b != 0; })) continue;
      std::copy_n(pat.begin(), dim, bits.row(dim + filled).begin());
      ++filled;
    }
    if (filled < structured) {
      throw ArgumentError("build_calibration_set: need " + std::to_string(structured) +
                          " non-empty structured patterns, training set provides " + std::to_string(filled));
    }
  }
  return PatternSet(std::move(bits));
}

struct CalibrationRow {
  int sweeps = 0;
  bool converged = false;
  bool diverged = false;  // every restart produced a non-finite message
  double residual = 0.0;

  bool flagged() const { return diverged || !converged; }
};

struct CalibrationReport {
  std::vector<CalibrationRow> rows;
  double wall_seconds = 0.0;

  double mean_residual() const {
    if (rows.empty()) return 0.0;
    double acc = 0.0;
    for (const auto& r : rows) acc += r.residual;
    return acc / static_cast<double>(rows.size());
  }
  std::size_t failure_count() const {
    return static_cast<std::size_t>(std::count_if(rows.begin(), rows.end(), [](const auto& r) { return r.flagged(); }));
  }
  std::size_t converged_count() const {
    return static_cast<std::size_t>(std::count_if(rows.begin(), rows.end(), [](const auto& r) { return r.converged; }));
  }
};

struct Calibration {
  TransmissionMatrix estimate;
  CalibrationReport report;
};

/// Solves one phase retrieval problem per row of Y with a CN(0, 1/N) prior.
/// Row m uses options.seed + m, so the result does not depend on `threads`
/// (0 = hardware concurrency).
inline Calibration calibrate(const PatternSet& patterns, const MeasurementSet& y, const SolverOptions& options,
                             unsigned threads = 1) {
  options.validate();
  if (y.cols() != patterns.count()) {
    throw ArgumentError("calibrate: " + std::to_string(patterns.count()) + " patterns but " +
                        std::to_string(y.cols()) + " measurement columns");
  }
  if (patterns.dim() == 0) throw ArgumentError("calibrate: patterns have zero dimension");
  if (const auto z = patterns.first_zero_pattern(); z < patterns.count()) {
    throw ArgumentError("calibrate: pattern " + std::to_string(z) + " is all zero");
  }
  const auto start = std::chrono::steady_clock::now();
  const std::size_t rows = y.rows();
  const std::size_t dim = patterns.dim();
  const Operator<double> op(patterns.as_real());
  const PriorSpec prior = ComplexGaussianPrior{1.0 / static_cast<double>(dim)};

  Matrix<complex> estimate(rows, dim);
  std::vector<CalibrationRow> report(rows);
  std::atomic<std::size_t> next{0};

  auto worker = [&] {
    for (std::size_t m = next++; m < rows; m = next++) {
      Problem<double> problem{op, y.row(m), Channel::PhaseRetrieval, prior};
      SolverOptions row_options = options;
      row_options.seed = options.seed + m;
      SolveResult result;
      try {
        result = solve(problem, row_options);
      } catch (const DivergenceError& e) {
        result = *e.best_partial();
        report[m].diverged = true;
      }
      std::copy(result.x_a.begin(), result.x_a.end(), estimate.row(m).begin());
      report[m].sweeps = result.sweeps_used;
      report[m].converged = result.converged;
      report[m].residual = result.residual;
    }
  };

  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, std::max<std::size_t>(rows, 1)));
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
  }

  CalibrationReport rep{std::move(report), 0.0};
  rep.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return {TransmissionMatrix(std::move(estimate)), std::move(rep)};
}

/// key=value summary. Wall time is left out with timing = false so that the
/// text is reproducible.
inline std::string format_report_summary(const CalibrationReport& report, bool timing = true) {
  std::ostringstream out;
  out << "rows=" << report.rows.size() << '\n'
      << "converged=" << report.converged_count() << '\n'
      << "failures=" << report.failure_count() << '\n'
      << "mean_residual=" << format_number(report.mean_residual()) << '\n';
  if (timing) out << "wall_seconds=" << format_number(report.wall_seconds) << '\n';
  return out.str();
}

/// Per-row CSV: row,sweeps,converged,diverged,flagged,residual
inline void write_report_csv(const std::filesystem::path& path, const CalibrationReport& report) {
  std::vector<std::vector<std::string>> rows;
  for (std::size_t m = 0; m < report.rows.size(); ++m) {
    const auto& r = report.rows[m];
    rows.push_back({std::to_string(m), std::to_string(r.sweeps), r.converged ? "1" : "0", r.diverged ? "1" : "0",
                    r.flagged() ? "1" : "0", format_number(r.residual)});
  }
  write_csv(path, {"row", "sweeps", "converged", "diverged", "flagged", "residual"}, rows);
}

inline CalibrationReport read_report_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::string line;
  std::getline(in, line);
  if (line != "row,sweeps,converged,diverged,flagged,residual") {
    throw FormatError(path.string() + ": unexpected calibration report header", 0);
  }
  CalibrationReport report;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    for (std::string cell; std::getline(ss, cell, ',');) f.push_back(cell);
    if (f.size() != 6 || f[0] != std::to_string(report.rows.size())) {
      throw FormatError(path.string() + ": malformed report line " + std::to_string(lineno), lineno);
    }
    CalibrationRow row;
    row.sweeps = std::stoi(f[1]);
    row.converged = f[2] == "1";
    row.diverged = f[3] == "1";
    row.residual = std::stod(f[5]);
    report.rows.push_back(row);
  }
  return report;
}

}  // namespace dpr
