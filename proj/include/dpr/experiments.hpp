// End-to-end experiments on simulated media: calibration quality versus the
// number of calibration patterns, reconstruction quality versus the number of
// output samples, and a side-by-side image grid.
#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <map>
#include <numeric>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "dpr/calibration.hpp"
#include "dpr/dataio.hpp"
#include "dpr/imaging.hpp"
#include "dpr/medium.hpp"
#include "dpr/metrics.hpp"
#include "dpr/priors.hpp"
#include "dpr/synthetic.hpp"

namespace dpr {

struct ExperimentConfig {
  std::uint64_t seed = 0;
  std::size_t seeds = 5;
  std::size_t side = 0;   // image side, N = side^2; 0 = experiment default
  std::size_t block = 0;  // structured-pattern block; 0 = largest divisor of side <= 5
  std::size_t rows = 128;                     // alpha-sweep: medium rows
  std::vector<double> alphas{1.0, 2.0, 3.0, 5.0};
  double alpha = 5.0;                         // m-sweep, visual-grid
  std::vector<double> rates{0.3, 0.5, 0.7};   // M/N
  double rate = 0.7;                          // visual-grid
  std::size_t images = 20;                    // reconstructed per seed and rate
  std::size_t holdout = 100;                  // held-out patterns for dependence
  std::size_t training = 2000;
  double calib_sigma2 = 1e-3;
  double image_sigma2 = 1e-2;
  double image_damping = 0.5;
  int max_sweeps = 200;
  double tol = 1e-7;
  int restarts = 3;
  unsigned threads = 1;
  std::filesystem::path mnist_dir;
};

namespace detail {

inline std::vector<double> parse_list(const std::string& key, const std::string& value) {
  std::vector<double> out;
  std::stringstream ss(value);
  for (std::string cell; std::getline(ss, cell, ',');) {
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(cell, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    while (used < cell.size() && std::isspace(static_cast<unsigned char>(cell[used]))) ++used;
    if (cell.empty() || used != cell.size()) throw ArgumentError("config: bad number '" + cell + "' for " + key);
    out.push_back(v);
  }
  if (out.empty()) throw ArgumentError("config: empty list for " + key);
  return out;
}

inline double parse_real(const std::string& key, const std::string& value) {
  const auto v = parse_list(key, value);
  if (v.size() != 1) throw ArgumentError("config: " + key + " takes one value");
  return v[0];
}

inline std::uint64_t parse_count(const std::string& key, const std::string& value) {
  if (value.empty() || value.find_first_not_of("0123456789") != std::string::npos) {
    throw ArgumentError("config: " + key + " must be a non-negative integer, got '" + value + "'");
  }
  return std::stoull(value);
}

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  return s.substr(b, s.find_last_not_of(" \t\r") - b + 1);
}

inline std::uint64_t mix(std::uint64_t seed, std::uint64_t tag) { return splitmix64(seed ^ splitmix64(tag)); }

inline std::size_t default_block(std::size_t side) {
  for (std::size_t b = std::min<std::size_t>(5, side); b > 1; --b) {
    if (side % b == 0) return b;
  }
  return 1;
}

/// Runs fn(k) for k in [0, count) on `threads` workers (0 = auto).
template <class Fn>
void parallel_for(std::size_t count, unsigned threads, Fn&& fn) {
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, std::max<std::size_t>(count, 1)));
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t k = next++; k < count; k = next++) fn(k);
  };
  if (threads <= 1) {
    worker();
    return;
  }
  std::vector<std::jthread> pool;
  for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
}

}  // namespace detail

/// Parses key=value lines ('#' starts a comment) into `config`. Lists are
/// comma separated. Unknown keys are an error.
inline void apply_config(const std::string& text, ExperimentConfig& config) {
  std::istringstream in(text);
  std::size_t lineno = 0;
  for (std::string line; std::getline(in, line);) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ArgumentError("config line " + std::to_string(lineno) + ": expected key=value");
    const std::string key = detail::trim(line.substr(0, eq));
    const std::string value = detail::trim(line.substr(eq + 1));
    auto& c = config;
    if (key == "seed") c.seed = detail::parse_count(key, value);
    else if (key == "seeds") c.seeds = detail::parse_count(key, value);
    else if (key == "side") c.side = detail::parse_count(key, value);
    else if (key == "block") c.block = detail::parse_count(key, value);
    else if (key == "rows") c.rows = detail::parse_count(key, value);
    else if (key == "alphas") c.alphas = detail::parse_list(key, value);
    else if (key == "alpha") c.alpha = detail::parse_real(key, value);
    else if (key == "rates") c.rates = detail::parse_list(key, value);
    else if (key == "rate") c.rate = detail::parse_real(key, value);
    else if (key == "images") c.images = detail::parse_count(key, value);
    else if (key == "holdout") c.holdout = detail::parse_count(key, value);
    else if (key == "training") c.training = detail::parse_count(key, value);
    else if (key == "calib_sigma2") c.calib_sigma2 = detail::parse_real(key, value);
    else if (key == "image_sigma2") c.image_sigma2 = detail::parse_real(key, value);
    else if (key == "image_damping") c.image_damping = detail::parse_real(key, value);
    else if (key == "max_sweeps") c.max_sweeps = static_cast<int>(detail::parse_count(key, value));
    else if (key == "tol") c.tol = detail::parse_real(key, value);
    else if (key == "restarts") c.restarts = static_cast<int>(detail::parse_count(key, value));
    else if (key == "threads") c.threads = static_cast<unsigned>(detail::parse_count(key, value));
    else if (key == "mnist_dir") c.mnist_dir = value;
    else throw ArgumentError("config line " + std::to_string(lineno) + ": unknown key '" + key + "'");
  }
}

/// One point of a sweep curve: per-seed values at x.
struct SweepPoint {
  double x = 0.0;
  std::vector<double> values;

  double mean() const {
    if (values.empty()) return 0.0;
    return std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
  }
  /// Sample standard deviation (0 for fewer than two values).
  double stddev() const {
    if (values.size() < 2) return 0.0;
    const double mu = mean();
    double acc = 0.0;
    for (double v : values) acc += (v - mu) * (v - mu);
    return std::sqrt(acc / static_cast<double>(values.size() - 1));
  }
};

/// CSV with columns x, mean, std, seed0, seed1, ...
inline void write_sweep_csv(const std::filesystem::path& path, const std::string& x_name,
                            const std::vector<SweepPoint>& points) {
  std::vector<std::string> header{x_name, "mean", "std"};
  const std::size_t n = points.empty() ? 0 : points.front().values.size();
  for (std::size_t s = 0; s < n; ++s) header.push_back("seed" + std::to_string(s));
  std::vector<std::vector<std::string>> rows;
  for (const auto& p : points) {
    std::vector<std::string> row{format_number(p.x), format_number(p.mean()), format_number(p.stddev())};
    for (double v : p.values) row.push_back(format_number(v));
    rows.push_back(std::move(row));
  }
  write_csv(path, header, rows);
}

/// Training images (for structured patterns and the local prior) and test
/// images of one geometry.
struct ImageSource {
  BinaryImageSet training;
  BinaryImageSet test;
};

/// Synthetic ring digits, or MNIST-derived D1 (d1 = true) / D2 images when
/// config.mnist_dir is set. MNIST test images come from the t10k file when
/// present, otherwise from the tail of the training file.
inline ImageSource load_image_source(const ExperimentConfig& config, std::size_t side, std::size_t test_count,
                                     bool d1) {
  if (config.mnist_dir.empty()) {
    return {synthetic_digits(side, config.training, detail::mix(config.seed, 0x747261)),
            synthetic_digits(side, test_count, detail::mix(config.seed, 0x74657374))};
  }
  auto load = [&](const char* name) -> BinaryImageSet {
    const auto data = load_idx(config.mnist_dir / name);
    const auto* gray = std::get_if<GrayImageSet>(&data);
    if (gray == nullptr) throw FormatError(std::string(name) + ": not an image file", 0);
    return d1 ? make_d1(*gray) : make_d2(*gray);
  };
  auto take = [](const BinaryImageSet& set, std::size_t from, std::size_t count) {
    Matrix<std::uint8_t> bits(count, set.pixels());
    std::size_t k = 0;
    for (std::size_t i = from; i < set.count() && k < count; ++i) {
      const auto p = set.images.pattern(i);
      if (std::none_of(p.begin(), p.end(), [](auto b) { return b != 0; })) continue;
      std::copy_n(p.begin(), set.pixels(), bits.row(k++).begin());
    }
    if (k < count) throw ArgumentError("MNIST set too small for the requested image counts");
    return BinaryImageSet{set.height, set.width, PatternSet(std::move(bits))};
  };
  const BinaryImageSet train = load("train-images-idx3-ubyte");
  const std::size_t n_train = std::min(config.training, train.count());
  if (std::filesystem::exists(config.mnist_dir / "t10k-images-idx3-ubyte")) {
    return {take(train, 0, n_train), take(load("t10k-images-idx3-ubyte"), 0, test_count)};
  }
  if (train.count() < test_count + 1) throw ArgumentError("MNIST set too small for the requested image counts");
  const std::size_t split = train.count() - test_count;
  return {take(train, 0, std::min(n_train, split)), take(train, split, test_count)};
}

inline SolverOptions calibration_options(const ExperimentConfig& c, std::uint64_t seed) {
  SolverOptions o;
  o.sigma2 = c.calib_sigma2;
  o.max_sweeps = c.max_sweeps;
  o.tol = c.tol;
  o.restarts = c.restarts;
  o.seed = seed;
  return o;
}

inline SolverOptions imaging_options(const ExperimentConfig& c, std::uint64_t seed) {
  SolverOptions o = calibration_options(c, seed);
  o.sigma2 = c.image_sigma2;
  o.damping = c.image_damping;
  return o;
}

/// A simulated medium calibrated from noiseless measurements.
struct CalibratedMedium {
  TransmissionMatrix truth;
  Calibration calibration;
};

inline CalibratedMedium simulate_calibration(const ExperimentConfig& c, const BinaryImageSet& training,
                                             std::size_t rows, double alpha, std::uint64_t seed) {
  const std::size_t dim = training.pixels();
  const std::size_t block = c.block == 0 ? detail::default_block(training.height) : c.block;
  TransmissionMatrix h = generate_tm(rows, dim, detail::mix(seed, 0x6d656469));
  const PatternSet x = build_calibration_set(training, alpha, dim, detail::mix(seed, 0x70617474), block);
  const MeasurementSet y = measure_batch(h, x, NoNoise{}, 0);
  Calibration cal = calibrate(x, y, calibration_options(c, detail::mix(seed, 0x63616c)), c.threads);
  return {std::move(h), std::move(cal)};
}

struct AlphaSweepResult {
  std::vector<SweepPoint> dependence;     // held-out dependence
  std::vector<SweepPoint> recovery;       // median row_recovery
  std::vector<SweepPoint> phase_aligned;  // median phase_aligned_correlation
  std::vector<SweepPoint> seconds;        // calibration wall time
};

namespace detail {

inline double median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const std::size_t h = v.size() / 2;
  return v.size() % 2 ? v[h] : 0.5 * (v[h - 1] + v[h]);
}

}  // namespace detail

/// Calibration quality versus alpha: for every seed and alpha, a fresh
/// medium of config.rows rows is calibrated from ceil(alpha N) patterns and
/// scored on config.holdout unseen test images.
inline AlphaSweepResult run_alpha_sweep(const ExperimentConfig& c) {
  const std::size_t side = c.side == 0 ? (c.mnist_dir.empty() ? 8 : 20) : c.side;
  const ImageSource src = load_image_source(c, side, c.holdout, true);
  AlphaSweepResult out;
  for (double alpha : c.alphas) {
    SweepPoint dep{alpha, {}}, rec{alpha, {}}, pha{alpha, {}}, sec{alpha, {}};
    for (std::size_t s = 0; s < c.seeds; ++s) {
      const std::uint64_t seed = detail::mix(c.seed, s);
      const CalibratedMedium med = simulate_calibration(c, src.training, c.rows, alpha, seed);
      const MeasurementSet observed = measure_batch(med.truth, src.test.images, NoNoise{}, 0);
      dep.values.push_back(held_out_dependence(med.calibration.estimate, src.test.images, observed));
      std::vector<double> r(c.rows), p(c.rows);
      for (std::size_t m = 0; m < c.rows; ++m) {
        r[m] = row_recovery(med.calibration.estimate.row(m), med.truth.row(m));
        p[m] = phase_aligned_correlation(med.calibration.estimate.row(m), med.truth.row(m));
      }
      rec.values.push_back(detail::median(r));
      pha.values.push_back(detail::median(p));
      sec.values.push_back(med.calibration.report.wall_seconds);
    }
    out.dependence.push_back(std::move(dep));
    out.recovery.push_back(std::move(rec));
    out.phase_aligned.push_back(std::move(pha));
    out.seconds.push_back(std::move(sec));
  }
  return out;
}

/// First `rows` rows of a medium and the matching report rows.
inline TransmissionMatrix leading_rows(const TransmissionMatrix& h, std::size_t rows) {
  Matrix<complex> sub(rows, h.cols());
  for (std::size_t m = 0; m < rows; ++m) std::copy_n(h.row(m).begin(), h.cols(), sub.row(m).begin());
  return TransmissionMatrix(std::move(sub));
}

inline CalibrationReport leading_rows(const CalibrationReport& report, std::size_t rows) {
  CalibrationReport out;
  out.rows.assign(report.rows.begin(), report.rows.begin() + static_cast<std::ptrdiff_t>(rows));
  out.wall_seconds = report.wall_seconds;
  return out;
}

/// Scores of one image reconstructed with both priors.
struct ImageScores {
  double dependence_local = 0.0, dependence_global = 0.0;
  double pearson_local = 0.0, pearson_global = 0.0;
  std::vector<std::uint8_t> local, global;
};

/// Reconstructs each image in `images` through the first `rows` rows of the
/// calibrated medium, excluding rows the calibration flags.
inline std::vector<ImageScores> reconstruct_images(const ExperimentConfig& c, const CalibratedMedium& med,
                                                   std::size_t rows, const PatternSet& images,
                                                   const std::vector<double>& rho_local, std::uint64_t seed) {
  const TransmissionMatrix h_true = leading_rows(med.truth, rows);
  const TransmissionMatrix h_est = leading_rows(med.calibration.estimate, rows);
  const CalibrationReport report = leading_rows(med.calibration.report, rows);
  std::vector<ImageScores> out(images.count());
  detail::parallel_for(images.count(), c.threads, [&](std::size_t k) {
    const auto x = images.pattern(k);
    const std::vector<double> truth(x.begin(), x.end());
    const auto y = measure(h_true, x);
    const SolverOptions o = imaging_options(c, detail::mix(seed, k));
    const Reconstruction loc = reconstruct(h_est, y, LocalPrior{rho_local}, o, report);
    const Reconstruction glo = reconstruct(h_est, y, GlobalPrior{sparsity_of(x)}, o, report);
    const std::vector<double> bl(loc.x_bin.begin(), loc.x_bin.end());
    const std::vector<double> bg(glo.x_bin.begin(), glo.x_bin.end());
    auto& s = out[k];
    s.dependence_local = dependence_or_zero(bl, truth);
    s.dependence_global = dependence_or_zero(bg, truth);
    s.pearson_local = pearson_correlation(bl, truth);
    s.pearson_global = pearson_correlation(bg, truth);
    s.local = loc.x_bin;
    s.global = glo.x_bin;
  });
  return out;
}

struct MSweepResult {
  std::vector<SweepPoint> local_dependence, global_dependence;
  std::vector<SweepPoint> local_pearson, global_pearson;
};

/// Reconstruction quality versus M: per seed one medium with
/// round(max(rates) N) rows is calibrated at config.alpha; each rate uses its
/// leading round(rate N) rows. Per-seed values are means over config.images.
inline MSweepResult run_m_sweep(const ExperimentConfig& c) {
  const std::size_t side = c.side == 0 ? (c.mnist_dir.empty() ? 10 : 32) : c.side;
  const ImageSource src = load_image_source(c, side, c.images, false);
  const std::size_t dim = src.training.pixels();
  const auto rho_local = local_prior_estimate(src.training.images);
  std::vector<std::size_t> ms;
  for (double r : c.rates) {
    if (!(r > 0.0)) throw ArgumentError("m-sweep: rates must be positive");
    ms.push_back(std::max<std::size_t>(1, static_cast<std::size_t>(std::lround(r * static_cast<double>(dim)))));
  }
  const std::size_t m_max = *std::max_element(ms.begin(), ms.end());

  MSweepResult out;
  for (std::size_t i = 0; i < ms.size(); ++i) {
    const double x = static_cast<double>(ms[i]);
    out.local_dependence.push_back({x, {}});
    out.global_dependence.push_back({x, {}});
    out.local_pearson.push_back({x, {}});
    out.global_pearson.push_back({x, {}});
  }
  for (std::size_t s = 0; s < c.seeds; ++s) {
    const std::uint64_t seed = detail::mix(c.seed, s);
    const CalibratedMedium med = simulate_calibration(c, src.training, m_max, c.alpha, seed);
    for (std::size_t i = 0; i < ms.size(); ++i) {
      const auto scores = reconstruct_images(c, med, ms[i], src.test.images, rho_local, detail::mix(seed, ms[i]));
      double dl = 0, dg = 0, pl = 0, pg = 0;
      for (const auto& sc : scores) {
        dl += sc.dependence_local;
        dg += sc.dependence_global;
        pl += sc.pearson_local;
        pg += sc.pearson_global;
      }
      const double n = static_cast<double>(std::max<std::size_t>(scores.size(), 1));
      out.local_dependence[i].values.push_back(dl / n);
      out.global_dependence[i].values.push_back(dg / n);
      out.local_pearson[i].values.push_back(pl / n);
      out.global_pearson[i].values.push_back(pg / n);
    }
  }
  return out;
}

struct VisualGrid {
  GrayImage montage;
  std::vector<ImageScores> scores;
};

/// Rows: originals, local-prior reconstructions, global-prior
/// reconstructions, at M = round(config.rate N), config.images columns.
inline VisualGrid run_visual_grid(const ExperimentConfig& c) {
  const std::size_t side = c.side == 0 ? (c.mnist_dir.empty() ? 10 : 32) : c.side;
  const ImageSource src = load_image_source(c, side, c.images, false);
  const std::size_t dim = src.training.pixels();
  if (!(c.rate > 0.0)) throw ArgumentError("visual-grid: rate must be positive");
  const auto rows = std::max<std::size_t>(1, static_cast<std::size_t>(std::lround(c.rate * static_cast<double>(dim))));
  const std::uint64_t seed = detail::mix(c.seed, 0);
  const CalibratedMedium med = simulate_calibration(c, src.training, rows, c.alpha, seed);
  auto scores = reconstruct_images(c, med, rows, src.test.images, local_prior_estimate(src.training.images),
                                   detail::mix(seed, rows));
  std::vector<std::vector<std::vector<double>>> grid(3);
  for (std::size_t k = 0; k < scores.size(); ++k) {
    const auto x = src.test.images.pattern(k);
    grid[0].emplace_back(x.begin(), x.end());
    grid[1].emplace_back(scores[k].local.begin(), scores[k].local.end());
    grid[2].emplace_back(scores[k].global.begin(), scores[k].global.end());
  }
  return {montage(grid, src.test.width, src.test.height), std::move(scores)};
}

}  // namespace dpr
