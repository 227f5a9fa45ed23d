// dpr: command line driver for medium simulation, calibration, reconstruction
// and the sweep experiments.
//
// Exit codes: 0 success, 1 runtime or I/O error, 2 usage error.

#include <CLI11.hpp>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include "dpr/dpr.hpp"

namespace {

using namespace dpr;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

void require(bool ok, const std::string& message) {
  if (!ok) throw UsageError(message);
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Solver flags shared by calibrate and reconstruct; defaults come from
// SolverOptions.
void add_solver_flags(CLI::App* cmd, SolverOptions& o) {
  cmd->add_option("--sigma2", o.sigma2, "Output channel noise variance")->capture_default_str();
  cmd->add_option("--sweeps", o.max_sweeps, "Maximum sweeps per restart")->capture_default_str();
  cmd->add_option("--tol", o.tol, "Stop when the largest change of x_a falls below this")->capture_default_str();
  cmd->add_option("--restarts", o.restarts, "Independent restarts; the lowest residual wins")->capture_default_str();
  cmd->add_option("--damping", o.damping, "Damping of the mean update, in (0,1]")->capture_default_str();
  cmd->add_option("--seed", o.seed, "Random seed")->capture_default_str();
}

void check_solver_flags(const SolverOptions& o) {
  require(o.sigma2 > 0.0 && std::isfinite(o.sigma2), "--sigma2 must be positive");
  require(o.max_sweeps >= 1, "--sweeps must be >= 1");
  require(o.tol > 0.0, "--tol must be positive");
  require(o.restarts >= 1, "--restarts must be >= 1");
  require(o.damping > 0.0 && o.damping <= 1.0, "--damping must lie in (0,1]");
}

NoiseModel parse_noise(const std::string& arg) {
  if (arg == "none") return NoNoise{};
  const auto colon = arg.find(':');
  require(colon != std::string::npos, "--noise must be none, amplitude:SIGMA or intensity:SIGMA");
  const std::string kind = arg.substr(0, colon);
  double sigma = 0.0;
  try {
    sigma = std::stod(arg.substr(colon + 1));
  } catch (const std::exception&) {
    throw UsageError("--noise: bad sigma in '" + arg + "'");
  }
  require(sigma >= 0.0 && std::isfinite(sigma), "--noise: sigma must be >= 0");
  if (kind == "amplitude") return AmplitudeGaussianNoise{sigma};
  if (kind == "intensity") return IntensityGaussianNoise{sigma};
  throw UsageError("--noise: unknown model '" + kind + "'");
}

// Flattens a real matrix that is a single row or a single column.
std::vector<double> as_vector(const Matrix<double>& m, const std::string& flag) {
  require(m.rows() == 1 || m.cols() == 1, flag + ": expected a single row or column");
  return {m.data().begin(), m.data().end()};
}

std::pair<std::size_t, std::size_t> image_shape(std::size_t n, std::size_t width) {
  if (width == 0) {
    const auto s = static_cast<std::size_t>(std::llround(std::sqrt(static_cast<double>(n))));
    width = s * s == n ? s : n;
  }
  require(width > 0 && n % width == 0, "--width " + std::to_string(width) + " does not divide " + std::to_string(n));
  return {width, n / width};
}

// ------------------------------------------------------------ medium-gen

struct MediumArgs {
  std::size_t rows = 0, cols = 0;
  std::uint64_t seed = 0;
  std::string out;
};

int run_medium_gen(const MediumArgs& a) {
  require(a.rows >= 1, "--rows must be >= 1");
  require(a.cols >= 1, "--cols must be >= 1");
  const auto h = generate_tm(a.rows, a.cols, a.seed);
  save_transmission_matrix(a.out, h);
  double power = 0.0;
  for (const auto& v : h.values().data()) power += std::norm(v);
  std::cout << "rows=" << a.rows << "\ncols=" << a.cols
            << "\nentry_variance=" << format_number(power / static_cast<double>(h.values().size())) << '\n';
  return 0;
}

// ------------------------------------------------------------ patterns

struct PatternArgs {
  std::string kind = "bernoulli";
  std::size_t count = 0, dim = 0, side = 0, block = 5;
  double p = 0.5, alpha = 5.0;
  std::string training, idx, dataset = "d1";
  std::uint64_t seed = 0;
  std::string out;
};

int run_patterns(const PatternArgs& a) {
  PatternSet out(Matrix<std::uint8_t>(0, 0));
  if (a.kind == "bernoulli") {
    require(a.count >= 1, "--count must be >= 1");
    require(a.dim >= 1, "--dim must be >= 1");
    require(a.p > 0.0 && a.p < 1.0, "--p must lie in (0,1)");
    out = gen_bernoulli_patterns(a.count, a.dim, a.p, a.seed);
  } else if (a.kind == "synthetic") {
    require(a.side >= 1, "--side must be >= 1");
    require(a.count >= 1, "--count must be >= 1");
    out = synthetic_digits(a.side, a.count, a.seed).images;
  } else if (a.kind == "calibration" || a.kind == "structured") {
    require(!a.training.empty(), "--training is required for kind " + a.kind);
    require(a.side >= 1, "--side must be >= 1");
    require(a.block >= 1 && a.side % a.block == 0, "--block must divide --side");
    const PatternSet training = load_patterns(a.training);
    if (training.dim() != a.side * a.side) {
      throw ArgumentError("training patterns have " + std::to_string(training.dim()) + " pixels, --side " +
                          std::to_string(a.side) + " needs " + std::to_string(a.side * a.side));
    }
    const BinaryImageSet images{a.side, a.side, training};
    if (a.kind == "structured") {
      out = gen_structured_patterns(images, a.block, a.seed);
    } else {
      require(a.alpha >= 1.0, "--alpha must be >= 1");
      out = build_calibration_set(images, a.alpha, images.pixels(), a.seed, a.block);
    }
  } else if (a.kind == "mnist") {
    require(!a.idx.empty(), "--idx is required for kind mnist");
    require(a.dataset == "d1" || a.dataset == "d2", "--dataset must be d1 or d2");
    const auto data = load_idx(a.idx);
    const auto* gray = std::get_if<GrayImageSet>(&data);
    if (gray == nullptr) throw FormatError(a.idx + ": label file, expected images", 0);
    out = (a.dataset == "d1" ? make_d1(*gray) : make_d2(*gray)).images;
    if (a.count > 0 && a.count < out.count()) {
      Matrix<std::uint8_t> bits(a.count, out.dim());
      for (std::size_t k = 0; k < a.count; ++k) std::copy_n(out.pattern(k).begin(), out.dim(), bits.row(k).begin());
      out = PatternSet(std::move(bits));
    }
  } else {
    throw UsageError("--kind must be bernoulli, synthetic, structured, calibration or mnist");
  }
  save_patterns(a.out, out);
  std::cout << "count=" << out.count() << "\ndim=" << out.dim() << '\n';
  return 0;
}

// ------------------------------------------------------------ measure

struct MeasureArgs {
  std::string tm, patterns, noise = "none", out;
  std::uint64_t seed = 0;
};

int run_measure(const MeasureArgs& a) {
  const NoiseModel noise = parse_noise(a.noise);
  const auto h = load_transmission_matrix(a.tm);
  const auto x = load_patterns(a.patterns);
  if (x.dim() != h.cols()) {
    throw ArgumentError("patterns have dimension " + std::to_string(x.dim()) + ", medium has " +
                        std::to_string(h.cols()) + " columns");
  }
  const auto y = measure_batch(h, x, noise, a.seed);
  save_measurements(a.out, y);
  std::cout << "rows=" << y.rows() << "\ncols=" << y.cols() << '\n';
  return 0;
}

// ------------------------------------------------------------ local-prior

struct PriorArgs {
  std::string images, out;
  double floor = 1e-3;
};

int run_local_prior(const PriorArgs& a) {
  require(a.floor >= 0.0 && a.floor < 0.5, "--floor must lie in [0, 0.5)");
  const auto rho = local_prior_estimate(load_patterns(a.images), a.floor);
  save_matrix(a.out, Matrix<double>(1, rho.size(), rho));
  std::cout << "dim=" << rho.size() << '\n';
  return 0;
}

// ------------------------------------------------------------ calibrate

struct CalibrateArgs {
  std::string patterns, measurements, out, report;
  SolverOptions options;
  unsigned threads = 1;
};

int run_calibrate(const CalibrateArgs& a) {
  check_solver_flags(a.options);
  const auto x = load_patterns(a.patterns);
  const auto y = load_measurements(a.measurements);
  if (y.cols() != x.count()) {
    throw ArgumentError("dimension mismatch: " + std::to_string(x.count()) + " patterns but " +
                        std::to_string(y.cols()) + " measurement columns");
  }
  const auto cal = calibrate(x, y, a.options, a.threads);
  save_transmission_matrix(a.out, cal.estimate);
  if (!a.report.empty()) write_report_csv(a.report, cal.report);
  std::cout << format_report_summary(cal.report, false);
  std::cerr << "wall_seconds=" << format_number(cal.report.wall_seconds) << '\n';
  return 0;
}

// ------------------------------------------------------------ reconstruct

struct ReconstructArgs {
  std::string tm, y, prior, report, out_pgm, out_soft, truth;
  std::size_t column = 0, width = 0;
  SolverOptions options;
};

int run_reconstruct(const ReconstructArgs& a) {
  check_solver_flags(a.options);
  const auto h = load_transmission_matrix(a.tm);
  const std::size_t n = h.cols();

  PriorMode mode = GlobalPrior{};
  if (a.prior.rfind("global:", 0) == 0) {
    double rho = -1.0;
    try {
      rho = std::stod(a.prior.substr(7));
    } catch (const std::exception&) {
    }
    require(rho >= 0.0 && rho <= 1.0, "--prior global:RHO needs RHO in [0,1]");
    mode = GlobalPrior{rho};
  } else if (a.prior.rfind("local:", 0) == 0) {
    const auto rho = as_vector(load_matrix<double>(a.prior.substr(6)), "--prior");
    require(rho.size() == n, "--prior local file has " + std::to_string(rho.size()) + " entries, medium has " +
                                 std::to_string(n) + " columns");
    for (double r : rho) require(r >= 0.0 && r <= 1.0, "--prior local values must lie in [0,1]");
    mode = LocalPrior{rho};
  } else {
    throw UsageError("--prior must be global:RHO or local:PATH");
  }

  const auto ym = load_matrix<double>(a.y);
  if (ym.rows() != h.rows() && !(ym.rows() == 1 && ym.cols() == h.rows())) {
    throw ArgumentError("measurements have " + std::to_string(ym.rows()) + " rows, medium has " +
                        std::to_string(h.rows()));
  }
  std::vector<double> y(h.rows());
  if (ym.rows() == 1 && h.rows() != 1) {
    require(a.column == 0, "--column out of range");
    y.assign(ym.data().begin(), ym.data().end());
  } else {
    require(a.column < ym.cols(), "--column " + std::to_string(a.column) + " out of range");
    for (std::size_t m = 0; m < h.rows(); ++m) y[m] = ym(m, a.column);
  }
  const auto [width, height] = image_shape(n, a.width);

  const Reconstruction rec = a.report.empty() ? reconstruct(h, y, mode, a.options)
                                              : reconstruct(h, y, mode, a.options, read_report_csv(a.report));
  if (!a.out_pgm.empty()) save_image_pgm(a.out_pgm, std::span<const std::uint8_t>(rec.x_bin), width, height);
  if (!a.out_soft.empty()) save_matrix(a.out_soft, Matrix<double>(1, n, rec.x_soft));
  std::cout << "residual=" << format_number(rec.residual) << "\nsweeps=" << rec.sweeps_used
            << "\nconverged=" << (rec.converged ? 1 : 0) << '\n';
  if (!a.truth.empty()) {
    const auto t = load_patterns(a.truth);
    require(t.dim() == n, "--truth dimension does not match the medium");
    const std::size_t k = t.count() == 1 ? 0 : a.column;
    require(k < t.count(), "--truth has no pattern " + std::to_string(k));
    const std::vector<double> truth(t.pattern(k).begin(), t.pattern(k).end());
    const std::vector<double> est(rec.x_bin.begin(), rec.x_bin.end());
    std::cout << "dependence=" << format_number(dependence_or_zero(est, truth))
              << "\ncorrelation=" << format_number(pearson_correlation(est, truth)) << '\n';
  }
  return 0;
}

// ------------------------------------------------------------ experiment

struct ExperimentArgs {
  std::string name, config, out_dir = ".", mnist_dir;
  std::optional<std::uint64_t> seed;
  std::optional<unsigned> threads;
};

int run_experiment(const ExperimentArgs& a) {
  ExperimentConfig c;
  if (!a.config.empty()) {
    try {
      apply_config(slurp(a.config), c);
    } catch (const ArgumentError& e) {
      throw UsageError(a.config + ": " + e.what());
    }
  }
  if (a.seed) c.seed = *a.seed;
  if (a.threads) c.threads = *a.threads;
  if (!a.mnist_dir.empty()) c.mnist_dir = a.mnist_dir;
  require(c.seeds >= 1, "config: seeds must be >= 1");
  require(c.images >= 1 && c.holdout >= 1, "config: images and holdout must be >= 1");

  const std::filesystem::path dir(a.out_dir);
  std::filesystem::create_directories(dir);
  auto print = [](const std::string& label, const std::vector<SweepPoint>& pts) {
    for (const auto& p : pts) {
      std::cout << label << " x=" << format_number(p.x) << " mean=" << format_number(p.mean())
                << " std=" << format_number(p.stddev()) << '\n';
    }
  };
  if (a.name == "alpha-sweep") {
    const auto r = run_alpha_sweep(c);
    write_sweep_csv(dir / "alpha_sweep_dependence.csv", "alpha", r.dependence);
    write_sweep_csv(dir / "alpha_sweep_recovery.csv", "alpha", r.recovery);
    print("dependence", r.dependence);
    print("recovery", r.recovery);
  } else if (a.name == "m-sweep") {
    const auto r = run_m_sweep(c);
    write_sweep_csv(dir / "m_sweep_local.csv", "M", r.local_dependence);
    write_sweep_csv(dir / "m_sweep_global.csv", "M", r.global_dependence);
    write_sweep_csv(dir / "m_sweep_local_pearson.csv", "M", r.local_pearson);
    write_sweep_csv(dir / "m_sweep_global_pearson.csv", "M", r.global_pearson);
    print("local", r.local_dependence);
    print("global", r.global_dependence);
  } else if (a.name == "visual-grid") {
    const auto r = run_visual_grid(c);
    save_gray_pgm(dir / "visual_grid.pgm", r.montage);
    std::vector<std::vector<std::string>> rows;
    for (std::size_t k = 0; k < r.scores.size(); ++k) {
      rows.push_back({std::to_string(k), format_number(r.scores[k].dependence_local),
                      format_number(r.scores[k].dependence_global)});
    }
    write_csv(dir / "visual_grid.csv", {"image", "dependence_local", "dependence_global"}, rows);
    std::cout << "images=" << r.scores.size() << '\n';
  } else {
    throw UsageError("--name must be alpha-sweep, m-sweep or visual-grid");
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Double phase retrieval: medium simulation, calibration and imaging"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Help for every subcommand");

  MediumArgs medium;
  auto* c_medium = app.add_subcommand("medium-gen", "Draw an i.i.d. CN(0,1/N) transmission matrix");
  c_medium->add_option("--rows", medium.rows, "Output samples M")->required();
  c_medium->add_option("--cols", medium.cols, "Input pixels N")->required();
  c_medium->add_option("--seed", medium.seed, "Random seed")->capture_default_str();
  c_medium->add_option("--out", medium.out, "Output matrix file")->required();

  PatternArgs pat;
  auto* c_pat = app.add_subcommand("patterns", "Generate binary pattern sets");
  c_pat->add_option("--kind", pat.kind, "bernoulli, synthetic, structured, calibration or mnist")
      ->capture_default_str();
  c_pat->add_option("--count", pat.count, "Number of patterns (mnist: 0 = all)")->capture_default_str();
  c_pat->add_option("--dim", pat.dim, "Pixels per pattern (bernoulli)")->capture_default_str();
  c_pat->add_option("--p", pat.p, "Probability of a one (bernoulli)")->capture_default_str();
  c_pat->add_option("--side", pat.side, "Image side (synthetic, structured, calibration)")->capture_default_str();
  c_pat->add_option("--block", pat.block, "Block size for structured shuffling")->capture_default_str();
  c_pat->add_option("--alpha", pat.alpha, "Patterns per pixel (calibration)")->capture_default_str();
  c_pat->add_option("--training", pat.training, "Training image patterns (structured, calibration)");
  c_pat->add_option("--idx", pat.idx, "MNIST IDX image file (mnist)");
  c_pat->add_option("--dataset", pat.dataset, "d1 (20x20 crop) or d2 (32x32 rescale)")->capture_default_str();
  c_pat->add_option("--seed", pat.seed, "Random seed")->capture_default_str();
  c_pat->add_option("--out", pat.out, "Output pattern file")->required();

  MeasureArgs meas;
  auto* c_meas = app.add_subcommand("measure", "Simulate amplitude measurements |H x| of patterns");
  c_meas->add_option("--tm", meas.tm, "Transmission matrix file")->required();
  c_meas->add_option("--patterns", meas.patterns, "Pattern file")->required();
  c_meas->add_option("--noise", meas.noise, "none, amplitude:SIGMA or intensity:SIGMA")->capture_default_str();
  c_meas->add_option("--seed", meas.seed, "Noise seed")->capture_default_str();
  c_meas->add_option("--out", meas.out, "Output measurement file (M x P)")->required();

  PriorArgs prior;
  auto* c_prior = app.add_subcommand("local-prior", "Per-pixel activation probabilities of a training set");
  c_prior->add_option("--images", prior.images, "Training image patterns")->required();
  c_prior->add_option("--floor", prior.floor, "Clamp to [floor, 1-floor]")->capture_default_str();
  c_prior->add_option("--out", prior.out, "Output 1 x N real matrix")->required();

  CalibrateArgs cal;
  auto* c_cal = app.add_subcommand("calibrate", "Estimate the transmission matrix row by row");
  c_cal->add_option("--patterns", cal.patterns, "Calibration pattern file (P x N)")->required();
  c_cal->add_option("--measurements", cal.measurements, "Measurement file (M x P)")->required();
  add_solver_flags(c_cal, cal.options);
  c_cal->add_option("--threads", cal.threads, "Worker threads, 0 = all cores")->capture_default_str();
  c_cal->add_option("--out", cal.out, "Output estimate file")->required();
  c_cal->add_option("--report", cal.report, "Per-row report CSV");

  ReconstructArgs rec;
  auto* c_rec = app.add_subcommand("reconstruct", "Recover a binary image through a calibrated medium");
  c_rec->add_option("--tm", rec.tm, "Estimated transmission matrix file")->required();
  c_rec->add_option("--y", rec.y, "Measurement file (M x K, or 1 x M)")->required();
  c_rec->add_option("--column", rec.column, "Measurement column to use")->capture_default_str();
  c_rec->add_option("--prior", rec.prior, "global:RHO or local:PATH")->required();
  add_solver_flags(c_rec, rec.options);
  c_rec->add_option("--report", rec.report, "Calibration report; flagged rows are dropped");
  c_rec->add_option("--width", rec.width, "Image width, 0 = square")->capture_default_str();
  c_rec->add_option("--out-pgm", rec.out_pgm, "Binary image output (PGM)");
  c_rec->add_option("--out-soft", rec.out_soft, "Soft estimate output (1 x N real matrix)");
  c_rec->add_option("--truth", rec.truth, "Ground-truth patterns; prints dependence and correlation");

  ExperimentArgs exp;
  auto* c_exp = app.add_subcommand("experiment", "Run a sweep experiment on simulated media");
  c_exp->add_option("--name", exp.name, "alpha-sweep, m-sweep or visual-grid")->required();
  c_exp->add_option("--config", exp.config, "key=value configuration file");
  c_exp->add_option("--out-dir", exp.out_dir, "Output directory")->capture_default_str();
  c_exp->add_option("--mnist-dir", exp.mnist_dir, "Directory with MNIST IDX files");
  c_exp->add_option("--seed", exp.seed, "Overrides the config seed");
  c_exp->add_option("--threads", exp.threads, "Overrides the config thread count");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (c_medium->parsed()) return run_medium_gen(medium);
    if (c_pat->parsed()) return run_patterns(pat);
    if (c_meas->parsed()) return run_measure(meas);
    if (c_prior->parsed()) return run_local_prior(prior);
    if (c_cal->parsed()) return run_calibrate(cal);
    if (c_rec->parsed()) return run_reconstruct(rec);
    if (c_exp->parsed()) return run_experiment(exp);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 2;
}
