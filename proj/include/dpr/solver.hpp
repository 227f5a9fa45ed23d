// prSAMP: swept approximate message passing with pluggable output channels
// and input priors.
//
// One sweep first refreshes the output-side messages in parallel
//   v = |A|^2 x_v,   omega = A x_a - v o g,   (g, g') = channel(y, omega, v)
// and then visits every coefficient once in a fresh random order. For
// coefficient i it forms the pseudo-measurement (r_i, s_i), denoises it, and
// folds the change back into all output messages with a rank-one update
//   v_m     += |A_mi|^2 dx_v
//   omega_m += A_mi dx_a - |A_mi|^2 dx_v g_m
// after which g_m and g'_m are re-evaluated, so the next coefficient always
// sees channel scores consistent with the current estimate.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <tuple>
#include <utility>
#include <type_traits>
#include <vector>

#include "dpr/channels.hpp"
#include "dpr/model.hpp"
#include "dpr/priors.hpp"

namespace dpr {

namespace detail {

inline double abs2(double a) { return a * a; }
inline double abs2(const complex& a) { return std::norm(a); }
inline double conj_of(double a) { return a; }
inline complex conj_of(const complex& a) { return std::conj(a); }

}  // namespace detail

/// Column-major copy of a measurement operator with cached squared
/// magnitudes. Built once and shared read-only by any number of solvers.
template <class T>
class Operator {
 public:
  static constexpr bool kComplex = std::is_same_v<T, complex>;

  Operator() = default;
  explicit Operator(const Matrix<T>& a)
      : rows_(a.rows()), cols_(a.cols()), values_(a.size()), abs2_(a.size()) {
    for (std::size_t m = 0; m < rows_; ++m) {
      for (std::size_t i = 0; i < cols_; ++i) {
        values_[i * rows_ + m] = a(m, i);
        abs2_[i * rows_ + m] = detail::abs2(a(m, i));
      }
    }
  }

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::span<const T> column(std::size_t i) const { return {values_.data() + i * rows_, rows_}; }
  std::span<const double> abs2_column(std::size_t i) const { return {abs2_.data() + i * rows_, rows_}; }

  std::vector<complex> apply(std::span<const complex> x) const {
    std::vector<complex> out(rows_);
    for (std::size_t i = 0; i < cols_; ++i) {
      const auto col = column(i);
      for (std::size_t m = 0; m < rows_; ++m) out[m] += col[m] * x[i];
    }
    return out;
  }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<T> values_;
  std::vector<double> abs2_;
};

/// One inference problem. Borrows the operator and the observations.
template <class T>
struct Problem {
  const Operator<T>& op;
  std::span<const double> y;
  Channel channel = Channel::PhaseRetrieval;
  PriorSpec prior = ComplexGaussianPrior{};

  void validate() const {
    if (y.size() != op.rows()) {
      throw ArgumentError("problem: " + std::to_string(y.size()) + " observations for an operator with " +
                          std::to_string(op.rows()) + " rows");
    }
    for (double v : y) {
      if (!std::isfinite(v)) throw ArgumentError("problem: non-finite observation");
      if (channel == Channel::PhaseRetrieval && v < 0.0) {
        throw ArgumentError("problem: negative amplitude for the phase retrieval channel");
      }
    }
    validate_prior(prior, op.cols());
  }
};

struct SolveResult {
  std::vector<complex> x_a;
  std::vector<double> x_v;
  int sweeps_used = 0;
  bool converged = false;
  double residual = 0.0;
  int restart = 0;  // index of the selected run
};

/// Non-finite message during a sweep. When thrown by solve(), carries the
/// lowest-residual finite state seen across all restarts.
class DivergenceError : public std::runtime_error {
 public:
  DivergenceError(const std::string& what, int sweep, std::size_t index)
      : std::runtime_error(what), sweep_(sweep), index_(index) {}

  int sweep() const { return sweep_; }
  std::size_t index() const { return index_; }
  const std::optional<SolveResult>& best_partial() const { return best_partial_; }
  void set_best_partial(SolveResult partial) { best_partial_ = std::move(partial); }

 private:
  int sweep_;
  std::size_t index_;
  std::optional<SolveResult> best_partial_;
};

namespace detail {

inline Posterior denoise(const PriorSpec& prior, std::size_t i, complex r, double s, bool circular) {
  if (const auto* g = std::get_if<ComplexGaussianPrior>(&prior)) {
    return complex_gaussian_denoiser(r, s, g->v0);
  }
  // For a complex operator the noise on r is circular with total variance s,
  // i.e. s/2 per real component, which is the variance the binary
  // likelihood exp(-|x - r|^2 / (2 s)) is written in.
  const double per_component = circular ? 0.5 * s : s;
  return binary_denoiser(r, per_component, std::get<BinaryPrior>(prior).at(i));
}

template <class T>
void refresh_channel(SolverState& st, const Problem<T>& problem, const SolverOptions& options,
                     std::size_t m) {
  const auto out = channel_output_unchecked(problem.channel, problem.y[m], st.omega[m], st.v[m],
                                  options.sigma2, options.omega_guard);
  st.g[m] = out.g;
  st.g_prime[m] = out.g_prime;
}

/// v = |A|^2 x_v and omega = A x_a - v o g, then channel refresh.
template <class T>
void refresh_outputs(SolverState& st, const Problem<T>& problem, const SolverOptions& options,
                     bool onsager, int sweep_index) {
  const auto& op = problem.op;
  std::fill(st.v.begin(), st.v.end(), 0.0);
  std::fill(st.omega.begin(), st.omega.end(), complex{});
  for (std::size_t i = 0; i < op.cols(); ++i) {
    const auto col = op.column(i);
    const auto col2 = op.abs2_column(i);
    const complex xa = st.x_a[i];
    const double xv = st.x_v[i];
    for (std::size_t m = 0; m < op.rows(); ++m) {
      st.v[m] += col2[m] * xv;
      st.omega[m] += col[m] * xa;
    }
  }
  for (std::size_t m = 0; m < op.rows(); ++m) {
    if (onsager) st.omega[m] -= st.v[m] * st.g[m];
    if (!is_finite(st.omega[m]) || !std::isfinite(st.v[m])) {
      throw DivergenceError("non-finite output message at sweep " + std::to_string(sweep_index) +
                                ", measurement " + std::to_string(m),
                            sweep_index, m);
    }
    refresh_channel(st, problem, options, m);
  }
}

/// Prior mean and variance of every coefficient.
template <class T>
std::pair<std::vector<complex>, std::vector<double>> prior_means(const Problem<T>& problem) {
  const std::size_t n = problem.op.cols();
  std::vector<complex> mean(n);
  std::vector<double> var(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (const auto* g = std::get_if<ComplexGaussianPrior>(&problem.prior)) {
      var[i] = g->v0;
    } else {
      const double rho = std::get<BinaryPrior>(problem.prior).at(i);
      mean[i] = rho;
      var[i] = rho * (1.0 - rho);
    }
  }
  return {mean, var};
}

}  // namespace detail

/// Initial messages. ComplexGaussian: x_a ~ CN(0, v0), x_v = v0.
/// Binary: x_a = rho + U(-0.01, 0.01), x_v = rho (1 - rho) + 0.01.
/// omega = A x_a and v = |A|^2 x_v without an Onsager term.
template <class T>
SolverState init_state(const Problem<T>& problem, const SolverOptions& options, Rng& rng) {
  problem.validate();
  const std::size_t n = problem.op.cols();
  const std::size_t m = problem.op.rows();
  SolverState st;
  st.x_a.resize(n);
  st.x_v.resize(n);
  st.s.assign(n, 1.0);
  st.r.resize(n);
  st.omega.resize(m);
  st.v.resize(m);
  st.g.assign(m, complex{});
  st.g_prime.assign(m, 0.0);

  if (const auto* g = std::get_if<ComplexGaussianPrior>(&problem.prior)) {
    const double sd = std::sqrt(0.5 * g->v0);
    for (std::size_t i = 0; i < n; ++i) {
      const double re = standard_normal(rng);
      const double im = standard_normal(rng);
      st.x_a[i] = {sd * re, sd * im};
      st.x_v[i] = g->v0;
    }
  } else {
    const auto& b = std::get<BinaryPrior>(problem.prior);
    for (std::size_t i = 0; i < n; ++i) {
      const double rho = b.at(i);
      st.x_a[i] = rho + 0.01 * (2.0 * uniform01(rng) - 1.0);
      st.x_v[i] = rho * (1.0 - rho) + 0.01;
    }
  }
  st.r = st.x_a;
  detail::refresh_outputs(st, problem, options, /*onsager=*/false, 0);
  return st;
}

/// One swept pass. Coefficients are visited in the order produced by
/// dpr::shuffle of 0..N-1 with `rng`. Returns max_i |dx_a,i|.
template <class T>
double sweep(SolverState& st, const Problem<T>& problem, const SolverOptions& options, Rng& rng,
             int sweep_index = 0) {
  const auto& op = problem.op;
  const std::size_t rows = op.rows();
  const double beta = options.damping;

  detail::refresh_outputs(st, problem, options, /*onsager=*/true, sweep_index);

  std::vector<std::size_t> order(op.cols());
  std::iota(order.begin(), order.end(), std::size_t{0});
  shuffle(std::span<std::size_t>(order), rng);

  double max_change = 0.0;
  for (const std::size_t i : order) {
    const auto col = op.column(i);
    const auto col2 = op.abs2_column(i);

    double precision = 0.0;
    double gaussian_precision = 0.0;
    complex score{};
    for (std::size_t m = 0; m < rows; ++m) {
      if (col2[m] == 0.0) continue;
      precision += col2[m] * std::max(-st.g_prime[m], 0.0);
      gaussian_precision += col2[m] / (st.v[m] + options.sigma2);
      score += detail::conj_of(col[m]) * st.g[m];
    }
    const double floor = std::max(1e-12 * gaussian_precision, std::numeric_limits<double>::min());
    const double s = 1.0 / std::max(precision, floor);
    const complex r = st.x_a[i] + s * score;
    if (!detail::is_finite(r)) {
      throw DivergenceError("non-finite pseudo-measurement at sweep " + std::to_string(sweep_index) +
                                ", coefficient " + std::to_string(i),
                            sweep_index, i);
    }

    const Posterior post = detail::denoise(problem.prior, i, r, s, Operator<T>::kComplex);
    const complex new_mean = beta * post.mean + (1.0 - beta) * st.x_a[i];
    const complex dx_a = new_mean - st.x_a[i];
    const double dx_v = post.var - st.x_v[i];
    st.s[i] = s;
    st.r[i] = r;
    st.x_a[i] = new_mean;
    st.x_v[i] = post.var;
    max_change = std::max(max_change, std::abs(dx_a));

    for (std::size_t m = 0; m < rows; ++m) {
      if (col2[m] == 0.0) continue;
      st.v[m] = std::max(st.v[m] + col2[m] * dx_v, 0.0);
      st.omega[m] += col[m] * dx_a - col2[m] * dx_v * st.g[m];
      if (!detail::is_finite(st.omega[m]) || !std::isfinite(st.v[m])) {
        throw DivergenceError("non-finite output message at sweep " + std::to_string(sweep_index) +
                                  ", coefficient " + std::to_string(i),
                              sweep_index, i);
      }
      detail::refresh_channel(st, problem, options, m);
    }
  }
  return max_change;
}

/// Relative amplitude misfit ||y - |A x||| / ||y|| (phase retrieval) or
/// ||y - A x|| / ||y|| (Gaussian). Absolute misfit when y = 0. Terms are
/// scaled by the largest magnitude so that squares do not overflow.
template <class T>
double residual(const Problem<T>& problem, std::span<const complex> x) {
  const auto pred = problem.op.apply(x);
  std::vector<double> diff(pred.size());
  double scale = 0.0;
  for (std::size_t m = 0; m < pred.size(); ++m) {
    diff[m] = problem.channel == Channel::PhaseRetrieval ? problem.y[m] - std::abs(pred[m])
                                                         : std::abs(problem.y[m] - pred[m]);
    scale = std::max({scale, std::abs(diff[m]), problem.y[m]});
  }
  if (!std::isfinite(scale)) return std::numeric_limits<double>::infinity();
  if (scale == 0.0) return 0.0;
  double num = 0.0, den = 0.0;
  for (std::size_t m = 0; m < pred.size(); ++m) {
    num += (diff[m] / scale) * (diff[m] / scale);
    den += (problem.y[m] / scale) * (problem.y[m] / scale);
  }
  return den > 0.0 ? std::sqrt(num / den) : scale * std::sqrt(num);
}

/// Runs options.restarts independent initializations (stream = restart index
/// of options.seed) and keeps the run with the smallest residual.
template <class T>
SolveResult solve(const Problem<T>& problem, const SolverOptions& options) {
  options.validate();
  problem.validate();

  std::optional<SolveResult> best;
  std::optional<SolveResult> best_partial;
  std::optional<DivergenceError> last_error;

  for (int restart = 0; restart < options.restarts; ++restart) {
    Rng rng = seeded_rng(options.seed, static_cast<std::uint64_t>(restart));
    SolverState st;
    std::vector<complex> good_mean;
    std::vector<double> good_var;
    int sweeps = 0;
    try {
      st = init_state(problem, options, rng);  // can already overflow (sweep 0)
      good_mean = st.x_a;
      good_var = st.x_v;
      bool converged = false;
      for (int t = 1; t <= options.max_sweeps; ++t) {
        good_mean = st.x_a;
        good_var = st.x_v;
        const double change = sweep(st, problem, options, rng, t);
        sweeps = t;
        if (change < options.tol) {
          converged = true;
          break;
        }
      }
      SolveResult run{st.x_a, st.x_v, sweeps, converged, residual(problem, std::span<const complex>(st.x_a)), restart};
      if (!best || run.residual < best->residual) best = std::move(run);
    } catch (const DivergenceError& e) {
      if (good_mean.empty()) std::tie(good_mean, good_var) = detail::prior_means(problem);
      SolveResult partial{good_mean, good_var, sweeps, false,
                          residual(problem, std::span<const complex>(good_mean)), restart};
      if (!best_partial || partial.residual < best_partial->residual) best_partial = std::move(partial);
      last_error = e;
    }
  }
  if (best) return *best;

  DivergenceError err("all " + std::to_string(options.restarts) + " restarts diverged; last: " +
                          last_error->what(),
                      last_error->sweep(), last_error->index());
  err.set_best_partial(*best_partial);
  throw err;
}

}  // namespace dpr
