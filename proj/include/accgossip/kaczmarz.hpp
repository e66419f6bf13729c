#pragma once

// Matrix-form solvers for the consensus system A x = 0: randomized Kaczmarz
// and its accelerated variant with either parameter schedule.

#include <Eigen/Dense>

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>

#include "rng.hpp"
#include "spectral.hpp"
#include "topology.hpp"
#include "trace.hpp"

namespace accgossip {

struct SolverState {
  Vector x;
  Vector v;
  std::size_t k = 0;

  static SolverState start(const Vector& x0) { return {x0, x0, 0}; }
};

struct StepParams {
  double alpha = 1.0;
  double beta = 1.0;
  double gamma = 0.0;
};

/// Per-step (alpha_k, beta_k, gamma_k) for the accelerated methods.
///
/// Option 1 grows gamma_k by the recurrence
///   gamma_k^2 - gamma_k / m = (1 - gamma_k lambda / m) gamma_{k-1}^2,  gamma_{-1} = 0,
/// taking the largest root, then sets
///   alpha_k = (m - gamma_k lambda) / (gamma_k (m^2 - lambda)),  beta_k = 1 - gamma_k lambda / m.
/// Option 2 uses constants built from lambda_min^+(W) and nu.
class ParamSchedule {
 public:
  enum class Kind { Option1, Option2, Fixed };

  static ParamSchedule option1(std::size_t m, double lambda) {
    if (m == 0) throw std::invalid_argument("option1 schedule: m must be positive");
    if (!(lambda > 0.0))
      throw std::invalid_argument("option1 schedule: lambda must be positive, got " +
                                  std::to_string(lambda));
    ParamSchedule s(Kind::Option1);
    s.m_ = static_cast<double>(m);
    s.lambda_ = lambda;
    return s;
  }

  static ParamSchedule option2(const SpectralSummary& summary) {
    const double lw = summary.lambda_min_plus_w;
    const double nu = summary.nu;
    if (!(lw > 0.0) || !(nu > 0.0))
      throw std::invalid_argument("option2 schedule: needs positive lambda_min^+(W) and nu");
    ParamSchedule s(Kind::Option2);
    s.fixed_.beta = 1.0 - std::sqrt(lw / nu);
    s.fixed_.gamma = std::sqrt(1.0 / (lw * nu));
    s.fixed_.alpha = 1.0 / (1.0 + s.fixed_.gamma * nu);
    s.lambda_w_ = lw;
    s.nu_ = nu;
    s.m_ = static_cast<double>(summary.m);
    return s;
  }

  static ParamSchedule fixed(StepParams p) {
    ParamSchedule s(Kind::Fixed);
    s.fixed_ = p;
    return s;
  }

  /// Largest root of gamma^2 + gamma (lambda g^2 - 1) / m - g^2 = 0 where
  /// g = gamma_{k-1}. The constant term is -g^2 <= 0, so the roots straddle
  /// zero and the larger one is the nonnegative root.
  static double option1_gamma(double m, double lambda, double gamma_prev) {
    if (gamma_prev == 0.0) return 1.0 / m;
    const double g2 = gamma_prev * gamma_prev;
    const double b = (lambda * g2 - 1.0) / m;
    const double disc = std::sqrt(b * b + 4.0 * g2);
    if (b < 0.0) return 0.5 * (disc - b);
    return 2.0 * g2 / (b + disc);
  }

  /// gamma^2 - gamma / m - (1 - gamma lambda / m) gamma_prev^2.
  static double option1_residual(double m, double lambda, double gamma, double gamma_prev) {
    return gamma * gamma - gamma / m - (1.0 - gamma * lambda / m) * gamma_prev * gamma_prev;
  }

  /// Parameters for the current step; advances the schedule.
  StepParams next() {
    ++step_;
    if (kind_ != Kind::Option1) return fixed_;
    const double gamma = option1_gamma(m_, lambda_, gamma_prev_);
    gamma_prev_ = gamma;
    StepParams p;
    p.gamma = gamma;
    p.beta = 1.0 - gamma * lambda_ / m_;
    const double denom = gamma * (m_ * m_ - lambda_);
    // m = 1 with lambda = 1 makes the alpha formula 0/0. There gamma_k = 1/m
    // for every k, and alpha = 1 is the value the formula takes at
    // gamma = 1/m for any other lambda.
    p.alpha = denom == 0.0 ? 1.0 : (m_ - gamma * lambda_) / denom;
    return p;
  }

  Kind kind() const noexcept { return kind_; }
  std::size_t steps_taken() const noexcept { return step_; }
  double lambda() const noexcept { return lambda_; }
  double m() const noexcept { return m_; }
  /// Most recent gamma for Option 1 (0 before the first step).
  double last_gamma() const noexcept { return gamma_prev_; }
  const StepParams& constants() const noexcept { return fixed_; }
  double lambda_min_plus_w() const noexcept { return lambda_w_; }
  double nu() const noexcept { return nu_; }

 private:
  explicit ParamSchedule(Kind k) : kind_(k) {}

  Kind kind_;
  double m_ = 0.0;
  double lambda_ = 0.0;
  double gamma_prev_ = 0.0;
  StepParams fixed_{};
  double lambda_w_ = 0.0;
  double nu_ = 0.0;
  std::size_t step_ = 0;
};

inline ParamSchedule option1_schedule(std::size_t m, double lambda) {
  return ParamSchedule::option1(m, lambda);
}

inline ParamSchedule option2_schedule(const SpectralSummary& summary) {
  return ParamSchedule::option2(summary);
}

/// Schedule for `method`; Option 1 uses `lambda` or lambda_min^+(A^T A).
inline ParamSchedule make_schedule(Method method, const SpectralSummary& summary,
                                   std::optional<double> lambda = std::nullopt) {
  switch (method) {
    case Method::AccOpt1:
      return option1_schedule(summary.m, lambda.value_or(summary.lambda_min_plus_ata));
    case Method::AccOpt2:
      return option2_schedule(summary);
    default:
      return ParamSchedule::fixed({1.0, 1.0, 0.0});
  }
}

/// One Kaczmarz projection: x - (A_r x - b_r) / ||A_r||^2 A_r^T.
inline Vector rk_step(const IncidenceSystem& system, const Vector& x, std::size_t row) {
  const auto r = static_cast<Eigen::Index>(row);
  const auto a_row = system.a().row(r);
  const double scale = (a_row.dot(x) - system.b()(r)) / a_row.squaredNorm();
  return x - scale * a_row.transpose();
}

inline SolverState accrk_step(const IncidenceSystem& system, const SolverState& state,
                              const StepParams& p, std::size_t row) {
  const auto r = static_cast<Eigen::Index>(row);
  const auto a_row = system.a().row(r);
  const Vector y = p.alpha * state.v + (1.0 - p.alpha) * state.x;
  const double scale = (a_row.dot(y) - system.b()(r)) / a_row.squaredNorm();
  const Vector t = scale * a_row.transpose();
  SolverState out;
  out.x = y - t;
  out.v = p.beta * state.v + (1.0 - p.beta) * y - p.gamma * t;
  out.k = state.k + 1;
  return out;
}

inline SolverState accrk_step(const IncidenceSystem& system, const SolverState& state,
                              ParamSchedule& schedule, std::size_t row) {
  return accrk_step(system, state, schedule.next(), row);
}

struct RunOptions {
  std::size_t iterations = 0;
  std::size_t record_every = 1;
  /// Stop at the first recorded iteration whose relative error is at or below this.
  std::optional<double> stop_below;
};

/// Observer that ignores everything.
struct NoObserver {
  void operator()(std::size_t, const Vector&, const Vector&) const {}
};

namespace detail {

// Shared driver: `next_row(k)` yields the row (edge index) for step k.
template <class NextRow, class Observer>
Trace solve_impl(const IncidenceSystem& system, const Vector& x0, Method method,
                 ParamSchedule schedule, const RunOptions& opts, NextRow&& next_row,
                 Observer&& observe) {
  if (x0.size() != static_cast<Eigen::Index>(system.cols()))
    throw std::invalid_argument("x0 has wrong length");
  if (method == Method::Shb)
    throw std::invalid_argument("matrix-form solver has no heavy-ball variant");
  Trace trace;
  trace.meta.n = system.cols();
  trace.meta.m = system.rows();
  const RelativeError rel(x0);
  const RecordPolicy policy{opts.record_every};
  SolverState state = SolverState::start(x0);

  auto record = [&](std::size_t k) {
    const double err = rel(state.x);
    trace.records.push_back({k, err});
    observe(k, state.x, state.v);
    return opts.stop_below && err <= *opts.stop_below;
  };

  if (record(0)) return trace;
  for (std::size_t k = 0; k < opts.iterations; ++k) {
    const std::size_t row = next_row(k);
    if (method == Method::Pairwise) {
      state.x = rk_step(system, state.x, row);
      state.v = state.x;
      ++state.k;
    } else {
      state = accrk_step(system, state, schedule, row);
    }
    if (policy.due(k + 1, opts.iterations) && record(k + 1)) break;
  }
  return trace;
}

}  // namespace detail

/// Runs `method` with rows sampled uniformly from a stream derived from `seed`.
template <class Observer = NoObserver>
Trace solve(const IncidenceSystem& system, const Vector& x0, Method method, ParamSchedule schedule,
            const RunOptions& opts, std::uint64_t seed, Observer&& observe = {}) {
  Rng rng(derive_seed(seed, {stream::kEdgeSampling}));
  const auto m = static_cast<std::uint64_t>(system.rows());
  auto trace = detail::solve_impl(
      system, x0, method, std::move(schedule), opts,
      [&](std::size_t) { return static_cast<std::size_t>(rng.uniform_index(m)); },
      std::forward<Observer>(observe));
  trace.method = std::string(method_name(method));
  trace.seed = seed;
  return trace;
}

/// Runs `method` on an explicit row sequence (one row per iteration).
template <class Observer = NoObserver>
Trace solve_rows(const IncidenceSystem& system, const Vector& x0, Method method,
                 ParamSchedule schedule, std::span<const std::size_t> rows,
                 std::size_t record_every = 1, Observer&& observe = {}) {
  for (auto r : rows)
    if (r >= system.rows()) throw std::invalid_argument("row index out of range");
  RunOptions opts;
  opts.iterations = rows.size();
  opts.record_every = record_every;
  auto trace = detail::solve_impl(
      system, x0, method, std::move(schedule), opts, [&](std::size_t k) { return rows[k]; },
      std::forward<Observer>(observe));
  trace.method = std::string(method_name(method));
  return trace;
}

}  // namespace accgossip
