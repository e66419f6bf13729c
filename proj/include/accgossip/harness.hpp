#pragma once

// Multi-trial experiments, trace aggregation, checks of the expected-error
// bounds, and CSV/SVG output.

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <istream>
#include <limits>
#include <optional>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "gossip.hpp"
#include "kaczmarz.hpp"
#include "rng.hpp"
#include "spectral.hpp"
#include "topology.hpp"
#include "trace.hpp"

namespace accgossip {

/// Bad configuration key or value.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

enum class Topology { Cycle, Grid, Rgg };

inline std::string_view topology_name(Topology t) {
  switch (t) {
    case Topology::Cycle: return "cycle";
    case Topology::Grid: return "grid";
    case Topology::Rgg: return "rgg";
  }
  return "?";
}

inline std::optional<Topology> parse_topology(std::string_view s) {
  if (s == "cycle") return Topology::Cycle;
  if (s == "grid") return Topology::Grid;
  if (s == "rgg") return Topology::Rgg;
  return std::nullopt;
}

enum class Check { Rk, Option2, Option1 };

inline std::string_view check_name(Check c) {
  switch (c) {
    case Check::Rk: return "rk";
    case Check::Option2: return "option2";
    case Check::Option1: return "option1";
  }
  return "?";
}

struct ExperimentConfig {
  Topology topology = Topology::Cycle;
  std::size_t size = 0;  // n for cycle/rgg, side for grid
  std::vector<Method> methods{Method::Pairwise, Method::Shb, Method::AccOpt1, Method::AccOpt2};
  std::size_t trials = 1;
  std::size_t rounds = 0;
  std::uint64_t seed = 0;
  std::optional<std::uint64_t> graph_seed;  // rgg only; defaults to seed
  std::optional<double> lambda;             // Option 1; defaults to lambda_min^+(A^T A)
  std::optional<double> mu;                 // Lyapunov weight; defaults to lambda_min^+(W)
  double momentum_beta = kDefaultMomentumBeta;
  std::optional<std::size_t> record_every;  // defaults to default_record_every(n, m)
  double target = 1e-4;                     // threshold for rounds-to-target reporting
  std::optional<std::vector<Check>> checks; // nullopt: rk and option2 when the method runs
  std::string csv_path;
  std::string svg_path;
  std::string log_prefix;

  std::vector<Check> effective_checks() const {
    if (checks) return *checks;
    std::vector<Check> out;
    auto has = [&](Method m) { return std::find(methods.begin(), methods.end(), m) != methods.end(); };
    if (has(Method::Pairwise)) out.push_back(Check::Rk);
    if (has(Method::AccOpt2)) out.push_back(Check::Option2);
    return out;
  }
};

namespace detail {

inline std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

inline std::vector<std::string> split_list(std::string_view s) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= s.size()) {
    const auto comma = s.find(',', start);
    const auto item = trim(s.substr(start, comma == std::string_view::npos ? s.npos : comma - start));
    if (!item.empty()) out.push_back(item);
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

template <class T>
T parse_number(const std::string& key, const std::string& value) {
  std::istringstream in(value);
  T out{};
  in >> out;
  if (!in || !(in >> std::ws).eof())
    throw ConfigError("config: bad value '" + value + "' for key '" + key + "'");
  return out;
}

inline std::size_t parse_count(const std::string& key, const std::string& value) {
  if (!value.empty() && value[0] == '-')
    throw ConfigError("config: '" + key + "' must be nonnegative");
  return parse_number<std::size_t>(key, value);
}

}  // namespace detail

/// Applies one key=value setting.
inline void apply_setting(ExperimentConfig& cfg, const std::string& key, const std::string& value) {
  using detail::parse_count;
  using detail::parse_number;
  if (key == "topology") {
    auto t = parse_topology(value);
    if (!t) throw ConfigError("config: unknown topology '" + value + "'");
    cfg.topology = *t;
  } else if (key == "n" || key == "side") {
    cfg.size = parse_count(key, value);
  } else if (key == "methods") {
    cfg.methods.clear();
    for (const auto& name : detail::split_list(value)) {
      auto m = parse_method(name);
      if (!m) throw ConfigError("config: unknown method '" + name + "'");
      cfg.methods.push_back(*m);
    }
    if (cfg.methods.empty()) throw ConfigError("config: methods list is empty");
  } else if (key == "trials") {
    cfg.trials = parse_count(key, value);
  } else if (key == "rounds") {
    cfg.rounds = parse_count(key, value);
  } else if (key == "seed") {
    cfg.seed = parse_number<std::uint64_t>(key, value);
  } else if (key == "graph_seed") {
    cfg.graph_seed = parse_number<std::uint64_t>(key, value);
  } else if (key == "lambda") {
    cfg.lambda = parse_number<double>(key, value);
  } else if (key == "mu") {
    cfg.mu = parse_number<double>(key, value);
  } else if (key == "momentum_beta") {
    cfg.momentum_beta = parse_number<double>(key, value);
  } else if (key == "record_every") {
    cfg.record_every = parse_count(key, value);
  } else if (key == "target") {
    cfg.target = parse_number<double>(key, value);
  } else if (key == "checks") {
    std::vector<Check> checks;
    for (const auto& name : detail::split_list(value)) {
      if (name == "none") continue;
      if (name == "rk") checks.push_back(Check::Rk);
      else if (name == "option2") checks.push_back(Check::Option2);
      else if (name == "option1") checks.push_back(Check::Option1);
      else throw ConfigError("config: unknown check '" + name + "'");
    }
    cfg.checks = std::move(checks);
  } else if (key == "csv") {
    cfg.csv_path = value;
  } else if (key == "svg") {
    cfg.svg_path = value;
  } else if (key == "log_prefix") {
    cfg.log_prefix = value;
  } else {
    throw ConfigError("config: unknown key '" + key + "'");
  }
}

/// Applies a "key=value" string.
inline void apply_override(ExperimentConfig& cfg, std::string_view assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string_view::npos)
    throw ConfigError("config: expected key=value, got '" + std::string(assignment) + "'");
  apply_setting(cfg, detail::trim(assignment.substr(0, eq)), detail::trim(assignment.substr(eq + 1)));
}

/// Checks the constraints that do not need the graph.
inline void validate(const ExperimentConfig& cfg) {
  if (cfg.size == 0) throw ConfigError("config: topology size (n or side) is required");
  if (cfg.trials == 0) throw ConfigError("config: trials must be positive");
  if (cfg.methods.empty()) throw ConfigError("config: no methods");
  if (!(cfg.momentum_beta >= 0.0 && cfg.momentum_beta < 1.0))
    throw ConfigError("config: momentum_beta must lie in [0, 1)");
  if (cfg.mu && !(*cfg.mu > 0.0)) throw ConfigError("config: mu must be positive");
  if (cfg.lambda && !(*cfg.lambda > 0.0)) throw ConfigError("config: lambda must be positive");
  if (cfg.record_every && *cfg.record_every == 0)
    throw ConfigError("config: record_every must be positive");
  if (!(cfg.target > 0.0)) throw ConfigError("config: target must be positive");
}

/// Flat key=value text; '#' starts a comment.
inline ExperimentConfig parse_config(std::istream& in) {
  ExperimentConfig cfg;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    if (detail::trim(line).empty()) continue;
    try {
      apply_override(cfg, line);
    } catch (const ConfigError& e) {
      throw ConfigError("line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return cfg;
}

inline ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config '" + path + "'");
  return parse_config(in);
}

inline Graph make_topology(const ExperimentConfig& cfg) {
  switch (cfg.topology) {
    case Topology::Cycle: return make_cycle(cfg.size);
    case Topology::Grid: return make_grid(cfg.size);
    case Topology::Rgg: return make_rgg(cfg.size, cfg.graph_seed.value_or(cfg.seed));
  }
  throw ConfigError("config: bad topology");
}

// ---------------------------------------------------------------------------
// Aggregation

struct AggregateTrace {
  std::string method;
  std::vector<std::size_t> iterations;
  std::vector<double> mean;
  std::vector<double> min;
  std::vector<double> max;
  std::size_t trials = 0;
};

/// Pointwise mean and envelope. Traces must share their iteration grid up to
/// the length of the shortest one.
inline AggregateTrace aggregate(std::span<const Trace> traces) {
  if (traces.empty()) throw std::invalid_argument("aggregate: no traces");
  std::size_t len = traces[0].records.size();
  for (const auto& t : traces) len = std::min(len, t.records.size());
  AggregateTrace out;
  out.method = traces[0].method;
  out.trials = traces.size();
  out.iterations.resize(len);
  out.mean.assign(len, 0.0);
  out.min.assign(len, std::numeric_limits<double>::infinity());
  out.max.assign(len, -std::numeric_limits<double>::infinity());
  for (std::size_t p = 0; p < len; ++p) out.iterations[p] = traces[0].records[p].iteration;
  for (const auto& t : traces) {
    for (std::size_t p = 0; p < len; ++p) {
      if (t.records[p].iteration != out.iterations[p])
        throw std::invalid_argument("aggregate: traces have different iteration grids");
      const double e = t.records[p].relative_error;
      out.mean[p] += e;
      out.min[p] = std::min(out.min[p], e);
      out.max[p] = std::max(out.max[p], e);
    }
  }
  for (auto& m : out.mean) m /= static_cast<double>(traces.size());
  return out;
}

// ---------------------------------------------------------------------------
// Lyapunov function for the fixed-constant schedule

/// Psi^k = ||v^k - x*||^2_{W^+} + ||x^k - x*||^2 / mu for one trial.
struct LyapunovSeries {
  std::vector<std::size_t> iterations;
  std::vector<double> psi;
};

/// Evaluates Psi from (x, v) snapshots. W^+ comes from the range
/// decomposition of A^T A, computed once per topology.
class LyapunovMeter {
 public:
  LyapunovMeter(const IncidenceSystem& system, double mu, const SpectralConfig& cfg = {})
      : range_(RangeDecomposition::of(system.a().transpose() * system.a(), cfg)),
        inv_m_(1.0 / static_cast<double>(system.rows())),
        mu_(mu) {
    if (!(mu > 0.0)) throw std::invalid_argument("mu must be positive");
  }

  double operator()(const Vector& x, const Vector& v, double target) const {
    const Vector dv = v.array() - target;
    return range_.pinv_quadratic(dv, inv_m_) + consensus_distance_sq(x, target) / mu_;
  }

  double mu() const noexcept { return mu_; }

 private:
  RangeDecomposition range_;
  double inv_m_;
  double mu_;
};

// ---------------------------------------------------------------------------
// Bound checks

struct BoundRow {
  std::size_t iteration = 0;
  double observed = 0.0;
  double bound = 0.0;  // theoretical value
  double limit = 0.0;  // bound with statistical envelope
  bool pass = true;
};

struct BoundReport {
  std::string check;
  std::string method;
  std::size_t trials = 0;
  std::vector<BoundRow> rows;

  bool passed() const {
    return std::all_of(rows.begin(), rows.end(), [](const BoundRow& r) { return r.pass; });
  }

  std::vector<BoundRow> failures() const {
    std::vector<BoundRow> out;
    for (const auto& r : rows)
      if (!r.pass) out.push_back(r);
    return out;
  }
};

/// 3/sqrt(trials): envelope on a sample mean of a nonnegative quantity
/// compared against a bound on its expectation.
inline double statistical_slack(std::size_t trials) {
  return 3.0 / std::sqrt(static_cast<double>(trials));
}

/// Squared relative errors below this are floating-point noise.
inline constexpr double kRoundoffFloor = 1e-28;

namespace detail {

inline BoundReport geometric_bound(std::string check, std::string method,
                                   std::span<const std::size_t> iterations,
                                   std::span<const double> observed, double rate,
                                   std::size_t trials) {
  BoundReport report;
  report.check = std::move(check);
  report.method = std::move(method);
  report.trials = trials;
  const double slack = statistical_slack(trials);
  for (std::size_t p = 0; p < iterations.size(); ++p) {
    BoundRow row;
    row.iteration = iterations[p];
    row.observed = observed[p];
    row.bound = std::pow(rate, static_cast<double>(row.iteration));
    row.limit = row.bound * (1.0 + slack) + kRoundoffFloor;
    row.pass = row.observed <= row.limit;
    report.rows.push_back(row);
  }
  return report;
}

}  // namespace detail

/// Mean relative error of RK / pairwise gossip against rho^k.
inline BoundReport verify_rk_bound(const AggregateTrace& agg, const TheoreticalRates& rates) {
  return detail::geometric_bound("rk", agg.method, agg.iterations, agg.mean, rates.rho, agg.trials);
}

/// Mean over trials of Psi^k / Psi^0 against (1 - sqrt(lambda_min^+(W)/nu))^k.
inline BoundReport verify_option2_bound(std::span<const LyapunovSeries> runs,
                                        const SpectralSummary& summary,
                                        std::string method = "accgossip-opt2") {
  if (runs.empty()) throw std::invalid_argument("verify_option2_bound: no runs");
  std::size_t len = runs[0].psi.size();
  for (const auto& r : runs) len = std::min(len, r.psi.size());
  std::vector<std::size_t> iterations(runs[0].iterations.begin(),
                                      runs[0].iterations.begin() + static_cast<std::ptrdiff_t>(len));
  std::vector<double> mean(len, 0.0);
  for (const auto& r : runs) {
    const double psi0 = r.psi[0];
    for (std::size_t p = 0; p < len; ++p) {
      if (r.iterations[p] != iterations[p])
        throw std::invalid_argument("verify_option2_bound: mismatched iteration grids");
      mean[p] += psi0 > 0.0 ? r.psi[p] / psi0 : 0.0;
    }
  }
  for (auto& m : mean) m /= static_cast<double>(runs.size());
  const double rate = std::max(0.0, 1.0 - std::sqrt(summary.lambda_min_plus_w / summary.nu));
  return detail::geometric_bound("option2", std::move(method), iterations, mean, rate, runs.size());
}

/// Asymptotic Option-1 decrease factor sigma1^-2, checked on the tail of the
/// mean trace: from the first recorded point past half the run to the last
/// point still above `floor`, the average per-iteration factor must not
/// exceed sigma1^-2 (with the statistical envelope spread over the window).
inline BoundReport verify_option1_asymptotic(const AggregateTrace& agg, const TheoreticalRates& rates,
                                             double floor = 1e-20) {
  BoundReport report;
  report.check = "option1";
  report.method = agg.method;
  report.trials = agg.trials;
  if (agg.iterations.size() < 2) return report;
  const std::size_t half = agg.iterations.back() / 2;
  std::size_t a = 0;
  while (a < agg.iterations.size() && agg.iterations[a] < half) ++a;
  std::size_t b = a;
  for (std::size_t p = a; p < agg.iterations.size(); ++p)
    if (agg.mean[p] > floor) b = p;
  if (a >= agg.iterations.size() || b <= a) return report;
  const double span = static_cast<double>(agg.iterations[b] - agg.iterations[a]);
  BoundRow row;
  row.iteration = agg.iterations[b];
  row.observed = std::pow(agg.mean[b] / agg.mean[a], 1.0 / span);
  row.bound = rates.option1_factor();
  row.limit = row.bound * std::pow(1.0 + statistical_slack(agg.trials), 1.0 / span);
  row.pass = row.observed <= row.limit;
  report.rows.push_back(row);
  return report;
}

// ---------------------------------------------------------------------------
// Experiments

struct RoundsToTarget {
  double mean = 0.0;  // over trials that reached the target
  std::size_t reached = 0;
  std::size_t trials = 0;
};

inline RoundsToTarget rounds_to_target(std::span<const Trace> traces, double target) {
  RoundsToTarget out;
  out.trials = traces.size();
  double sum = 0.0;
  for (const auto& t : traces) {
    if (auto k = t.first_below(target)) {
      sum += static_cast<double>(*k);
      ++out.reached;
    }
  }
  out.mean = out.reached ? sum / static_cast<double>(out.reached)
                         : std::numeric_limits<double>::infinity();
  return out;
}

struct MethodResult {
  Method method = Method::Pairwise;
  std::vector<Trace> traces;
  AggregateTrace aggregate;
  std::vector<LyapunovSeries> lyapunov;  // accgossip-opt2 when the option2 check is on
  /// max over trials and recorded k of |mean(x^k) - mean(c)| / ||c||_inf.
  double max_mean_drift = 0.0;
  RoundsToTarget to_target;
};

struct ExperimentResult {
  ExperimentConfig config;
  Graph graph;
  SpectralSummary summary;
  TheoreticalRates rates;
  double mu = 0.0;
  std::vector<MethodResult> methods;
};

/// Seed of trial `t`; initial values and every method's edge stream derive
/// from it, so results do not depend on execution order.
inline std::uint64_t trial_seed(std::uint64_t master, std::size_t trial) {
  return derive_seed(master, {0x7472ULL, static_cast<std::uint64_t>(trial)});
}

inline Vector gaussian_vector(std::size_t n, std::uint64_t seed) {
  Rng rng(derive_seed(seed, {stream::kInitialValues}));
  Vector c(static_cast<Eigen::Index>(n));
  for (Eigen::Index l = 0; l < c.size(); ++l) c(l) = rng.normal();
  return c;
}

inline std::uint64_t method_seed(std::uint64_t trial, Method m) {
  return derive_seed(trial, {0x6d65ULL, static_cast<std::uint64_t>(m)});
}

inline ExperimentResult run_experiment(const ExperimentConfig& cfg) {
  validate(cfg);
  Graph graph = make_topology(cfg);
  const IncidenceSystem system(graph);
  const SpectralSummary summary = summarize(system);
  const double lambda = cfg.lambda.value_or(summary.lambda_min_plus_ata);
  if (!lambda_in_range(summary, lambda))
    throw ConfigError("config: lambda " + std::to_string(lambda) + " exceeds lambda_min^+(A^T A) = " +
                      std::to_string(summary.lambda_min_plus_ata));

  ExperimentResult result{cfg, graph, summary, rates(summary, lambda),
                          cfg.mu.value_or(summary.lambda_min_plus_w), {}};
  const auto checks = cfg.effective_checks();
  const bool want_lyapunov =
      std::find(checks.begin(), checks.end(), Check::Option2) != checks.end();
  std::optional<LyapunovMeter> meter;
  if (want_lyapunov) meter.emplace(system, result.mu);

  RunOptions opts;
  opts.iterations = cfg.rounds;
  opts.record_every = cfg.record_every.value_or(default_record_every(graph.node_count(), graph.edge_count()));

  std::vector<Vector> initial;
  initial.reserve(cfg.trials);
  for (std::size_t t = 0; t < cfg.trials; ++t)
    initial.push_back(gaussian_vector(graph.node_count(), trial_seed(cfg.seed, t)));

  for (const Method method : cfg.methods) {
    MethodResult mr;
    mr.method = method;
    const bool track_psi = meter && method == Method::AccOpt2;
    for (std::size_t t = 0; t < cfg.trials; ++t) {
      const Vector& c = initial[t];
      const double target = c.mean();
      const double scale = std::max(c.cwiseAbs().maxCoeff(), std::numeric_limits<double>::min());
      LyapunovSeries psi;
      auto observe = [&](std::size_t k, const Vector& x, const Vector& v) {
        mr.max_mean_drift = std::max(mr.max_mean_drift, std::abs(x.mean() - target) / scale);
        if (track_psi) {
          psi.iterations.push_back(k);
          psi.psi.push_back((*meter)(x, v, target));
        }
      };
      const auto seed = method_seed(trial_seed(cfg.seed, t), method);
      auto run = run_protocol(graph, c, ProtocolSpec::make(method, summary, lambda, cfg.momentum_beta),
                              opts, seed, observe);
      run.trace.meta.topology = std::string(topology_name(cfg.topology));
      if (method == Method::AccOpt1) {
        run.trace.meta.params = {{"lambda", lambda}};
      } else if (method == Method::AccOpt2) {
        const auto s = option2_schedule(summary).constants();
        run.trace.meta.params = {{"alpha", s.alpha}, {"beta", s.beta}, {"gamma", s.gamma}};
      } else if (method == Method::Shb) {
        run.trace.meta.params = {{"momentum_beta", cfg.momentum_beta}};
      }
      if (t == 0 && !cfg.log_prefix.empty())
        save_activation_log(cfg.log_prefix + std::string(method_name(method)) + ".log", run.log);
      mr.traces.push_back(std::move(run.trace));
      if (track_psi) mr.lyapunov.push_back(std::move(psi));
    }
    mr.aggregate = aggregate(mr.traces);
    mr.to_target = rounds_to_target(mr.traces, cfg.target);
    result.methods.push_back(std::move(mr));
  }
  return result;
}

/// Runs every enabled check that has a matching method in the result.
inline std::vector<BoundReport> verify(const ExperimentResult& result) {
  std::vector<BoundReport> reports;
  for (const Check check : result.config.effective_checks()) {
    for (const auto& mr : result.methods) {
      if (check == Check::Rk && mr.method == Method::Pairwise)
        reports.push_back(verify_rk_bound(mr.aggregate, result.rates));
      if (check == Check::Option2 && mr.method == Method::AccOpt2 && !mr.lyapunov.empty())
        reports.push_back(verify_option2_bound(mr.lyapunov, result.summary));
      if (check == Check::Option1 && mr.method == Method::AccOpt1)
        reports.push_back(verify_option1_asymptotic(mr.aggregate, result.rates));
    }
  }
  return reports;
}

// ---------------------------------------------------------------------------
// Output

namespace detail {

inline std::string format(const char* fmt, double value) {
  std::array<char, 64> buf{};
  std::snprintf(buf.data(), buf.size(), fmt, value);
  return buf.data();
}

inline std::ofstream open_output(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
  return out;
}

inline void finish_output(std::ofstream& out, const std::string& path) {
  out.flush();
  if (!out) throw std::runtime_error("write failed for '" + path + "'");
}

}  // namespace detail

/// CSV with columns method,seed,iteration,relative_error; one row per record.
inline void write_csv(std::ostream& out, std::span<const Trace> traces) {
  out << "method,seed,iteration,relative_error\n";
  for (const auto& t : traces)
    for (const auto& r : t.records)
      out << t.method << ',' << t.seed << ',' << r.iteration << ','
          << detail::format("%.17g", r.relative_error) << '\n';
}

inline void emit_csv(std::span<const Trace> traces, const std::string& path) {
  if (traces.empty()) throw std::invalid_argument("emit_csv: no traces");
  auto out = detail::open_output(path);
  write_csv(out, traces);
  detail::finish_output(out, path);
}

/// Log-scale line chart of the mean relative error, one polyline per method.
inline void write_svg(std::ostream& out, std::span<const AggregateTrace> traces) {
  constexpr double width = 720, height = 480;
  constexpr double left = 80, right = 180, top = 30, bottom = 60;
  constexpr double plot_w = width - left - right, plot_h = height - top - bottom;
  constexpr std::array<const char*, 6> colors{"#1f77b4", "#d62728", "#2ca02c",
                                              "#ff7f0e", "#9467bd", "#8c564b"};
  constexpr double min_decade = -32.0;

  std::size_t max_k = 1;
  double low = 0.0;
  for (const auto& t : traces) {
    if (!t.iterations.empty()) max_k = std::max(max_k, t.iterations.back());
    for (double e : t.mean)
      if (e > 0.0) low = std::min(low, std::floor(std::log10(e)));
  }
  low = std::max(low, min_decade);
  if (low >= 0.0) low = -1.0;
  const double high = 0.0;

  auto px = [&](double k) { return left + plot_w * k / static_cast<double>(max_k); };
  auto py = [&](double e) {
    const double d = e > 0.0 ? std::clamp(std::log10(e), low, high) : low;
    return top + plot_h * (high - d) / (high - low);
  };
  auto f2 = [](double v) { return detail::format("%.2f", v); };

  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
      << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  out << "<rect x=\"0\" y=\"0\" width=\"" << width << "\" height=\"" << height
      << "\" fill=\"white\"/>\n";
  out << "<rect x=\"" << left << "\" y=\"" << top << "\" width=\"" << plot_w << "\" height=\""
      << plot_h << "\" fill=\"none\" stroke=\"black\"/>\n";

  const int decades = static_cast<int>(high - low);
  const int step = decades > 12 ? 4 : (decades > 6 ? 2 : 1);
  for (int d = 0; d <= decades; d += step) {
    const double y = top + plot_h * d / (high - low);
    out << "<line x1=\"" << left - 5 << "\" y1=\"" << f2(y) << "\" x2=\"" << left << "\" y2=\""
        << f2(y) << "\" stroke=\"black\"/>\n";
    out << "<text x=\"" << left - 8 << "\" y=\"" << f2(y + 4) << "\" text-anchor=\"end\">1e"
        << static_cast<int>(high) - d << "</text>\n";
  }
  for (int q = 0; q <= 4; ++q) {
    const double k = static_cast<double>(max_k) * q / 4.0;
    const double x = px(k);
    out << "<line x1=\"" << f2(x) << "\" y1=\"" << top + plot_h << "\" x2=\"" << f2(x)
        << "\" y2=\"" << top + plot_h + 5 << "\" stroke=\"black\"/>\n";
    out << "<text x=\"" << f2(x) << "\" y=\"" << top + plot_h + 20 << "\" text-anchor=\"middle\">"
        << static_cast<std::size_t>(std::llround(k)) << "</text>\n";
  }
  out << "<text x=\"" << left + plot_w / 2 << "\" y=\"" << height - 15
      << "\" text-anchor=\"middle\">iterations</text>\n";
  out << "<text x=\"20\" y=\"" << top + plot_h / 2 << "\" text-anchor=\"middle\" transform=\"rotate(-90 20 "
      << top + plot_h / 2 << ")\">relative error</text>\n";

  for (std::size_t s = 0; s < traces.size(); ++s) {
    const auto& t = traces[s];
    const char* color = colors[s % colors.size()];
    out << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
    for (std::size_t p = 0; p < t.iterations.size(); ++p) {
      if (p) out << ' ';
      out << f2(px(static_cast<double>(t.iterations[p]))) << ',' << f2(py(t.mean[p]));
    }
    out << "\"/>\n";
    const double ly = top + 20.0 + 20.0 * static_cast<double>(s);
    out << "<line x1=\"" << left + plot_w + 15 << "\" y1=\"" << f2(ly - 4) << "\" x2=\""
        << left + plot_w + 40 << "\" y2=\"" << f2(ly - 4) << "\" stroke=\"" << color
        << "\" stroke-width=\"2\"/>\n";
    out << "<text x=\"" << left + plot_w + 45 << "\" y=\"" << f2(ly) << "\">" << t.method
        << "</text>\n";
  }
  out << "</svg>\n";
}

inline void emit_svg(std::span<const AggregateTrace> traces, const std::string& path) {
  if (traces.empty()) throw std::invalid_argument("emit_svg: no traces");
  auto out = detail::open_output(path);
  write_svg(out, traces);
  detail::finish_output(out, path);
}

}  // namespace accgossip
