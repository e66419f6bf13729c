#pragma once

// Node-centric gossip protocols. Each node keeps two registers (x, v) and
// one edge is activated per round; only the two endpoints exchange values.

#include <Eigen/Dense>

#include <cstddef>
#include <cstdint>
#include <fstream>
#include <istream>
#include <optional>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "kaczmarz.hpp"
#include "rng.hpp"
#include "topology.hpp"
#include "trace.hpp"

namespace accgossip {

struct AgentState {
  double x = 0.0;
  double v = 0.0;
};

/// Registers of every node plus the global round counter. Holds a
/// non-owning pointer to the graph, which must outlive the state.
class GossipNetworkState {
 public:
  GossipNetworkState(const Graph& graph, std::span<const double> initial) : graph_(&graph) {
    if (initial.size() != graph.node_count())
      throw std::invalid_argument("initial values: expected " +
                                  std::to_string(graph.node_count()) + ", got " +
                                  std::to_string(initial.size()));
    agents_.reserve(initial.size());
    for (double c : initial) agents_.push_back({c, c});
  }

  GossipNetworkState(const Graph& graph, const Vector& initial)
      : GossipNetworkState(graph, std::span<const double>(initial.data(), initial.size())) {}

  const Graph& graph() const noexcept { return *graph_; }
  std::size_t round() const noexcept { return round_; }
  std::size_t size() const noexcept { return agents_.size(); }
  std::span<AgentState> agents() noexcept { return agents_; }
  std::span<const AgentState> agents() const noexcept { return agents_; }
  AgentState& operator[](std::size_t l) { return agents_[l]; }
  const AgentState& operator[](std::size_t l) const { return agents_[l]; }

  void advance() noexcept { ++round_; }

  Vector x() const {
    Vector out(static_cast<Eigen::Index>(agents_.size()));
    for (std::size_t l = 0; l < agents_.size(); ++l) out(static_cast<Eigen::Index>(l)) = agents_[l].x;
    return out;
  }

  Vector v() const {
    Vector out(static_cast<Eigen::Index>(agents_.size()));
    for (std::size_t l = 0; l < agents_.size(); ++l) out(static_cast<Eigen::Index>(l)) = agents_[l].v;
    return out;
  }

 private:
  const Graph* graph_;
  std::vector<AgentState> agents_;
  std::size_t round_ = 0;
};

namespace detail {

inline Edge checked_edge(const GossipNetworkState& state, Edge e) {
  if (!state.graph().has_edge(e))
    throw std::invalid_argument("edge (" + std::to_string(e.i) + "," + std::to_string(e.j) +
                                ") is not in the graph");
  return e;
}

}  // namespace detail

/// Accelerated gossip round. Every node forms y = alpha v + (1 - alpha) x;
/// the activated pair averages y and corrects v along its difference, every
/// other node moves using only its own y.
inline void acc_gossip_round(GossipNetworkState& state, const StepParams& p, Edge edge) {
  const auto [i, j] = detail::checked_edge(state, edge);
  auto agents = state.agents();
  const double yi = p.alpha * agents[i].v + (1.0 - p.alpha) * agents[i].x;
  const double yj = p.alpha * agents[j].v + (1.0 - p.alpha) * agents[j].x;
  for (std::size_t l = 0; l < agents.size(); ++l) {
    if (l == i || l == j) continue;
    auto& a = agents[l];
    const double y = p.alpha * a.v + (1.0 - p.alpha) * a.x;
    a.x = y;
    a.v = p.beta * a.v + (1.0 - p.beta) * y;
  }
  const double half_diff = (yi - yj) / 2.0;
  agents[i].x = agents[j].x = (yi + yj) / 2.0;
  agents[i].v = p.beta * agents[i].v + (1.0 - p.beta) * yi - p.gamma * half_diff;
  agents[j].v = p.beta * agents[j].v + (1.0 - p.beta) * yj + p.gamma * half_diff;
  state.advance();
}

inline void acc_gossip_round(GossipNetworkState& state, ParamSchedule& schedule, Edge edge) {
  detail::checked_edge(state, edge);
  acc_gossip_round(state, schedule.next(), edge);
}

/// Pairwise averaging of x on the activated edge; v is left alone.
inline void pairwise_gossip_round(GossipNetworkState& state, Edge edge) {
  const auto [i, j] = detail::checked_edge(state, edge);
  auto agents = state.agents();
  agents[i].x = agents[j].x = (agents[i].x + agents[j].x) / 2.0;
  state.advance();
}

inline constexpr double kDefaultMomentumBeta = 0.4;

/// Heavy-ball gossip. v holds each node's last displacement x^k - x^{k-1}.
/// The pair moves to its mean plus momentum; every other node repeats
/// momentum_beta times its last displacement.
inline void shb_gossip_round(GossipNetworkState& state, Edge edge, double momentum_beta) {
  if (!(momentum_beta >= 0.0 && momentum_beta < 1.0))
    throw std::invalid_argument("momentum_beta must lie in [0, 1)");
  const auto [i, j] = detail::checked_edge(state, edge);
  auto agents = state.agents();
  const double mean = (agents[i].x + agents[j].x) / 2.0;
  for (std::size_t l = 0; l < agents.size(); ++l) {
    auto& a = agents[l];
    const double next = (l == i || l == j ? mean : a.x) + momentum_beta * a.v;
    a.v = next - a.x;
    a.x = next;
  }
  state.advance();
}

struct Activation {
  std::size_t round = 0;
  Edge edge;
  friend bool operator==(const Activation&, const Activation&) = default;
};

/// The sequence of activated edges of one run. Text form: one "k i j" line
/// per round.
struct ActivationLog {
  std::vector<Activation> entries;

  friend bool operator==(const ActivationLog&, const ActivationLog&) = default;

  /// Throws unless rounds strictly increase and every edge is in `graph`.
  void validate(const Graph& graph) const {
    for (std::size_t k = 0; k < entries.size(); ++k) {
      const auto& a = entries[k];
      if (k > 0 && a.round <= entries[k - 1].round)
        throw std::invalid_argument("activation log: rounds not strictly increasing at entry " +
                                    std::to_string(k));
      if (!graph.has_edge(a.edge))
        throw std::invalid_argument("activation log: edge (" + std::to_string(a.edge.i) + "," +
                                    std::to_string(a.edge.j) + ") not in graph");
    }
  }

  /// Incidence rows in activation order.
  std::vector<std::size_t> rows(const Graph& graph) const {
    std::vector<std::size_t> out;
    out.reserve(entries.size());
    for (const auto& a : entries) {
      auto idx = graph.edge_index(a.edge);
      if (!idx) throw std::invalid_argument("activation log: edge not in graph");
      out.push_back(*idx);
    }
    return out;
  }
};

inline void write_activation_log(std::ostream& out, const ActivationLog& log) {
  for (const auto& a : log.entries) out << a.round << ' ' << a.edge.i << ' ' << a.edge.j << '\n';
}

inline ActivationLog read_activation_log(std::istream& in) {
  ActivationLog log;
  Activation a;
  while (in >> a.round) {
    if (!(in >> a.edge.i >> a.edge.j))
      throw std::runtime_error("activation log: truncated line after round " +
                               std::to_string(a.round));
    if (a.edge.i > a.edge.j) std::swap(a.edge.i, a.edge.j);
    log.entries.push_back(a);
  }
  if (!in.eof()) throw std::runtime_error("activation log: malformed entry");
  return log;
}

inline void save_activation_log(const std::string& path, const ActivationLog& log) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
  write_activation_log(out, log);
  if (!out) throw std::runtime_error("write failed for '" + path + "'");
}

inline ActivationLog load_activation_log(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open '" + path + "' for reading");
  try {
    return read_activation_log(in);
  } catch (const std::exception& e) {
    throw std::runtime_error(path + ": " + e.what());
  }
}

/// Method plus whatever it needs: a schedule for the accelerated protocols,
/// the momentum for heavy ball.
struct ProtocolSpec {
  Method method = Method::Pairwise;
  std::optional<ParamSchedule> schedule;
  double momentum_beta = kDefaultMomentumBeta;

  static ProtocolSpec pairwise() { return {Method::Pairwise, std::nullopt, 0.0}; }
  static ProtocolSpec shb(double beta = kDefaultMomentumBeta) { return {Method::Shb, std::nullopt, beta}; }
  static ProtocolSpec accelerated(Method m, ParamSchedule s) { return {m, std::move(s), 0.0}; }

  static ProtocolSpec make(Method m, const SpectralSummary& summary,
                           std::optional<double> lambda = std::nullopt,
                           double momentum_beta = kDefaultMomentumBeta) {
    switch (m) {
      case Method::Pairwise: return pairwise();
      case Method::Shb: return shb(momentum_beta);
      default: return accelerated(m, make_schedule(m, summary, lambda));
    }
  }
};

struct ProtocolRun {
  Trace trace;
  ActivationLog log;
};

namespace detail {

template <class NextEdge, class Observer>
ProtocolRun run_protocol_impl(const Graph& graph, const Vector& c, ProtocolSpec spec,
                              const RunOptions& opts, NextEdge&& next_edge, Observer&& observe) {
  if (is_accelerated(spec.method) && !spec.schedule)
    throw std::invalid_argument("accelerated protocol needs a parameter schedule");
  GossipNetworkState state(graph, c);
  // Heavy ball keeps the last displacement in v, which is zero at the start.
  if (spec.method == Method::Shb)
    for (auto& a : state.agents()) a.v = 0.0;
  ProtocolRun run;
  run.trace.method = std::string(method_name(spec.method));
  run.trace.meta.n = graph.node_count();
  run.trace.meta.m = graph.edge_count();
  run.log.entries.reserve(opts.iterations);
  const RelativeError rel(c);
  const RecordPolicy policy{opts.record_every};

  auto record = [&](std::size_t k) {
    const Vector x = state.x();
    const double err = rel(x);
    run.trace.records.push_back({k, err});
    observe(k, x, state.v());
    return opts.stop_below && err <= *opts.stop_below;
  };

  if (record(0)) return run;
  for (std::size_t k = 0; k < opts.iterations; ++k) {
    const Edge e = next_edge(k);
    run.log.entries.push_back({k, e});
    switch (spec.method) {
      case Method::Pairwise: pairwise_gossip_round(state, e); break;
      case Method::Shb: shb_gossip_round(state, e, spec.momentum_beta); break;
      default: acc_gossip_round(state, *spec.schedule, e); break;
    }
    if (policy.due(k + 1, opts.iterations) && record(k + 1)) break;
  }
  return run;
}

}  // namespace detail

/// Runs a protocol with one uniformly sampled edge per round. The edge
/// stream is derived from `seed` exactly as in solve(), so the matrix-form
/// solver with the same seed visits the same rows.
template <class Observer = NoObserver>
ProtocolRun run_protocol(const Graph& graph, const Vector& c, ProtocolSpec spec,
                         const RunOptions& opts, std::uint64_t seed, Observer&& observe = {}) {
  Rng rng(derive_seed(seed, {stream::kEdgeSampling}));
  const auto m = static_cast<std::uint64_t>(graph.edge_count());
  auto run = detail::run_protocol_impl(
      graph, c, std::move(spec), opts,
      [&](std::size_t) { return graph.edges()[rng.uniform_index(m)]; },
      std::forward<Observer>(observe));
  run.trace.seed = seed;
  return run;
}

/// Re-runs a protocol on a recorded edge sequence.
template <class Observer = NoObserver>
ProtocolRun replay_protocol(const Graph& graph, const Vector& c, ProtocolSpec spec,
                            const ActivationLog& log, std::size_t record_every = 1,
                            Observer&& observe = {}) {
  log.validate(graph);
  RunOptions opts;
  opts.iterations = log.entries.size();
  opts.record_every = record_every;
  return detail::run_protocol_impl(
      graph, c, std::move(spec), opts, [&](std::size_t k) { return log.entries[k].edge; },
      std::forward<Observer>(observe));
}

}  // namespace accgossip
