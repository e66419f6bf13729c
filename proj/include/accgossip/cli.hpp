#pragma once

// Command-line front end: gen, spectral, run, replay.
//
// Exit codes: 0 success, 1 runtime or data error, 2 usage error,
// 3 verification failure.

#include <CLI11.hpp>
#include <json.hpp>

#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "gossip.hpp"
#include "harness.hpp"
#include "kaczmarz.hpp"
#include "spectral.hpp"
#include "topology.hpp"

namespace accgossip::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitRuntime = 1;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitVerification = 3;

/// Replay tolerance for node-form vs matrix-form trajectories.
inline constexpr double kReplayTolerance = 1e-12;

namespace detail {

inline std::string num(double v) {
  std::array<char, 40> buf{};
  std::snprintf(buf.data(), buf.size(), "%.12g", v);
  return buf.data();
}

inline void print_summary(std::ostream& out, const SpectralSummary& s, const TheoreticalRates& r) {
  out << "n=" << s.n << '\n'
      << "m=" << s.m << '\n'
      << "lambda_min_plus_ata=" << num(s.lambda_min_plus_ata) << '\n'
      << "lambda_min_plus_w=" << num(s.lambda_min_plus_w) << '\n'
      << "lambda_min_plus_l=" << num(s.lambda_min_plus_l) << '\n'
      << "nu=" << num(s.nu) << '\n'
      << "lambda=" << num(r.lambda) << '\n'
      << "rho=" << num(r.rho) << '\n'
      << "sigma1=" << num(r.sigma1) << '\n'
      << "sigma2=" << num(r.sigma2) << '\n'
      << "option2_rate=" << num(r.option2_rate) << '\n';
}

inline nlohmann::json summary_json(const SpectralSummary& s, const TheoreticalRates& r) {
  return {{"n", s.n},
          {"m", s.m},
          {"lambda_min_plus_ata", s.lambda_min_plus_ata},
          {"lambda_min_plus_w", s.lambda_min_plus_w},
          {"lambda_min_plus_l", s.lambda_min_plus_l},
          {"nu", s.nu},
          {"lambda", r.lambda},
          {"rho", r.rho},
          {"sigma1", r.sigma1},
          {"sigma2", r.sigma2},
          {"option2_rate", r.option2_rate}};
}

inline std::string sibling_path(const std::string& config_path, const char* ext) {
  return std::filesystem::path(config_path).replace_extension(ext).string();
}

}  // namespace detail

struct GenArgs {
  std::string topology;
  std::size_t size = 0;
  std::uint64_t seed = 0;
  std::string out;
};

inline int cmd_gen(const GenArgs& args, std::ostream& out) {
  Graph g = [&] {
    if (args.topology == "cycle") return make_cycle(args.size);
    if (args.topology == "grid") return make_grid(args.size);
    return make_rgg(args.size, args.seed);
  }();
  if (args.out.empty() || args.out == "-")
    write_edge_list(out, g);
  else
    save_graph(args.out, g);
  return kExitOk;
}

struct SpectralArgs {
  std::string graph;
  bool json = false;
  std::optional<double> lambda;
};

inline int cmd_spectral(const SpectralArgs& args, std::ostream& out) {
  const IncidenceSystem system(load_graph(args.graph));
  const auto summary = summarize(system);
  const auto r = rates(summary, args.lambda.value_or(summary.lambda_min_plus_ata));
  if (args.json)
    out << detail::summary_json(summary, r).dump() << '\n';
  else
    detail::print_summary(out, summary, r);
  return kExitOk;
}

/// Prints one line per report plus up to 20 failing points each; returns
/// kExitVerification if any report failed.
inline int print_reports(const std::vector<BoundReport>& reports, std::ostream& out) {
  bool all_passed = true;
  for (const auto& report : reports) {
    const auto failures = report.failures();
    all_passed = all_passed && failures.empty();
    out << "check=" << report.check << " method=" << report.method << " trials=" << report.trials
        << " points=" << report.rows.size() << " passed=" << (failures.empty() ? "true" : "false")
        << '\n';
    constexpr std::size_t kMaxListed = 20;
    for (std::size_t f = 0; f < failures.size() && f < kMaxListed; ++f)
      out << "fail check=" << report.check << " method=" << report.method
          << " k=" << failures[f].iteration << " observed=" << detail::num(failures[f].observed)
          << " limit=" << detail::num(failures[f].limit) << '\n';
  }
  return all_passed ? kExitOk : kExitVerification;
}

struct RunArgs {
  std::string config;
  std::vector<std::string> overrides;
};

inline int cmd_run(const RunArgs& args, std::ostream& out) {
  ExperimentConfig cfg = load_config(args.config);
  for (const auto& o : args.overrides) apply_override(cfg, o);
  validate(cfg);
  if (cfg.csv_path.empty()) cfg.csv_path = detail::sibling_path(args.config, ".csv");
  if (cfg.svg_path.empty()) cfg.svg_path = detail::sibling_path(args.config, ".svg");

  const auto result = run_experiment(cfg);
  out << "topology=" << topology_name(cfg.topology) << '\n';
  detail::print_summary(out, result.summary, result.rates);
  out << "mu=" << detail::num(result.mu) << '\n';

  std::vector<Trace> traces;
  std::vector<AggregateTrace> aggregates;
  for (const auto& mr : result.methods) {
    traces.insert(traces.end(), mr.traces.begin(), mr.traces.end());
    aggregates.push_back(mr.aggregate);
    out << "method=" << method_name(mr.method) << " trials=" << mr.aggregate.trials
        << " final_mean_error=" << detail::num(mr.aggregate.mean.back())
        << " rounds_to_target=" << detail::num(mr.to_target.mean)
        << " reached=" << mr.to_target.reached << '/' << mr.to_target.trials
        << " max_mean_drift=" << detail::num(mr.max_mean_drift) << '\n';
  }
  emit_csv(traces, cfg.csv_path);
  emit_svg(aggregates, cfg.svg_path);
  out << "csv=" << cfg.csv_path << '\n' << "svg=" << cfg.svg_path << '\n';

  return print_reports(verify(result), out);
}

struct ReplayArgs {
  std::string graph;
  std::string log;
  std::string method;
  std::uint64_t seed = 0;
  std::optional<double> lambda;
  double momentum_beta = kDefaultMomentumBeta;
};

/// Replays an activation log with the node-form protocol and, where one
/// exists, the matrix-form solver, and reports their largest coordinate gap.
inline int cmd_replay(const ReplayArgs& args, std::ostream& out) {
  const auto method = parse_method(args.method);
  if (!method) throw ConfigError("unknown method '" + args.method + "'");
  const Graph graph = load_graph(args.graph);
  const ActivationLog log = load_activation_log(args.log);
  log.validate(graph);
  const IncidenceSystem system(graph);
  const auto summary = summarize(system);
  const Vector c = gaussian_vector(graph.node_count(), trial_seed(args.seed, 0));
  auto spec = ProtocolSpec::make(*method, summary, args.lambda, args.momentum_beta);

  std::vector<Vector> node_x;
  const auto node = replay_protocol(graph, c, spec, log, 1,
                                    [&](std::size_t, const Vector& x, const Vector&) { node_x.push_back(x); });
  out << "method=" << method_name(*method) << '\n'
      << "rounds=" << log.entries.size() << '\n'
      << "final_relative_error=" << detail::num(node.trace.records.back().relative_error) << '\n';
  if (*method == Method::Shb) {
    out << "matrix_form=none\n";
    return kExitOk;
  }
  const auto rows = log.rows(graph);
  double max_diff = 0.0;
  std::size_t p = 0;
  solve_rows(system, c, *method, make_schedule(*method, summary, args.lambda), rows, 1,
             [&](std::size_t, const Vector& x, const Vector&) {
               max_diff = std::max(max_diff, (x - node_x[p++]).cwiseAbs().maxCoeff());
             });
  out << "max_coordinate_diff=" << detail::num(max_diff) << '\n';
  const bool ok = max_diff <= kReplayTolerance;
  out << "equivalent=" << (ok ? "true" : "false") << '\n';
  return ok ? kExitOk : kExitVerification;
}

/// Parses argv and dispatches; never throws.
inline int run(int argc, const char* const* argv, std::ostream& out = std::cout,
               std::ostream& err = std::cerr) {
  CLI::App app{"Accelerated randomized gossip simulator", "accgossip"};
  app.require_subcommand(1);

  GenArgs gen;
  auto* gen_cmd = app.add_subcommand("gen", "Generate a topology as an edge list");
  gen_cmd->add_option("topology", gen.topology, "cycle | grid | rgg")
      ->required()
      ->check(CLI::IsMember({"cycle", "grid", "rgg"}));
  gen_cmd->add_option("size", gen.size, "node count (cycle, rgg) or side length (grid)")->required();
  gen_cmd->add_option("--seed", gen.seed, "RNG seed for rgg");
  gen_cmd->add_option("-o,--out", gen.out, "output file (default stdout)");

  SpectralArgs spectral;
  auto* spectral_cmd = app.add_subcommand("spectral", "Print spectral constants of a graph");
  spectral_cmd->add_option("graph", spectral.graph, "edge-list file")->required();
  spectral_cmd->add_flag("--json", spectral.json, "print one JSON record");
  spectral_cmd->add_option("--lambda", spectral.lambda, "Option-1 lambda for the rates");

  RunArgs run_args;
  auto* run_cmd = app.add_subcommand("run", "Run an experiment from a key=value config");
  run_cmd->add_option("config", run_args.config, "config file")->required();
  run_cmd->add_option("--set", run_args.overrides, "override key=value (repeatable)");

  ReplayArgs replay;
  auto* replay_cmd = app.add_subcommand("replay", "Replay an activation log");
  replay_cmd->add_option("graph", replay.graph, "edge-list file")->required();
  replay_cmd->add_option("log", replay.log, "activation log (k i j per line)")->required();
  replay_cmd->add_option("--method", replay.method, "pairwise | shb | accgossip-opt1 | accgossip-opt2")
      ->required();
  replay_cmd->add_option("--seed", replay.seed, "master seed of the initial values");
  replay_cmd->add_option("--lambda", replay.lambda, "Option-1 lambda");
  replay_cmd->add_option("--momentum-beta", replay.momentum_beta, "heavy-ball momentum");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  }

  try {
    if (*gen_cmd) return cmd_gen(gen, out);
    if (*spectral_cmd) return cmd_spectral(spectral, out);
    if (*run_cmd) return cmd_run(run_args, out);
    if (*replay_cmd) return cmd_replay(replay, out);
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << '\n';
    return gen_cmd->parsed() ? kExitUsage : kExitRuntime;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return kExitUsage;
}

}  // namespace accgossip::cli
