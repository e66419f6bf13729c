#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <iterator>
#include <sstream>

#include "accgossip/harness.hpp"

using namespace accgossip;
namespace fs = std::filesystem;

namespace {

Trace make_trace(std::string method, std::uint64_t seed, std::vector<double> errors) {
  Trace t;
  t.method = std::move(method);
  t.seed = seed;
  for (std::size_t k = 0; k < errors.size(); ++k) t.records.push_back({k, errors[k]});
  return t;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / "accgossip_harness_test";
  fs::create_directories(dir);
  return dir / name;
}

const MethodResult& find(const ExperimentResult& r, Method m) {
  for (const auto& mr : r.methods)
    if (mr.method == m) return mr;
  throw std::logic_error("method missing");
}

}  // namespace

TEST(Aggregate, MeanAndEnvelope) {
  const std::vector<Trace> ts{make_trace("a", 1, {1.0, 0.5, 0.2}), make_trace("a", 2, {1.0, 0.3, 0.4})};
  const auto agg = aggregate(ts);
  EXPECT_EQ(agg.trials, 2u);
  EXPECT_EQ(agg.iterations, (std::vector<std::size_t>{0, 1, 2}));
  EXPECT_DOUBLE_EQ(agg.mean[1], 0.4);
  EXPECT_DOUBLE_EQ(agg.min[2], 0.2);
  EXPECT_DOUBLE_EQ(agg.max[2], 0.4);
  for (std::size_t p = 0; p < 3; ++p) {
    EXPECT_LE(agg.min[p], agg.mean[p]);
    EXPECT_GE(agg.max[p], agg.mean[p]);
  }
  EXPECT_THROW(aggregate(std::span<const Trace>{}), std::invalid_argument);
}

TEST(Experiment, ZeroRoundsGivesUnitTraces) {
  ExperimentConfig cfg;
  cfg.size = 6;
  cfg.trials = 1;
  cfg.rounds = 0;
  const auto r = run_experiment(cfg);
  ASSERT_EQ(r.methods.size(), 4u);
  for (const auto& mr : r.methods) {
    ASSERT_EQ(mr.aggregate.mean.size(), 1u);
    EXPECT_EQ(mr.aggregate.mean[0], 1.0);
  }
  for (const auto& rep : verify(r)) EXPECT_TRUE(rep.passed());
}

TEST(Experiment, DeterministicInConfig) {
  ExperimentConfig cfg;
  cfg.topology = Topology::Rgg;
  cfg.size = 30;
  cfg.trials = 3;
  cfg.rounds = 200;
  cfg.seed = 5;
  const auto a = run_experiment(cfg);
  const auto b = run_experiment(cfg);
  for (std::size_t m = 0; m < a.methods.size(); ++m) EXPECT_EQ(a.methods[m].aggregate.mean, b.methods[m].aggregate.mean);
  cfg.seed = 6;
  const auto c = run_experiment(cfg);
  EXPECT_NE(a.methods[0].aggregate.mean, c.methods[0].aggregate.mean);
}

TEST(Experiment, RejectsLambdaAboveSpectralGap) {
  ExperimentConfig cfg;
  cfg.size = 5;
  cfg.lambda = 10.0;
  EXPECT_THROW(run_experiment(cfg), ConfigError);
}

TEST(Bounds, SingleEdgeRk) {
  AggregateTrace agg;
  agg.method = "pairwise";
  agg.iterations = {0, 1, 2};
  agg.mean = {1.0, 0.0, 0.0};
  agg.trials = 100;
  TheoreticalRates r;
  r.rho = 0.0;
  EXPECT_TRUE(verify_rk_bound(agg, r).passed());
  agg.mean[1] = 1e-3;
  const auto rep = verify_rk_bound(agg, r);
  EXPECT_FALSE(rep.passed());
  ASSERT_EQ(rep.failures().size(), 1u);
  EXPECT_EQ(rep.failures()[0].iteration, 1u);
}

TEST(Bounds, KZeroIsTrivial) {
  AggregateTrace agg;
  agg.method = "pairwise";
  agg.iterations = {0};
  agg.mean = {1.0};
  agg.trials = 100;
  TheoreticalRates r;
  r.rho = 0.9;
  const auto rep = verify_rk_bound(agg, r);
  EXPECT_TRUE(rep.passed());
  EXPECT_EQ(rep.rows[0].bound, 1.0);
}

TEST(Bounds, SingleEdgeOptionTwoLyapunov) {
  const Graph g(2, {{0, 1}});
  const IncidenceSystem sys(g);
  const auto summary = summarize(sys);
  const LyapunovMeter meter(sys, summary.lambda_min_plus_w);
  std::vector<LyapunovSeries> runs;
  for (std::uint64_t s = 0; s < 10; ++s) {
    const Vector c = gaussian_vector(2, s);
    LyapunovSeries psi;
    run_protocol(g, c, ProtocolSpec::make(Method::AccOpt2, summary), RunOptions{3, 1, {}}, s,
                 [&](std::size_t k, const Vector& x, const Vector& v) {
                   psi.iterations.push_back(k);
                   psi.psi.push_back(meter(x, v, c.mean()));
                 });
    EXPECT_GT(psi.psi[0], 0.0);
    EXPECT_NEAR(psi.psi[1], 0.0, 1e-28);
    runs.push_back(psi);
  }
  const auto rep = verify_option2_bound(runs, summary);
  EXPECT_TRUE(rep.passed());
  EXPECT_EQ(rep.rows[0].observed, 1.0);
}

TEST(Bounds, LyapunovIsNonnegative) {
  const IncidenceSystem sys(make_grid(3));
  const LyapunovMeter meter(sys, 0.1);
  for (std::uint64_t s = 0; s < 20; ++s) {
    const Vector x = gaussian_vector(9, s), v = gaussian_vector(9, s + 100);
    EXPECT_GE(meter(x, v, x.mean()), 0.0);
  }
  EXPECT_EQ(meter(Vector::Constant(9, 2.0), Vector::Constant(9, 2.0), 2.0), 0.0);
  EXPECT_THROW(LyapunovMeter(sys, 0.0), std::invalid_argument);
}

TEST(Bounds, TriangleRkAndCycleOptionTwo) {
  ExperimentConfig tri;
  tri.size = 3;
  tri.trials = 200;
  tri.rounds = 50;
  tri.seed = 1;
  tri.methods = {Method::Pairwise};
  const auto r = run_experiment(tri);
  const auto rk = verify_rk_bound(find(r, Method::Pairwise).aggregate, r.rates);
  EXPECT_NEAR(r.rates.rho, 0.5, 1e-12);
  EXPECT_LE(rk.rows[50].observed, rk.rows[50].limit);

  ExperimentConfig cyc;
  cyc.size = 10;
  cyc.trials = 200;
  cyc.rounds = 500;
  cyc.seed = 1;
  cyc.methods = {Method::AccOpt2};
  const auto r2 = run_experiment(cyc);
  const auto& mr = find(r2, Method::AccOpt2);
  ASSERT_EQ(mr.lyapunov.size(), 200u);
  EXPECT_TRUE(verify_option2_bound(mr.lyapunov, r2.summary).passed());
}

TEST(Output, CsvRowsAndDeterminism) {
  const std::vector<Trace> ts{make_trace("pairwise", 1, {1.0, 0.5, 0.25}),
                              make_trace("accgossip-opt2", 1, {1.0, 0.1, 0.01})};
  const auto path = scratch("two.csv");
  emit_csv(ts, path.string());
  const auto first = slurp(path);
  std::istringstream lines(first);
  std::string line;
  std::vector<std::string> all;
  while (std::getline(lines, line)) all.push_back(line);
  ASSERT_EQ(all.size(), 7u);
  EXPECT_EQ(all[0], "method,seed,iteration,relative_error");
  EXPECT_EQ(all[1], "pairwise,1,0,1");
  EXPECT_EQ(all[6], "accgossip-opt2,1,2,0.01");
  emit_csv(ts, path.string());
  EXPECT_EQ(slurp(path), first);
}

TEST(Output, EmptyInputCreatesNoFile) {
  const auto csv = scratch("empty.csv");
  const auto svg = scratch("empty.svg");
  fs::remove(csv);
  fs::remove(svg);
  EXPECT_THROW(emit_csv(std::span<const Trace>{}, csv.string()), std::invalid_argument);
  EXPECT_THROW(emit_svg(std::span<const AggregateTrace>{}, svg.string()), std::invalid_argument);
  EXPECT_FALSE(fs::exists(csv));
  EXPECT_FALSE(fs::exists(svg));
}

TEST(Output, UnwritablePathNamesThePath) {
  const std::vector<Trace> ts{make_trace("pairwise", 1, {1.0})};
  try {
    emit_csv(ts, "/nonexistent-dir/out.csv");
    FAIL() << "expected an error";
  } catch (const std::runtime_error& e) {
    EXPECT_NE(std::string(e.what()).find("/nonexistent-dir/out.csv"), std::string::npos);
  }
}

TEST(Output, SvgHasOnePolylinePerMethodAndLegend) {
  std::vector<Trace> a{make_trace("pairwise", 1, {1.0, 0.5, 0.25})};
  std::vector<Trace> b{make_trace("shb", 1, {1.0, 1e-3, 1e-9})};
  const std::vector<AggregateTrace> aggs{aggregate(a), aggregate(b)};
  std::ostringstream out;
  write_svg(out, aggs);
  const auto svg = out.str();
  std::size_t count = 0;
  for (auto p = svg.find("<polyline"); p != std::string::npos; p = svg.find("<polyline", p + 1)) ++count;
  EXPECT_EQ(count, 2u);
  EXPECT_NE(svg.find(">pairwise</text>"), std::string::npos);
  EXPECT_NE(svg.find(">shb</text>"), std::string::npos);
  EXPECT_NE(svg.find(">1e-8</text>"), std::string::npos);
  std::ostringstream again;
  write_svg(again, aggs);
  EXPECT_EQ(again.str(), svg);
}

TEST(Config, ParsesFlatKeyValue) {
  std::istringstream in(
      "# comment\n"
      "topology = grid\n"
      "side=10\n"
      "methods=pairwise, accgossip-opt1\n"
      "trials=5  # inline\n"
      "rounds=100\n"
      "seed=9\n"
      "lambda=0.01\n"
      "checks=none\n");
  const auto cfg = parse_config(in);
  EXPECT_EQ(cfg.topology, Topology::Grid);
  EXPECT_EQ(cfg.size, 10u);
  EXPECT_EQ(cfg.methods, (std::vector<Method>{Method::Pairwise, Method::AccOpt1}));
  EXPECT_EQ(cfg.trials, 5u);
  EXPECT_EQ(cfg.rounds, 100u);
  EXPECT_EQ(cfg.seed, 9u);
  EXPECT_EQ(cfg.lambda, 0.01);
  EXPECT_TRUE(cfg.effective_checks().empty());
}

TEST(Config, Errors) {
  auto parse = [](const std::string& text) {
    std::istringstream in(text);
    return parse_config(in);
  };
  EXPECT_THROW(parse("topology=torus\n"), ConfigError);
  EXPECT_THROW(parse("methods=pairwise,gradient\n"), ConfigError);
  EXPECT_THROW(parse("trials=-3\n"), ConfigError);
  EXPECT_THROW(parse("rounds=ten\n"), ConfigError);
  EXPECT_THROW(parse("colour=blue\n"), ConfigError);
  EXPECT_THROW(parse("just words\n"), ConfigError);
  ExperimentConfig cfg;
  EXPECT_THROW(validate(cfg), ConfigError);  // no size
  cfg.size = 4;
  cfg.trials = 0;
  EXPECT_THROW(validate(cfg), ConfigError);
  cfg.trials = 1;
  cfg.momentum_beta = 1.0;
  EXPECT_THROW(validate(cfg), ConfigError);
  EXPECT_THROW(load_config("/nonexistent/cfg"), std::runtime_error);
}

TEST(Ordering, CycleThirtyAcceleratedBelowPairwise) {
  ExperimentConfig cfg;
  cfg.size = 30;
  cfg.trials = 100;
  cfg.rounds = 3000;
  cfg.seed = 1;
  cfg.methods = {Method::Pairwise, Method::AccOpt1, Method::AccOpt2};
  cfg.checks = std::vector<Check>{};
  const auto r = run_experiment(cfg);
  const auto& pw = find(r, Method::Pairwise).aggregate;
  for (auto m : {Method::AccOpt1, Method::AccOpt2}) {
    const auto& acc = find(r, m).aggregate;
    ASSERT_EQ(acc.iterations, pw.iterations);
    for (std::size_t p = 0; p < pw.iterations.size(); ++p)
      if (pw.iterations[p] >= 500) {
        ASSERT_LT(acc.mean[p], pw.mean[p]) << method_name(m) << " k=" << pw.iterations[p];
      }
  }
}

TEST(Ordering, GridTenAcceleratedBelowPairwise) {
  ExperimentConfig cfg;
  cfg.topology = Topology::Grid;
  cfg.size = 10;
  cfg.trials = 100;
  cfg.rounds = 20000;
  cfg.seed = 1;
  cfg.methods = {Method::Pairwise, Method::AccOpt1, Method::AccOpt2};
  cfg.checks = std::vector<Check>{};
  const auto r = run_experiment(cfg);
  const auto& pw = find(r, Method::Pairwise).aggregate;
  for (auto m : {Method::AccOpt1, Method::AccOpt2}) {
    const auto& acc = find(r, m).aggregate;
    for (std::size_t p = 0; p < pw.iterations.size(); ++p)
      if (pw.iterations[p] >= 5000) {
        ASSERT_LT(acc.mean[p], pw.mean[p]) << method_name(m) << " k=" << pw.iterations[p];
      }
  }
}

TEST(Experiment, ConservationAndSanityOnAllTopologies) {
  for (auto [topo, size] : {std::pair{Topology::Cycle, std::size_t{20}}, std::pair{Topology::Grid, std::size_t{5}},
                            std::pair{Topology::Rgg, std::size_t{40}}}) {
    ExperimentConfig cfg;
    cfg.topology = topo;
    cfg.size = size;
    cfg.trials = 3;
    cfg.rounds = 40000;
    cfg.seed = 3;
    cfg.checks = std::vector<Check>{};
    const auto r = run_experiment(cfg);
    for (const auto& mr : r.methods) {
      EXPECT_LE(mr.max_mean_drift, 1e-10) << method_name(mr.method);
      EXPECT_LT(mr.aggregate.mean.back(), 1e-6) << topology_name(topo) << ' ' << method_name(mr.method);
    }
  }
}

TEST(Experiment, WritesActivationLogs) {
  ExperimentConfig cfg;
  cfg.size = 5;
  cfg.rounds = 20;
  cfg.methods = {Method::AccOpt2};
  cfg.log_prefix = scratch("run_").string();
  run_experiment(cfg);
  const auto log = load_activation_log(cfg.log_prefix + "accgossip-opt2.log");
  EXPECT_EQ(log.entries.size(), 20u);
  EXPECT_NO_THROW(log.validate(make_cycle(5)));
}
