#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <iterator>
#include <sstream>
#include <string>
#include <vector>

#include "accgossip/cli.hpp"

using namespace accgossip;
namespace fs = std::filesystem;

namespace {

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result invoke(std::vector<std::string> args) {
  args.insert(args.begin(), "accgossip");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / "accgossip_cli_test";
  fs::create_directories(dir);
  return dir / name;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file(const fs::path& p, const std::string& text) { std::ofstream(p) << text; }

}  // namespace

TEST(CliGen, CycleFive) {
  const auto r = invoke({"gen", "cycle", "5"});
  EXPECT_EQ(r.code, 0);
  std::istringstream in(r.out);
  std::string line;
  std::vector<std::string> lines;
  while (std::getline(in, line)) lines.push_back(line);
  ASSERT_EQ(lines.size(), 6u);
  EXPECT_EQ(lines[0], "5 5");
}

TEST(CliGen, GridHeader) {
  const auto r = invoke({"gen", "grid", "10"});
  EXPECT_EQ(r.code, 0);
  EXPECT_EQ(r.out.rfind("100 180\n", 0), 0u);
}

TEST(CliGen, RggIsDeterministic) {
  const auto a = scratch("rgg_a.txt"), b = scratch("rgg_b.txt");
  EXPECT_EQ(invoke({"gen", "rgg", "100", "--seed", "7", "-o", a.string()}).code, 0);
  EXPECT_EQ(invoke({"gen", "rgg", "100", "--seed", "7", "-o", b.string()}).code, 0);
  EXPECT_EQ(slurp(a), slurp(b));
  EXPECT_FALSE(slurp(a).empty());
}

TEST(CliGen, UsageErrors) {
  EXPECT_EQ(invoke({"gen"}).code, 2);
  EXPECT_EQ(invoke({"gen", "torus", "5"}).code, 2);
  EXPECT_EQ(invoke({"gen", "cycle", "2"}).code, 2);
  EXPECT_EQ(invoke({"gen", "cycle", "five"}).code, 2);
  EXPECT_EQ(invoke({}).code, 2);
  EXPECT_EQ(invoke({"frobnicate"}).code, 2);
  EXPECT_EQ(invoke({"--help"}).code, 0);
}

TEST(CliSpectral, SingleEdge) {
  const auto g = scratch("edge.txt");
  write_file(g, "2 1\n0 1\n");
  const auto r = invoke({"spectral", g.string()});
  EXPECT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("lambda_min_plus_l=2\n"), std::string::npos) << r.out;
  EXPECT_NE(r.out.find("nu=1\n"), std::string::npos) << r.out;
}

TEST(CliSpectral, TriangleAndJson) {
  const auto g = scratch("tri.txt");
  write_file(g, "3 3\n0 1\n1 2\n0 2\n");
  const auto r = invoke({"spectral", g.string()});
  EXPECT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("lambda_min_plus_ata=1.5\n"), std::string::npos) << r.out;
  const auto j = invoke({"spectral", g.string(), "--json"});
  ASSERT_EQ(j.code, 0);
  const auto doc = nlohmann::json::parse(j.out);
  EXPECT_NEAR(doc["lambda_min_plus_w"].get<double>(), 0.5, 1e-12);
  EXPECT_NEAR(doc["rho"].get<double>(), 0.5, 1e-12);
}

TEST(CliSpectral, DisconnectedOrMissingInput) {
  const auto g = scratch("split.txt");
  write_file(g, "4 2\n0 1\n2 3\n");
  EXPECT_EQ(invoke({"spectral", g.string()}).code, 1);
  EXPECT_EQ(invoke({"spectral", scratch("does_not_exist.txt").string()}).code, 1);
  const auto tri = scratch("tri2.txt");
  write_file(tri, "3 3\n0 1\n1 2\n0 2\n");
  EXPECT_EQ(invoke({"spectral", tri.string(), "--lambda", "7"}).code, 1);
}

TEST(CliRun, TrivialConfigPasses) {
  const auto cfg = scratch("trivial.cfg");
  write_file(cfg, "topology=cycle\nn=8\ntrials=1\nrounds=0\n");
  const auto r = invoke({"run", cfg.string()});
  EXPECT_EQ(r.code, 0) << r.out << r.err;
  EXPECT_TRUE(fs::exists(scratch("trivial.csv")));
  EXPECT_TRUE(fs::exists(scratch("trivial.svg")));
  EXPECT_NE(r.out.find("check=rk"), std::string::npos);
}

TEST(CliRun, OverridesAndDeterminism) {
  const auto cfg = scratch("det.cfg");
  write_file(cfg, "topology=rgg\nn=30\ntrials=4\nrounds=500\nseed=3\n");
  const auto csv = scratch("det_out.csv"), svg = scratch("det_out.svg");
  const std::vector<std::string> args{"run", cfg.string(), "--set", "csv=" + csv.string(), "--set",
                                      "svg=" + svg.string()};
  const auto a = invoke(args);
  ASSERT_NE(a.code, 1) << a.err;
  const auto csv1 = slurp(csv), svg1 = slurp(svg);
  const auto b = invoke(args);
  EXPECT_EQ(a.out, b.out);
  EXPECT_EQ(slurp(csv), csv1);
  EXPECT_EQ(slurp(svg), svg1);
  EXPECT_EQ(csv1.rfind("method,seed,iteration,relative_error\n", 0), 0u);
}

TEST(CliRun, FailedCheckExitsThree) {
  BoundReport ok{"rk", "pairwise", 100, {{0, 1.0, 1.0, 1.3, true}}};
  BoundReport bad{"option2", "accgossip-opt2", 100, {{0, 1.0, 1.0, 1.3, true}, {7, 0.9, 0.5, 0.65, false}}};
  std::ostringstream out;
  EXPECT_EQ(cli::print_reports({ok}, out), 0);
  EXPECT_EQ(cli::print_reports({ok, bad}, out), 3);
  EXPECT_NE(out.str().find("fail check=option2 method=accgossip-opt2 k=7 observed=0.9 limit=0.65\n"),
            std::string::npos)
      << out.str();
}

TEST(CliRun, UsageErrors) {
  const auto cfg = scratch("bad.cfg");
  write_file(cfg, "topology=cycle\nn=8\nmethods=pairwise,sgd\n");
  EXPECT_EQ(invoke({"run", cfg.string()}).code, 2);
  const auto ok = scratch("ok.cfg");
  write_file(ok, "topology=cycle\nn=8\n");
  EXPECT_EQ(invoke({"run", ok.string(), "--set", "trials=zero"}).code, 2);
  EXPECT_EQ(invoke({"run", ok.string(), "--set", "lambda=5"}).code, 2);
  EXPECT_EQ(invoke({"run", scratch("missing.cfg").string()}).code, 1);
}

TEST(CliReplay, NodeAndMatrixFormsAgree) {
  const auto graph = scratch("replay_graph.txt");
  save_graph(graph.string(), make_cycle(30));
  ExperimentConfig cfg;
  cfg.size = 30;
  cfg.rounds = 2000;
  cfg.methods = {Method::AccOpt1};
  cfg.log_prefix = scratch("replay_").string();
  run_experiment(cfg);
  const auto log = cfg.log_prefix + "accgossip-opt1.log";
  for (const char* method : {"accgossip-opt1", "accgossip-opt2", "pairwise"}) {
    const auto r = invoke({"replay", graph.string(), log, "--method", method});
    EXPECT_EQ(r.code, 0) << r.out << r.err;
    EXPECT_NE(r.out.find("equivalent=true"), std::string::npos) << r.out;
  }
  const auto shb = invoke({"replay", graph.string(), log, "--method", "shb"});
  EXPECT_EQ(shb.code, 0);
  EXPECT_NE(shb.out.find("matrix_form=none"), std::string::npos);
  EXPECT_EQ(invoke({"replay", graph.string(), log, "--method", "nope"}).code, 2);
  EXPECT_EQ(invoke({"replay", graph.string(), log}).code, 2);
}

TEST(CliReplay, LogFromAnotherGraphIsRuntimeError) {
  const auto graph = scratch("replay_small.txt");
  save_graph(graph.string(), make_cycle(4));
  const auto log = scratch("replay_bad.log");
  write_file(log, "0 0 2\n");
  EXPECT_EQ(invoke({"replay", graph.string(), log.string(), "--method", "pairwise"}).code, 1);
}
