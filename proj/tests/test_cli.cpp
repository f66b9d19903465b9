#include "anb/cli.hpp"
#include "anb/csv.hpp"
#include "anb/errors.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace anb;
using namespace anb::cli;
namespace fs = std::filesystem;

namespace {

const char *kSmallConfig = R"(
[run]
seed = 3

[proxy_search]
grid_models = 8
grid_pool = 400
validate_count = 0

[proxy_search.grid]
batch_sizes = [256, 512]
total_epochs = [10, 20]
resize_start_epochs = [0]
resize_finish_epochs = [8]
start_resolutions = [128]
finish_resolutions = [192, 224]

[collect]
samples = 100
throughput_devices = ["VCK"]
latency_devices = []

[fit]
datasets = ["ANB-Acc", "ANB-VCK-Thr"]
n_trees = 60
max_depth = 3

[simulate]
optimizers = ["RS", "RE", "REINFORCE"]
budget = 40
seeds = [0, 1]
accuracy_model = "ANB-Acc"
perf_model = "ANB-VCK-Thr"

[simulate.objective]
kind = "throughput"
target = 500.0

[simulate.evolution]
population = 10
sample = 3
)";

fs::path fresh_dir(const std::string &name) {
  const auto dir = fs::temp_directory_path() / "anb_test_cli" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

fs::path write_config(const fs::path &dir, const std::string &text) {
  const auto path = dir / "run.toml";
  std::ofstream(path) << text;
  return path;
}

int invoke(std::vector<std::string> args) {
  args.insert(args.begin(), "anb");
  std::vector<const char *> argv;
  for (const auto &a : args) argv.push_back(a.c_str());
  return run(static_cast<int>(argv.size()), argv.data());
}

std::string slurp(const fs::path &path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

std::vector<std::string> lines(const fs::path &path) {
  std::istringstream in(slurp(path));
  std::vector<std::string> out;
  for (std::string line; std::getline(in, line);) out.push_back(line);
  return out;
}

double eval_mae(const fs::path &report) {
  const auto text = slurp(report);
  const auto pos = text.find("\"mae\": ");
  return std::stod(text.substr(pos + 7));
}

} // namespace

TEST(Config, DefaultsAreValid) {
  const auto c = parse_config("");
  EXPECT_EQ(c.collect.samples, 5200u);
  EXPECT_EQ(c.simulate.seeds, optim::default_seeds());
  EXPECT_EQ(c.proxy_search.t_spec_hours, 3.0);
}

TEST(Config, BundledConfigsParse) {
  std::size_t count = 0;
  for (const auto &entry : fs::directory_iterator(ANB_CONFIG_DIR)) {
    if (entry.path().extension() != ".toml") continue;
    EXPECT_NO_THROW(load_config(entry.path())) << entry.path();
    ++count;
  }
  EXPECT_GE(count, 2u);
}

TEST(Config, RejectsUnknownKeysAndBadTypes) {
  EXPECT_THROW(parse_config("[colect]\nsamples = 3\n"), ConfigError);
  EXPECT_THROW(parse_config("[collect]\nsample = 3\n"), ConfigError);
  EXPECT_THROW(parse_config("[proxy_search.grid]\nbatch = [1]\n"), ConfigError);
  EXPECT_THROW(parse_config("[collect]\nsamples = \"many\"\n"), ConfigError);
  EXPECT_THROW(parse_config("[collect]\nsamples = -4\n"), ConfigError);
  EXPECT_THROW(parse_config("[run\nseed = 1\n"), ConfigError);
}

TEST(Config, CrossFieldChecks) {
  EXPECT_THROW(parse_config("[proxy_search.grid]\nbatch_sizes = []\n"), ConfigError);
  EXPECT_THROW(parse_config("[collect]\nsplit = [0.5, 0.3, 0.3]\n"), ConfigError);
  EXPECT_THROW(parse_config("[collect]\nthroughput_devices = [\"TPUv9\"]\n"), ConfigError);
  EXPECT_THROW(parse_config("[simulate.objective]\nkind = \"latency\"\ntarget = 2.0\n"),
               ConfigError);
  EXPECT_THROW(parse_config("[simulate]\nseeds = [1, 1]\n"), ConfigError);
  EXPECT_THROW(parse_config("[simulate]\nbudget = 50\n"), ConfigError); // below RE population
  EXPECT_THROW(parse_config("[fit]\nmin_samples_leaf = 0\n"), ConfigError);
  const auto inf = parse_config("[proxy_search]\nt_spec_hours = \"inf\"\n");
  EXPECT_TRUE(std::isinf(inf.proxy_search.t_spec_hours));
}

TEST(Cli, HelpAndUsageErrors) {
  EXPECT_EQ(invoke({"--help"}), exit_ok);
  EXPECT_EQ(invoke({"simulate", "--help"}), exit_ok);
  EXPECT_EQ(invoke({}), exit_config);
  EXPECT_EQ(invoke({"train"}), exit_config);
  EXPECT_EQ(invoke({"--config", "/nonexistent/anb.toml", "collect"}), exit_io);
}

TEST(Cli, EmptyGridIsConfigError) {
  const auto dir = fresh_dir("empty_grid");
  const auto cfg = write_config(dir, "[proxy_search.grid]\ntotal_epochs = []\n");
  EXPECT_EQ(invoke({"--config", cfg.string(), "--out", (dir / "out").string(), "proxy-search"}),
            exit_config);
  EXPECT_FALSE(fs::exists(dir / "out" / "proxy_search"));
}

TEST(Cli, ProxySearchFeasibilityAndUnconstrainedArgmax) {
  const auto dir = fresh_dir("proxy");
  const auto cfg = write_config(dir, kSmallConfig);
  const auto out = (dir / "out").string();
  EXPECT_EQ(invoke({"--config", cfg.string(), "--out", out, "proxy-search", "--t-spec", "0.01"}),
            exit_infeasible);
  ASSERT_EQ(invoke({"--config", cfg.string(), "--out", out, "proxy-search", "--t-spec", "inf"}),
            exit_ok);
  const auto rows = lines(dir / "out" / "proxy_search" / "schemes.csv");
  ASSERT_EQ(rows.front(), "scheme_id,b,e_t,e_s,e_f,res_s,res_f,tau,t_p_hours,feasible");
  ASSERT_EQ(rows.size(), 9u);
  double best_tau = -2.0;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const auto f = csv::parse_row(rows[i]);
    EXPECT_EQ(f[9], "true");
    best_tau = std::max(best_tau, std::stod(f[7]));
  }
  const auto summary = slurp(dir / "out" / "proxy_search" / "summary.json");
  std::ostringstream expect;
  expect << "\"tau\": " << csv::format_number(best_tau);
  EXPECT_NE(summary.find(expect.str()), std::string::npos) << summary;
  EXPECT_NE(summary.find("speedup_vs_reference"), std::string::npos);
}

TEST(Cli, CollectFitEvalPipeline) {
  const auto dir = fresh_dir("pipeline");
  const auto cfg = write_config(dir, kSmallConfig);
  const auto out = dir / "out";
  const std::vector<std::string> base{"--config", cfg.string(), "--out", out.string()};
  auto with = [&](std::vector<std::string> extra) {
    auto args = base;
    args.insert(args.end(), extra.begin(), extra.end());
    return invoke(args);
  };
  ASSERT_EQ(with({"collect"}), exit_ok);
  EXPECT_TRUE(fs::exists(out / "datasets" / "ANB-Acc.jsonl"));
  EXPECT_TRUE(fs::exists(out / "datasets" / "ANB-VCK-Thr.jsonl"));
  ASSERT_EQ(with({"fit"}), exit_ok);
  ASSERT_EQ(with({"eval", "--split", "test"}), exit_ok);
  ASSERT_EQ(with({"eval", "--split", "train"}), exit_ok);
  const double test_mae = eval_mae(out / "reports" / "eval-ANB-Acc-ANB-Acc-test.json");
  const double train_mae = eval_mae(out / "reports" / "eval-ANB-Acc-ANB-Acc-train.json");
  EXPECT_TRUE(std::isfinite(test_mae));
  EXPECT_LE(train_mae, test_mae);

  EXPECT_EQ(with({"eval", "--model", "ANB-RTX-Thr"}), exit_io);
  EXPECT_EQ(with({"fit", "--dataset", "ANB-A100-Thr"}), exit_io);
}

TEST(Cli, FitOnTinyDatasetFails) {
  const auto dir = fresh_dir("tiny");
  const auto space = arch::SpaceDef::mnasnet();
  arch::Rng rng(1);
  std::vector<data::Record> records;
  for (int i = 0; i < 2; ++i) {
    records.push_back({arch::sample_uniform(space, rng), 0.7 + 0.01 * i, data::Split::train});
  }
  fs::create_directories(dir / "datasets");
  data::save_dataset(data::MetricDataset("ANB-Acc", records), dir / "datasets" / "ANB-Acc.jsonl");
  EXPECT_NE(invoke({"--out", dir.string(), "fit"}), exit_ok);
}

TEST(Cli, BiObjectiveSimulateNeedsPerfModel) {
  const auto dir = fresh_dir("no_perf");
  const auto cfg = write_config(
      dir, "[simulate]\nbudget = 200\n[simulate.objective]\nkind = \"throughput\"\ntarget = 5.0\n");
  EXPECT_EQ(invoke({"--config", cfg.string(), "--out", dir.string(), "simulate"}), exit_config);
}

TEST(Cli, SimulateAndParetoAreDeterministic) {
  std::vector<std::string> snapshots;
  for (int round = 0; round < 2; ++round) {
    const auto dir = fresh_dir("determinism" + std::to_string(round));
    const auto cfg = write_config(dir, kSmallConfig);
    const auto out = dir / "out";
    for (const char *cmd : {"collect", "fit", "simulate", "pareto"}) {
      ASSERT_EQ(invoke({"--config", cfg.string(), "--out", out.string(), "--jobs", "2", cmd}),
                exit_ok)
          << cmd;
    }
    std::string all;
    for (const auto &p : {out / "simulate" / "RE" / "seed-1.csv", out / "simulate" / "RS-curve.csv",
                          out / "simulate" / "REINFORCE-pareto.csv", out / "pareto" / "front.csv",
                          out / "models" / "ANB-Acc.json"}) {
      ASSERT_TRUE(fs::exists(p)) << p;
      all += slurp(p);
    }
    snapshots.push_back(all);

    const auto front = lines(out / "pareto" / "front.csv");
    ASSERT_GE(front.size(), 2u);
    EXPECT_EQ(front[0], "arch,accuracy,perf");
    std::vector<optim::ParetoPoint> pts;
    for (std::size_t i = 1; i < front.size(); ++i) {
      const auto f = csv::parse_row(front[i]);
      pts.push_back({std::stod(f[1]), std::stod(f[2]), i});
    }
    for (const auto &a : pts) {
      for (const auto &b : pts) EXPECT_FALSE(optim::dominates(a, b, optim::PerfDirection::maximize));
    }
  }
  EXPECT_EQ(snapshots[0], snapshots[1]);
}

TEST(Cli, ParetoRequiresTrajectories) {
  const auto dir = fresh_dir("no_traj");
  const auto cfg = write_config(dir, kSmallConfig);
  EXPECT_EQ(invoke({"--config", cfg.string(), "--out", dir.string(), "pareto"}), exit_io);
}
