#pragma once

#include "anb/data.hpp"
#include "anb/optim.hpp"
#include "anb/proxysearch.hpp"
#include "anb/surrogate.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace anb::cli {

enum ExitCode : int {
  exit_ok = 0,
  exit_failure = 1,
  exit_config = 2,
  exit_infeasible = 3,
  exit_io = 4,
};

struct ProxySearchSettings {
  std::size_t grid_models = 20;
  std::size_t grid_pool = 5000;
  double t_spec_hours = 3.0;
  std::optional<proxy::EarlyStop> early_stop;
  proxy::SchemeGrid grid;
  std::size_t validate_count = 120;
  std::size_t validate_repeats = 3;
};

struct CollectSettings {
  std::size_t samples = 5200;
  std::vector<std::string> throughput_devices{"ZCU", "VCK", "TPUv2", "TPUv3", "A100", "RTX"};
  std::vector<std::string> latency_devices{"ZCU", "VCK"};
  proxy::TrainingScheme scheme = proxy::reference_scheme();
  data::SplitRatios ratios;
};

struct FitSettings {
  std::vector<std::string> datasets{"ANB-Acc"};
  surrogate::FitConfig config;
};

struct TuneSettings {
  std::vector<std::string> datasets{"ANB-Acc"};
  std::size_t budget = 10;
  surrogate::TuneGrid grid;
};

struct EvalSettings {
  std::string model = "ANB-Acc";
  std::string dataset; // defaults to the model name
  data::Split split = data::Split::test;
};

struct SimulateSettings {
  std::vector<optim::OptimizerKind> optimizers{optim::OptimizerKind::random_search,
                                               optim::OptimizerKind::regularized_evolution,
                                               optim::OptimizerKind::reinforce};
  std::size_t budget = 2000;
  std::vector<std::uint64_t> seeds = optim::default_seeds();
  std::string accuracy_model = "ANB-Acc";
  std::optional<std::string> perf_model;
  optim::Objective objective;
  optim::EvolutionConfig evolution;
  optim::ReinforceConfig reinforce;
};

struct RunConfig {
  std::uint64_t seed = 0;
  std::filesystem::path out = "anb-out";
  int jobs = 0;
  int space_blocks = 7;
  proxy::SyntheticOracleParams oracle;
  ProxySearchSettings proxy_search;
  CollectSettings collect;
  FitSettings fit;
  TuneSettings tune;
  EvalSettings eval;
  SimulateSettings simulate;

  // Cross-field checks. Throws ConfigError.
  void validate() const;

  arch::SpaceDef space() const;
  std::filesystem::path dataset_path(std::string_view name) const;
  std::filesystem::path model_path(std::string_view name) const;
};

// Parses a TOML document. Unknown sections or keys, wrong types and
// out-of-range values throw ConfigError; the result is validated.
RunConfig parse_config(std::string_view toml_text, std::string_view source = "config");
RunConfig load_config(const std::filesystem::path &path);

void cmd_proxy_search(const RunConfig &config);
void cmd_collect(const RunConfig &config);
void cmd_fit(const RunConfig &config);
void cmd_tune(const RunConfig &config);
void cmd_eval(const RunConfig &config);
void cmd_simulate(const RunConfig &config);
void cmd_pareto(const RunConfig &config);

// Full command-line entry point. Maps errors to exit codes.
int run(int argc, const char *const *argv);

} // namespace anb::cli
