#include "anb/cli.hpp"
#include "anb/errors.hpp"
#include "anb/parallel.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <functional>
#include <iostream>
#include <limits>

namespace anb::cli {

namespace {

struct Overrides {
  std::string config_path;
  std::uint64_t seed = 0;
  std::string out;
  int jobs = 0;
  std::string t_spec;
  std::vector<std::string> datasets;
  std::string model;
  std::string eval_dataset;
  std::string split;
  std::vector<std::string> optimizers;
  std::size_t budget = 0;
};

double parse_t_spec(const std::string &text) {
  if (text == "inf") return std::numeric_limits<double>::infinity();
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(text, &used);
  } catch (const std::exception &) {
    used = 0;
  }
  if (used != text.size() || !(v > 0.0)) {
    throw ConfigError("--t-spec: expected a positive number of hours or \"inf\"");
  }
  return v;
}

int report(const char *kind, const std::exception &e, int code) {
  std::cerr << "error (" << kind << "): " << e.what() << '\n';
  return code;
}

} // namespace

int run(int argc, const char *const *argv) {
  CLI::App app{"Hardware-aware NAS benchmark toolkit at desk scale", "anb"};
  app.require_subcommand(1);
  Overrides o;
  auto *config_opt = app.add_option("--config", o.config_path, "TOML run configuration");
  auto *seed_opt = app.add_option("--seed", o.seed, "Seed overriding run.seed");
  auto *out_opt = app.add_option("--out", o.out, "Output directory overriding run.out");
  auto *jobs_opt =
      app.add_option("--jobs", o.jobs, "Worker threads overriding run.jobs (0: runtime default)")
          ->check(CLI::NonNegativeNumber);

  auto *proxy = app.add_subcommand("proxy-search", "Search the training-scheme grid for a proxy");
  auto *t_spec_opt = proxy->add_option("--t-spec", o.t_spec, "Time budget in hours, or inf");
  auto *collect = app.add_subcommand("collect", "Sample architectures and write ANB-*.jsonl datasets");
  auto *fit = app.add_subcommand("fit", "Fit GBDT surrogates with the configured hyperparameters");
  auto *tune = app.add_subcommand("tune", "Tune and fit GBDT surrogates on the val split");
  CLI::Option *fit_datasets = fit->add_option("--dataset", o.datasets, "Dataset name, e.g. ANB-Acc");
  CLI::Option *tune_datasets = tune->add_option("--dataset", o.datasets, "Dataset name, e.g. ANB-Acc");
  auto *eval = app.add_subcommand("eval", "Report r2, tau and MAE of a saved model on a split");
  auto *model_opt = eval->add_option("--model", o.model, "Model name");
  auto *eval_ds_opt = eval->add_option("--dataset", o.eval_dataset, "Dataset name");
  auto *split_opt = eval->add_option("--split", o.split, "train, val or test")
                        ->check(CLI::IsMember({"train", "val", "test"}));
  auto *simulate = app.add_subcommand("simulate", "Run optimizers against the surrogates");
  auto *opt_opt = simulate->add_option("--optimizer", o.optimizers, "RS, RE or REINFORCE");
  auto *budget_opt = simulate->add_option("--budget", o.budget, "Evaluations per run")
                         ->check(CLI::PositiveNumber);
  auto *pareto = app.add_subcommand("pareto", "Pareto front over the saved bi-objective trajectories");
  for (auto *sub : {proxy, collect, fit, tune, eval, simulate, pareto}) sub->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError &e) {
    const int code = app.exit(e);
    return code == 0 ? exit_ok : exit_config;
  }

  try {
    RunConfig config = o.config_path.empty() ? RunConfig{} : load_config(o.config_path);
    if (seed_opt->count()) config.seed = o.seed;
    if (out_opt->count()) config.out = o.out;
    if (jobs_opt->count()) config.jobs = o.jobs;
    if (t_spec_opt->count()) config.proxy_search.t_spec_hours = parse_t_spec(o.t_spec);
    if (fit_datasets->count()) config.fit.datasets = o.datasets;
    if (tune_datasets->count()) config.tune.datasets = o.datasets;
    if (model_opt->count()) config.eval.model = o.model;
    if (eval_ds_opt->count()) config.eval.dataset = o.eval_dataset;
    if (split_opt->count()) config.eval.split = data::parse_split_token(o.split);
    if (opt_opt->count()) {
      config.simulate.optimizers.clear();
      for (const auto &n : o.optimizers) {
        try {
          config.simulate.optimizers.push_back(optim::parse_optimizer_name(n));
        } catch (const ValidationError &e) {
          throw ConfigError(std::string("--optimizer: ") + e.what());
        }
      }
    }
    if (budget_opt->count()) config.simulate.budget = o.budget;
    (void)config_opt;
    config.validate();
    set_num_threads(config.jobs);

    const std::pair<CLI::App *, std::function<void(const RunConfig &)>> commands[] = {
        {proxy, cmd_proxy_search}, {collect, cmd_collect}, {fit, cmd_fit},
        {tune, cmd_tune},          {eval, cmd_eval},       {simulate, cmd_simulate},
        {pareto, cmd_pareto}};
    for (const auto &[sub, command] : commands) {
      if (sub->parsed()) command(config);
    }
    return exit_ok;
  } catch (const ConfigError &e) {
    return report("config", e, exit_config);
  } catch (const InfeasibleError &e) {
    return report("infeasible", e, exit_infeasible);
  } catch (const IoError &e) {
    return report("io", e, exit_io);
  } catch (const FormatError &e) {
    return report("format", e, exit_io);
  } catch (const ValidationError &e) {
    return report("invalid input", e, exit_config);
  } catch (const std::exception &e) {
    return report("internal", e, exit_failure);
  }
}

} // namespace anb::cli
