#include "anb/cli.hpp"
#include "anb/csv.hpp"
#include "anb/devices.hpp"
#include "anb/errors.hpp"
#include "anb/parallel.hpp"

#include <json.hpp>

#include <charconv>
#include <cmath>
#include <deque>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>

namespace anb::cli {

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

namespace {

void make_dirs(const fs::path &dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create directory '" + dir.string() + "': " + ec.message());
}

class OutputFile {
public:
  explicit OutputFile(const fs::path &path) : path_(path) {
    make_dirs(path.parent_path());
    stream_.open(path, std::ios::binary | std::ios::trunc);
    if (!stream_) throw IoError("cannot open '" + path.string() + "' for writing");
  }

  std::ostream &stream() { return stream_; }

  void close() {
    stream_.close();
    if (!stream_) throw IoError("failed writing '" + path_.string() + "'");
  }

private:
  fs::path path_;
  std::ofstream stream_;
};

void write_json(const fs::path &path, const ordered_json &doc) {
  OutputFile file(path);
  file.stream() << doc.dump(2) << '\n';
  file.close();
}

ordered_json optional_number(const std::optional<double> &v) {
  return v && std::isfinite(*v) ? ordered_json(*v) : ordered_json(nullptr);
}

ordered_json number_or_text(double v) {
  return std::isfinite(v) ? ordered_json(v) : ordered_json(csv::format_number(v));
}

ordered_json scheme_json(const proxy::TrainingScheme &s) {
  return {{"b", s.batch_size},         {"e_t", s.total_epochs},
          {"e_s", s.resize_start_epoch}, {"e_f", s.resize_finish_epoch},
          {"res_s", s.start_resolution}, {"res_f", s.finish_resolution}};
}

ordered_json fit_config_json(const surrogate::FitConfig &c) {
  return {{"n_trees", c.n_trees},
          {"max_depth", c.max_depth},
          {"learning_rate", c.learning_rate},
          {"min_samples_leaf", c.min_samples_leaf},
          {"subsample_rows", c.subsample_rows},
          {"subsample_features", c.subsample_features},
          {"seed", c.seed}};
}

ordered_json report_json(const surrogate::FitReport &r) {
  return {{"r2", optional_number(r.r2)}, {"tau", optional_number(r.tau)}, {"mae", r.mae}};
}

std::string fmt(const std::optional<double> &v) {
  return v ? csv::format_number(*v) : std::string("undefined");
}

data::MetricDataset load_named_dataset(const RunConfig &config, const std::string &name) {
  auto ds = data::load_dataset(config.space(), config.dataset_path(name));
  if (ds.name() != name) {
    throw FormatError(FormatError::Kind::malformed, "dataset file for '" + name +
                                                        "' declares name '" + ds.name() + "'");
  }
  return ds;
}

surrogate::GbdtEnsemble load_named_model(const RunConfig &config, const std::string &name) {
  auto model = surrogate::load(config.model_path(name));
  if (model.feature_dim() != config.space().feature_dim()) {
    throw ConfigError("model '" + name + "' expects " + std::to_string(model.feature_dim()) +
                      " features, the configured space has " +
                      std::to_string(config.space().feature_dim()));
  }
  return model;
}

fs::path trajectory_path(const RunConfig &config, optim::OptimizerKind kind, std::uint64_t seed) {
  return config.out / "simulate" / std::string(optim::optimizer_name(kind)) /
         ("seed-" + std::to_string(seed) + ".csv");
}

double parse_double(const std::string &text, const std::string &context) {
  double v = 0.0;
  const auto *end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, v);
  if (ec != std::errc() || ptr != end) {
    throw FormatError(FormatError::Kind::malformed, context + ": bad number '" + text + "'");
  }
  return v;
}

} // namespace

void cmd_proxy_search(const RunConfig &config) {
  const auto space = config.space();
  const proxy::SyntheticOracle oracle(space, config.oracle);
  const auto &ps = config.proxy_search;

  arch::Rng rng(config.seed);
  const auto models = arch::uniform_grid(space, ps.grid_models, ps.grid_pool, rng);
  const auto reference = proxy::reference_scheme();
  const auto ref_accs = proxy::reference_accuracies(models, reference, oracle, config.seed);

  proxy::GridSearchOptions options;
  options.t_spec_hours = ps.t_spec_hours;
  options.early_stop = ps.early_stop;
  options.seed = config.seed;
  const auto result = proxy::grid_search(ps.grid, models, ref_accs, oracle, options);

  OutputFile table(config.out / "proxy_search" / "schemes.csv");
  csv::write_row(table.stream(), {"scheme_id", "b", "e_t", "e_s", "e_f", "res_s", "res_f", "tau",
                                  "t_p_hours", "feasible"});
  for (const auto &row : result.table) {
    const auto &s = row.scheme;
    csv::write_row(table.stream(),
                   {std::to_string(row.scheme_id), std::to_string(s.batch_size),
                    std::to_string(s.total_epochs), std::to_string(s.resize_start_epoch),
                    std::to_string(s.resize_finish_epoch), std::to_string(s.start_resolution),
                    std::to_string(s.finish_resolution), csv::format_number(row.tau),
                    csv::format_number(row.mean_hours), row.feasible ? "true" : "false"});
  }
  table.close();

  const double sp = proxy::speedup(result.best_scheme, reference, models, oracle, config.seed);
  ordered_json summary = {{"best_scheme", scheme_json(result.best_scheme)},
                          {"tau", result.tau},
                          {"t_p", result.mean_hours},
                          {"speedup_vs_reference", sp},
                          {"t_spec_hours", number_or_text(ps.t_spec_hours)},
                          {"early_stopped", result.early_stopped},
                          {"schemes_evaluated", result.table.size()}};
  std::cout << "best scheme " << proxy::to_string(result.best_scheme) << " tau "
            << csv::format_number(result.tau) << " t_p " << csv::format_number(result.mean_hours)
            << " h speedup " << csv::format_number(sp) << '\n';
  if (ps.validate_count > 0) {
    const auto report = proxy::validate_scheme(space, result.best_scheme, reference,
                                               ps.validate_count, ps.validate_repeats, oracle,
                                               config.seed + 1);
    summary["validation"] = {{"models", ps.validate_count},
                             {"repeats", ps.validate_repeats},
                             {"tau", report.tau}};
    std::cout << "validation tau " << csv::format_number(report.tau) << " on "
              << ps.validate_count << " unseen models\n";
  }
  write_json(config.out / "proxy_search" / "summary.json", summary);
}

void cmd_collect(const RunConfig &config) {
  const auto space = config.space();
  const auto &c = config.collect;
  const proxy::SyntheticOracle oracle(space, config.oracle);
  const auto seed = config.seed;

  std::vector<data::MetricSource> sources;
  sources.push_back({"", data::Metric::accuracy, [&oracle, &c, seed](const arch::Architecture &a) {
                       return oracle.evaluate(a, c.scheme, seed).accuracy;
                     }});
  std::deque<data::DeviceModel> devices;
  for (const auto &name : c.throughput_devices) {
    const auto &model = devices.emplace_back(space, data::builtin_device(name), seed);
    sources.push_back({name, data::Metric::throughput,
                       [&model](const arch::Architecture &a) { return model.throughput(a); }});
  }
  for (const auto &name : c.latency_devices) {
    const auto &model = devices.emplace_back(space, data::builtin_device(name), seed);
    sources.push_back({name, data::Metric::latency,
                       [&model](const arch::Architecture &a) { return model.latency_ms(a); }});
  }

  auto result = data::collect(space, c.samples, sources, seed);
  for (const auto &w : result.warnings) std::cerr << "warning: " << w << '\n';

  const auto first = result.datasets.begin()->second.size();
  const auto tags = data::split(first, c.ratios, seed).tags;
  ordered_json counts = ordered_json::object();
  make_dirs(config.out / "datasets");
  for (auto &[name, ds] : result.datasets) {
    ds.assign_splits(tags);
    data::save_dataset(ds, config.dataset_path(name));
    counts[name] = ds.size();
    std::cout << name << ": " << ds.size() << " records\n";
  }
  write_json(config.out / "collect" / "summary.json",
             {{"requested", c.samples},
              {"collection_scheme", scheme_json(c.scheme)},
              {"datasets", counts},
              {"warnings", result.warnings}});
}

void cmd_fit(const RunConfig &config) {
  const auto space = config.space();
  for (const auto &name : config.fit.datasets) {
    const auto ds = load_named_dataset(config, name);
    auto fit_config = config.fit.config;
    fit_config.seed = config.seed;
    const auto model = surrogate::fit(space, ds, fit_config);
    make_dirs(config.out / "models");
    surrogate::save(model, config.model_path(name));
    const auto report = surrogate::evaluate(model, space, ds, data::Split::test);
    write_json(config.out / "reports" / ("fit-" + name + ".json"),
               {{"dataset", name},
                {"config", fit_config_json(fit_config)},
                {"test", report_json(report)}});
    std::cout << name << " test r2 " << fmt(report.r2) << " tau " << fmt(report.tau) << " mae "
              << csv::format_number(report.mae) << '\n';
  }
}

void cmd_tune(const RunConfig &config) {
  const auto space = config.space();
  for (const auto &name : config.tune.datasets) {
    const auto ds = load_named_dataset(config, name);
    const auto tuned = surrogate::tune(space, ds, config.tune.budget, config.seed, config.tune.grid);
    const auto model = surrogate::fit(space, ds, tuned.best);
    make_dirs(config.out / "models");
    surrogate::save(model, config.model_path(name));
    const auto report = surrogate::evaluate(model, space, ds, data::Split::test);

    OutputFile trials(config.out / "reports" / ("tune-" + name + "-trials.csv"));
    csv::write_row(trials.stream(), {"draw", "n_trees", "max_depth", "learning_rate",
                                     "min_samples_leaf", "subsample_rows", "subsample_features",
                                     "val_tau", "val_mae"});
    for (std::size_t i = 0; i < tuned.trials.size(); ++i) {
      const auto &t = tuned.trials[i];
      csv::write_row(trials.stream(),
                     {std::to_string(i), std::to_string(t.config.n_trees),
                      std::to_string(t.config.max_depth), csv::format_number(t.config.learning_rate),
                      std::to_string(t.config.min_samples_leaf),
                      csv::format_number(t.config.subsample_rows),
                      csv::format_number(t.config.subsample_features),
                      csv::format_number(t.val_tau), csv::format_number(t.val_mae)});
    }
    trials.close();
    write_json(config.out / "reports" / ("tune-" + name + ".json"),
               {{"dataset", name},
                {"budget", config.tune.budget},
                {"best", fit_config_json(tuned.best)},
                {"val_tau", tuned.val_tau},
                {"val_mae", tuned.val_mae},
                {"test", report_json(report)}});
    std::cout << name << " tuned n_trees " << tuned.best.n_trees << " max_depth "
              << tuned.best.max_depth << " learning_rate "
              << csv::format_number(tuned.best.learning_rate) << "; test r2 " << fmt(report.r2)
              << " tau " << fmt(report.tau) << " mae " << csv::format_number(report.mae) << '\n';
  }
}

void cmd_eval(const RunConfig &config) {
  const auto &e = config.eval;
  const auto dataset = e.dataset.empty() ? e.model : e.dataset;
  const auto model = load_named_model(config, e.model);
  const auto ds = load_named_dataset(config, dataset);
  const auto report = surrogate::evaluate(model, config.space(), ds, e.split);
  const std::string split(data::split_token(e.split));
  write_json(config.out / "reports" / ("eval-" + e.model + "-" + dataset + "-" + split + ".json"),
             {{"model", e.model}, {"dataset", dataset}, {"split", split},
              {"metrics", report_json(report)}});
  std::cout << "r2 " << fmt(report.r2) << "\ntau " << fmt(report.tau) << "\nmae "
            << csv::format_number(report.mae) << '\n';
}

void cmd_simulate(const RunConfig &config) {
  const auto space = config.space();
  const auto &sim = config.simulate;
  const auto accuracy_model = load_named_model(config, sim.accuracy_model);
  std::optional<surrogate::GbdtEnsemble> perf_model;
  if (sim.perf_model) perf_model = load_named_model(config, *sim.perf_model);
  const auto evaluator = optim::surrogate_evaluator(space, accuracy_model,
                                                    perf_model ? &*perf_model : nullptr);
  const bool bi = sim.objective.mode == optim::ObjectiveMode::bi_objective;

  for (const auto kind : sim.optimizers) {
    optim::OptimizerSpec spec;
    spec.kind = kind;
    spec.evolution = sim.evolution;
    spec.reinforce = sim.reinforce;
    const auto result =
        optim::simulate_runs(space, spec, evaluator, sim.objective, sim.budget, sim.seeds);
    const std::string name(optim::optimizer_name(kind));

    for (const auto &run : result.runs) {
      OutputFile file(trajectory_path(config, kind, run.seed));
      optim::write_trajectory_csv(file.stream(), run);
      file.close();
    }
    OutputFile curve(config.out / "simulate" / (name + "-curve.csv"));
    optim::write_curve_csv(curve.stream(), result.curve);
    curve.close();

    const auto &last = result.curve.back();
    std::cout << name << " final incumbent " << csv::format_number(last.mean_incumbent)
              << " +- " << csv::format_number(last.std_incumbent) << " over "
              << result.runs.size() << " seeds";
    if (bi) {
      std::vector<arch::Architecture> archs;
      for (const auto &run : result.runs) {
        for (const auto &s : run.steps) archs.push_back(s.arch);
      }
      const auto front = optim::trajectory_front(result.runs, sim.objective.direction);
      OutputFile pareto(config.out / "simulate" / (name + "-pareto.csv"));
      optim::write_pareto_csv(pareto.stream(), front, archs);
      pareto.close();
      std::cout << ", " << front.size() << " pareto points";
    }
    std::cout << '\n';
  }
}

void cmd_pareto(const RunConfig &config) {
  const auto &sim = config.simulate;
  if (sim.objective.mode != optim::ObjectiveMode::bi_objective) {
    throw ConfigError("pareto needs a bi-objective simulate.objective");
  }
  const auto space = config.space();
  std::vector<arch::Architecture> archs;
  std::vector<optim::ParetoPoint> points;
  const std::vector<std::string> header{"step", "arch", "accuracy", "perf", "reward", "incumbent"};
  for (const auto kind : sim.optimizers) {
    for (const auto seed : sim.seeds) {
      const auto path = trajectory_path(config, kind, seed);
      std::ifstream in(path, std::ios::binary);
      if (!in) throw IoError("cannot open trajectory '" + path.string() + "'");
      std::string line;
      std::size_t line_no = 1;
      if (!std::getline(in, line) || csv::parse_row(line) != header) {
        throw FormatError(FormatError::Kind::malformed,
                          path.string() + ": missing trajectory header");
      }
      while (std::getline(in, line)) {
        ++line_no;
        const auto context = path.string() + " line " + std::to_string(line_no);
        const auto fields = csv::parse_row(line);
        if (fields.size() != header.size()) {
          throw FormatError(FormatError::Kind::malformed, context + ": expected 6 fields");
        }
        if (fields[3].empty()) {
          throw FormatError(FormatError::Kind::malformed, context + ": missing perf value");
        }
        try {
          archs.push_back(arch::parse_architecture(space, fields[1]));
        } catch (const ValidationError &e) {
          throw FormatError(FormatError::Kind::malformed, context + ": " + e.what());
        }
        points.push_back({parse_double(fields[2], context), parse_double(fields[3], context),
                          points.size()});
      }
    }
  }
  if (points.empty()) throw FormatError(FormatError::Kind::truncated, "trajectories are empty");
  const auto front = optim::pareto_front(points, sim.objective.direction);
  OutputFile out(config.out / "pareto" / "front.csv");
  optim::write_pareto_csv(out.stream(), front, archs);
  out.close();
  std::cout << front.size() << " non-dominated architectures out of " << points.size()
            << " evaluations\n";
}

} // namespace anb::cli
