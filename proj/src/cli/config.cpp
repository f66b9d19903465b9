#include "anb/cli.hpp"
#include "anb/devices.hpp"
#include "anb/errors.hpp"

#define TOML_EXCEPTIONS 1
#include <toml.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

namespace anb::cli {

namespace {

std::string where(const toml::node &node, const std::string &key) {
  const auto line = node.source().begin.line;
  return key + (line > 0 ? " (line " + std::to_string(line) + ")" : "");
}

[[noreturn]] void type_error(const toml::node &node, const std::string &key,
                             const char *expected) {
  throw ConfigError(where(node, key) + ": expected " + expected);
}

std::int64_t read_integer(const toml::node &node, const std::string &key) {
  const auto *v = node.as_integer();
  if (v == nullptr) type_error(node, key, "an integer");
  return v->get();
}

void read_value(const toml::node &node, const std::string &key, int &out) {
  const auto v = read_integer(node, key);
  if (v < std::numeric_limits<int>::min() || v > std::numeric_limits<int>::max()) {
    throw ConfigError(where(node, key) + ": integer out of range");
  }
  out = static_cast<int>(v);
}

void read_value(const toml::node &node, const std::string &key, std::uint64_t &out) {
  const auto v = read_integer(node, key);
  if (v < 0) throw ConfigError(where(node, key) + ": must be non-negative");
  out = static_cast<std::uint64_t>(v);
}

void read_value(const toml::node &node, const std::string &key, double &out) {
  if (const auto *f = node.as_floating_point()) {
    out = f->get();
  } else if (const auto *i = node.as_integer()) {
    out = static_cast<double>(i->get());
  } else {
    type_error(node, key, "a number");
  }
}

void read_value(const toml::node &node, const std::string &key, std::string &out) {
  const auto *v = node.as_string();
  if (v == nullptr) type_error(node, key, "a string");
  out = v->get();
}

template <class T>
void read_value(const toml::node &node, const std::string &key, std::vector<T> &out) {
  const auto *arr = node.as_array();
  if (arr == nullptr) type_error(node, key, "an array");
  std::vector<T> values;
  for (std::size_t i = 0; i < arr->size(); ++i) {
    T v{};
    read_value(*arr->get(i), key + "[" + std::to_string(i) + "]", v);
    values.push_back(std::move(v));
  }
  out = std::move(values);
}

// One TOML table; every key must be consumed before `finish`.
class Section {
public:
  Section(const toml::table &table, std::string path) : table_(table), path_(std::move(path)) {}

  const toml::node *take(std::string_view key) {
    seen_.emplace(key);
    return table_.get(key);
  }

  template <class T> void read(std::string_view key, T &out) {
    if (const auto *node = take(key)) read_value(*node, qualified(key), out);
  }

  template <class T> void read(std::string_view key, std::optional<T> &out) {
    if (const auto *node = take(key)) {
      T v{};
      read_value(*node, qualified(key), v);
      out = std::move(v);
    }
  }

  std::optional<Section> section(std::string_view key) {
    const auto *node = take(key);
    if (node == nullptr) return std::nullopt;
    const auto *t = node->as_table();
    if (t == nullptr) type_error(*node, qualified(key), "a table");
    return Section(*t, qualified(key));
  }

  std::string qualified(std::string_view key) const {
    return path_.empty() ? std::string(key) : path_ + "." + std::string(key);
  }

  void finish() const {
    for (const auto &[k, v] : table_) {
      if (!seen_.count(std::string(k.str()))) {
        throw ConfigError(where(v, qualified(k.str())) + ": unknown key");
      }
    }
  }

private:
  const toml::table &table_;
  std::string path_;
  std::set<std::string, std::less<>> seen_;
};

template <class F> void checked(const std::string &what, F &&f) {
  try {
    f();
  } catch (const ValidationError &e) {
    throw ConfigError(what + ": " + e.what());
  }
}

void read_oracle(Section s, proxy::SyntheticOracleParams &p) {
  s.read("flops_weight", p.flops_weight);
  s.read("params_weight", p.params_weight);
  s.read("se_weight", p.se_weight);
  s.read("kernel_weight", p.kernel_weight);
  s.read("accuracy_floor", p.accuracy_floor);
  s.read("accuracy_ceiling", p.accuracy_ceiling);
  s.read("epoch_underfit", p.epoch_underfit);
  s.read("resolution_underfit", p.resolution_underfit);
  s.read("noise_epoch_factor", p.noise_epoch_factor);
  s.read("noise", p.noise);
  s.read("reference_epochs", p.reference_epochs);
  s.read("reference_resolution", p.reference_resolution);
  s.read("hours_per_step", p.hours_per_step);
  s.read("samples_per_epoch", p.samples_per_epoch);
  s.finish();
}

void read_scheme(Section s, proxy::TrainingScheme &scheme) {
  s.read("batch_size", scheme.batch_size);
  s.read("total_epochs", scheme.total_epochs);
  s.read("resize_start_epoch", scheme.resize_start_epoch);
  s.read("resize_finish_epoch", scheme.resize_finish_epoch);
  s.read("start_resolution", scheme.start_resolution);
  s.read("finish_resolution", scheme.finish_resolution);
  s.finish();
}

void read_proxy_search(Section s, ProxySearchSettings &p) {
  s.read("grid_models", p.grid_models);
  s.read("grid_pool", p.grid_pool);
  if (const auto *node = s.take("t_spec_hours")) {
    if (const auto *text = node->as_string()) {
      if (text->get() != "inf") type_error(*node, s.qualified("t_spec_hours"), "a number or \"inf\"");
      p.t_spec_hours = std::numeric_limits<double>::infinity();
    } else {
      read_value(*node, s.qualified("t_spec_hours"), p.t_spec_hours);
    }
  }
  s.read("validate_count", p.validate_count);
  s.read("validate_repeats", p.validate_repeats);
  if (auto es = s.section("early_stop")) {
    proxy::EarlyStop stop;
    es->read("tau_min", stop.tau_min);
    es->read("t_max_hours", stop.t_max_hours);
    es->finish();
    p.early_stop = stop;
  }
  if (auto g = s.section("grid")) {
    g->read("batch_sizes", p.grid.batch_sizes);
    g->read("total_epochs", p.grid.total_epochs);
    g->read("resize_start_epochs", p.grid.resize_start_epochs);
    g->read("resize_finish_epochs", p.grid.resize_finish_epochs);
    g->read("start_resolutions", p.grid.start_resolutions);
    g->read("finish_resolutions", p.grid.finish_resolutions);
    g->finish();
  }
  s.finish();
}

void read_collect(Section s, CollectSettings &c) {
  s.read("samples", c.samples);
  s.read("throughput_devices", c.throughput_devices);
  s.read("latency_devices", c.latency_devices);
  if (const auto *node = s.take("split")) {
    std::vector<double> r;
    read_value(*node, s.qualified("split"), r);
    if (r.size() != 3) throw ConfigError(where(*node, s.qualified("split")) + ": expected 3 ratios");
    c.ratios = {r[0], r[1], r[2]};
  }
  if (auto scheme = s.section("scheme")) read_scheme(*scheme, c.scheme);
  s.finish();
}

void read_fit(Section s, FitSettings &f) {
  s.read("datasets", f.datasets);
  s.read("n_trees", f.config.n_trees);
  s.read("max_depth", f.config.max_depth);
  s.read("learning_rate", f.config.learning_rate);
  s.read("min_samples_leaf", f.config.min_samples_leaf);
  s.read("subsample_rows", f.config.subsample_rows);
  s.read("subsample_features", f.config.subsample_features);
  s.finish();
}

void read_tune(Section s, TuneSettings &t) {
  s.read("datasets", t.datasets);
  s.read("budget", t.budget);
  if (auto g = s.section("grid")) {
    g->read("n_trees", t.grid.n_trees);
    g->read("max_depth", t.grid.max_depth);
    g->read("learning_rate", t.grid.learning_rate);
    g->read("min_samples_leaf", t.grid.min_samples_leaf);
    g->read("subsample_rows", t.grid.subsample_rows);
    g->read("subsample_features", t.grid.subsample_features);
    g->finish();
  }
  s.finish();
}

void read_eval(Section s, EvalSettings &e) {
  s.read("model", e.model);
  s.read("dataset", e.dataset);
  if (const auto *node = s.take("split")) {
    std::string token;
    read_value(*node, s.qualified("split"), token);
    checked(where(*node, s.qualified("split")), [&] { e.split = data::parse_split_token(token); });
  }
  s.finish();
}

void read_simulate(Section s, SimulateSettings &sim) {
  if (const auto *node = s.take("optimizers")) {
    std::vector<std::string> names;
    read_value(*node, s.qualified("optimizers"), names);
    sim.optimizers.clear();
    checked(where(*node, s.qualified("optimizers")), [&] {
      for (const auto &n : names) sim.optimizers.push_back(optim::parse_optimizer_name(n));
    });
  }
  s.read("budget", sim.budget);
  s.read("seeds", sim.seeds);
  s.read("accuracy_model", sim.accuracy_model);
  s.read("perf_model", sim.perf_model);
  if (auto o = s.section("objective")) {
    std::string kind = "accuracy";
    double target = 1.0;
    double weight = -0.07;
    o->read("kind", kind);
    o->read("target", target);
    o->read("weight", weight);
    o->finish();
    if (kind == "accuracy") {
      sim.objective = optim::Objective::accuracy_only();
    } else if (kind == "throughput") {
      sim.objective = optim::Objective::throughput(target, weight);
    } else if (kind == "latency") {
      sim.objective = optim::Objective::latency(target, weight);
    } else {
      throw ConfigError(o->qualified("kind") +
                        ": expected \"accuracy\", \"throughput\" or \"latency\"");
    }
  }
  if (auto e = s.section("evolution")) {
    e->read("population", sim.evolution.population);
    e->read("sample", sim.evolution.sample);
    e->finish();
  }
  if (auto r = s.section("reinforce")) {
    r->read("learning_rate", sim.reinforce.learning_rate);
    r->read("baseline_decay", sim.reinforce.baseline_decay);
    r->finish();
  }
  s.finish();
}

void check_dataset_name(const std::string &what, const std::string &name) {
  checked(what, [&] { data::parse_dataset_name(name); });
}

} // namespace

arch::SpaceDef RunConfig::space() const { return arch::SpaceDef::mnasnet_prefix(space_blocks); }

std::filesystem::path RunConfig::dataset_path(std::string_view name) const {
  return out / "datasets" / (std::string(name) + ".jsonl");
}

std::filesystem::path RunConfig::model_path(std::string_view name) const {
  return out / "models" / (std::string(name) + ".json");
}

void RunConfig::validate() const {
  if (space_blocks < 1 || space_blocks > 7) {
    throw ConfigError("space.blocks: must be between 1 and 7");
  }
  if (jobs < 0) throw ConfigError("run.jobs: must be non-negative");
  if (out.empty()) throw ConfigError("run.out: must not be empty");

  const auto &o = oracle;
  if (!(o.accuracy_floor >= 0.0 && o.accuracy_floor < o.accuracy_ceiling &&
        o.accuracy_ceiling <= 1.0)) {
    throw ConfigError("oracle: need 0 <= accuracy_floor < accuracy_ceiling <= 1");
  }
  if (!(o.noise >= 0.0) || !(o.epoch_underfit >= 0.0) || !(o.resolution_underfit >= 0.0) ||
      !(o.noise_epoch_factor >= 0.0)) {
    throw ConfigError("oracle: noise and underfit constants must be non-negative");
  }
  if (o.reference_epochs <= 0 || o.reference_resolution <= 0 || !(o.hours_per_step > 0.0) ||
      !(o.samples_per_epoch > 0.0)) {
    throw ConfigError("oracle: reference epochs, resolution and time constants must be positive");
  }

  const auto &p = proxy_search;
  if (p.grid.schemes().empty()) throw ConfigError("proxy_search.grid: no valid training scheme");
  if (p.grid_models < 2) throw ConfigError("proxy_search.grid_models: must be at least 2");
  if (p.grid_pool < 10 * p.grid_models) {
    throw ConfigError("proxy_search.grid_pool: must be at least 10 * grid_models");
  }
  if (!(p.t_spec_hours > 0.0)) throw ConfigError("proxy_search.t_spec_hours: must be positive");
  if (p.validate_count == 1 || p.validate_repeats == 0) {
    throw ConfigError("proxy_search: validate_count must be 0 or >= 2 and validate_repeats >= 1");
  }

  const auto &c = collect;
  if (c.samples == 0) throw ConfigError("collect.samples: must be positive");
  for (const auto *list : {&c.throughput_devices, &c.latency_devices}) {
    for (const auto &d : *list) checked("collect devices", [&] { data::builtin_device(d); });
  }
  const double sum = c.ratios.train + c.ratios.val + c.ratios.test;
  if (!(c.ratios.train > 0.0 && c.ratios.val >= 0.0 && c.ratios.test >= 0.0) ||
      std::abs(sum - 1.0) > 1e-9) {
    throw ConfigError("collect.split: ratios must be non-negative and sum to 1");
  }
  checked("collect.scheme", [&] { c.scheme.validate(); });

  checked("fit", [&] { fit.config.validate(); });
  if (fit.datasets.empty()) throw ConfigError("fit.datasets: must not be empty");
  for (const auto &d : fit.datasets) check_dataset_name("fit.datasets", d);

  const auto &g = tune.grid;
  if (g.size() == 0) throw ConfigError("tune.grid: every candidate list must be non-empty");
  if (tune.budget == 0 || tune.budget > g.size()) {
    throw ConfigError("tune.budget: must be between 1 and the grid size");
  }
  for (std::size_t i = 0; i < g.size(); ++i) {
    checked("tune.grid", [&] { g.at(i).validate(); });
  }
  if (tune.datasets.empty()) throw ConfigError("tune.datasets: must not be empty");
  for (const auto &d : tune.datasets) check_dataset_name("tune.datasets", d);

  check_dataset_name("eval.model", eval.model);
  if (!eval.dataset.empty()) check_dataset_name("eval.dataset", eval.dataset);

  const auto &s = simulate;
  if (s.optimizers.empty()) throw ConfigError("simulate.optimizers: must not be empty");
  if (s.budget == 0) throw ConfigError("simulate.budget: must be positive");
  if (s.seeds.empty()) throw ConfigError("simulate.seeds: must not be empty");
  if (std::set<std::uint64_t>(s.seeds.begin(), s.seeds.end()).size() != s.seeds.size()) {
    throw ConfigError("simulate.seeds: must be distinct");
  }
  checked("simulate.objective", [&] { s.objective.validate(); });
  check_dataset_name("simulate.accuracy_model", s.accuracy_model);
  if (s.objective.mode == optim::ObjectiveMode::bi_objective) {
    if (!s.perf_model) {
      throw ConfigError("simulate.perf_model: required for a bi-objective search");
    }
    check_dataset_name("simulate.perf_model", *s.perf_model);
  }
  const bool uses_re = std::find(s.optimizers.begin(), s.optimizers.end(),
                                 optim::OptimizerKind::regularized_evolution) != s.optimizers.end();
  if (uses_re) {
    if (s.evolution.sample == 0 || s.evolution.sample > s.evolution.population) {
      throw ConfigError("simulate.evolution: need 1 <= sample <= population");
    }
    if (s.budget < s.evolution.population) {
      throw ConfigError("simulate.budget: must be at least the evolution population");
    }
  }
  if (!(s.reinforce.learning_rate >= 0.0) ||
      !(s.reinforce.baseline_decay >= 0.0 && s.reinforce.baseline_decay < 1.0)) {
    throw ConfigError("simulate.reinforce: need learning_rate >= 0 and 0 <= baseline_decay < 1");
  }
}

RunConfig parse_config(std::string_view toml_text, std::string_view source) {
  toml::table root;
  try {
    root = toml::parse(toml_text, source);
  } catch (const toml::parse_error &e) {
    std::ostringstream msg;
    msg << source << ": " << e.description() << " (line " << e.source().begin.line << ")";
    throw ConfigError(msg.str());
  }

  RunConfig config;
  Section top(root, "");
  if (auto s = top.section("run")) {
    s->read("seed", config.seed);
    std::string out;
    s->read("out", out);
    if (!out.empty()) config.out = out;
    s->read("jobs", config.jobs);
    s->finish();
  }
  if (auto s = top.section("space")) {
    s->read("blocks", config.space_blocks);
    s->finish();
  }
  if (auto s = top.section("oracle")) read_oracle(*s, config.oracle);
  if (auto s = top.section("proxy_search")) read_proxy_search(*s, config.proxy_search);
  if (auto s = top.section("collect")) read_collect(*s, config.collect);
  if (auto s = top.section("fit")) read_fit(*s, config.fit);
  if (auto s = top.section("tune")) read_tune(*s, config.tune);
  if (auto s = top.section("eval")) read_eval(*s, config.eval);
  if (auto s = top.section("simulate")) read_simulate(*s, config.simulate);
  top.finish();

  config.validate();
  return config;
}

RunConfig load_config(const std::filesystem::path &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open config " + path.string());
  std::ostringstream text;
  text << in.rdbuf();
  return parse_config(text.str(), path.string());
}

} // namespace anb::cli
