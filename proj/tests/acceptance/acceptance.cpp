#include "anb/archspace.hpp"
#include "anb/data.hpp"
#include "anb/devices.hpp"
#include "anb/errors.hpp"
#include "anb/metrics.hpp"
#include "anb/optim.hpp"
#include "anb/proxysearch.hpp"
#include "anb/surrogate.hpp"

#include "oracles/grid_search_brute.hpp"
#include "oracles/kendall_quadratic.hpp"
#include "oracles/pareto_quadratic.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

using namespace anb;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

class Criterion {
public:
  void check(bool ok, const std::string &what) {
    if (!ok) {
      pass_ = false;
      if (failures_.size() < 5) failures_.push_back(what);
    }
  }
  void note(const std::string &text) { notes_ += (notes_.empty() ? "" : "; ") + text; }
  Outcome outcome() const {
    std::string detail = notes_;
    for (const auto &f : failures_) detail += (detail.empty() ? "" : "; ") + ("failed: " + f);
    return {pass_, detail};
  }

private:
  bool pass_ = true;
  std::vector<std::string> failures_;
  std::string notes_;
};

std::string num(double v, int digits = 6) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", digits, v);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// Shared state built by the proxy-search criteria and reused downstream.
struct Pipeline {
  arch::SpaceDef space = arch::SpaceDef::mnasnet();
  proxy::SyntheticOracle oracle{arch::SpaceDef::mnasnet()};
  std::vector<arch::Architecture> grid_models;
  std::vector<double> reference_accs;
  std::optional<proxy::TrainingScheme> proxy_scheme;
  std::optional<data::MetricDataset> dataset;
  std::optional<surrogate::GbdtEnsemble> model;
};

constexpr std::uint64_t kGridSeed = 7;
constexpr std::uint64_t kSearchSeed = 0;
constexpr std::uint64_t kValidateSeed = 11;
constexpr std::uint64_t kCollectSeed = 5;
constexpr std::uint64_t kTuneSeed = 1;
constexpr std::size_t kTuneBudget = 10;

Outcome combinatorics() {
  Criterion c;
  const auto full = arch::space_size(arch::SpaceDef::mnasnet());
  c.check(full == 78364164096ULL, "space_size(default) = " + std::to_string(full));
  const auto two = arch::SpaceDef::mnasnet_prefix(2);
  std::size_t visited = 0;
  std::set<std::vector<double>> codes;
  arch::for_each_architecture(two, [&](const arch::Architecture &a) {
    ++visited;
    codes.insert(arch::encode(two, a));
  });
  c.check(visited == 1296 && codes.size() == 1296 && arch::space_size(two) == 1296,
          "two-block enumeration " + std::to_string(visited) + " / distinct " +
              std::to_string(codes.size()));
  c.note("space_size = " + std::to_string(full) + ", two-block enumeration = " +
         std::to_string(visited));
  return c.outcome();
}

Outcome kendall() {
  Criterion c;
  std::mt19937_64 rng(2024);
  std::size_t compared = 0;
  std::size_t degenerate = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t n = std::uniform_int_distribution<std::size_t>(2, 300)(rng);
    const int levels = std::uniform_int_distribution<int>(1, 40)(rng);
    std::uniform_int_distribution<int> value(0, levels);
    std::vector<double> x(n), y(n);
    for (std::size_t i = 0; i < n; ++i) {
      x[i] = value(rng) * 0.25;
      y[i] = value(rng) * 0.5 - 3.0;
    }
    const double expected = oracle::kendall_tau_quadratic(x, y);
    const auto counts = metrics::kendall_pair_counts(x, y);
    const auto q = oracle::kendall_counts_quadratic(x, y);
    c.check(counts.concordant == q.concordant && counts.discordant == q.discordant &&
                counts.ties_x_only == q.ties_x_only && counts.ties_y_only == q.ties_y_only,
            "pair counts differ on trial " + std::to_string(trial));
    if (std::isnan(expected)) {
      ++degenerate;
      bool threw = false;
      try {
        metrics::kendall_tau(x, y);
      } catch (const DegenerateInputError &) {
        threw = true;
      }
      c.check(threw, "degenerate trial " + std::to_string(trial) + " did not raise");
      continue;
    }
    ++compared;
    const double got = metrics::kendall_tau(x, y);
    c.check(got == expected, "trial " + std::to_string(trial) + ": " + num(got, 17) + " vs " +
                                 num(expected, 17));
  }

  struct Hand {
    std::vector<double> x, y;
    double tau;
  };
  const std::vector<Hand> hand{
      {{1, 2, 3, 4, 5}, {1, 2, 3, 4, 5}, 1.0},
      {{1, 2, 3, 4, 5}, {5, 4, 3, 2, 1}, -1.0},
      {{1, 2, 3}, {1, 3, 2}, 1.0 / 3.0},
      {{1, 2, 2, 3}, {1, 2, 3, 4}, 5.0 / std::sqrt(30.0)},
      {{1, 1, 2, 2}, {1, 2, 1, 2}, 0.0},
  };
  for (std::size_t i = 0; i < hand.size(); ++i) {
    const double got = metrics::kendall_tau(hand[i].x, hand[i].y);
    c.check(std::abs(got - hand[i].tau) <= 1e-9, "hand case " + std::to_string(i));
  }
  c.note(std::to_string(compared) + " vectors exact vs O(n^2), " + std::to_string(degenerate) +
         " degenerate, " + std::to_string(hand.size()) + " hand cases");
  return c.outcome();
}

Outcome grid_search_exact(Pipeline &p) {
  Criterion c;
  arch::Rng rng(kGridSeed);
  p.grid_models = arch::uniform_grid(p.space, 20, 5000, rng);
  p.reference_accs =
      proxy::reference_accuracies(p.grid_models, proxy::reference_scheme(), p.oracle, kSearchSeed);
  const proxy::SchemeGrid grid;
  for (double t_spec : {3.0, 1.0, 2.0, std::numeric_limits<double>::infinity()}) {
    proxy::GridSearchOptions options;
    options.t_spec_hours = t_spec;
    options.seed = kSearchSeed;
    const auto brute = oracle::brute_force_search(grid, p.grid_models, p.reference_accs, p.oracle,
                                                  t_spec, kSearchSeed);
    const std::string tag = "t_spec " + num(t_spec);
    if (!brute) {
      bool infeasible = false;
      try {
        proxy::grid_search(grid, p.grid_models, p.reference_accs, p.oracle, options);
      } catch (const InfeasibleError &) {
        infeasible = true;
      }
      c.check(infeasible, tag + ": expected InfeasibleError");
      continue;
    }
    const auto got = proxy::grid_search(grid, p.grid_models, p.reference_accs, p.oracle, options);
    c.check(got.best_scheme == brute->scheme, tag + ": selected " +
                                                  proxy::to_string(got.best_scheme) + " vs " +
                                                  proxy::to_string(brute->scheme));
    c.check(std::abs(got.tau - brute->tau) <= 1e-12, tag + ": tau");
    c.check(std::abs(got.mean_hours - brute->mean_hours) <= 1e-12, tag + ": t_p");
    c.check(got.mean_hours <= t_spec, tag + ": returned an infeasible scheme");
    c.check(got.table[got.best_index].feasible, tag + ": best row not feasible");
    if (t_spec == 3.0) {
      p.proxy_scheme = got.best_scheme;
      c.note("t_spec 3 h: " + proxy::to_string(got.best_scheme) + " tau " + num(got.tau) +
             " t_p " + num(got.mean_hours) + " h, " + std::to_string(got.table.size()) +
             " schemes");
    }
  }
  return c.outcome();
}

Outcome proxy_validation(Pipeline &p) {
  Criterion c;
  if (!p.proxy_scheme) {
    c.check(false, "no proxy scheme from the grid search");
    return c.outcome();
  }
  const auto ref = proxy::reference_scheme();
  const auto report =
      proxy::validate_scheme(p.space, *p.proxy_scheme, ref, 120, 3, p.oracle, kValidateSeed);
  const double sp = proxy::speedup(*p.proxy_scheme, ref, p.grid_models, p.oracle);
  c.check(report.rows.size() == 120, "validation rows");
  c.check(report.tau >= 0.90, "tau " + num(report.tau) + " < 0.90");
  c.check(sp >= 3.0, "speedup " + num(sp) + " < 3");
  c.note("tau " + num(report.tau) + " on 120 models x 3 seeds, speedup " + num(sp) + "x");
  return c.outcome();
}

Outcome surrogate_quality(Pipeline &p) {
  Criterion c;
  if (!p.proxy_scheme) {
    c.check(false, "no proxy scheme from the grid search");
    return c.outcome();
  }
  const auto t0 = std::chrono::steady_clock::now();
  const auto scheme = *p.proxy_scheme;
  const data::MetricSource source{"", data::Metric::accuracy, [&](const arch::Architecture &a) {
                                    return p.oracle.evaluate(a, scheme, kCollectSeed).accuracy;
                                  }};
  auto collected = data::collect(p.space, 5200, {source}, kCollectSeed);
  auto ds = collected.datasets.at("ANB-Acc");
  ds.assign_splits(data::split(ds, {}, kCollectSeed).tags);
  c.check(ds.size() == 5200, "dataset size " + std::to_string(ds.size()));
  c.check(ds.indices(data::Split::test).size() == 520 && ds.indices(data::Split::val).size() == 520,
          "0.8/0.1/0.1 split sizes");

  const auto tuned = surrogate::tune(p.space, ds, kTuneBudget, kTuneSeed);
  auto model = surrogate::fit(p.space, ds, tuned.best);
  const auto report = surrogate::evaluate(model, p.space, ds, data::Split::test);
  const double elapsed = seconds_since(t0);
  const double tau = report.tau.value_or(-1.0);
  const double r2 = report.r2.value_or(-1.0);
  c.check(tau >= 0.90, "test tau " + num(tau) + " < 0.90");
  c.check(r2 >= 0.95, "test R2 " + num(r2) + " < 0.95");
  c.check(elapsed <= 300.0, "runtime " + num(elapsed) + " s > 300 s");
  c.note("test tau " + num(tau) + ", R2 " + num(r2) + ", MAE " + num(report.mae) + " (n_trees " +
         std::to_string(tuned.best.n_trees) + ", depth " + std::to_string(tuned.best.max_depth) +
         ", lr " + num(tuned.best.learning_rate) + "), " + num(elapsed, 3) + " s");
  p.dataset = std::move(ds);
  p.model = std::move(model);
  return c.outcome();
}

std::vector<double> rewards_of(const optim::SearchTrajectory &t) {
  std::vector<double> r;
  for (const auto &s : t.steps) r.push_back(s.reward);
  return r;
}

Outcome optimizer_ordering(Pipeline &p) {
  Criterion c;
  const auto &oracle = p.oracle;
  const optim::Evaluator evaluator = [&oracle](const arch::Architecture &a) {
    return optim::Evaluation{oracle.true_accuracy(a), {}};
  };
  const auto seeds = optim::default_seeds();
  std::map<optim::OptimizerKind, std::vector<double>> finals;
  for (auto kind : {optim::OptimizerKind::random_search,
                    optim::OptimizerKind::regularized_evolution,
                    optim::OptimizerKind::reinforce}) {
    optim::OptimizerSpec spec;
    spec.kind = kind;
    const auto result = optim::simulate_runs(p.space, spec, evaluator, {}, 2000, seeds);
    const auto again = optim::simulate_runs(p.space, spec, evaluator, {}, 2000, seeds, Exec::serial);
    for (std::size_t r = 0; r < seeds.size(); ++r) {
      finals[kind].push_back(result.runs[r].steps.back().incumbent);
      const auto single = optim::run_optimizer(p.space, spec, evaluator, {}, 2000, seeds[r]);
      c.check(rewards_of(result.runs[r]) == rewards_of(again.runs[r]) &&
                  rewards_of(result.runs[r]) == rewards_of(single),
              std::string(optim::optimizer_name(kind)) + " seed " + std::to_string(seeds[r]) +
                  " not reproducible");
    }
  }
  auto mean = [](const std::vector<double> &v) {
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
  };
  const auto &rs = finals[optim::OptimizerKind::random_search];
  std::string summary = "RS " + num(mean(rs));
  for (auto kind : {optim::OptimizerKind::regularized_evolution, optim::OptimizerKind::reinforce}) {
    const auto &other = finals[kind];
    std::vector<double> diff;
    for (std::size_t i = 0; i < rs.size(); ++i) diff.push_back(other[i] - rs[i]);
    const double margin = mean(diff);
    const std::string name(optim::optimizer_name(kind));
    c.check(mean(other) >= mean(rs), name + " mean below RS");
    c.check(margin > 0.0, name + " paired margin " + num(margin) + " <= 0");
    summary += ", " + name + " " + num(mean(other)) + " (paired margin " + num(margin, 3) + ")";
  }
  c.note(summary + "; 5 seeds x 2000 evaluations, bit-reproducible");
  return c.outcome();
}

Outcome reinforce_sanity() {
  Criterion c;
  const auto toy = arch::SpaceDef::mnasnet_prefix(1);
  arch::Architecture target;
  target.blocks = {{4, 5, 2, true}};
  const optim::Evaluator evaluator = [&](const arch::Architecture &a) {
    return optim::Evaluation{a == target ? 1.0 : 0.0, {}};
  };
  arch::Rng rng(0);
  std::optional<std::size_t> reached;
  double final_mass = 0.0;
  double worst_sum = 0.0;
  optim::reinforce(toy, evaluator, {}, 3000, {}, rng,
                   [&](std::size_t step, const optim::PolicyState &policy) {
                     final_mass = policy.probability_of(toy, target);
                     if (!reached && final_mass >= 0.9) reached = step + 1;
                     for (std::size_t d = 0; d < policy.num_decisions(); ++d) {
                       double s = 0.0;
                       for (double v : policy.probabilities(d)) s += v;
                       worst_sum = std::max(worst_sum, std::abs(s - 1.0));
                     }
                   });
  c.check(reached.has_value(), "mass on the optimum never reached 0.9");
  c.check(worst_sum <= 1e-12, "probability sum off by " + num(worst_sum));
  c.note("mass >= 0.9 after " + (reached ? std::to_string(*reached) : std::string("-")) +
         " steps, final " + num(final_mass) + ", max |sum - 1| " + num(worst_sum, 3));
  return c.outcome();
}

Outcome pareto_exact() {
  Criterion c;
  const auto two = arch::SpaceDef::mnasnet_prefix(2);
  const proxy::SyntheticOracle oracle(two);
  const data::DeviceModel vck(two, data::builtin_device("VCK"));
  const data::DeviceModel zcu(two, data::builtin_device("ZCU"));
  std::vector<optim::ParetoPoint> thr, lat;
  arch::for_each_architecture(two, [&](const arch::Architecture &a) {
    const double acc = oracle.true_accuracy(a);
    thr.push_back({acc, vck.throughput(a), thr.size()});
    lat.push_back({acc, zcu.latency_ms(a), lat.size()});
  });
  c.check(thr.size() == 1296, "enumerated " + std::to_string(thr.size()));
  const auto f_thr = optim::pareto_front(thr, optim::PerfDirection::maximize);
  const auto f_lat = optim::pareto_front(lat, optim::PerfDirection::minimize);
  c.check(f_thr == oracle::pareto_quadratic(thr, optim::PerfDirection::maximize),
          "maximize-throughput front differs from the O(n^2) oracle");
  c.check(f_lat == oracle::pareto_quadratic(lat, optim::PerfDirection::minimize),
          "minimize-latency front differs from the O(n^2) oracle");
  c.note("fronts of " + std::to_string(f_thr.size()) + " (throughput) and " +
         std::to_string(f_lat.size()) + " (latency) points over 1296 architectures");
  return c.outcome();
}

template <class F> std::optional<FormatError::Kind> format_error_kind(F &&f) {
  try {
    f();
  } catch (const FormatError &e) {
    return e.kind();
  } catch (...) {
  }
  return std::nullopt;
}

Outcome persistence(Pipeline &p) {
  Criterion c;
  if (!p.model || !p.dataset) {
    c.check(false, "no model or dataset from the surrogate criterion");
    return c.outcome();
  }
  const auto dir = fs::temp_directory_path() / "anb_acceptance";
  fs::create_directories(dir);

  const auto model_file = dir / "ANB-Acc.json";
  surrogate::save(*p.model, model_file);
  const auto loaded = surrogate::load(model_file);
  arch::Rng rng(99);
  std::size_t mismatches = 0;
  for (int i = 0; i < 1000; ++i) {
    const auto a = arch::sample_uniform(p.space, rng);
    mismatches += p.model->predict(p.space, a) != loaded.predict(p.space, a);
  }
  c.check(mismatches == 0, std::to_string(mismatches) + " of 1000 probes differ after reload");
  const auto model_text = surrogate::serialize_model(*p.model);
  c.check(surrogate::serialize_model(loaded) == model_text, "model bytes changed on reload");

  const auto ds_file = dir / "ANB-Acc.jsonl";
  data::save_dataset(*p.dataset, ds_file);
  const auto ds_loaded = data::load_dataset(p.space, ds_file);
  c.check(ds_loaded == *p.dataset, "dataset differs after reload");
  const auto ds_text = data::serialize_dataset(*p.dataset);
  c.check(data::serialize_dataset(ds_loaded) == ds_text, "dataset bytes changed on reload");

  using Kind = FormatError::Kind;
  auto bumped_model = model_text;
  bumped_model.replace(bumped_model.find("\"format_version\":1"), 18, "\"format_version\":9");
  c.check(format_error_kind([&] { surrogate::parse_model(bumped_model); }) == Kind::version_mismatch,
          "model version mismatch");
  c.check(format_error_kind([&] { surrogate::parse_model(model_text.substr(0, model_text.size() / 2)); })
              .has_value(),
          "truncated model");
  auto bumped_ds = ds_text;
  bumped_ds.replace(bumped_ds.find("\"schema_version\":1"), 18, "\"schema_version\":2");
  c.check(format_error_kind([&] { data::parse_dataset(p.space, bumped_ds); }) == Kind::version_mismatch,
          "dataset version mismatch");
  c.check(format_error_kind([&] { data::parse_dataset(p.space, ds_text.substr(0, ds_text.size() / 2)); }) ==
              Kind::truncated,
          "truncated dataset");
  auto garbled = ds_text;
  garbled[ds_text.find('\n') + 2] = '@';
  c.check(format_error_kind([&] { data::parse_dataset(p.space, garbled); }) == Kind::malformed,
          "garbled dataset");
  c.note("1000 probes identical, model " + std::to_string(model_text.size()) + " B and dataset " +
         std::to_string(ds_text.size()) + " B byte-stable, 5 corruption cases rejected");
  fs::remove_all(dir);
  return c.outcome();
}

std::map<std::string, std::string> snapshot(const fs::path &root) {
  std::map<std::string, std::string> files;
  for (const auto &entry : fs::recursive_directory_iterator(root)) {
    if (!entry.is_regular_file()) continue;
    std::ifstream in(entry.path(), std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    files[fs::relative(entry.path(), root).string()] = s.str();
  }
  return files;
}

Outcome end_to_end_cli() {
  Criterion c;
  const auto root = fs::temp_directory_path() / "anb_acceptance_cli";
  fs::remove_all(root);
  fs::create_directories(root);
  std::vector<std::map<std::string, std::string>> runs;
  for (const char *name : {"a", "b"}) {
    const auto out = root / name;
    for (const char *cmd : {"collect", "fit", "simulate", "pareto"}) {
      const std::string line = std::string("\"") + ANB_CLI_PATH + "\" --config \"" +
                               ANB_EXAMPLE_CONFIG + "\" --out \"" + out.string() + "\" " + cmd +
                               " > \"" + (root / (std::string(name) + "-" + cmd + ".log")).string() +
                               "\" 2>&1";
      const int status = std::system(line.c_str());
      c.check(status == 0, std::string(cmd) + " exited with status " + std::to_string(status));
    }
    runs.push_back(snapshot(out));
  }
  const auto &a = runs[0];
  c.check(a.count("pareto/front.csv") == 1, "pareto/front.csv missing");
  c.check(a.count("simulate/REINFORCE-pareto.csv") == 1, "bi-objective simulate wrote no front");
  c.check(a == runs[1], "outputs differ between the two runs");
  c.note(std::to_string(a.size()) + " output files byte-identical across two runs");
  fs::remove_all(root);
  return c.outcome();
}

} // namespace

int main() {
  Pipeline pipeline;
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"exact combinatorics", combinatorics},
      {"kendall tau vs O(n^2) oracle", kendall},
      {"surrogate fit quality",
       [&] {
         // Needs the proxy scheme selected by the grid search.
         if (!pipeline.proxy_scheme) grid_search_exact(pipeline);
         return surrogate_quality(pipeline);
       }},
      {"grid search equals brute force", [&] { return grid_search_exact(pipeline); }},
      {"proxy validation and speedup", [&] { return proxy_validation(pipeline); }},
      {"optimizer ordering and reproducibility", [&] { return optimizer_ordering(pipeline); }},
      {"reinforce sanity", reinforce_sanity},
      {"pareto front vs O(n^2) oracle", pareto_exact},
      {"persistence roundtrips and errors", [&] { return persistence(pipeline); }},
      {"end-to-end cli", end_to_end_cli},
  };

  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome outcome;
    try {
      outcome = criteria[i].second();
    } catch (const std::exception &e) {
      outcome = {false, std::string("exception: ") + e.what()};
    }
    failed += !outcome.pass;
    std::printf("%s [%zu] %s (%.1f s): %s\n", outcome.pass ? "PASS" : "FAIL", i + 1,
                criteria[i].first.c_str(), seconds_since(t0), outcome.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failed,
              criteria.size());
  return failed == 0 ? 0 : 1;
}
