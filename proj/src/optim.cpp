#include "anb/optim.hpp"

#include "anb/csv.hpp"
#include "anb/errors.hpp"
#include "anb/surrogate.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <exception>
#include <numeric>
#include <ostream>

namespace anb::optim {

Objective Objective::throughput(double target, double weight) {
  return {ObjectiveMode::bi_objective, PerfDirection::maximize, target, weight};
}

Objective Objective::latency(double target, double weight) {
  return {ObjectiveMode::bi_objective, PerfDirection::minimize, target, weight};
}

void Objective::validate() const {
  if (mode == ObjectiveMode::uni_accuracy) return;
  if (!(target > 0.0) || !std::isfinite(target)) {
    throw ValidationError("objective target T must be positive and finite");
  }
  if (!(weight <= 0.0) || !std::isfinite(weight)) {
    throw ValidationError("objective weight w must be finite and <= 0");
  }
}

double scalarize(double accuracy, double perf, const Objective &objective) {
  if (!(perf > 0.0) || !std::isfinite(perf)) {
    throw ValidationError("scalarize needs a positive perf value, got " +
                          csv::format_number(perf));
  }
  if (!(objective.target > 0.0)) {
    throw ValidationError("scalarize needs a positive target");
  }
  const double ratio = objective.direction == PerfDirection::minimize ? perf / objective.target
                                                                      : objective.target / perf;
  return accuracy * std::pow(ratio, objective.weight);
}

double reward(const Evaluation &eval, const Objective &objective) {
  if (objective.mode == ObjectiveMode::uni_accuracy) return eval.accuracy;
  if (!eval.perf) {
    throw ValidationError("bi-objective reward needs a perf value");
  }
  return scalarize(eval.accuracy, *eval.perf, objective);
}

namespace {

class TrajectoryBuilder {
public:
  TrajectoryBuilder(std::string name, std::size_t budget) {
    traj_.optimizer = std::move(name);
    traj_.steps.reserve(budget);
  }

  double record(arch::Architecture arch, const Evaluation &eval, const Objective &objective) {
    Step step;
    step.index = traj_.steps.size();
    step.arch = std::move(arch);
    step.accuracy = eval.accuracy;
    step.perf = eval.perf;
    step.reward = reward(eval, objective);
    step.incumbent =
        traj_.steps.empty() ? step.reward : std::max(traj_.steps.back().incumbent, step.reward);
    traj_.steps.push_back(std::move(step));
    return traj_.steps.back().reward;
  }

  SearchTrajectory finish() { return std::move(traj_); }

private:
  SearchTrajectory traj_;
};

void check_budget(std::size_t budget) {
  if (budget < 1) throw ValidationError("search budget must be >= 1");
}

} // namespace

SearchTrajectory random_search(const arch::SpaceDef &space, const Evaluator &evaluator,
                               const Objective &objective, std::size_t budget, arch::Rng &rng) {
  space.validate();
  objective.validate();
  check_budget(budget);
  TrajectoryBuilder out("RS", budget);
  for (std::size_t i = 0; i < budget; ++i) {
    auto a = arch::sample_uniform(space, rng);
    const auto eval = evaluator(a);
    out.record(std::move(a), eval, objective);
  }
  return out.finish();
}

SearchTrajectory regularized_evolution(const arch::SpaceDef &space, const Evaluator &evaluator,
                                       const Objective &objective, std::size_t budget,
                                       const EvolutionConfig &config, arch::Rng &rng) {
  space.validate();
  objective.validate();
  if (!(budget >= config.population && config.population >= config.sample &&
        config.sample >= 1)) {
    throw ValidationError("regularized evolution needs budget >= population >= sample >= 1");
  }
  struct Member {
    arch::Architecture arch;
    double reward;
  };
  TrajectoryBuilder out("RE", budget);
  std::deque<Member> population;
  for (std::size_t i = 0; i < config.population; ++i) {
    auto a = arch::sample_uniform(space, rng);
    const auto eval = evaluator(a);
    const double r = out.record(a, eval, objective);
    population.push_back({std::move(a), r});
  }

  std::vector<std::size_t> slots(config.population);
  for (std::size_t i = config.population; i < budget; ++i) {
    // Partial Fisher-Yates: the first `sample` slots form the tournament.
    std::iota(slots.begin(), slots.end(), 0);
    std::size_t parent = config.population;
    for (std::size_t j = 0; j < config.sample; ++j) {
      std::uniform_int_distribution<std::size_t> pick(j, slots.size() - 1);
      std::swap(slots[j], slots[pick(rng)]);
      const std::size_t cand = slots[j];
      if (parent == config.population || population[cand].reward > population[parent].reward) {
        parent = cand;
      }
    }
    auto child = arch::mutate(space, population[parent].arch, rng);
    const auto eval = evaluator(child);
    const double r = out.record(child, eval, objective);
    population.push_back({std::move(child), r});
    population.pop_front();
  }
  return out.finish();
}

PolicyState::PolicyState(const arch::SpaceDef &space, const ReinforceConfig &config)
    : config_(config) {
  space.validate();
  if (!(config.learning_rate >= 0.0) || !std::isfinite(config.learning_rate)) {
    throw ValidationError("REINFORCE learning rate must be finite and >= 0");
  }
  if (!(config.baseline_decay >= 0.0 && config.baseline_decay < 1.0)) {
    throw ValidationError("REINFORCE baseline decay must lie in [0, 1)");
  }
  logits_.resize(space.num_decisions());
  for (std::size_t d = 0; d < logits_.size(); ++d) {
    const auto field = static_cast<arch::Field>(d % arch::kFieldsPerBlock);
    logits_[d].assign(space.choice_count(field), 0.0);
  }
}

std::vector<double> PolicyState::probabilities(std::size_t decision) const {
  const auto &l = logits_.at(decision);
  const double top = *std::max_element(l.begin(), l.end());
  std::vector<double> p(l.size());
  double sum = 0.0;
  for (std::size_t j = 0; j < l.size(); ++j) {
    p[j] = std::exp(l[j] - top);
    sum += p[j];
  }
  for (auto &v : p) v /= sum;
  return p;
}

double PolicyState::probability_of(const arch::SpaceDef &space,
                                   const arch::Architecture &arch) const {
  double prob = 1.0;
  for (std::size_t d = 0; d < logits_.size(); ++d) {
    prob *= probabilities(d)[arch::choice_index(space, arch, d)];
  }
  return prob;
}

arch::Architecture PolicyState::sample(const arch::SpaceDef &space, arch::Rng &rng) const {
  arch::Architecture a;
  a.blocks.resize(static_cast<std::size_t>(space.num_blocks));
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (std::size_t d = 0; d < logits_.size(); ++d) {
    const auto p = probabilities(d);
    const double u = unit(rng);
    std::size_t choice = p.size() - 1;
    double acc = 0.0;
    for (std::size_t j = 0; j + 1 < p.size(); ++j) {
      acc += p[j];
      if (u < acc) {
        choice = j;
        break;
      }
    }
    arch::set_choice(space, a, d, choice);
  }
  return a;
}

void PolicyState::update(const arch::SpaceDef &space, const arch::Architecture &arch, double r) {
  if (!has_baseline_) {
    baseline_ = r;
    has_baseline_ = true;
  }
  const double step = config_.learning_rate * (r - baseline_);
  if (step != 0.0) {
    for (std::size_t d = 0; d < logits_.size(); ++d) {
      const auto p = probabilities(d);
      const std::size_t chosen = arch::choice_index(space, arch, d);
      auto &l = logits_[d];
      for (std::size_t j = 0; j < l.size(); ++j) {
        l[j] += step * ((j == chosen ? 1.0 : 0.0) - p[j]);
      }
    }
  }
  baseline_ = config_.baseline_decay * baseline_ + (1.0 - config_.baseline_decay) * r;
}

SearchTrajectory reinforce(const arch::SpaceDef &space, const Evaluator &evaluator,
                           const Objective &objective, std::size_t budget,
                           const ReinforceConfig &config, arch::Rng &rng,
                           const PolicyObserver &observer) {
  objective.validate();
  check_budget(budget);
  PolicyState policy(space, config);
  TrajectoryBuilder out("REINFORCE", budget);
  for (std::size_t i = 0; i < budget; ++i) {
    auto a = policy.sample(space, rng);
    const auto eval = evaluator(a);
    const double r = out.record(a, eval, objective);
    policy.update(space, a, r);
    if (observer) observer(i, policy);
  }
  return out.finish();
}

bool dominates(const ParetoPoint &a, const ParetoPoint &b, PerfDirection direction) {
  const bool perf_ge = direction == PerfDirection::maximize ? a.perf >= b.perf : a.perf <= b.perf;
  const bool perf_gt = direction == PerfDirection::maximize ? a.perf > b.perf : a.perf < b.perf;
  return a.accuracy >= b.accuracy && perf_ge && (a.accuracy > b.accuracy || perf_gt);
}

std::vector<ParetoPoint> pareto_front(std::span<const ParetoPoint> points,
                                      PerfDirection direction) {
  if (points.empty()) throw ValidationError("pareto_front needs at least one point");
  for (const auto &p : points) {
    if (!std::isfinite(p.accuracy) || !std::isfinite(p.perf)) {
      throw ValidationError("pareto_front needs finite coordinates");
    }
  }
  const double sign = direction == PerfDirection::maximize ? 1.0 : -1.0;
  std::vector<ParetoPoint> sorted(points.begin(), points.end());
  std::sort(sorted.begin(), sorted.end(), [sign](const ParetoPoint &a, const ParetoPoint &b) {
    if (a.accuracy != b.accuracy) return a.accuracy > b.accuracy;
    if (a.perf != b.perf) return sign * a.perf > sign * b.perf;
    return a.id < b.id;
  });
  // Sweep from the most accurate point; a point survives only if its perf
  // beats every more (or equally) accurate point.
  std::vector<ParetoPoint> front;
  for (const auto &p : sorted) {
    if (front.empty() || sign * p.perf > sign * front.back().perf) {
      front.push_back(p);
    }
  }
  std::reverse(front.begin(), front.end());
  return front;
}

std::vector<ParetoPoint> trajectory_front(std::span<const SearchTrajectory> runs,
                                          PerfDirection direction) {
  std::vector<ParetoPoint> points;
  std::size_t id = 0;
  for (const auto &run : runs) {
    for (const auto &s : run.steps) {
      if (s.perf) points.push_back({s.accuracy, *s.perf, id});
      ++id;
    }
  }
  return pareto_front(points, direction);
}

std::string_view optimizer_name(OptimizerKind kind) {
  switch (kind) {
  case OptimizerKind::random_search:
    return "RS";
  case OptimizerKind::regularized_evolution:
    return "RE";
  case OptimizerKind::reinforce:
    return "REINFORCE";
  }
  return "?";
}

OptimizerKind parse_optimizer_name(std::string_view name) {
  for (auto k : {OptimizerKind::random_search, OptimizerKind::regularized_evolution,
                 OptimizerKind::reinforce}) {
    if (optimizer_name(k) == name) return k;
  }
  throw ValidationError("unknown optimizer '" + std::string(name) +
                        "' (expected RS, RE or REINFORCE)");
}

SearchTrajectory run_optimizer(const arch::SpaceDef &space, const OptimizerSpec &spec,
                               const Evaluator &evaluator, const Objective &objective,
                               std::size_t budget, std::uint64_t seed) {
  arch::Rng rng(seed);
  SearchTrajectory traj;
  switch (spec.kind) {
  case OptimizerKind::random_search:
    traj = random_search(space, evaluator, objective, budget, rng);
    break;
  case OptimizerKind::regularized_evolution:
    traj = regularized_evolution(space, evaluator, objective, budget, spec.evolution, rng);
    break;
  case OptimizerKind::reinforce:
    traj = reinforce(space, evaluator, objective, budget, spec.reinforce, rng);
    break;
  }
  traj.seed = seed;
  return traj;
}

const std::vector<std::uint64_t> &default_seeds() {
  static const std::vector<std::uint64_t> seeds{0, 1, 2, 3, 4};
  return seeds;
}

std::vector<CurvePoint> aggregate(std::span<const SearchTrajectory> runs) {
  if (runs.empty()) throw ValidationError("aggregate needs at least one run");
  const std::size_t len = runs.front().steps.size();
  for (const auto &r : runs) {
    if (r.steps.size() != len) throw ValidationError("runs differ in length");
  }
  std::vector<CurvePoint> curve(len);
  std::vector<double> column(runs.size());
  const auto n = static_cast<double>(runs.size());
  for (std::size_t s = 0; s < len; ++s) {
    for (std::size_t r = 0; r < runs.size(); ++r) column[r] = runs[r].steps[s].incumbent;
    std::sort(column.begin(), column.end());
    double sum = 0.0;
    for (double v : column) sum += v;
    const double mean = sum / n;
    double sq = 0.0;
    for (double v : column) sq += (v - mean) * (v - mean);
    curve[s] = {s, mean, std::sqrt(sq / n)};
  }
  return curve;
}

SimulationResult simulate_runs(const arch::SpaceDef &space, const OptimizerSpec &spec,
                               const Evaluator &evaluator, const Objective &objective,
                               std::size_t budget, std::span<const std::uint64_t> seeds,
                               Exec exec) {
  if (seeds.empty()) throw ValidationError("simulate_runs needs at least one seed");
  SimulationResult result;
  result.runs.resize(seeds.size());
  if (exec == Exec::parallel) {
    std::vector<std::exception_ptr> errors(seeds.size());
    const auto n = static_cast<std::ptrdiff_t>(seeds.size());
#pragma omp parallel for schedule(dynamic, 1)
    for (std::ptrdiff_t i = 0; i < n; ++i) {
      const auto idx = static_cast<std::size_t>(i);
      try {
        result.runs[idx] = run_optimizer(space, spec, evaluator, objective, budget, seeds[idx]);
      } catch (...) {
        errors[idx] = std::current_exception();
      }
    }
    for (const auto &e : errors) {
      if (e) std::rethrow_exception(e);
    }
  } else {
    for (std::size_t i = 0; i < seeds.size(); ++i) {
      result.runs[i] = run_optimizer(space, spec, evaluator, objective, budget, seeds[i]);
    }
  }
  result.curve = aggregate(result.runs);
  return result;
}

Evaluator surrogate_evaluator(const arch::SpaceDef &space,
                              const surrogate::GbdtEnsemble &accuracy_model,
                              const surrogate::GbdtEnsemble *perf_model) {
  return [space, acc = &accuracy_model, perf = perf_model](const arch::Architecture &a) {
    const auto x = arch::encode(space, a);
    Evaluation e;
    e.accuracy = acc->predict(x);
    if (perf) e.perf = perf->predict(x);
    return e;
  };
}

void write_trajectory_csv(std::ostream &out, const SearchTrajectory &trajectory) {
  csv::write_row(out, {"step", "arch", "accuracy", "perf", "reward", "incumbent"});
  for (const auto &s : trajectory.steps) {
    csv::write_row(out, {std::to_string(s.index), arch::to_string(s.arch),
                         csv::format_number(s.accuracy),
                         s.perf ? csv::format_number(*s.perf) : std::string(),
                         csv::format_number(s.reward), csv::format_number(s.incumbent)});
  }
}

void write_curve_csv(std::ostream &out, std::span<const CurvePoint> curve) {
  csv::write_row(out, {"step", "mean_incumbent", "std_incumbent"});
  for (const auto &c : curve) {
    csv::write_row(out, {std::to_string(c.step), csv::format_number(c.mean_incumbent),
                         csv::format_number(c.std_incumbent)});
  }
}

void write_pareto_csv(std::ostream &out, std::span<const ParetoPoint> front,
                      std::span<const arch::Architecture> archs) {
  csv::write_row(out, {"arch", "accuracy", "perf"});
  for (const auto &p : front) {
    if (p.id >= archs.size()) throw ValidationError("pareto point id out of range");
    csv::write_row(out, {arch::to_string(archs[p.id]), csv::format_number(p.accuracy),
                         csv::format_number(p.perf)});
  }
}

} // namespace anb::optim
