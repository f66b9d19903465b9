#pragma once

#include "anb/archspace.hpp"
#include "anb/parallel.hpp"

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace anb::surrogate {
class GbdtEnsemble;
}

namespace anb::optim {

enum class PerfDirection { maximize, minimize };

enum class ObjectiveMode { uni_accuracy, bi_objective };

struct Objective {
  ObjectiveMode mode = ObjectiveMode::uni_accuracy;
  PerfDirection direction = PerfDirection::maximize; // throughput up, latency down
  double target = 1.0;  // T
  double weight = -0.07; // w

  static Objective accuracy_only() { return {}; }
  static Objective throughput(double target, double weight = -0.07);
  static Objective latency(double target, double weight = -0.07);

  void validate() const;
};

// acc * (perf/T)^w when minimising perf, acc * (T/perf)^w when maximising.
double scalarize(double accuracy, double perf, const Objective &objective);

struct Evaluation {
  double accuracy = 0.0;
  std::optional<double> perf;
};

// Must be safe for concurrent calls.
using Evaluator = std::function<Evaluation(const arch::Architecture &)>;

// Bi-objective rewards require `eval.perf`; throws ValidationError otherwise.
double reward(const Evaluation &eval, const Objective &objective);

struct Step {
  std::size_t index = 0;
  arch::Architecture arch;
  double accuracy = 0.0;
  std::optional<double> perf;
  double reward = 0.0;
  double incumbent = 0.0; // best reward up to and including this step
};

struct SearchTrajectory {
  std::string optimizer;
  std::uint64_t seed = 0;
  std::vector<Step> steps;
};

SearchTrajectory random_search(const arch::SpaceDef &space, const Evaluator &evaluator,
                               const Objective &objective, std::size_t budget, arch::Rng &rng);

struct EvolutionConfig {
  std::size_t population = 100;
  std::size_t sample = 25;
};

// Aging evolution. The first `population` steps consume the generator
// exactly like random_search.
SearchTrajectory regularized_evolution(const arch::SpaceDef &space, const Evaluator &evaluator,
                                       const Objective &objective, std::size_t budget,
                                       const EvolutionConfig &config, arch::Rng &rng);

struct ReinforceConfig {
  double learning_rate = 5.0;
  double baseline_decay = 0.9;
};

// Independent categorical policy per architectural decision.
class PolicyState {
public:
  PolicyState(const arch::SpaceDef &space, const ReinforceConfig &config);

  std::size_t num_decisions() const noexcept { return logits_.size(); }
  const std::vector<double> &logits(std::size_t decision) const { return logits_.at(decision); }
  std::vector<double> probabilities(std::size_t decision) const;
  // Product of the per-decision probabilities of `arch`'s choices.
  double probability_of(const arch::SpaceDef &space, const arch::Architecture &arch) const;

  double baseline() const noexcept { return baseline_; }
  bool has_baseline() const noexcept { return has_baseline_; }
  const ReinforceConfig &config() const noexcept { return config_; }

  arch::Architecture sample(const arch::SpaceDef &space, arch::Rng &rng) const;
  // One policy-gradient step for the sampled `arch` with reward `r`.
  void update(const arch::SpaceDef &space, const arch::Architecture &arch, double r);

private:
  std::vector<std::vector<double>> logits_;
  ReinforceConfig config_;
  double baseline_ = 0.0;
  bool has_baseline_ = false;
};

using PolicyObserver = std::function<void(std::size_t step, const PolicyState &)>;

SearchTrajectory reinforce(const arch::SpaceDef &space, const Evaluator &evaluator,
                           const Objective &objective, std::size_t budget,
                           const ReinforceConfig &config, arch::Rng &rng,
                           const PolicyObserver &observer = {});

struct ParetoPoint {
  double accuracy = 0.0;
  double perf = 0.0;
  std::size_t id = 0;

  bool operator==(const ParetoPoint &) const = default;
};

// True if `a` is at least as good as `b` on both axes and better on one.
bool dominates(const ParetoPoint &a, const ParetoPoint &b, PerfDirection direction);

// Non-dominated subset sorted by accuracy ascending. Points with identical
// (accuracy, perf) collapse to the lowest id.
std::vector<ParetoPoint> pareto_front(std::span<const ParetoPoint> points,
                                      PerfDirection direction);

// Front over every step of the trajectories that carries a perf value; ids
// index the concatenated step list.
std::vector<ParetoPoint> trajectory_front(std::span<const SearchTrajectory> runs,
                                          PerfDirection direction);

enum class OptimizerKind { random_search, regularized_evolution, reinforce };

std::string_view optimizer_name(OptimizerKind kind); // "RS", "RE", "REINFORCE"
OptimizerKind parse_optimizer_name(std::string_view name);

struct OptimizerSpec {
  OptimizerKind kind = OptimizerKind::random_search;
  EvolutionConfig evolution;
  ReinforceConfig reinforce;
};

SearchTrajectory run_optimizer(const arch::SpaceDef &space, const OptimizerSpec &spec,
                               const Evaluator &evaluator, const Objective &objective,
                               std::size_t budget, std::uint64_t seed);

struct CurvePoint {
  std::size_t step = 0;
  double mean_incumbent = 0.0;
  double std_incumbent = 0.0; // population std
};

struct SimulationResult {
  std::vector<SearchTrajectory> runs; // in seed order
  std::vector<CurvePoint> curve;
};

const std::vector<std::uint64_t> &default_seeds();

// Pointwise incumbent statistics; independent of run order.
std::vector<CurvePoint> aggregate(std::span<const SearchTrajectory> runs);

SimulationResult simulate_runs(const arch::SpaceDef &space, const OptimizerSpec &spec,
                               const Evaluator &evaluator, const Objective &objective,
                               std::size_t budget, std::span<const std::uint64_t> seeds,
                               Exec exec = Exec::parallel);

// Accuracy surrogate plus an optional perf surrogate. The models must outlive
// the evaluator.
Evaluator surrogate_evaluator(const arch::SpaceDef &space,
                              const surrogate::GbdtEnsemble &accuracy_model,
                              const surrogate::GbdtEnsemble *perf_model = nullptr);

void write_trajectory_csv(std::ostream &out, const SearchTrajectory &trajectory);
void write_curve_csv(std::ostream &out, std::span<const CurvePoint> curve);
void write_pareto_csv(std::ostream &out, std::span<const ParetoPoint> front,
                      std::span<const arch::Architecture> archs);

} // namespace anb::optim
