#pragma once

#include "anb/archspace.hpp"
#include "anb/parallel.hpp"

#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace anb::proxy {

// A training recipe: batch size, epoch budget and a progressive-resizing
// schedule that grows the input resolution from `start_resolution` at epoch
// `resize_start_epoch` to `finish_resolution` at `resize_finish_epoch`.
struct TrainingScheme {
  int batch_size = 256;
  int total_epochs = 90;
  int resize_start_epoch = 0;
  int resize_finish_epoch = 0;
  int start_resolution = 224;
  int finish_resolution = 224;

  // 0 <= e_s <= e_f <= e_t, 0 < res_s <= res_f, b > 0, e_t > 0.
  bool is_valid() const noexcept;
  void validate() const;
  // Input resolution used during `epoch` (1-based).
  double resolution_at(int epoch) const;

  auto operator<=>(const TrainingScheme &) const = default;
};

std::string to_string(const TrainingScheme &scheme);

// High-fidelity recipe the proxies are ranked against.
TrainingScheme reference_scheme();

// Candidate values per hyperparameter. Expanded in declaration order with
// the last field varying fastest.
struct SchemeGrid {
  std::vector<int> batch_sizes{128, 256, 512};
  std::vector<int> total_epochs{10, 15, 20};
  std::vector<int> resize_start_epochs{0, 4};
  std::vector<int> resize_finish_epochs{8, 12};
  std::vector<int> start_resolutions{128, 160};
  std::vector<int> finish_resolutions{192, 224};

  // Valid schemes only, in grid order.
  std::vector<TrainingScheme> schemes() const;
};

struct TrainingOutcome {
  double accuracy = 0.0;
  double train_hours = 0.0;
};

// Stands in for training one architecture with one recipe. Implementations
// must be deterministic in (arch, scheme, seed) and safe to call
// concurrently.
class TrainerOracle {
public:
  virtual ~TrainerOracle() = default;
  virtual TrainingOutcome evaluate(const arch::Architecture &arch,
                                   const TrainingScheme &scheme,
                                   std::uint64_t seed) const = 0;
};

// Constants of the analytic desk-scale trainer.
struct SyntheticOracleParams {
  // Weights of the normalised log-FLOPs, log-params, SE-count and kernel-sum
  // terms (each mapped to [-1, 1] over the space) inside the sigmoid.
  double flops_weight = 3.0;
  double params_weight = -1.0;
  double se_weight = 0.4;
  double kernel_weight = 0.4;
  double accuracy_floor = 0.60;
  double accuracy_ceiling = 0.80;

  double epoch_underfit = 0.5;      // c1
  double resolution_underfit = 0.1; // c2
  double noise_epoch_factor = 30.0; // c3
  double noise = 0.001;             // per-run std at infinite epochs

  int reference_epochs = 90;
  int reference_resolution = 224;

  double hours_per_step = 4.0e-5; // one step at the reference resolution
  double samples_per_epoch = 1281167.0;
};

class SyntheticOracle final : public TrainerOracle {
public:
  explicit SyntheticOracle(arch::SpaceDef space, SyntheticOracleParams params = {});

  // Noise-free accuracy under the reference recipe, in [floor, ceiling].
  double true_accuracy(const arch::Architecture &arch) const;
  // Accuracy lost to fewer epochs and a lower final resolution.
  double underfit(const TrainingScheme &scheme) const;
  double noise_std(const TrainingScheme &scheme) const;
  double train_hours(const TrainingScheme &scheme) const;

  TrainingOutcome evaluate(const arch::Architecture &arch, const TrainingScheme &scheme,
                           std::uint64_t seed) const override;

  const arch::SpaceDef &space() const noexcept { return space_; }
  const SyntheticOracleParams &params() const noexcept { return params_; }

private:
  arch::SpaceDef space_;
  SyntheticOracleParams params_;
  double log_flops_lo_ = 0.0;
  double log_flops_hi_ = 1.0;
  double log_params_lo_ = 0.0;
  double log_params_hi_ = 1.0;
  int kernel_lo_ = 0;
  int kernel_hi_ = 1;
};

struct EarlyStop {
  double tau_min = 1.0;
  double t_max_hours = 0.0;
};

struct SchemeEvaluation {
  std::size_t scheme_id = 0;
  TrainingScheme scheme;
  double tau = 0.0; // NaN when the proxied accuracies are all tied
  double mean_hours = 0.0;
  bool feasible = false;
  std::vector<double> accuracies;
};

struct ProxySearchResult {
  std::size_t best_index = 0; // into `table`
  TrainingScheme best_scheme;
  double tau = 0.0;
  double mean_hours = 0.0;
  bool early_stopped = false;
  std::vector<SchemeEvaluation> table; // grid order
};

struct GridSearchOptions {
  double t_spec_hours = 3.0;
  std::optional<EarlyStop> early_stop;
  std::uint64_t seed = 0;
};

// Maximises Kendall tau between proxied and reference accuracies subject to
// mean train hours <= t_spec. Ties go to the smaller mean time, then the
// earlier grid entry. With early stopping, evaluation ends at the first grid
// entry meeting both thresholds and the best evaluated scheme is returned.
// Throws InfeasibleError if no scheme fits the budget.
ProxySearchResult grid_search(std::span<const TrainingScheme> schemes,
                              std::span<const arch::Architecture> models,
                              std::span<const double> reference_accuracies,
                              const TrainerOracle &oracle, const GridSearchOptions &options,
                              Exec exec = Exec::parallel);

ProxySearchResult grid_search(const SchemeGrid &grid, std::span<const arch::Architecture> models,
                              std::span<const double> reference_accuracies,
                              const TrainerOracle &oracle, const GridSearchOptions &options,
                              Exec exec = Exec::parallel);

std::vector<double> reference_accuracies(std::span<const arch::Architecture> models,
                                         const TrainingScheme &reference,
                                         const TrainerOracle &oracle, std::uint64_t seed);

struct ValidationRow {
  arch::Architecture arch;
  double mean_proxy = 0.0;
  double mean_reference = 0.0;
  std::vector<double> proxy_runs;
  std::vector<double> reference_runs;
};

struct ValidationReport {
  double tau = 0.0;
  std::vector<ValidationRow> rows;
};

// Trains `count` fresh random architectures `repeats` times under both
// schemes and rank-correlates the mean accuracies.
ValidationReport validate_scheme(const arch::SpaceDef &space, const TrainingScheme &scheme,
                                 const TrainingScheme &reference, std::size_t count,
                                 std::size_t repeats, const TrainerOracle &oracle,
                                 std::uint64_t seed, Exec exec = Exec::parallel);

// Mean reference hours over mean proxied hours.
double speedup(const TrainingScheme &proxy, const TrainingScheme &reference,
               std::span<const arch::Architecture> models, const TrainerOracle &oracle,
               std::uint64_t seed = 0);

} // namespace anb::proxy
