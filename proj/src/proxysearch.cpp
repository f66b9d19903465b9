#include "anb/proxysearch.hpp"

#include "anb/errors.hpp"
#include "anb/metrics.hpp"
#include "anb/seeding.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <numeric>
#include <random>
#include <sstream>

namespace anb::proxy {

bool TrainingScheme::is_valid() const noexcept {
  return batch_size > 0 && total_epochs > 0 && resize_start_epoch >= 0 &&
         resize_start_epoch <= resize_finish_epoch && resize_finish_epoch <= total_epochs &&
         start_resolution > 0 && start_resolution <= finish_resolution;
}

void TrainingScheme::validate() const {
  if (!is_valid()) {
    throw ValidationError("invalid training scheme " + to_string(*this) +
                          " (need 0 <= e_s <= e_f <= e_t, 0 < res_s <= res_f, b > 0)");
  }
}

double TrainingScheme::resolution_at(int epoch) const {
  if (epoch <= resize_start_epoch) {
    return start_resolution;
  }
  if (epoch >= resize_finish_epoch) {
    return finish_resolution;
  }
  const double t = static_cast<double>(epoch - resize_start_epoch) /
                   static_cast<double>(resize_finish_epoch - resize_start_epoch);
  return start_resolution + t * (finish_resolution - start_resolution);
}

std::string to_string(const TrainingScheme &s) {
  std::ostringstream out;
  out << "{b=" << s.batch_size << ", e_t=" << s.total_epochs << ", e_s=" << s.resize_start_epoch
      << ", e_f=" << s.resize_finish_epoch << ", res_s=" << s.start_resolution
      << ", res_f=" << s.finish_resolution << "}";
  return out.str();
}

TrainingScheme reference_scheme() { return TrainingScheme{256, 90, 0, 0, 224, 224}; }

std::vector<TrainingScheme> SchemeGrid::schemes() const {
  std::vector<TrainingScheme> out;
  for (int b : batch_sizes)
    for (int et : total_epochs)
      for (int es : resize_start_epochs)
        for (int ef : resize_finish_epochs)
          for (int rs : start_resolutions)
            for (int rf : finish_resolutions) {
              TrainingScheme s{b, et, es, ef, rs, rf};
              if (s.is_valid()) out.push_back(s);
            }
  return out;
}

SyntheticOracle::SyntheticOracle(arch::SpaceDef space, SyntheticOracleParams params)
    : space_(std::move(space)), params_(params) {
  space_.validate();
  if (!(params_.accuracy_floor < params_.accuracy_ceiling) || params_.accuracy_floor < 0.0 ||
      params_.accuracy_ceiling > 1.0) {
    throw ValidationError("oracle accuracy range must satisfy 0 <= floor < ceiling <= 1");
  }
  if (params_.noise < 0.0 || params_.reference_epochs <= 0 ||
      params_.reference_resolution <= 0 || params_.hours_per_step <= 0.0 ||
      params_.samples_per_epoch <= 0.0) {
    throw ValidationError("oracle fidelity parameters must be positive");
  }

  // Cost is monotone in every decision, so the extremes sit at the smallest
  // and largest value of each set.
  arch::Architecture smallest;
  arch::Architecture largest;
  smallest.blocks.resize(static_cast<std::size_t>(space_.num_blocks));
  largest.blocks.resize(static_cast<std::size_t>(space_.num_blocks));
  const auto lo_e = *std::min_element(space_.expansions.begin(), space_.expansions.end());
  const auto hi_e = *std::max_element(space_.expansions.begin(), space_.expansions.end());
  const auto lo_k = *std::min_element(space_.kernels.begin(), space_.kernels.end());
  const auto hi_k = *std::max_element(space_.kernels.begin(), space_.kernels.end());
  const auto lo_l = *std::min_element(space_.layer_counts.begin(), space_.layer_counts.end());
  const auto hi_l = *std::max_element(space_.layer_counts.begin(), space_.layer_counts.end());
  const bool lo_se = std::find(space_.se_options.begin(), space_.se_options.end(), false) ==
                     space_.se_options.end();
  const bool hi_se = std::find(space_.se_options.begin(), space_.se_options.end(), true) !=
                     space_.se_options.end();
  for (auto &b : smallest.blocks) b = {lo_e, lo_k, lo_l, lo_se};
  for (auto &b : largest.blocks) b = {hi_e, hi_k, hi_l, hi_se};
  const auto lo = arch::flops_params(space_, smallest, space_.base_resolution);
  const auto hi = arch::flops_params(space_, largest, space_.base_resolution);
  log_flops_lo_ = std::log(static_cast<double>(lo.macs));
  log_flops_hi_ = std::log(static_cast<double>(hi.macs));
  log_params_lo_ = std::log(static_cast<double>(lo.params));
  log_params_hi_ = std::log(static_cast<double>(hi.params));
  kernel_lo_ = lo_k * space_.num_blocks;
  kernel_hi_ = hi_k * space_.num_blocks;
}

namespace {

// Maps value in [lo, hi] onto [-1, 1]; a degenerate range maps to 0.
double centred(double value, double lo, double hi) {
  if (hi <= lo) return 0.0;
  return 2.0 * (value - lo) / (hi - lo) - 1.0;
}

} // namespace

double SyntheticOracle::true_accuracy(const arch::Architecture &arch) const {
  const auto cost = arch::flops_params(space_, arch, space_.base_resolution);
  const double flops = centred(std::log(static_cast<double>(cost.macs)), log_flops_lo_,
                               log_flops_hi_);
  const double params = centred(std::log(static_cast<double>(cost.params)), log_params_lo_,
                                log_params_hi_);
  const double se = centred(arch::se_count(arch), 0.0, space_.num_blocks);
  const double kernel = centred(arch::kernel_sum(arch), kernel_lo_, kernel_hi_);
  const double z = params_.flops_weight * flops + params_.params_weight * params +
                   params_.se_weight * se + params_.kernel_weight * kernel;
  const double sigmoid = 1.0 / (1.0 + std::exp(-z));
  return params_.accuracy_floor + (params_.accuracy_ceiling - params_.accuracy_floor) * sigmoid;
}

double SyntheticOracle::underfit(const TrainingScheme &scheme) const {
  const double epochs = std::max(
      0.0, 1.0 / scheme.total_epochs - 1.0 / static_cast<double>(params_.reference_epochs));
  const double resolution =
      std::max(0.0, 1.0 - static_cast<double>(scheme.finish_resolution) /
                              static_cast<double>(params_.reference_resolution));
  return params_.epoch_underfit * epochs + params_.resolution_underfit * resolution;
}

double SyntheticOracle::noise_std(const TrainingScheme &scheme) const {
  return params_.noise * (1.0 + params_.noise_epoch_factor / scheme.total_epochs);
}

double SyntheticOracle::train_hours(const TrainingScheme &scheme) const {
  const double steps = params_.samples_per_epoch / scheme.batch_size;
  double hours = 0.0;
  for (int epoch = 1; epoch <= scheme.total_epochs; ++epoch) {
    const double r = scheme.resolution_at(epoch) / params_.reference_resolution;
    hours += params_.hours_per_step * r * r * steps;
  }
  return hours;
}

TrainingOutcome SyntheticOracle::evaluate(const arch::Architecture &arch,
                                          const TrainingScheme &scheme,
                                          std::uint64_t seed) const {
  scheme.validate();
  TrainingOutcome out;
  double accuracy = true_accuracy(arch) - underfit(scheme);
  if (params_.noise > 0.0) {
    // Batch size is not part of the noise key.
    std::uint64_t key = hash_values(seed, {static_cast<std::uint64_t>(scheme.total_epochs),
                                           static_cast<std::uint64_t>(scheme.resize_start_epoch),
                                           static_cast<std::uint64_t>(scheme.resize_finish_epoch),
                                           static_cast<std::uint64_t>(scheme.start_resolution),
                                           static_cast<std::uint64_t>(scheme.finish_resolution)});
    for (std::size_t d = 0; d < space_.num_decisions(); ++d) {
      key = mix_seed(key, arch::choice_index(space_, arch, d) + 8 * d);
    }
    std::mt19937_64 rng(key);
    std::normal_distribution<double> gauss(0.0, noise_std(scheme));
    accuracy += gauss(rng);
  }
  out.accuracy = std::clamp(accuracy, 0.0, 1.0);
  out.train_hours = train_hours(scheme);
  return out;
}

namespace {

SchemeEvaluation evaluate_scheme(std::size_t id, const TrainingScheme &scheme,
                                 std::span<const arch::Architecture> models,
                                 std::span<const double> reference, const TrainerOracle &oracle,
                                 const GridSearchOptions &options) {
  SchemeEvaluation row;
  row.scheme_id = id;
  row.scheme = scheme;
  row.accuracies.reserve(models.size());
  double hours = 0.0;
  for (const auto &model : models) {
    const auto outcome = oracle.evaluate(model, scheme, options.seed);
    row.accuracies.push_back(outcome.accuracy);
    hours += outcome.train_hours;
  }
  row.mean_hours = hours / static_cast<double>(models.size());
  try {
    row.tau = metrics::kendall_tau(row.accuracies, reference);
  } catch (const DegenerateInputError &) {
    row.tau = std::numeric_limits<double>::quiet_NaN();
  }
  row.feasible = row.mean_hours <= options.t_spec_hours;
  return row;
}

bool meets_early_stop(const SchemeEvaluation &row, const GridSearchOptions &options) {
  return options.early_stop && row.feasible && row.tau >= options.early_stop->tau_min &&
         row.mean_hours <= options.early_stop->t_max_hours;
}

} // namespace

ProxySearchResult grid_search(std::span<const TrainingScheme> schemes,
                              std::span<const arch::Architecture> models,
                              std::span<const double> reference_accuracies,
                              const TrainerOracle &oracle, const GridSearchOptions &options,
                              Exec exec) {
  if (models.size() < 2 || models.size() != reference_accuracies.size()) {
    throw ValidationError("grid search needs n >= 2 models with one reference accuracy each");
  }
  if (schemes.empty()) {
    throw ValidationError("scheme grid is empty after removing invalid schemes");
  }
  for (const auto &s : schemes) s.validate();

  const std::size_t count = schemes.size();
  std::vector<SchemeEvaluation> rows(count);
  constexpr std::size_t none = static_cast<std::size_t>(-1);
  std::size_t stop_at = none;

  if (exec == Exec::parallel) {
    std::atomic<std::size_t> stop{none};
    std::vector<std::exception_ptr> errors(count);
    const auto n = static_cast<std::ptrdiff_t>(count);
#pragma omp parallel for schedule(dynamic, 1)
    for (std::ptrdiff_t i = 0; i < n; ++i) {
      const auto idx = static_cast<std::size_t>(i);
      if (idx > stop.load()) continue;
      try {
        rows[idx] =
            evaluate_scheme(idx, schemes[idx], models, reference_accuracies, oracle, options);
      } catch (...) {
        errors[idx] = std::current_exception();
        continue;
      }
      if (meets_early_stop(rows[idx], options)) {
        std::size_t current = stop.load();
        while (idx < current && !stop.compare_exchange_weak(current, idx)) {
        }
      }
    }
    stop_at = stop.load();
    // Same error the serial loop would raise: the first failing scheme before the stop.
    for (std::size_t idx = 0; idx < count && idx <= stop_at; ++idx) {
      if (errors[idx]) std::rethrow_exception(errors[idx]);
    }
  } else {
    for (std::size_t idx = 0; idx < count; ++idx) {
      rows[idx] = evaluate_scheme(idx, schemes[idx], models, reference_accuracies, oracle, options);
      if (meets_early_stop(rows[idx], options)) {
        stop_at = idx;
        break;
      }
    }
  }
  if (stop_at != none) {
    rows.resize(stop_at + 1);
  }

  ProxySearchResult result;
  result.early_stopped = stop_at != none;
  std::size_t best = none;
  double min_hours = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto &row = rows[i];
    min_hours = std::min(min_hours, row.mean_hours);
    if (!row.feasible) continue;
    // An undefined tau ranks below every defined one.
    auto rank = [](double tau) { return std::isnan(tau) ? -2.0 : tau; };
    if (best == none || rank(row.tau) > rank(rows[best].tau) ||
        (rank(row.tau) == rank(rows[best].tau) && row.mean_hours < rows[best].mean_hours)) {
      best = i;
    }
  }
  if (best == none) {
    std::ostringstream msg;
    msg << "no training scheme fits t_spec = " << options.t_spec_hours
        << " h; the fastest scheme needs " << min_hours << " h";
    throw InfeasibleError(msg.str(), min_hours);
  }
  result.best_index = best;
  result.best_scheme = rows[best].scheme;
  result.tau = rows[best].tau;
  result.mean_hours = rows[best].mean_hours;
  result.table = std::move(rows);
  return result;
}

ProxySearchResult grid_search(const SchemeGrid &grid, std::span<const arch::Architecture> models,
                              std::span<const double> reference_accuracies,
                              const TrainerOracle &oracle, const GridSearchOptions &options,
                              Exec exec) {
  const auto schemes = grid.schemes();
  return grid_search(schemes, models, reference_accuracies, oracle, options, exec);
}

std::vector<double> reference_accuracies(std::span<const arch::Architecture> models,
                                         const TrainingScheme &reference,
                                         const TrainerOracle &oracle, std::uint64_t seed) {
  std::vector<double> out;
  out.reserve(models.size());
  for (const auto &m : models) {
    out.push_back(oracle.evaluate(m, reference, seed).accuracy);
  }
  return out;
}

ValidationReport validate_scheme(const arch::SpaceDef &space, const TrainingScheme &scheme,
                                 const TrainingScheme &reference, std::size_t count,
                                 std::size_t repeats, const TrainerOracle &oracle,
                                 std::uint64_t seed, Exec exec) {
  if (count < 2) throw ValidationError("validation needs at least 2 architectures");
  if (repeats < 1) throw ValidationError("validation needs at least 1 repeat");
  scheme.validate();
  reference.validate();

  arch::Rng rng(seed);
  ValidationReport report;
  report.rows.resize(count);
  for (auto &row : report.rows) {
    row.arch = arch::sample_uniform(space, rng);
  }
  auto run_row = [&](ValidationRow &row) {
    row.proxy_runs.resize(repeats);
    row.reference_runs.resize(repeats);
    for (std::size_t r = 0; r < repeats; ++r) {
      const std::uint64_t run_seed = mix_seed(seed, r);
      row.proxy_runs[r] = oracle.evaluate(row.arch, scheme, run_seed).accuracy;
      row.reference_runs[r] = oracle.evaluate(row.arch, reference, run_seed).accuracy;
    }
    row.mean_proxy = std::accumulate(row.proxy_runs.begin(), row.proxy_runs.end(), 0.0) /
                     static_cast<double>(repeats);
    row.mean_reference =
        std::accumulate(row.reference_runs.begin(), row.reference_runs.end(), 0.0) /
        static_cast<double>(repeats);
  };
  const auto n = static_cast<std::ptrdiff_t>(count);
  if (exec == Exec::parallel) {
    std::vector<std::exception_ptr> errors(count);
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < n; ++i) {
      const auto idx = static_cast<std::size_t>(i);
      try {
        run_row(report.rows[idx]);
      } catch (...) {
        errors[idx] = std::current_exception();
      }
    }
    for (const auto &e : errors) {
      if (e) std::rethrow_exception(e);
    }
  } else {
    for (auto &row : report.rows) run_row(row);
  }

  std::vector<double> proxy(count);
  std::vector<double> ref(count);
  for (std::size_t i = 0; i < count; ++i) {
    proxy[i] = report.rows[i].mean_proxy;
    ref[i] = report.rows[i].mean_reference;
  }
  report.tau = metrics::kendall_tau(proxy, ref);
  return report;
}

double speedup(const TrainingScheme &proxy, const TrainingScheme &reference,
               std::span<const arch::Architecture> models, const TrainerOracle &oracle,
               std::uint64_t seed) {
  if (models.empty()) throw ValidationError("speedup needs at least one model");
  double proxy_hours = 0.0;
  double reference_hours = 0.0;
  for (const auto &m : models) {
    proxy_hours += oracle.evaluate(m, proxy, seed).train_hours;
    reference_hours += oracle.evaluate(m, reference, seed).train_hours;
  }
  if (proxy_hours == 0.0) {
    throw DegenerateInputError("proxied scheme has zero training time");
  }
  return reference_hours / proxy_hours;
}

} // namespace anb::proxy
