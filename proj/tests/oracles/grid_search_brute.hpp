#pragma once

// Exhaustive scheme enumeration, independent of grid_search. Test use only.

#include "kendall_quadratic.hpp"

#include "anb/proxysearch.hpp"

#include <cmath>
#include <optional>
#include <vector>

namespace anb::oracle {

struct BruteResult {
  proxy::TrainingScheme scheme;
  double tau = 0.0;
  double mean_hours = 0.0;
};

inline std::optional<BruteResult> brute_force_search(const proxy::SchemeGrid &grid,
                                                     const std::vector<arch::Architecture> &models,
                                                     const std::vector<double> &ref,
                                                     const proxy::TrainerOracle &oracle,
                                                     double t_spec, std::uint64_t seed) {
  std::optional<BruteResult> best;
  double best_rank = 0.0;
  for (int b : grid.batch_sizes)
    for (int et : grid.total_epochs)
      for (int es : grid.resize_start_epochs)
        for (int ef : grid.resize_finish_epochs)
          for (int rs : grid.start_resolutions)
            for (int rf : grid.finish_resolutions) {
              if (!(b > 0 && et > 0 && 0 <= es && es <= ef && ef <= et && 0 < rs && rs <= rf)) {
                continue;
              }
              const proxy::TrainingScheme s{b, et, es, ef, rs, rf};
              std::vector<double> acc;
              double hours = 0.0;
              for (const auto &m : models) {
                const auto o = oracle.evaluate(m, s, seed);
                acc.push_back(o.accuracy);
                hours += o.train_hours;
              }
              hours /= static_cast<double>(models.size());
              if (hours > t_spec) continue;
              const double raw = kendall_tau_quadratic(acc, ref);
              // Undefined tau ranks below every defined value.
              const double rank = std::isnan(raw) ? -2.0 : raw;
              // Strict improvements only, so the earliest grid entry wins full ties.
              if (!best || rank > best_rank || (rank == best_rank && hours < best->mean_hours)) {
                best = BruteResult{s, raw, hours};
                best_rank = rank;
              }
            }
  return best;
}

} // namespace anb::oracle
