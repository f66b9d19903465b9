#pragma once

#include <cstdint>
#include <span>

namespace anb::metrics {

// Pair classification behind tau-b. Pairs tied in both coordinates are
// counted in neither tie bucket.
struct PairCounts {
  std::int64_t concordant = 0;
  std::int64_t discordant = 0;
  std::int64_t ties_x_only = 0;
  std::int64_t ties_y_only = 0;
};

// O(n log n): sort by (x, y), then count y-inversions with a merge sort.
// Throws ValidationError for n < 2, unequal lengths or non-finite values.
PairCounts kendall_pair_counts(std::span<const double> xs, std::span<const double> ys);

// Tie-corrected Kendall tau-b in [-1, 1]. Throws DegenerateInputError when
// either axis is entirely tied.
double kendall_tau(std::span<const double> xs, std::span<const double> ys);

// Coefficient of determination 1 - SS_res / SS_tot. Throws
// DegenerateInputError when `truth` is constant.
double r_squared(std::span<const double> truth, std::span<const double> pred);

double mean_abs_error(std::span<const double> truth, std::span<const double> pred);

} // namespace anb::metrics
