#include "anb/metrics.hpp"

#include "anb/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <vector>

namespace anb::metrics {

namespace {

void check_paired(std::span<const double> xs, std::span<const double> ys,
                  std::size_t min_size) {
  if (xs.size() != ys.size()) {
    throw ValidationError("paired vectors differ in length (" +
                          std::to_string(xs.size()) + " vs " +
                          std::to_string(ys.size()) + ")");
  }
  if (xs.size() < min_size) {
    throw ValidationError("need at least " + std::to_string(min_size) +
                          " paired values, got " + std::to_string(xs.size()));
  }
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (!std::isfinite(xs[i]) || !std::isfinite(ys[i])) {
      throw ValidationError("non-finite value at index " + std::to_string(i));
    }
  }
}

std::int64_t tied_pairs(std::int64_t run) { return run * (run - 1) / 2; }

// Sorts `values` ascending and returns the number of strict inversions.
std::int64_t merge_count(std::vector<double> &values, std::vector<double> &scratch,
                         std::size_t lo, std::size_t hi) {
  if (hi - lo < 2) {
    return 0;
  }
  const std::size_t mid = lo + (hi - lo) / 2;
  std::int64_t swaps = merge_count(values, scratch, lo, mid) +
                       merge_count(values, scratch, mid, hi);
  std::size_t i = lo;
  std::size_t j = mid;
  std::size_t k = lo;
  while (i < mid && j < hi) {
    if (values[j] < values[i]) {
      swaps += static_cast<std::int64_t>(mid - i);
      scratch[k++] = values[j++];
    } else {
      scratch[k++] = values[i++];
    }
  }
  while (i < mid) scratch[k++] = values[i++];
  while (j < hi) scratch[k++] = values[j++];
  std::copy(scratch.begin() + static_cast<std::ptrdiff_t>(lo),
            scratch.begin() + static_cast<std::ptrdiff_t>(hi),
            values.begin() + static_cast<std::ptrdiff_t>(lo));
  return swaps;
}

} // namespace

PairCounts kendall_pair_counts(std::span<const double> xs, std::span<const double> ys) {
  check_paired(xs, ys, 2);
  const std::size_t n = xs.size();

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return xs[a] < xs[b] || (xs[a] == xs[b] && ys[a] < ys[b]);
  });

  std::int64_t tied_x = 0;
  std::int64_t tied_xy = 0;
  std::int64_t run_x = 1;
  std::int64_t run_xy = 1;
  for (std::size_t i = 1; i < n; ++i) {
    const auto prev = order[i - 1];
    const auto cur = order[i];
    if (xs[cur] == xs[prev]) {
      ++run_x;
      if (ys[cur] == ys[prev]) {
        ++run_xy;
      } else {
        tied_xy += tied_pairs(run_xy);
        run_xy = 1;
      }
    } else {
      tied_x += tied_pairs(run_x);
      tied_xy += tied_pairs(run_xy);
      run_x = 1;
      run_xy = 1;
    }
  }
  tied_x += tied_pairs(run_x);
  tied_xy += tied_pairs(run_xy);

  std::vector<double> y_sorted(n);
  for (std::size_t i = 0; i < n; ++i) {
    y_sorted[i] = ys[order[i]];
  }
  std::vector<double> scratch(n);
  // Within an x-tie group ys are already ascending, so every inversion is a
  // strictly discordant pair.
  const std::int64_t discordant = merge_count(y_sorted, scratch, 0, n);

  std::int64_t tied_y = 0;
  std::int64_t run_y = 1;
  for (std::size_t i = 1; i < n; ++i) {
    if (y_sorted[i] == y_sorted[i - 1]) {
      ++run_y;
    } else {
      tied_y += tied_pairs(run_y);
      run_y = 1;
    }
  }
  tied_y += tied_pairs(run_y);

  const auto total = tied_pairs(static_cast<std::int64_t>(n));
  PairCounts counts;
  counts.discordant = discordant;
  counts.concordant = total - tied_x - tied_y + tied_xy - discordant;
  counts.ties_x_only = tied_x - tied_xy;
  counts.ties_y_only = tied_y - tied_xy;
  return counts;
}

double kendall_tau(std::span<const double> xs, std::span<const double> ys) {
  const PairCounts c = kendall_pair_counts(xs, ys);
  const std::int64_t untied = c.concordant + c.discordant;
  const std::int64_t rows = untied + c.ties_x_only;
  const std::int64_t cols = untied + c.ties_y_only;
  if (rows == 0 || cols == 0) {
    throw DegenerateInputError("kendall tau undefined: one axis is entirely tied");
  }
  return static_cast<double>(c.concordant - c.discordant) /
         std::sqrt(static_cast<double>(rows) * static_cast<double>(cols));
}

double r_squared(std::span<const double> truth, std::span<const double> pred) {
  check_paired(truth, pred, 2);
  const double mean =
      std::accumulate(truth.begin(), truth.end(), 0.0) / static_cast<double>(truth.size());
  double ss_tot = 0.0;
  double ss_res = 0.0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    ss_tot += (truth[i] - mean) * (truth[i] - mean);
    ss_res += (truth[i] - pred[i]) * (truth[i] - pred[i]);
  }
  if (ss_tot == 0.0) {
    throw DegenerateInputError("r_squared undefined for constant truth");
  }
  return 1.0 - ss_res / ss_tot;
}

double mean_abs_error(std::span<const double> truth, std::span<const double> pred) {
  check_paired(truth, pred, 1);
  double sum = 0.0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    sum += std::abs(truth[i] - pred[i]);
  }
  return sum / static_cast<double>(truth.size());
}

} // namespace anb::metrics
