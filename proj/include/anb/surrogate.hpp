#pragma once

#include "anb/archspace.hpp"
#include "anb/data.hpp"
#include "anb/parallel.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace anb::surrogate {

// Dense row-major feature matrix.
class FeatureMatrix {
public:
  FeatureMatrix() = default;
  FeatureMatrix(std::size_t rows, std::size_t cols)
      : rows_(rows), cols_(cols), values_(rows * cols, 0.0) {}

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  double operator()(std::size_t r, std::size_t c) const { return values_[r * cols_ + c]; }
  double &operator()(std::size_t r, std::size_t c) { return values_[r * cols_ + c]; }
  std::span<const double> row(std::size_t r) const {
    return {values_.data() + r * cols_, cols_};
  }
  std::span<double> row(std::size_t r) { return {values_.data() + r * cols_, cols_}; }

private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> values_;
};

FeatureMatrix encode_all(const arch::SpaceDef &space,
                         std::span<const arch::Architecture> archs);

// Internal nodes send `x[feature] < threshold` left. Leaves have feature -1.
struct TreeNode {
  int feature = -1;
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  double value = 0.0;

  bool is_leaf() const noexcept { return feature < 0; }
  bool operator==(const TreeNode &) const = default;
};

class RegressionTree {
public:
  RegressionTree() = default;
  explicit RegressionTree(std::vector<TreeNode> nodes);

  double predict(std::span<const double> features) const;
  const std::vector<TreeNode> &nodes() const noexcept { return nodes_; }
  int depth() const;
  std::vector<int> split_features() const;

  // Children come after their parent, every non-root node has exactly one
  // parent, feature indices are below `feature_dim`. Throws FormatError.
  void check_well_formed(std::size_t feature_dim) const;

  bool operator==(const RegressionTree &) const = default;

private:
  std::vector<TreeNode> nodes_;
};

struct FitConfig {
  int n_trees = 300;
  int max_depth = 5;
  double learning_rate = 0.1;
  int min_samples_leaf = 5;
  double subsample_rows = 1.0;
  double subsample_features = 1.0;
  std::uint64_t seed = 0;

  // Throws ValidationError for out-of-range values.
  void validate() const;
  bool operator==(const FitConfig &) const = default;
};

class GbdtEnsemble {
public:
  GbdtEnsemble() = default;
  GbdtEnsemble(std::string metric_name, std::size_t feature_dim, double base_score,
               double learning_rate, std::vector<RegressionTree> trees);

  const std::string &metric_name() const noexcept { return metric_name_; }
  std::size_t feature_dim() const noexcept { return feature_dim_; }
  double base_score() const noexcept { return base_score_; }
  double learning_rate() const noexcept { return learning_rate_; }
  const std::vector<RegressionTree> &trees() const noexcept { return trees_; }

  // base_score + learning_rate * sum of tree outputs. Throws ValidationError
  // on a dimension mismatch.
  double predict(std::span<const double> features) const;
  std::vector<double> predict_batch(const FeatureMatrix &features,
                                    Exec exec = Exec::parallel) const;
  double predict(const arch::SpaceDef &space, const arch::Architecture &arch) const;

  // Prediction using only the first `n_trees` trees.
  double predict_prefix(std::span<const double> features, std::size_t n_trees) const;

  bool operator==(const GbdtEnsemble &) const = default;

private:
  void check_dim(std::size_t dim) const;

  std::string metric_name_;
  std::size_t feature_dim_ = 0;
  double base_score_ = 0.0;
  double learning_rate_ = 1.0;
  std::vector<RegressionTree> trees_;
};

// Least-squares boosting with exact greedy variance-reduction splits.
// Single threaded and deterministic given `config.seed`.
GbdtEnsemble fit(const FeatureMatrix &features, std::span<const double> targets,
                 const FitConfig &config, std::string metric_name = {});

struct FitReport {
  // Undefined (empty) only when the evaluated split has a single record.
  std::optional<double> r2;
  std::optional<double> tau;
  double mae = 0.0;
};

FitReport evaluate(const GbdtEnsemble &model, const FeatureMatrix &features,
                   std::span<const double> targets);

// Dataset-level helpers. The dataset must carry split tags.
struct SplitData {
  FeatureMatrix features;
  std::vector<double> targets;
};
SplitData gather(const arch::SpaceDef &space, const data::MetricDataset &ds,
                 data::Split split);

GbdtEnsemble fit(const arch::SpaceDef &space, const data::MetricDataset &ds,
                 const FitConfig &config);
FitReport evaluate(const GbdtEnsemble &model, const arch::SpaceDef &space,
                   const data::MetricDataset &ds, data::Split split = data::Split::test);

// Candidate values searched by `tune`.
struct TuneGrid {
  std::vector<int> n_trees{100, 300, 1000};
  std::vector<int> max_depth{3, 5, 7, 9};
  std::vector<double> learning_rate{0.03, 0.1, 0.3};
  std::vector<int> min_samples_leaf{1, 5, 20};
  std::vector<double> subsample_rows{0.7, 1.0};
  std::vector<double> subsample_features{0.7, 1.0};

  std::size_t size() const;
  FitConfig at(std::size_t index) const;
};

struct TuneTrial {
  FitConfig config;
  double val_tau = 0.0;
  double val_mae = 0.0;
};

struct TuneResult {
  FitConfig best;
  double val_tau = 0.0;
  double val_mae = 0.0;
  std::vector<TuneTrial> trials; // in draw order
};

// Seeded random search (draws without replacement) over `grid`, fitting on
// the train split and scoring Kendall tau on the val split. Ties go to lower
// val MAE, then the earlier draw. Trials may run concurrently.
TuneResult tune(const arch::SpaceDef &space, const data::MetricDataset &ds,
                std::size_t budget, std::uint64_t seed, const TuneGrid &grid = {},
                Exec exec = Exec::parallel);

inline constexpr int kModelFormatVersion = 1;

std::string serialize_model(const GbdtEnsemble &model);
GbdtEnsemble parse_model(std::string_view text);
void save(const GbdtEnsemble &model, const std::filesystem::path &path);
GbdtEnsemble load(const std::filesystem::path &path);

namespace serial {
// Reference row loop behind `GbdtEnsemble::predict_batch`.
std::vector<double> predict_batch(const GbdtEnsemble &model, const FeatureMatrix &features);
} // namespace serial

} // namespace anb::surrogate
