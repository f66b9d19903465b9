#include "anb/surrogate.hpp"

#include "anb/errors.hpp"
#include "anb/metrics.hpp"
#include "anb/seeding.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <random>
#include <sstream>

namespace anb::surrogate {

using ordered_json = nlohmann::ordered_json;

namespace {

// Mean computed around the first element, so a constant input returns that
// constant exactly.
template <typename Values>
double shifted_mean(const Values &values) {
  const double shift = values.front();
  double sum = 0.0;
  for (double v : values) {
    sum += v - shift;
  }
  return shift + sum / static_cast<double>(values.size());
}

[[noreturn]] void malformed(const std::string &message) {
  throw FormatError(FormatError::Kind::malformed, message);
}

} // namespace

FeatureMatrix encode_all(const arch::SpaceDef &space,
                         std::span<const arch::Architecture> archs) {
  FeatureMatrix out(archs.size(), space.feature_dim());
  for (std::size_t i = 0; i < archs.size(); ++i) {
    const auto code = arch::encode(space, archs[i]);
    std::copy(code.begin(), code.end(), out.row(i).begin());
  }
  return out;
}

RegressionTree::RegressionTree(std::vector<TreeNode> nodes) : nodes_(std::move(nodes)) {}

double RegressionTree::predict(std::span<const double> features) const {
  std::size_t node = 0;
  while (!nodes_[node].is_leaf()) {
    const auto &n = nodes_[node];
    node = static_cast<std::size_t>(
        features[static_cast<std::size_t>(n.feature)] < n.threshold ? n.left : n.right);
  }
  return nodes_[node].value;
}

int RegressionTree::depth() const {
  std::vector<int> depth(nodes_.size(), 0);
  int deepest = 0;
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    const auto &n = nodes_[i];
    deepest = std::max(deepest, depth[i]);
    if (!n.is_leaf()) {
      depth[static_cast<std::size_t>(n.left)] = depth[i] + 1;
      depth[static_cast<std::size_t>(n.right)] = depth[i] + 1;
    }
  }
  return deepest;
}

std::vector<int> RegressionTree::split_features() const {
  std::vector<int> out;
  for (const auto &n : nodes_) {
    if (!n.is_leaf()) out.push_back(n.feature);
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

void RegressionTree::check_well_formed(std::size_t feature_dim) const {
  if (nodes_.empty()) {
    malformed("tree has no nodes");
  }
  const auto size = static_cast<int>(nodes_.size());
  std::vector<int> parents(nodes_.size(), 0);
  for (int i = 0; i < size; ++i) {
    const auto &n = nodes_[static_cast<std::size_t>(i)];
    if (n.is_leaf()) {
      if (n.feature != -1 || n.left != -1 || n.right != -1) {
        malformed("node " + std::to_string(i) + ": leaf with children");
      }
      if (!std::isfinite(n.value)) {
        malformed("node " + std::to_string(i) + ": non-finite leaf value");
      }
      continue;
    }
    if (static_cast<std::size_t>(n.feature) >= feature_dim) {
      malformed("node " + std::to_string(i) + ": split feature " +
                std::to_string(n.feature) + " out of range");
    }
    if (!std::isfinite(n.threshold)) {
      malformed("node " + std::to_string(i) + ": non-finite threshold");
    }
    for (int child : {n.left, n.right}) {
      if (child <= i || child >= size) {
        malformed("node " + std::to_string(i) + ": child index " + std::to_string(child) +
                  " out of range");
      }
      ++parents[static_cast<std::size_t>(child)];
    }
  }
  for (int i = 1; i < size; ++i) {
    if (parents[static_cast<std::size_t>(i)] != 1) {
      malformed("node " + std::to_string(i) + " is referenced " +
                std::to_string(parents[static_cast<std::size_t>(i)]) + " times");
    }
  }
}

void FitConfig::validate() const {
  if (n_trees < 0) throw ValidationError("n_trees must be >= 0");
  if (max_depth < 0) throw ValidationError("max_depth must be >= 0");
  if (!(learning_rate > 0.0 && learning_rate <= 1.0)) {
    throw ValidationError("learning_rate must lie in (0, 1]");
  }
  if (min_samples_leaf < 1) throw ValidationError("min_samples_leaf must be >= 1");
  if (!(subsample_rows > 0.0 && subsample_rows <= 1.0)) {
    throw ValidationError("subsample_rows must lie in (0, 1]");
  }
  if (!(subsample_features > 0.0 && subsample_features <= 1.0)) {
    throw ValidationError("subsample_features must lie in (0, 1]");
  }
}

GbdtEnsemble::GbdtEnsemble(std::string metric_name, std::size_t feature_dim,
                           double base_score, double learning_rate,
                           std::vector<RegressionTree> trees)
    : metric_name_(std::move(metric_name)), feature_dim_(feature_dim),
      base_score_(base_score), learning_rate_(learning_rate), trees_(std::move(trees)) {}

void GbdtEnsemble::check_dim(std::size_t dim) const {
  if (dim != feature_dim_) {
    throw ValidationError("feature vector has length " + std::to_string(dim) +
                          ", model expects " + std::to_string(feature_dim_));
  }
}

double GbdtEnsemble::predict_prefix(std::span<const double> features,
                                    std::size_t n_trees) const {
  check_dim(features.size());
  double out = base_score_;
  const std::size_t count = std::min(n_trees, trees_.size());
  for (std::size_t t = 0; t < count; ++t) {
    out += learning_rate_ * trees_[t].predict(features);
  }
  return out;
}

double GbdtEnsemble::predict(std::span<const double> features) const {
  return predict_prefix(features, trees_.size());
}

double GbdtEnsemble::predict(const arch::SpaceDef &space,
                             const arch::Architecture &arch) const {
  const auto code = arch::encode(space, arch);
  return predict(code);
}

std::vector<double> GbdtEnsemble::predict_batch(const FeatureMatrix &features,
                                                Exec exec) const {
  if (exec == Exec::serial) {
    return serial::predict_batch(*this, features);
  }
  check_dim(features.cols());
  std::vector<double> out(features.rows());
  const auto rows = static_cast<std::ptrdiff_t>(features.rows());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t r = 0; r < rows; ++r) {
    out[static_cast<std::size_t>(r)] = predict(features.row(static_cast<std::size_t>(r)));
  }
  return out;
}

namespace serial {

std::vector<double> predict_batch(const GbdtEnsemble &model, const FeatureMatrix &features) {
  std::vector<double> out;
  out.reserve(features.rows());
  for (std::size_t r = 0; r < features.rows(); ++r) {
    out.push_back(model.predict(features.row(r)));
  }
  return out;
}

} // namespace serial

namespace {

struct SplitCandidate {
  double gain = 0.0;
  int feature = -1;
  double threshold = 0.0;
};

class TreeBuilder {
public:
  TreeBuilder(const std::vector<std::vector<double>> &columns,
              const std::vector<std::vector<std::uint32_t>> &sorted, const FitConfig &config)
      : columns_(columns), sorted_(sorted), config_(config) {}

  RegressionTree build(const std::vector<double> &residual,
                       const std::vector<std::uint32_t> &rows,
                       const std::vector<int> &features) {
    const std::size_t n = residual.size();
    std::vector<TreeNode> nodes(1);
    node_of_.assign(n, -1);
    for (auto r : rows) node_of_[r] = 0;

    std::vector<int> frontier{0};
    for (int depth = 0; depth < config_.max_depth && !frontier.empty(); ++depth) {
      const std::size_t slots = frontier.size();
      std::vector<int> slot_of(nodes.size(), -1);
      for (std::size_t s = 0; s < slots; ++s) {
        slot_of[static_cast<std::size_t>(frontier[s])] = static_cast<int>(s);
      }
      std::vector<double> sum(slots, 0.0);
      std::vector<std::size_t> count(slots, 0);
      for (auto r : rows) {
        const int node = node_of_[r];
        const int s = slot_of[static_cast<std::size_t>(node)];
        if (s >= 0) {
          sum[static_cast<std::size_t>(s)] += residual[r];
          ++count[static_cast<std::size_t>(s)];
        }
      }
      const auto min_leaf = static_cast<std::size_t>(config_.min_samples_leaf);
      for (std::size_t s = 0; s < slots; ++s) {
        if (count[s] < 2 * min_leaf) {
          slot_of[static_cast<std::size_t>(frontier[s])] = -1;
        }
      }

      std::vector<SplitCandidate> best(slots);
      std::vector<double> left_sum(slots);
      std::vector<std::size_t> left_count(slots);
      std::vector<double> last(slots);
      std::vector<char> seen(slots);
      for (int f : features) {
        std::fill(left_sum.begin(), left_sum.end(), 0.0);
        std::fill(left_count.begin(), left_count.end(), 0);
        std::fill(seen.begin(), seen.end(), 0);
        const auto &column = columns_[static_cast<std::size_t>(f)];
        for (auto r : sorted_[static_cast<std::size_t>(f)]) {
          const int node = node_of_[r];
          if (node < 0) continue;
          const int si = slot_of[static_cast<std::size_t>(node)];
          if (si < 0) continue;
          const auto s = static_cast<std::size_t>(si);
          const double v = column[r];
          if (seen[s] && v != last[s]) {
            const std::size_t nl = left_count[s];
            const std::size_t nr = count[s] - nl;
            if (nl >= min_leaf && nr >= min_leaf) {
              const double sl = left_sum[s];
              const double sr = sum[s] - sl;
              const double gain = sl * sl / static_cast<double>(nl) +
                                  sr * sr / static_cast<double>(nr) -
                                  sum[s] * sum[s] / static_cast<double>(count[s]);
              if (gain > best[s].gain) {
                double threshold = 0.5 * (last[s] + v);
                if (!(threshold > last[s])) threshold = v;
                best[s] = {gain, f, threshold};
              }
            }
          }
          left_sum[s] += residual[r];
          ++left_count[s];
          last[s] = v;
          seen[s] = 1;
        }
      }

      std::vector<int> next;
      std::vector<int> split_of(nodes.size(), -1);
      for (std::size_t s = 0; s < slots; ++s) {
        if (best[s].feature < 0) continue;
        const int id = frontier[s];
        const int left = static_cast<int>(nodes.size());
        nodes.emplace_back();
        nodes.emplace_back();
        auto &node = nodes[static_cast<std::size_t>(id)];
        node.feature = best[s].feature;
        node.threshold = best[s].threshold;
        node.left = left;
        node.right = left + 1;
        split_of[static_cast<std::size_t>(id)] = static_cast<int>(s);
        next.push_back(left);
        next.push_back(left + 1);
      }
      for (auto r : rows) {
        const auto node = static_cast<std::size_t>(node_of_[r]);
        if (node < split_of.size() && split_of[node] >= 0) {
          const auto &n = nodes[node];
          node_of_[r] =
              columns_[static_cast<std::size_t>(n.feature)][r] < n.threshold ? n.left : n.right;
        }
      }
      frontier = std::move(next);
    }

    std::vector<std::vector<double>> leaf_residuals(nodes.size());
    for (auto r : rows) {
      leaf_residuals[static_cast<std::size_t>(node_of_[r])].push_back(residual[r]);
    }
    for (std::size_t i = 0; i < nodes.size(); ++i) {
      if (nodes[i].is_leaf()) {
        nodes[i].value = leaf_residuals[i].empty() ? 0.0 : shifted_mean(leaf_residuals[i]);
      }
    }
    return RegressionTree(std::move(nodes));
  }

private:
  const std::vector<std::vector<double>> &columns_;
  const std::vector<std::vector<std::uint32_t>> &sorted_;
  const FitConfig &config_;
  std::vector<int> node_of_;
};

} // namespace

GbdtEnsemble fit(const FeatureMatrix &features, std::span<const double> targets,
                 const FitConfig &config, std::string metric_name) {
  config.validate();
  const std::size_t n = features.rows();
  const std::size_t dim = features.cols();
  if (targets.size() != n) {
    throw ValidationError("feature rows and targets differ in length");
  }
  if (n == 0 || dim == 0) {
    throw DegenerateInputError("cannot fit a surrogate on an empty dataset");
  }
  if (n < 2 * static_cast<std::size_t>(config.min_samples_leaf)) {
    throw DegenerateInputError("need at least 2 * min_samples_leaf = " +
                               std::to_string(2 * config.min_samples_leaf) +
                               " records, got " + std::to_string(n));
  }
  for (double t : targets) {
    if (!std::isfinite(t)) throw ValidationError("non-finite training target");
  }

  std::vector<std::vector<double>> columns(dim, std::vector<double>(n));
  std::vector<std::vector<std::uint32_t>> sorted(dim, std::vector<std::uint32_t>(n));
  for (std::size_t f = 0; f < dim; ++f) {
    for (std::size_t r = 0; r < n; ++r) columns[f][r] = features(r, f);
    std::iota(sorted[f].begin(), sorted[f].end(), 0u);
    std::stable_sort(sorted[f].begin(), sorted[f].end(),
                     [&](std::uint32_t a, std::uint32_t b) { return columns[f][a] < columns[f][b]; });
  }

  const double base = shifted_mean(targets);
  std::vector<double> pred(n, base);
  std::vector<double> residual(n);
  std::mt19937_64 rng(config.seed);
  TreeBuilder builder(columns, sorted, config);

  std::vector<std::uint32_t> all_rows(n);
  std::iota(all_rows.begin(), all_rows.end(), 0u);
  std::vector<int> all_features(dim);
  std::iota(all_features.begin(), all_features.end(), 0);
  const auto row_take = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::llround(config.subsample_rows * static_cast<double>(n))));
  const auto feature_take = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::llround(config.subsample_features * static_cast<double>(dim))));

  std::vector<RegressionTree> trees;
  trees.reserve(static_cast<std::size_t>(config.n_trees));
  for (int t = 0; t < config.n_trees; ++t) {
    for (std::size_t i = 0; i < n; ++i) residual[i] = targets[i] - pred[i];

    std::vector<std::uint32_t> rows = all_rows;
    if (row_take < n) {
      std::shuffle(rows.begin(), rows.end(), rng);
      rows.resize(row_take);
      std::sort(rows.begin(), rows.end());
    }
    std::vector<int> feats = all_features;
    if (feature_take < dim) {
      std::shuffle(feats.begin(), feats.end(), rng);
      feats.resize(feature_take);
      std::sort(feats.begin(), feats.end());
    }

    RegressionTree tree = builder.build(residual, rows, feats);
    for (std::size_t i = 0; i < n; ++i) {
      pred[i] += config.learning_rate * tree.predict(features.row(i));
    }
    trees.push_back(std::move(tree));
  }
  return GbdtEnsemble(std::move(metric_name), dim, base, config.learning_rate,
                      std::move(trees));
}

FitReport evaluate(const GbdtEnsemble &model, const FeatureMatrix &features,
                   std::span<const double> targets) {
  if (features.rows() == 0) {
    throw DegenerateInputError("cannot evaluate on an empty split");
  }
  if (targets.size() != features.rows()) {
    throw ValidationError("feature rows and targets differ in length");
  }
  const auto pred = model.predict_batch(features);
  FitReport report;
  report.mae = metrics::mean_abs_error(targets, pred);
  if (targets.size() >= 2) {
    report.r2 = metrics::r_squared(targets, pred);
    report.tau = metrics::kendall_tau(targets, pred);
  }
  return report;
}

SplitData gather(const arch::SpaceDef &space, const data::MetricDataset &ds,
                 data::Split split) {
  const auto idx = ds.indices(split);
  SplitData out;
  out.features = FeatureMatrix(idx.size(), space.feature_dim());
  out.targets.reserve(idx.size());
  for (std::size_t i = 0; i < idx.size(); ++i) {
    const auto &record = ds.records()[idx[i]];
    const auto code = arch::encode(space, record.arch);
    std::copy(code.begin(), code.end(), out.features.row(i).begin());
    out.targets.push_back(record.value);
  }
  return out;
}

GbdtEnsemble fit(const arch::SpaceDef &space, const data::MetricDataset &ds,
                 const FitConfig &config) {
  const auto train = gather(space, ds, data::Split::train);
  return fit(train.features, train.targets, config, ds.name());
}

FitReport evaluate(const GbdtEnsemble &model, const arch::SpaceDef &space,
                   const data::MetricDataset &ds, data::Split split) {
  const auto part = gather(space, ds, split);
  return evaluate(model, part.features, part.targets);
}

std::size_t TuneGrid::size() const {
  return n_trees.size() * max_depth.size() * learning_rate.size() *
         min_samples_leaf.size() * subsample_rows.size() * subsample_features.size();
}

FitConfig TuneGrid::at(std::size_t index) const {
  FitConfig c;
  auto take = [&index](const auto &values) {
    const auto &v = values[index % values.size()];
    index /= values.size();
    return v;
  };
  c.n_trees = take(n_trees);
  c.max_depth = take(max_depth);
  c.learning_rate = take(learning_rate);
  c.min_samples_leaf = take(min_samples_leaf);
  c.subsample_rows = take(subsample_rows);
  c.subsample_features = take(subsample_features);
  return c;
}

TuneResult tune(const arch::SpaceDef &space, const data::MetricDataset &ds,
                std::size_t budget, std::uint64_t seed, const TuneGrid &grid, Exec exec) {
  if (budget < 1) {
    throw ValidationError("tuning budget must be >= 1");
  }
  if (grid.size() == 0) {
    throw ValidationError("tuning grid is empty");
  }
  const auto train = gather(space, ds, data::Split::train);
  const auto val = gather(space, ds, data::Split::val);
  if (val.targets.size() < 2) {
    throw DegenerateInputError("tuning needs at least 2 validation records");
  }

  std::vector<std::size_t> order(grid.size());
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  order.resize(std::min(budget, order.size()));

  std::vector<TuneTrial> trials(order.size());
  for (std::size_t i = 0; i < order.size(); ++i) {
    trials[i].config = grid.at(order[i]);
    trials[i].config.seed = mix_seed(seed, i);
  }
  auto run_trial = [&](std::size_t i) {
    const auto model = fit(train.features, train.targets, trials[i].config, ds.name());
    const auto pred = model.predict_batch(val.features, Exec::serial);
    trials[i].val_tau = metrics::kendall_tau(val.targets, pred);
    trials[i].val_mae = metrics::mean_abs_error(val.targets, pred);
  };
  const auto count = static_cast<std::ptrdiff_t>(trials.size());
  if (exec == Exec::parallel) {
    std::vector<std::string> errors(trials.size());
#pragma omp parallel for schedule(dynamic, 1)
    for (std::ptrdiff_t i = 0; i < count; ++i) {
      try {
        run_trial(static_cast<std::size_t>(i));
      } catch (const std::exception &e) {
        errors[static_cast<std::size_t>(i)] = e.what();
      }
    }
    for (const auto &e : errors) {
      if (!e.empty()) throw DegenerateInputError(e);
    }
  } else {
    for (std::ptrdiff_t i = 0; i < count; ++i) run_trial(static_cast<std::size_t>(i));
  }

  std::size_t best = 0;
  for (std::size_t i = 1; i < trials.size(); ++i) {
    const auto &a = trials[i];
    const auto &b = trials[best];
    if (a.val_tau > b.val_tau || (a.val_tau == b.val_tau && a.val_mae < b.val_mae)) {
      best = i;
    }
  }
  TuneResult result;
  result.best = trials[best].config;
  result.val_tau = trials[best].val_tau;
  result.val_mae = trials[best].val_mae;
  result.trials = std::move(trials);
  return result;
}

std::string serialize_model(const GbdtEnsemble &model) {
  ordered_json doc;
  doc["format_version"] = kModelFormatVersion;
  doc["metric_name"] = model.metric_name();
  doc["feature_dim"] = model.feature_dim();
  doc["base_score"] = model.base_score();
  doc["learning_rate"] = model.learning_rate();
  ordered_json trees = ordered_json::array();
  for (const auto &tree : model.trees()) {
    ordered_json nodes = ordered_json::array();
    for (const auto &n : tree.nodes()) {
      ordered_json node;
      if (n.is_leaf()) {
        node["value"] = n.value;
      } else {
        node["feature"] = n.feature;
        node["threshold"] = n.threshold;
        node["left"] = n.left;
        node["right"] = n.right;
      }
      nodes.push_back(std::move(node));
    }
    ordered_json entry;
    entry["nodes"] = std::move(nodes);
    trees.push_back(std::move(entry));
  }
  doc["trees"] = std::move(trees);
  return doc.dump() + "\n";
}

namespace {

template <typename T>
T field(const ordered_json &obj, const char *key, const std::string &where) {
  if (!obj.is_object()) malformed(where + ": expected an object");
  auto it = obj.find(key);
  if (it == obj.end()) malformed(where + ": missing field '" + key + "'");
  try {
    if constexpr (std::is_same_v<T, double>) {
      if (!it->is_number()) malformed(where + ": field '" + key + "' is not a number");
    } else if constexpr (std::is_integral_v<T>) {
      if (!it->is_number_integer()) malformed(where + ": field '" + key + "' is not an integer");
    }
    return it->get<T>();
  } catch (const nlohmann::json::exception &) {
    malformed(where + ": field '" + key + "' has the wrong type");
  }
}

} // namespace

GbdtEnsemble parse_model(std::string_view text) {
  ordered_json doc;
  try {
    doc = ordered_json::parse(text);
  } catch (const nlohmann::json::parse_error &e) {
    if (e.byte >= text.size()) {
      throw FormatError(FormatError::Kind::truncated,
                        std::string("model file ends unexpectedly: ") + e.what());
    }
    throw FormatError(FormatError::Kind::malformed,
                      std::string("model file is not valid JSON: ") + e.what());
  }
  const auto version = field<int>(doc, "format_version", "model");
  if (version != kModelFormatVersion) {
    throw FormatError(FormatError::Kind::version_mismatch,
                      "unsupported model format_version " + std::to_string(version) +
                          " (expected " + std::to_string(kModelFormatVersion) + ")");
  }
  const auto name = field<std::string>(doc, "metric_name", "model");
  const auto dim = field<std::int64_t>(doc, "feature_dim", "model");
  const auto base = field<double>(doc, "base_score", "model");
  const auto lr = field<double>(doc, "learning_rate", "model");
  if (dim <= 0) malformed("model: feature_dim must be positive");
  if (!(lr > 0.0 && lr <= 1.0)) malformed("model: learning_rate must lie in (0, 1]");
  if (!std::isfinite(base)) malformed("model: base_score is not finite");
  auto trees_it = doc.find("trees");
  if (trees_it == doc.end() || !trees_it->is_array()) malformed("model: missing tree array");

  std::vector<RegressionTree> trees;
  trees.reserve(trees_it->size());
  for (std::size_t t = 0; t < trees_it->size(); ++t) {
    const auto &entry = (*trees_it)[t];
    const std::string where = "tree " + std::to_string(t);
    if (!entry.is_object() || !entry.contains("nodes") || !entry["nodes"].is_array()) {
      malformed(where + ": missing node array");
    }
    std::vector<TreeNode> nodes;
    for (std::size_t i = 0; i < entry["nodes"].size(); ++i) {
      const auto &obj = entry["nodes"][i];
      const std::string node_where = where + " node " + std::to_string(i);
      TreeNode node;
      if (obj.is_object() && obj.contains("value")) {
        if (obj.size() != 1) malformed(node_where + ": leaf carries split fields");
        node.value = field<double>(obj, "value", node_where);
      } else {
        node.feature = field<int>(obj, "feature", node_where);
        node.threshold = field<double>(obj, "threshold", node_where);
        node.left = field<int>(obj, "left", node_where);
        node.right = field<int>(obj, "right", node_where);
        if (node.feature < 0) malformed(node_where + ": negative split feature");
      }
      nodes.push_back(node);
    }
    RegressionTree tree(std::move(nodes));
    try {
      tree.check_well_formed(static_cast<std::size_t>(dim));
    } catch (const FormatError &e) {
      malformed(where + ": " + e.what());
    }
    trees.push_back(std::move(tree));
  }
  return GbdtEnsemble(name, static_cast<std::size_t>(dim), base, lr, std::move(trees));
}

void save(const GbdtEnsemble &model, const std::filesystem::path &path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw IoError("cannot open '" + path.string() + "' for writing");
  }
  out << serialize_model(model);
  if (!out) {
    throw IoError("failed writing '" + path.string() + "'");
  }
}

GbdtEnsemble load(const std::filesystem::path &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw IoError("cannot open model '" + path.string() + "'");
  }
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_model(buffer.str());
}

} // namespace anb::surrogate
