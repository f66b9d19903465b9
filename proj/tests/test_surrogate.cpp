#include "anb/errors.hpp"
#include "anb/metrics.hpp"
#include "anb/proxysearch.hpp"
#include "anb/surrogate.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <random>
#include <set>
#include <thread>

using namespace anb;
using namespace anb::surrogate;

namespace {

const arch::SpaceDef &space() {
  static const auto s = arch::SpaceDef::mnasnet();
  return s;
}

// Accuracy-like dataset from the synthetic oracle's noise-free landscape.
data::MetricDataset oracle_dataset(std::size_t n, std::uint64_t seed) {
  static const proxy::SyntheticOracle oracle(space());
  arch::Rng rng(seed);
  std::vector<data::Record> records;
  for (std::size_t i = 0; i < n; ++i) {
    auto a = arch::sample_uniform(space(), rng);
    const double v = oracle.true_accuracy(a);
    records.push_back({std::move(a), v, std::nullopt});
  }
  data::MetricDataset ds("ANB-Acc", std::move(records));
  ds.assign_splits(data::split(ds, {}, seed).tags);
  return ds;
}

double train_mse(const GbdtEnsemble &m, const FeatureMatrix &x, const std::vector<double> &y,
                 std::size_t trees) {
  double s = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    const double d = m.predict_prefix(x.row(i), trees) - y[i];
    s += d * d;
  }
  return s / static_cast<double>(y.size());
}

} // namespace

TEST(Fit, ConstantTargetsAreReproducedExactly) {
  const auto ds = oracle_dataset(60, 1);
  auto part = gather(space(), ds, data::Split::train);
  std::fill(part.targets.begin(), part.targets.end(), 0.7312);
  const auto m = fit(part.features, part.targets, FitConfig{});
  for (std::size_t i = 0; i < part.targets.size(); ++i) {
    EXPECT_EQ(m.predict(part.features.row(i)), 0.7312);
  }
  EXPECT_THROW(evaluate(m, part.features, part.targets), DegenerateInputError);
}

TEST(Fit, FullyGrownSingleTreeInterpolates) {
  const auto ds = oracle_dataset(64, 2);
  const auto part = gather(space(), ds, data::Split::train);
  // Distinct architectures are required for exact interpolation.
  std::set<std::vector<double>> rows;
  for (std::size_t i = 0; i < part.features.rows(); ++i) {
    rows.emplace(part.features.row(i).begin(), part.features.row(i).end());
  }
  ASSERT_EQ(rows.size(), part.features.rows());
  FitConfig c;
  c.n_trees = 1;
  c.max_depth = 63;
  c.min_samples_leaf = 1;
  c.learning_rate = 1.0;
  const auto m = fit(part.features, part.targets, c);
  for (std::size_t i = 0; i < part.targets.size(); ++i) {
    EXPECT_DOUBLE_EQ(m.predict(part.features.row(i)), part.targets[i]);
  }
}

TEST(Fit, RespectsDepthAndLeafSize) {
  const auto ds = oracle_dataset(300, 3);
  const auto part = gather(space(), ds, data::Split::train);
  FitConfig c;
  c.n_trees = 20;
  c.max_depth = 4;
  c.min_samples_leaf = 7;
  const auto m = fit(part.features, part.targets, c);
  for (const auto &t : m.trees()) {
    EXPECT_LE(t.depth(), 4);
    EXPECT_NO_THROW(t.check_well_formed(63));
  }
}

TEST(Fit, RejectsDegenerateInput) {
  FeatureMatrix empty(0, 63);
  EXPECT_THROW(fit(empty, std::vector<double>{}, FitConfig{}), DegenerateInputError);
  FeatureMatrix two(2, 63);
  EXPECT_THROW(fit(two, std::vector<double>{0.1, 0.2}, FitConfig{}), DegenerateInputError);
  FitConfig bad;
  bad.learning_rate = 0.0;
  EXPECT_THROW(bad.validate(), ValidationError);
  bad = FitConfig{};
  bad.subsample_rows = 1.5;
  EXPECT_THROW(bad.validate(), ValidationError);
}

TEST(Fit, TrainingLossNonIncreasingInRounds) {
  const auto ds = oracle_dataset(400, 4);
  const auto part = gather(space(), ds, data::Split::train);
  FitConfig c;
  c.n_trees = 60;
  const auto m = fit(part.features, part.targets, c);
  double prev = train_mse(m, part.features, part.targets, 0);
  for (std::size_t t = 1; t <= m.trees().size(); ++t) {
    const double cur = train_mse(m, part.features, part.targets, t);
    EXPECT_LE(cur, prev + 1e-15);
    prev = cur;
  }
}

TEST(Fit, DeterministicIrrespectiveOfSeedWithoutSubsampling) {
  const auto ds = oracle_dataset(200, 5);
  FitConfig a;
  a.n_trees = 30;
  a.seed = 1;
  FitConfig b = a;
  b.seed = 999;
  EXPECT_EQ(fit(space(), ds, a), fit(space(), ds, b));
  a.subsample_rows = 0.7;
  b.subsample_rows = 0.7;
  EXPECT_EQ(fit(space(), ds, a), fit(space(), ds, a));
  EXPECT_NE(fit(space(), ds, a), fit(space(), ds, b));
}

TEST(Fit, TreeOnlyAffectsInputsDifferingOnItsSplitFeatures) {
  const auto ds = oracle_dataset(300, 6);
  FitConfig c;
  c.n_trees = 10;
  c.max_depth = 2;
  const auto m = fit(space(), ds, c);
  std::mt19937_64 rng(6);
  for (const auto &tree : m.trees()) {
    const auto used = tree.split_features();
    for (int trial = 0; trial < 50; ++trial) {
      arch::Rng arng(rng());
      auto x = arch::encode(space(), arch::sample_uniform(space(), arng));
      auto y = arch::encode(space(), arch::sample_uniform(space(), arng));
      for (int f : used) y[static_cast<std::size_t>(f)] = x[static_cast<std::size_t>(f)];
      EXPECT_EQ(tree.predict(x), tree.predict(y));
    }
  }
}

TEST(Predict, ZeroTreesGivesBaseScore) {
  const GbdtEnsemble m("ANB-Acc", 63, 0.42, 0.1, {});
  EXPECT_EQ(m.predict(std::vector<double>(63, 0.0)), 0.42);
  EXPECT_THROW(m.predict(std::vector<double>(10, 0.0)), ValidationError);
}

TEST(Predict, BatchMatchesScalarAndSerialAcrossThreads) {
  const auto ds = oracle_dataset(300, 7);
  FitConfig c;
  c.n_trees = 50;
  const auto m = fit(space(), ds, c);
  const auto test = gather(space(), ds, data::Split::test);
  const auto batch = m.predict_batch(test.features, Exec::parallel);
  const auto ref = serial::predict_batch(m, test.features);
  ASSERT_EQ(batch.size(), test.features.rows());
  EXPECT_EQ(batch, ref);
  for (std::size_t i = 0; i < batch.size(); ++i) {
    EXPECT_EQ(batch[i], m.predict(test.features.row(i)));
  }
  std::vector<std::vector<double>> out(4);
  std::vector<std::thread> threads;
  for (std::size_t t = 0; t < 4; ++t) {
    threads.emplace_back([&, t] { out[t] = m.predict_batch(test.features, Exec::serial); });
  }
  for (auto &t : threads) t.join();
  for (const auto &o : out) EXPECT_EQ(o, ref);
}

TEST(Evaluate, HandComputedFixture) {
  // One stump: x < 0.5 -> 1, else 3.
  const RegressionTree stump({{0, 0.5, 1, 2, 0.0}, {-1, 0.0, -1, -1, 1.0}, {-1, 0.0, -1, -1, 3.0}});
  const GbdtEnsemble m("ANB-Acc", 1, 0.0, 1.0, {stump});
  FeatureMatrix x(3, 1);
  x(0, 0) = 0.0;
  x(1, 0) = 1.0;
  x(2, 0) = 1.0;
  const std::vector<double> truth{1.0, 2.0, 4.0};
  const auto r = evaluate(m, x, truth);
  ASSERT_TRUE(r.r2 && r.tau);
  EXPECT_NEAR(*r.r2, 4.0 / 7.0, 1e-12);
  EXPECT_NEAR(*r.tau, 2.0 / std::sqrt(6.0), 1e-12);
  EXPECT_NEAR(r.mae, 2.0 / 3.0, 1e-12);
}

TEST(Evaluate, SingleRecordSplit) {
  const GbdtEnsemble m("ANB-Acc", 1, 0.5, 1.0, {});
  FeatureMatrix x(1, 1);
  const auto r = evaluate(m, x, std::vector<double>{0.5});
  EXPECT_EQ(r.mae, 0.0);
  EXPECT_FALSE(r.r2.has_value());
  EXPECT_FALSE(r.tau.has_value());
  EXPECT_THROW(evaluate(m, FeatureMatrix(0, 1), std::vector<double>{}), DegenerateInputError);
}

TEST(Tune, BudgetOneAndReproducibility) {
  const auto ds = oracle_dataset(400, 8);
  const auto one = tune(space(), ds, 1, 3);
  ASSERT_EQ(one.trials.size(), 1u);
  EXPECT_EQ(one.best, one.trials[0].config);

  const auto r = tune(space(), ds, 4, 3, {}, Exec::parallel);
  const auto s = tune(space(), ds, 4, 3, {}, Exec::serial);
  EXPECT_EQ(r.best, s.best);
  EXPECT_EQ(r.val_tau, s.val_tau);
  for (const auto &t : r.trials) {
    EXPECT_LE(t.val_tau, r.val_tau);
  }
  // Re-evaluating the winning config from scratch gives the same score.
  const auto model = fit(space(), ds, r.best);
  const auto val = evaluate(model, space(), ds, data::Split::val);
  EXPECT_EQ(*val.tau, r.val_tau);
  EXPECT_EQ(val.mae, r.val_mae);
}

TEST(Tune, DrawsWithoutReplacement) {
  const auto ds = oracle_dataset(200, 9);
  TuneGrid g;
  g.n_trees = {5, 10};
  g.max_depth = {2, 3};
  g.learning_rate = {0.3};
  g.min_samples_leaf = {5};
  g.subsample_rows = {1.0};
  g.subsample_features = {1.0};
  ASSERT_EQ(g.size(), 4u);
  const auto r = tune(space(), ds, 4, 1, g);
  std::set<std::pair<int, int>> seen;
  for (const auto &t : r.trials) seen.insert({t.config.n_trees, t.config.max_depth});
  EXPECT_EQ(seen.size(), 4u);
  EXPECT_EQ(tune(space(), ds, 10, 1, g).trials.size(), 4u);
}

TEST(TuneGridTest, DefaultGridSize) { EXPECT_EQ(TuneGrid{}.size(), 432u); }

TEST(Persistence, RoundTripIsPredictionIdentical) {
  const auto ds = oracle_dataset(300, 10);
  FitConfig c;
  c.n_trees = 40;
  c.subsample_rows = 0.7;
  const auto m = fit(space(), ds, c);
  const auto path = std::filesystem::temp_directory_path() / "anb_test_model.json";
  save(m, path);
  const auto loaded = load(path);
  EXPECT_EQ(loaded, m);
  EXPECT_EQ(serialize_model(loaded), serialize_model(m));
  arch::Rng rng(10);
  for (int i = 0; i < 1000; ++i) {
    const auto x = arch::encode(space(), arch::sample_uniform(space(), rng));
    ASSERT_EQ(loaded.predict(x), m.predict(x));
  }
}

TEST(Persistence, StructuredErrors) {
  const auto ds = oracle_dataset(100, 11);
  FitConfig c;
  c.n_trees = 3;
  const auto text = serialize_model(fit(space(), ds, c));

  auto expect_kind = [](const std::string &doc, FormatError::Kind kind) {
    try {
      parse_model(doc);
      FAIL() << "expected FormatError";
    } catch (const FormatError &e) {
      EXPECT_EQ(e.kind(), kind) << e.what();
    }
  };
  expect_kind(text.substr(0, text.size() / 2), FormatError::Kind::truncated);

  auto version = text;
  const auto vpos = version.find("\"format_version\":1");
  ASSERT_NE(vpos, std::string::npos);
  version.replace(vpos, 18, "\"format_version\":2");
  expect_kind(version, FormatError::Kind::version_mismatch);

  auto bad_child = text;
  const auto lpos = bad_child.find("\"left\":");
  ASSERT_NE(lpos, std::string::npos);
  const auto lend = bad_child.find(',', lpos);
  bad_child.replace(lpos, lend - lpos, "\"left\":0");
  expect_kind(bad_child, FormatError::Kind::malformed);

  auto bad_feature = text;
  const auto fpos = bad_feature.find("\"feature\":");
  const auto fend = bad_feature.find(',', fpos);
  bad_feature.replace(fpos, fend - fpos, "\"feature\":500");
  expect_kind(bad_feature, FormatError::Kind::malformed);

  expect_kind("[1,2,3]", FormatError::Kind::malformed);
  EXPECT_THROW(load("/nonexistent/model.json"), IoError);
}
