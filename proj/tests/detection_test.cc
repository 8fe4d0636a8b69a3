// Copyright 2026 The OXN Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "oxn/detection.h"
#include "oxn/rng.h"

namespace oxn {
namespace {

ResponseSeries make_series(const std::vector<double>& values, const std::vector<int>& labels) {
  ResponseSeries s;
  s.name = "x";
  for (std::size_t i = 0; i < values.size(); ++i) {
    s.points.push_back({static_cast<Millis>(i) * 1000, values[i], labels[i] ? Label::kFault : Label::kNormal});
  }
  return s;
}

// Two Gaussian classes with the given means, interleaved so the lag
// structure does not leak labels.
ResponseSeries two_class(double mean0, double mean1, int n_each, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<double> v;
  std::vector<int> l;
  for (int i = 0; i < n_each; ++i) {
    v.push_back(rng.normal(mean0, 1.0));
    l.push_back(0);
  }
  for (int i = 0; i < n_each; ++i) {
    v.push_back(rng.normal(mean1, 1.0));
    l.push_back(1);
  }
  return make_series(v, l);
}

TEST(LogRegGradientTest, MatchesCentralDifferences) {
  Rng rng(11);
  for (int point = 0; point < 10; ++point) {
    const int rows = 30, cols = 3;
    Eigen::MatrixXd x(rows, cols);
    std::vector<std::uint8_t> y(rows);
    for (int i = 0; i < rows; ++i) {
      for (int j = 0; j < cols; ++j) x(i, j) = rng.normal(0.0, 1.5);
      y[i] = rng.bernoulli(0.5) ? 1 : 0;
    }
    Eigen::VectorXd w(cols);
    for (int j = 0; j < cols; ++j) w(j) = rng.normal(0.0, 1.0);
    const double b = rng.normal(0.0, 1.0);
    const double l2 = 1e-2;
    const auto g = logreg_gradient(x, y, w, b, l2);
    ASSERT_EQ(g.size(), cols + 1);

    const double h = 1e-5;
    double max_rel = 0.0;
    for (int k = 0; k <= cols; ++k) {
      Eigen::VectorXd wp = w, wm = w;
      double bp = b, bm = b;
      if (k < cols) {
        wp(k) += h;
        wm(k) -= h;
      } else {
        bp += h;
        bm -= h;
      }
      const double fd = (logreg_loss(x, y, wp, bp, l2) - logreg_loss(x, y, wm, bm, l2)) / (2 * h);
      max_rel = std::max(max_rel, std::abs(g(k) - fd) / std::max(std::abs(fd), 1e-4));
    }
    EXPECT_LT(max_rel, 1e-5) << "point " << point;
  }
}

TEST(TrainLogRegTest, SeparableDataIsDetected) {
  const auto series = two_class(0.0, 6.0, 100, 3);
  Rng rng(5);
  const auto ds = zscore_fit_apply(build_dataset(series, 0.7, rng, 1));
  const auto model = train_logreg(ds, 1e-4, 1e-6);
  EXPECT_GE(evaluate_df(model, ds).accuracy, 0.99);
}

TEST(TrainLogRegTest, ShuffledLabelsStayNearChance) {
  Rng gen(17);
  std::vector<double> v;
  std::vector<int> l;
  for (int i = 0; i < 1000; ++i) {
    v.push_back(gen.normal(0.0, 1.0));
    l.push_back(i % 2);
  }
  Rng rng(19);
  const auto ds = zscore_fit_apply(build_dataset(make_series(v, l), 0.7, rng, 1));
  const auto model = train_logreg(ds, 1e-4, 1e-6);
  const double acc = evaluate_df(model, ds).accuracy;
  EXPECT_GE(acc, 0.4);
  EXPECT_LE(acc, 0.6);
}

TEST(TrainLogRegTest, LossNeverIncreases) {
  const auto series = two_class(0.0, 1.0, 80, 23);
  Rng rng(29);
  const auto ds = zscore_fit_apply(build_dataset(series, 0.7, rng));
  const auto model = train_logreg(ds, 1e-4, 1e-6);
  ASSERT_GE(model.loss_history.size(), 2u);
  for (std::size_t i = 1; i < model.loss_history.size(); ++i) {
    EXPECT_LE(model.loss_history[i], model.loss_history[i - 1] + 1e-15);
  }
  EXPECT_LT(model.gradient_norm, 1e-6);
}

TEST(TrainLogRegTest, IterationCapThrows) {
  const auto series = two_class(0.0, 1.0, 50, 2);
  Rng rng(3);
  const auto ds = zscore_fit_apply(build_dataset(series, 0.7, rng));
  EXPECT_THROW(train_logreg(ds, 1e-4, 1e-300, 3), RuntimeError);
}

TEST(BuildDatasetTest, OversamplingEqualizesTrainClasses) {
  std::vector<double> v;
  std::vector<int> l;
  for (int i = 0; i < 120; ++i) {
    v.push_back(i);
    l.push_back(i >= 100 ? 1 : 0);
  }
  Rng rng(1);
  const auto ds = build_dataset(make_series(v, l), 0.7, rng);
  EXPECT_EQ(ds.count(Split::kTrain, 0), ds.count(Split::kTrain, 1));
  EXPECT_EQ(ds.count(Split::kTrain, 0), 70u);
  // The test split keeps the original imbalance.
  EXPECT_EQ(ds.count(Split::kTest, 0), 30u);
  EXPECT_EQ(ds.count(Split::kTest, 1), 6u);
  EXPECT_EQ(ds.cols(), 3u);
}

TEST(BuildDatasetTest, TestSplitIsUntouchedMultiset) {
  std::vector<double> v;
  std::vector<int> l;
  for (int i = 0; i < 60; ++i) {
    v.push_back(i * 0.5);
    l.push_back(i % 5 == 0 ? 1 : 0);
  }
  Rng rng(2);
  const auto ds = build_dataset(make_series(v, l), 0.7, rng, 1);
  std::vector<double> test, original_minus_train;
  std::vector<double> all(v);
  std::multiset<double> remaining(all.begin(), all.end());
  for (std::size_t i = 0; i < 60; ++i) {
    if (ds.split[i] == Split::kTrain) remaining.erase(remaining.find(ds.features(i, 0)));
  }
  for (auto i : ds.indices(Split::kTest)) test.push_back(ds.features(i, 0));
  std::sort(test.begin(), test.end());
  EXPECT_EQ(test, std::vector<double>(remaining.begin(), remaining.end()));
}

TEST(BuildDatasetTest, LagFeaturesAreZeroPadded) {
  const auto ds = [] {
    Rng rng(4);
    return build_dataset(make_series({1, 2, 3, 4, 5, 6, 7, 8, 9, 10}, {0, 0, 0, 0, 0, 1, 1, 1, 1, 1}),
                         0.7, rng);
  }();
  EXPECT_EQ(ds.features(0, 0), 1.0);
  EXPECT_EQ(ds.features(0, 1), 0.0);
  EXPECT_EQ(ds.features(0, 2), 0.0);
  EXPECT_EQ(ds.features(4, 0), 5.0);
  EXPECT_EQ(ds.features(4, 1), 4.0);
  EXPECT_EQ(ds.features(4, 2), 3.0);
}

TEST(BuildDatasetTest, DegenerateSeriesThrow) {
  Rng rng(1);
  EXPECT_THROW(build_dataset(make_series({1, 2, 3, 4, 5}, {0, 0, 0, 0, 0}), 0.7, rng), DatasetError);
  EXPECT_THROW(build_dataset(make_series({1, 2, 3, 4, 5, 6}, {0, 0, 0, 0, 1, 1}), 0.7, rng),
               DatasetError);
}

TEST(BuildDatasetTest, DeterministicForSeed) {
  const auto series = two_class(0.0, 2.0, 40, 8);
  Rng a(42), b(42);
  const auto da = build_dataset(series, 0.7, a);
  const auto db = build_dataset(series, 0.7, b);
  EXPECT_EQ(da.split, db.split);
  EXPECT_EQ(da.labels, db.labels);
  EXPECT_EQ(da.features, db.features);
}

TEST(ZScoreTest, KnownColumn) {
  LabeledDataset ds;
  ds.features.resize(4, 1);
  ds.features << 1, 2, 3, 100;
  ds.labels = {0, 1, 0, 1};
  ds.split = {Split::kTrain, Split::kTrain, Split::kTrain, Split::kTest};
  ds.feature_names = {"x"};
  const auto z = zscore_fit_apply(ds);
  EXPECT_NEAR(z.features(0, 0), -1.224744871391589, 1e-12);
  EXPECT_NEAR(z.features(1, 0), 0.0, 1e-12);
  EXPECT_NEAR(z.features(2, 0), 1.224744871391589, 1e-12);
}

TEST(ZScoreTest, TrainMomentsAreStandard) {
  const auto series = two_class(3.0, 9.0, 150, 31);
  Rng rng(37);
  const auto z = zscore_fit_apply(build_dataset(series, 0.7, rng));
  const auto train = z.indices(Split::kTrain);
  for (Eigen::Index j = 0; j < z.features.cols(); ++j) {
    double mean = 0.0, sq = 0.0;
    for (auto i : train) mean += z.features(i, j);
    mean /= train.size();
    for (auto i : train) sq += (z.features(i, j) - mean) * (z.features(i, j) - mean);
    EXPECT_LT(std::abs(mean), 1e-9);
    EXPECT_LT(std::abs(std::sqrt(sq / train.size()) - 1.0), 1e-9);
  }
}

TEST(ZScoreTest, NormalizedColumnIsNearIdentity) {
  LabeledDataset ds;
  ds.features.resize(4, 1);
  const double s = std::sqrt(2.0) / std::sqrt(2.0);
  ds.features << -s, s, -s, s;
  ds.labels = {0, 1, 0, 1};
  ds.split = {Split::kTrain, Split::kTrain, Split::kTrain, Split::kTrain};
  ds.feature_names = {"x"};
  const auto z = zscore_fit_apply(ds);
  for (int i = 0; i < 4; ++i) EXPECT_NEAR(z.features(i, 0), ds.features(i, 0), 1e-12);
}

TEST(ZScoreTest, ConstantColumnDropped) {
  LabeledDataset ds;
  ds.features.resize(4, 2);
  ds.features << 1, 5, 2, 5, 3, 5, 4, 5;
  ds.labels = {0, 1, 0, 1};
  ds.split = {Split::kTrain, Split::kTrain, Split::kTrain, Split::kTest};
  ds.feature_names = {"x", "c"};
  Normalization n;
  const auto z = zscore_fit_apply(ds, &n);
  EXPECT_EQ(z.cols(), 1u);
  EXPECT_EQ(n.kept_columns, (std::vector<std::size_t>{0}));
  EXPECT_FALSE(z.warnings.empty());
}

TEST(EvaluateDfTest, MajorityOnBalancedTestIsHalf) {
  LogRegModel m;
  m.weights = Eigen::VectorXd::Zero(1);
  m.bias = -5.0;  // always predicts normal
  LabeledDataset ds;
  ds.features.resize(4, 1);
  ds.features << 0, 1, 2, 3;
  ds.labels = {0, 1, 0, 1};
  ds.split = {Split::kTest, Split::kTest, Split::kTest, Split::kTest};
  ds.feature_names = {"x"};
  EXPECT_DOUBLE_EQ(evaluate_df(m, ds).df, 0.5);
}

TEST(DetectTest, ScaleInvariance) {
  const auto series = two_class(0.0, 1.5, 60, 41);
  auto scaled = series;
  for (auto& p : scaled.points) p.value *= 1000.0;
  DetectionSpec spec;
  const auto a = detect(series, spec, 99);
  const auto b = detect(scaled, spec, 99);
  ASSERT_TRUE(a.outcome && b.outcome);
  EXPECT_DOUBLE_EQ(a.outcome->df, b.outcome->df);
}

TEST(DetectTest, UndefinedOnDegenerateSeries) {
  DetectionSpec spec;
  const auto r = detect(make_series({1, 2, 3, 4, 5}, {0, 0, 0, 0, 1}), spec, 1);
  EXPECT_FALSE(r.outcome.has_value());
  EXPECT_FALSE(r.undefined_reason.empty());
}

TEST(DetectTest, DeterministicWeights) {
  const auto series = two_class(0.0, 1.0, 70, 43);
  Rng a(1), b(1);
  const auto ma = train_logreg(zscore_fit_apply(build_dataset(series, 0.7, a)));
  const auto mb = train_logreg(zscore_fit_apply(build_dataset(series, 0.7, b)));
  EXPECT_EQ(ma.weights, mb.weights);
  EXPECT_EQ(ma.bias, mb.bias);
}

TEST(ThresholdAlertTest, BalancedAccuracy) {
  const auto series = two_class(0.0, 10.0, 50, 47);
  DetectionSpec spec;
  spec.mechanism = DetectionMechanismKind::kThresholdAlert;
  const auto r = detect(series, spec, 5);
  ASSERT_TRUE(r.outcome);
  EXPECT_EQ(r.outcome->mechanism, "threshold_alert");
  EXPECT_DOUBLE_EQ(r.outcome->df, r.outcome->balanced_accuracy);
  EXPECT_GE(r.outcome->df, 0.95);
}

class ConstantDetector : public DetectionMechanism {
 public:
  std::string id() const override { return "constant"; }
  DetectionOutcome fit_evaluate(const LabeledDataset& ds) const override {
    return {"constant", 0.25, 0.25, 0.25, ds.indices(Split::kTest).size()};
  }
};

TEST(RegistryTest, CustomMechanism) {
  register_mechanism("constant", [](const DetectionSpec&) { return std::make_unique<ConstantDetector>(); });
  const auto m = make_mechanism("constant", DetectionSpec{});
  const auto series = two_class(0.0, 1.0, 20, 1);
  Rng rng(1);
  EXPECT_DOUBLE_EQ(m->fit_evaluate(build_dataset(series, 0.7, rng)).df, 0.25);
  EXPECT_THROW(make_mechanism("nope", DetectionSpec{}), Error);
}

}  // namespace
}  // namespace oxn
