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

// Fault detection mechanisms. A mechanism is trained and evaluated on a
// labeled dataset built from one response series and yields a detection
// function value DF in [0, 1].
//
// The default pipeline: lagged-window features, stratified train/test
// split, random oversampling of the minority class in the training split,
// z-score normalization fitted on the training split, L2-regularized
// logistic regression, DF = test-set accuracy.

#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "oxn/config.h"
#include "oxn/rng.h"
#include "oxn/telemetry.h"

namespace oxn {

/// The series cannot support a detector (too few observations, a class is
/// absent, or no informative feature). DF is undefined and v = 0.
class DatasetError : public Error {
 public:
  using Error::Error;
};

enum class Split : std::uint8_t { kTrain, kTest };

struct LabeledDataset {
  Eigen::MatrixXd features;          // rows = observations
  std::vector<std::uint8_t> labels;  // 1 = fault
  std::vector<Split> split;
  std::vector<std::string> feature_names;
  std::vector<std::string> warnings;

  std::size_t rows() const { return labels.size(); }
  std::size_t cols() const { return static_cast<std::size_t>(features.cols()); }
  std::size_t count(Split s, int label) const;
  std::vector<std::size_t> indices(Split s) const;
};

/// Builds features [v_t, v_{t-1}, ..., v_{t-window+1}] (zero-padded at the
/// series start; lags run over the full series including excluded points),
/// drops excluded observations, splits each class at `split_ratio` and
/// duplicates random minority-class training rows until both classes have
/// equal training counts. The test split is never resampled.
///
/// Throws DatasetError when either class has fewer than 4 observations.
LabeledDataset build_dataset(const ResponseSeries& series, double split_ratio, Rng& rng,
                             int window = 3);

struct Normalization {
  std::vector<std::size_t> kept_columns;  // into the pre-normalization features
  Eigen::VectorXd mean;
  Eigen::VectorXd stddev;  // population
};

/// Fits per-feature mean and population stddev on the training split and
/// transforms both splits. Constant training columns are dropped with a
/// warning.
LabeledDataset zscore_fit_apply(const LabeledDataset& ds, Normalization* fitted = nullptr);

struct LogRegModel {
  Eigen::VectorXd weights;
  double bias = 0.0;
  Normalization normalization;
  int iterations = 0;
  double gradient_norm = 0.0;
  std::vector<double> loss_history;  // one entry per iterate, starting at 0

  /// P(fault | x) for an already normalized feature row.
  double probability(const Eigen::Ref<const Eigen::RowVectorXd>& x) const;
};

/// Mean cross-entropy plus l2 * |w|^2 / 2 over the given rows.
double logreg_loss(const Eigen::MatrixXd& x, const std::vector<std::uint8_t>& y,
                   const Eigen::VectorXd& w, double b, double l2);

/// Gradient of logreg_loss; the last component is d/db.
Eigen::VectorXd logreg_gradient(const Eigen::MatrixXd& x, const std::vector<std::uint8_t>& y,
                                const Eigen::VectorXd& w, double b, double l2);

/// Trains on the training split with damped Newton iterations (Armijo
/// backtracking, so the loss never increases) until the gradient's
/// infinity norm drops below `tol`. Throws RuntimeError after
/// `max_iterations` with the final gradient norm.
LogRegModel train_logreg(const LabeledDataset& ds, double l2 = 1e-4, double tol = 1e-6,
                         int max_iterations = 100000);

struct DetectionOutcome {
  std::string mechanism;
  double df = 0.0;  // the detection function value used for visibility
  double accuracy = 0.0;
  double balanced_accuracy = 0.0;
  std::size_t test_rows = 0;
};

/// Plain test-set accuracy at probability cut 0.5.
DetectionOutcome evaluate_df(const LogRegModel& model, const LabeledDataset& ds);

/// "Value outside mean +- k * stddev of the normal training rows" on
/// feature 0. DF is the balanced test-set accuracy of that rule.
struct ThresholdAlert {
  double k = 3.0;
  double normal_mean = 0.0;
  double normal_stddev = 0.0;

  static ThresholdAlert fit(const LabeledDataset& ds, double k);
  bool fires(double value) const;
};

DetectionOutcome evaluate_df(const ThresholdAlert& alert, const LabeledDataset& ds);

/// Pluggable detector: fit on the training split and score the test split
/// of a raw (not yet normalized) dataset.
class DetectionMechanism {
 public:
  virtual ~DetectionMechanism() = default;
  virtual std::string id() const = 0;
  virtual DetectionOutcome fit_evaluate(const LabeledDataset& ds) const = 0;
};

using MechanismFactory =
    std::function<std::unique_ptr<DetectionMechanism>(const DetectionSpec&)>;

/// Registers an additional mechanism under `name`. Built-ins are
/// "logistic_regression" and "threshold_alert".
void register_mechanism(const std::string& name, MechanismFactory factory);
std::unique_ptr<DetectionMechanism> make_mechanism(const std::string& name,
                                                   const DetectionSpec& spec);
std::string mechanism_name(DetectionMechanismKind kind);

/// Outcome of the full pipeline on one series. `outcome` is empty when the
/// dataset could not be built; `undefined_reason` then says why.
struct DetectionResult {
  std::optional<DetectionOutcome> outcome;
  std::string undefined_reason;
};

DetectionResult detect(const ResponseSeries& series, const DetectionSpec& spec, std::uint64_t seed);

}  // namespace oxn
