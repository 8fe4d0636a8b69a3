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

#include "oxn/detection.h"

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>

namespace oxn {

namespace {

constexpr std::size_t kMinPerClass = 4;

double sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

// log(1 + exp(z)) without overflow.
double softplus(double z) { return z > 0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)); }

void shuffle(std::vector<std::size_t>& v, Rng& rng) {
  for (std::size_t i = v.size(); i > 1; --i) {
    std::swap(v[i - 1], v[rng.below(i)]);
  }
}

}  // namespace

std::size_t LabeledDataset::count(Split s, int label) const {
  std::size_t n = 0;
  for (std::size_t i = 0; i < rows(); ++i) {
    if (split[i] == s && labels[i] == label) ++n;
  }
  return n;
}

std::vector<std::size_t> LabeledDataset::indices(Split s) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < rows(); ++i) {
    if (split[i] == s) out.push_back(i);
  }
  return out;
}

LabeledDataset build_dataset(const ResponseSeries& series, double split_ratio, Rng& rng,
                             int window) {
  if (window < 1) throw ConfigError("feature window must be at least 1");
  const std::size_t normal = series.count(Label::kNormal);
  const std::size_t fault = series.count(Label::kFault);
  if (normal == 0 || fault == 0) {
    throw DatasetError("class absent: " + std::to_string(fault) + " fault and " +
                       std::to_string(normal) + " normal observations");
  }
  if (normal < kMinPerClass || fault < kMinPerClass) {
    throw DatasetError("insufficient data: " + std::to_string(fault) + " fault and " +
                       std::to_string(normal) + " normal observations (need " +
                       std::to_string(kMinPerClass) + " of each)");
  }

  std::vector<std::vector<double>> rows;
  std::vector<std::uint8_t> labels;
  for (std::size_t i = 0; i < series.points.size(); ++i) {
    const auto& p = series.points[i];
    if (p.label == Label::kExcluded) continue;
    std::vector<double> row(static_cast<std::size_t>(window), 0.0);
    for (int lag = 0; lag < window; ++lag) {
      if (i >= static_cast<std::size_t>(lag)) row[lag] = series.points[i - lag].value;
    }
    rows.push_back(std::move(row));
    labels.push_back(p.label == Label::kFault ? 1 : 0);
  }

  std::vector<Split> split(rows.size(), Split::kTest);
  std::vector<std::size_t> train_by_class[2];
  for (int cls = 0; cls < 2; ++cls) {
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < rows.size(); ++i) {
      if (labels[i] == cls) idx.push_back(i);
    }
    shuffle(idx, rng);
    const auto n = static_cast<long>(idx.size());
    const long n_train =
        std::clamp(std::lround(split_ratio * static_cast<double>(n)), 1L, n - 1);
    for (long k = 0; k < n_train; ++k) {
      split[idx[k]] = Split::kTrain;
      train_by_class[cls].push_back(idx[k]);
    }
    std::sort(train_by_class[cls].begin(), train_by_class[cls].end());
  }

  // Oversample the minority class of the training split.
  const int minority = train_by_class[1].size() < train_by_class[0].size() ? 1 : 0;
  const auto& pool = train_by_class[minority];
  const std::size_t target = train_by_class[1 - minority].size();
  for (std::size_t have = pool.size(); have < target; ++have) {
    const std::size_t src = pool[rng.below(pool.size())];
    rows.push_back(rows[src]);
    labels.push_back(labels[src]);
    split.push_back(Split::kTrain);
  }

  LabeledDataset ds;
  ds.features.resize(static_cast<Eigen::Index>(rows.size()), window);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (int j = 0; j < window; ++j) ds.features(static_cast<Eigen::Index>(i), j) = rows[i][j];
  }
  ds.labels = std::move(labels);
  ds.split = std::move(split);
  for (int lag = 0; lag < window; ++lag) {
    ds.feature_names.push_back(lag == 0 ? series.name : series.name + "_lag" + std::to_string(lag));
  }
  return ds;
}

LabeledDataset zscore_fit_apply(const LabeledDataset& ds, Normalization* fitted) {
  const auto train = ds.indices(Split::kTrain);
  if (train.empty()) throw DatasetError("empty training split");
  Normalization norm;
  std::vector<double> means, stddevs;
  LabeledDataset out;
  out.labels = ds.labels;
  out.split = ds.split;
  out.warnings = ds.warnings;
  for (std::size_t j = 0; j < ds.cols(); ++j) {
    const auto col = static_cast<Eigen::Index>(j);
    double mean = 0.0;
    for (std::size_t i : train) mean += ds.features(static_cast<Eigen::Index>(i), col);
    mean /= static_cast<double>(train.size());
    double var = 0.0;
    for (std::size_t i : train) {
      const double d = ds.features(static_cast<Eigen::Index>(i), col) - mean;
      var += d * d;
    }
    var /= static_cast<double>(train.size());
    const double stddev = std::sqrt(var);
    if (!(stddev > 1e-12 * std::max(1.0, std::abs(mean)))) {
      out.warnings.push_back("dropped constant feature '" +
                             (j < ds.feature_names.size() ? ds.feature_names[j] : std::to_string(j)) +
                             "'");
      continue;
    }
    norm.kept_columns.push_back(j);
    means.push_back(mean);
    stddevs.push_back(stddev);
  }
  norm.mean = Eigen::Map<Eigen::VectorXd>(means.data(), static_cast<Eigen::Index>(means.size()));
  norm.stddev = Eigen::Map<Eigen::VectorXd>(stddevs.data(), static_cast<Eigen::Index>(stddevs.size()));

  out.features.resize(ds.features.rows(), static_cast<Eigen::Index>(norm.kept_columns.size()));
  for (std::size_t k = 0; k < norm.kept_columns.size(); ++k) {
    const auto src = static_cast<Eigen::Index>(norm.kept_columns[k]);
    const auto dst = static_cast<Eigen::Index>(k);
    out.features.col(dst) =
        (ds.features.col(src).array() - norm.mean[dst]) / norm.stddev[dst];
    if (k < ds.feature_names.size()) out.feature_names.push_back(ds.feature_names[norm.kept_columns[k]]);
  }
  if (fitted) *fitted = std::move(norm);
  return out;
}

double LogRegModel::probability(const Eigen::Ref<const Eigen::RowVectorXd>& x) const {
  return sigmoid(x.dot(weights) + bias);
}

double logreg_loss(const Eigen::MatrixXd& x, const std::vector<std::uint8_t>& y,
                   const Eigen::VectorXd& w, double b, double l2) {
  const Eigen::VectorXd z = (x * w).array() + b;
  double loss = 0.0;
  for (Eigen::Index i = 0; i < z.size(); ++i) loss += softplus(z[i]) - y[i] * z[i];
  return loss / static_cast<double>(z.size()) + 0.5 * l2 * w.squaredNorm();
}

Eigen::VectorXd logreg_gradient(const Eigen::MatrixXd& x, const std::vector<std::uint8_t>& y,
                                const Eigen::VectorXd& w, double b, double l2) {
  const Eigen::Index n = x.rows();
  const Eigen::Index d = x.cols();
  Eigen::VectorXd residual(n);
  const Eigen::VectorXd z = (x * w).array() + b;
  for (Eigen::Index i = 0; i < n; ++i) residual[i] = sigmoid(z[i]) - y[i];
  Eigen::VectorXd g(d + 1);
  g.head(d) = x.transpose() * residual / static_cast<double>(n) + l2 * w;
  g[d] = residual.mean();
  return g;
}

LogRegModel train_logreg(const LabeledDataset& ds, double l2, double tol, int max_iterations) {
  const auto train = ds.indices(Split::kTrain);
  if (train.empty()) throw DatasetError("empty training split");
  const Eigen::Index n = static_cast<Eigen::Index>(train.size());
  const Eigen::Index d = static_cast<Eigen::Index>(ds.cols());
  Eigen::MatrixXd x(n, d);
  std::vector<std::uint8_t> y(train.size());
  for (Eigen::Index i = 0; i < n; ++i) {
    x.row(i) = ds.features.row(static_cast<Eigen::Index>(train[i]));
    y[i] = ds.labels[train[i]];
  }

  LogRegModel model;
  model.weights = Eigen::VectorXd::Zero(d);
  double loss = logreg_loss(x, y, model.weights, model.bias, l2);
  model.loss_history.push_back(loss);

  for (int iter = 0; iter < max_iterations; ++iter) {
    const Eigen::VectorXd g = logreg_gradient(x, y, model.weights, model.bias, l2);
    model.gradient_norm = g.lpNorm<Eigen::Infinity>();
    model.iterations = iter;
    if (model.gradient_norm < tol) return model;

    // Newton direction on [w; b]. The bias is unregularized, so a tiny
    // ridge keeps the system solvable on separable data.
    Eigen::MatrixXd h = Eigen::MatrixXd::Zero(d + 1, d + 1);
    const Eigen::VectorXd z = (x * model.weights).array() + model.bias;
    for (Eigen::Index i = 0; i < n; ++i) {
      const double p = sigmoid(z[i]);
      const double s = p * (1.0 - p);
      Eigen::VectorXd xi(d + 1);
      xi.head(d) = x.row(i).transpose();
      xi[d] = 1.0;
      h.noalias() += s * xi * xi.transpose();
    }
    h /= static_cast<double>(n);
    for (Eigen::Index j = 0; j < d; ++j) h(j, j) += l2;
    h.diagonal().array() += 1e-12;
    Eigen::VectorXd step = -h.ldlt().solve(g);
    if (!step.allFinite() || step.dot(g) >= 0) step = -g;

    double t = 1.0;
    const double slope = g.dot(step);
    Eigen::VectorXd w_next;
    double b_next = 0.0, next_loss = loss;
    bool accepted = false;
    for (int halving = 0; halving < 60; ++halving) {
      w_next = model.weights + t * step.head(d);
      b_next = model.bias + t * step[d];
      next_loss = logreg_loss(x, y, w_next, b_next, l2);
      if (next_loss <= loss + 1e-4 * t * slope) {
        accepted = true;
        break;
      }
      t *= 0.5;
    }
    if (!accepted) {
      // No further decrease is representable; treat as converged if the
      // gradient is already tiny, otherwise report non-convergence.
      if (model.gradient_norm < std::sqrt(tol)) return model;
      break;
    }
    model.weights = w_next;
    model.bias = b_next;
    loss = next_loss;
    model.loss_history.push_back(loss);
  }
  throw RuntimeError("logistic regression did not converge: gradient norm " +
                     std::to_string(model.gradient_norm) + " after " +
                     std::to_string(model.iterations) + " iterations");
}

namespace {

DetectionOutcome score(std::string mechanism, const LabeledDataset& ds,
                       const std::function<bool(Eigen::Index)>& predict_fault) {
  const auto test = ds.indices(Split::kTest);
  if (test.empty()) throw DatasetError("empty test split");
  std::size_t correct = 0, tp = 0, tn = 0, pos = 0, neg = 0;
  for (std::size_t i : test) {
    const bool predicted = predict_fault(static_cast<Eigen::Index>(i));
    const bool actual = ds.labels[i] == 1;
    if (predicted == actual) ++correct;
    if (actual) {
      ++pos;
      if (predicted) ++tp;
    } else {
      ++neg;
      if (!predicted) ++tn;
    }
  }
  DetectionOutcome out;
  out.mechanism = std::move(mechanism);
  out.test_rows = test.size();
  out.accuracy = static_cast<double>(correct) / static_cast<double>(test.size());
  const double tpr = pos ? static_cast<double>(tp) / static_cast<double>(pos) : 0.0;
  const double tnr = neg ? static_cast<double>(tn) / static_cast<double>(neg) : 0.0;
  out.balanced_accuracy = pos && neg ? 0.5 * (tpr + tnr) : out.accuracy;
  return out;
}

}  // namespace

DetectionOutcome evaluate_df(const LogRegModel& model, const LabeledDataset& ds) {
  auto out = score("logistic_regression", ds, [&](Eigen::Index i) {
    return model.probability(ds.features.row(i)) > 0.5;
  });
  out.df = out.accuracy;
  return out;
}

ThresholdAlert ThresholdAlert::fit(const LabeledDataset& ds, double k) {
  if (ds.cols() == 0) throw DatasetError("no features");
  ThresholdAlert alert;
  alert.k = k;
  std::vector<double> values;
  for (std::size_t i : ds.indices(Split::kTrain)) {
    if (ds.labels[i] == 0) values.push_back(ds.features(static_cast<Eigen::Index>(i), 0));
  }
  if (values.empty()) throw DatasetError("no normal training rows");
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= static_cast<double>(values.size());
  double var = 0.0;
  for (double v : values) var += (v - mean) * (v - mean);
  alert.normal_mean = mean;
  alert.normal_stddev = std::sqrt(var / static_cast<double>(values.size()));
  return alert;
}

bool ThresholdAlert::fires(double value) const {
  return std::abs(value - normal_mean) > k * normal_stddev;
}

DetectionOutcome evaluate_df(const ThresholdAlert& alert, const LabeledDataset& ds) {
  auto out = score("threshold_alert", ds, [&](Eigen::Index i) { return alert.fires(ds.features(i, 0)); });
  out.df = out.balanced_accuracy;
  return out;
}

namespace {

class LogisticRegressionMechanism : public DetectionMechanism {
 public:
  explicit LogisticRegressionMechanism(const DetectionSpec& spec) : spec_(spec) {}
  std::string id() const override { return "logistic_regression"; }
  DetectionOutcome fit_evaluate(const LabeledDataset& raw) const override {
    Normalization norm;
    LabeledDataset ds = zscore_fit_apply(raw, &norm);
    if (ds.cols() == 0) throw DatasetError("no informative feature: series is constant");
    LogRegModel model = train_logreg(ds, spec_.l2, spec_.tolerance);
    model.normalization = std::move(norm);
    return evaluate_df(model, ds);
  }

 private:
  DetectionSpec spec_;
};

class ThresholdAlertMechanism : public DetectionMechanism {
 public:
  explicit ThresholdAlertMechanism(const DetectionSpec& spec) : spec_(spec) {}
  std::string id() const override { return "threshold_alert"; }
  DetectionOutcome fit_evaluate(const LabeledDataset& ds) const override {
    return evaluate_df(ThresholdAlert::fit(ds, spec_.threshold_k), ds);
  }

 private:
  DetectionSpec spec_;
};

struct Registry {
  std::mutex mu;
  std::map<std::string, MechanismFactory> factories{
      {"logistic_regression",
       [](const DetectionSpec& s) { return std::make_unique<LogisticRegressionMechanism>(s); }},
      {"threshold_alert",
       [](const DetectionSpec& s) { return std::make_unique<ThresholdAlertMechanism>(s); }},
  };
};

Registry& registry() {
  static Registry r;
  return r;
}

}  // namespace

void register_mechanism(const std::string& name, MechanismFactory factory) {
  auto& r = registry();
  std::lock_guard lock(r.mu);
  r.factories[name] = std::move(factory);
}

std::unique_ptr<DetectionMechanism> make_mechanism(const std::string& name,
                                                   const DetectionSpec& spec) {
  auto& r = registry();
  std::lock_guard lock(r.mu);
  auto it = r.factories.find(name);
  if (it == r.factories.end()) throw ConfigError("unknown detection mechanism '" + name + "'");
  return it->second(spec);
}

std::string mechanism_name(DetectionMechanismKind kind) {
  return kind == DetectionMechanismKind::kThresholdAlert ? "threshold_alert" : "logistic_regression";
}

DetectionResult detect(const ResponseSeries& series, const DetectionSpec& spec, std::uint64_t seed) {
  DetectionResult result;
  try {
    Rng rng(seed);
    const LabeledDataset ds = build_dataset(series, spec.split_ratio, rng, spec.feature_window);
    result.outcome = make_mechanism(mechanism_name(spec.mechanism), spec)->fit_evaluate(ds);
  } catch (const DatasetError& e) {
    result.undefined_reason = e.what();
  }
  return result;
}

}  // namespace oxn
