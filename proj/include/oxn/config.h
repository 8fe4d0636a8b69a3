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

// Declarative experiment description and its YAML file format.
//
// An experiment file names the system under experiment (services, call
// graph, instrumentation points, trace sampling), a closed-loop workload, an
// ordered list of treatments, the response variables to collect, and the
// fault detection mechanism used to score them. See
// schema/experiment.schema.json for the full field reference.

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "oxn/common.h"

namespace oxn {

/// Pseudo-target naming every service at once (for aggregated metrics).
inline constexpr std::string_view kSystemTarget = "system";

struct LognormalSpec {
  double median_ms = 1.0;
  double sigma = 0.0;

  bool operator==(const LognormalSpec&) const = default;
};

struct ServiceSpec {
  std::string id;
  int workers = 1;
  LognormalSpec service_time;
  double cpu_per_request_ms = 0.0;
  double error_response_time_ms = 1.0;

  bool operator==(const ServiceSpec&) const = default;
};

struct CallEdge {
  std::string caller;
  std::string callee;
  double calls_per_request = 1.0;
  Millis latency_ms = 0;

  bool operator==(const CallEdge&) const = default;
};

enum class MetricKind { kCpuGauge, kRequestCounter, kCustomGauge };
enum class SystemAggregation { kSum, kMean };

struct MetricPointSpec {
  std::string name;
  MetricKind kind = MetricKind::kCpuGauge;
  std::string target;
  Millis sampling_interval = 5 * kMillisPerSecond;
  Millis aggregation_interval = 5 * kMillisPerSecond;
  // Only meaningful for cpu_gauge points targeting "system".
  SystemAggregation system_aggregation = SystemAggregation::kSum;

  bool operator==(const MetricPointSpec&) const = default;
};

enum class TraceStrategy { kAlwaysOn, kProbabilistic };

struct TraceConfigSpec {
  TraceStrategy strategy = TraceStrategy::kProbabilistic;
  double rate = 0.01;

  bool operator==(const TraceConfigSpec&) const = default;
};

struct SueSpec {
  std::vector<ServiceSpec> services;
  std::vector<CallEdge> edges;
  std::vector<MetricPointSpec> metric_points;
  TraceConfigSpec trace_config;

  const ServiceSpec* find_service(std::string_view id) const;
  const MetricPointSpec* find_metric(std::string_view name) const;
  /// Services without inbound edges. A valid SUE has exactly one.
  std::vector<std::string> entry_services() const;

  bool operator==(const SueSpec&) const = default;
};

struct WorkloadSpec {
  int users = 1;
  Millis duration = 60 * kMillisPerSecond;
  LognormalSpec think_time{1000.0, 0.25};
  Millis ramp_up = 0;
  Millis timeout = 10 * kMillisPerSecond;

  bool operator==(const WorkloadSpec&) const = default;
};

// Fault effects.

struct PauseFault {
  bool operator==(const PauseFault&) const = default;
};
struct KillFault {
  bool operator==(const KillFault&) const = default;
};
struct NetworkDelayFault {
  Millis min_ms = 0;
  Millis max_ms = 0;
  bool operator==(const NetworkDelayFault&) const = default;
};
struct PacketLossFault {
  double probability = 0.0;
  Millis retransmit_delay_ms = 200;
  double retransmit_cpu_ms = 0.0;
  bool operator==(const PacketLossFault&) const = default;
};
struct PacketCorruptionFault {
  double probability = 0.0;
  Millis retransmit_delay_ms = 200;
  double retransmit_cpu_ms = 0.0;
  bool operator==(const PacketCorruptionFault&) const = default;
};
struct StressFault {
  double factor = 1.0;
  bool operator==(const StressFault&) const = default;
};

using FaultEffect = std::variant<PauseFault, KillFault, NetworkDelayFault,
                                 PacketLossFault, PacketCorruptionFault, StressFault>;

struct FaultTreatment {
  FaultEffect effect;
  std::string target;
  Millis start = 0;
  Millis end = 0;

  bool operator==(const FaultTreatment&) const = default;
};

// Instrumentation changes.

struct MetricSamplingChange {
  std::string metric;
  Millis interval = 0;
  // Defaults to the new sampling interval when absent.
  std::optional<Millis> aggregation_interval;
  bool operator==(const MetricSamplingChange&) const = default;
};
struct TracingRateChange {
  double rate = 0.0;
  bool operator==(const TracingRateChange&) const = default;
};
struct TracingStrategyChange {
  TraceStrategy strategy = TraceStrategy::kProbabilistic;
  bool operator==(const TracingStrategyChange&) const = default;
};

using InstrumentationChange =
    std::variant<MetricSamplingChange, TracingRateChange, TracingStrategyChange>;

struct TreatmentSpec {
  std::string name;
  std::variant<FaultTreatment, InstrumentationChange> body;

  bool is_fault() const { return std::holds_alternative<FaultTreatment>(body); }
  const FaultTreatment& fault() const { return std::get<FaultTreatment>(body); }
  const InstrumentationChange& instrumentation() const {
    return std::get<InstrumentationChange>(body);
  }

  bool operator==(const TreatmentSpec&) const = default;
};

/// Treatment vocabulary key as written in experiment files, e.g. "pause".
std::string_view treatment_kind_name(const TreatmentSpec& t);

enum class ResponseKind { kMetric, kTraceDuration };

struct ResponseVariableSpec {
  std::string name;
  ResponseKind kind = ResponseKind::kMetric;
  // Metric name for kMetric, service id for kTraceDuration.
  std::string source;

  bool operator==(const ResponseVariableSpec&) const = default;
};

enum class DetectionMechanismKind { kLogisticRegression, kThresholdAlert };

struct DetectionSpec {
  DetectionMechanismKind mechanism = DetectionMechanismKind::kLogisticRegression;
  double alpha = 0.7;
  double split_ratio = 0.7;
  int feature_window = 3;
  // logistic_regression
  double l2 = 1e-4;
  double tolerance = 1e-6;
  // threshold_alert
  double threshold_k = 3.0;

  bool operator==(const DetectionSpec&) const = default;
};

/// Linear CPU cost coefficients, all in CPU milliseconds per unit.
struct CostModel {
  double collector_per_metric_event_ms = 0.0;
  double collector_per_span_ms = 0.0;
  double trace_backend_per_span_ms = 0.0;
  double metrics_backend_per_metric_event_ms = 0.0;
  double app_per_instrumentation_call_ms = 0.0;

  static CostModel defaults();

  bool operator==(const CostModel&) const = default;
};

struct ExperimentSpec {
  std::string name;
  std::uint64_t seed = 0;
  int repetitions = 1;
  SueSpec sue;
  WorkloadSpec workload;
  std::vector<TreatmentSpec> treatments;
  std::vector<ResponseVariableSpec> responses;
  DetectionSpec detection;
  CostModel cost_model = CostModel::defaults();

  bool operator==(const ExperimentSpec&) const = default;
};

struct Violation {
  std::string field;
  std::string message;

  bool operator==(const Violation&) const = default;
};

/// Parses an experiment document. Applies defaults and checks structure
/// (types, required and unknown fields, nonempty responses). Semantic
/// invariants are left to validate().
ExperimentSpec parse_experiment(std::string_view text);

ExperimentSpec load_experiment(const std::filesystem::path& path);

/// Canonical YAML rendering. parse_experiment(render_experiment(s)) == s.
std::string render_experiment(const ExperimentSpec& spec);

/// Checks every experiment invariant. Returns an empty list iff the spec
/// is valid.
std::vector<Violation> validate(const ExperimentSpec& spec);

/// Stable 64-bit digest of the canonical rendering, as 16 hex digits.
std::string spec_digest(const ExperimentSpec& spec);

}  // namespace oxn
