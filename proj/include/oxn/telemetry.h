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

// Observers, responses and store: raw simulator events become sampled
// metrics and head-sampled traces, response variables are materialized and
// labeled against the fault window, and everything can be exported as CSV.

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "oxn/config.h"
#include "oxn/simulator.h"

namespace oxn {

struct MetricEvent {
  std::string metric;
  Millis time = 0;
  double value = 0.0;
  std::map<std::string, std::string> labels;  // "service", "kind"

  bool operator==(const MetricEvent&) const = default;
};

struct Span {
  std::uint64_t trace_id = 0;
  std::uint64_t span_id = 0;
  std::optional<std::uint64_t> parent_id;
  std::string service;
  Millis start = 0;
  Millis end = 0;
  Outcome outcome = Outcome::kOk;

  bool operator==(const Span&) const = default;
};

struct CpuSlice {
  ServiceIndex service = 0;
  Millis time = 0;
  double busy_ms = 0.0;

  bool operator==(const CpuSlice&) const = default;
};

enum class Label : std::uint8_t {
  kNormal,
  kFault,
  // Warm-up before t-1 and the settling margin after t1. Kept in the series
  // for export but never used for training or testing.
  kExcluded,
};

std::string_view label_name(Label l);

/// [t-1, t0) normal, [t0, t1] fault, (t1, t1 + settling] excluded, rest
/// normal. Observations before t-1 are excluded as warm-up.
struct FaultWindow {
  Millis normal_start = 0;
  Millis start = 0;
  Millis end = 0;
  Millis settling = kSettlingMargin;

  Label label_for(Millis t) const;
  bool operator==(const FaultWindow&) const = default;
};

struct Observation {
  Millis time = 0;
  double value = 0.0;
  Label label = Label::kNormal;

  bool operator==(const Observation&) const = default;
};

struct ResponseSeries {
  std::string name;
  ResponseKind kind = ResponseKind::kMetric;
  std::vector<Observation> points;
  std::vector<std::string> warnings;

  std::size_t count(Label l) const;
  bool operator==(const ResponseSeries&) const = default;
};

struct RequestStats {
  std::uint64_t issued = 0;
  std::uint64_t ok = 0;
  std::uint64_t errors = 0;
  std::uint64_t timeouts = 0;
  double mean_latency_ms = 0.0;  // over finished requests
  int max_in_flight = 0;

  bool operator==(const RequestStats&) const = default;
};

/// Everything recorded during one run. Immutable once assembled.
struct TelemetryBatch {
  std::string run_id;
  Millis duration = 0;
  std::vector<std::string> services;
  std::vector<MetricEvent> metrics;
  std::vector<Span> spans;  // kept traces only
  std::vector<CpuSlice> cpu;
  std::uint64_t traces_total = 0;
  std::uint64_t traces_kept = 0;
  std::uint64_t spans_total = 0;
  std::optional<FaultWindow> window;
  RequestStats requests;
  std::vector<ResponseSeries> responses;

  /// Restriction to [from, to): metric events by timestamp, spans by
  /// start, CPU slices by start. Trace counters are recomputed from the
  /// kept spans' roots; responses are dropped.
  TelemetryBatch slice(Millis from, Millis to) const;
};

/// Turns raw events into metric events on each point's aggregation grid.
///
/// cpu_gauge: busy milliseconds / window length (summed or averaged over
/// services for "system"). request_counter: increments per window.
/// custom_gauge: last queue-depth write per window, carried forward.
/// Windows without events yield explicit zeros. Events are emitted at
/// window ends k * aggregation_interval for every full window up to
/// `duration`.
std::vector<MetricEvent> sample_metrics(std::span<const RawEvent> raw,
                                        std::span<const std::string> services,
                                        std::span<const MetricPointSpec> points, Millis duration);

/// Head-based sampling: one keep/drop decision per trace, drawn when the
/// root span opens, from a uniform keyed by (seed, trace id). For a fixed
/// seed the kept set at a higher rate is a superset of the kept set at a
/// lower rate. Spans that never closed are dropped. Output is ordered by
/// (trace id, span id).
std::vector<Span> sample_traces(std::span<const RawEvent> raw, std::span<const std::string> services,
                                const TraceConfigSpec& config, std::uint64_t seed,
                                std::uint64_t* traces_total = nullptr);

/// Materializes one response variable from a finished batch. A metric
/// that is absent from the batch yields an empty series plus a warning.
ResponseSeries materialize_response(const ResponseVariableSpec& spec, const TelemetryBatch& batch,
                                    const FaultWindow& window);

/// Assembles the batch for a finished simulation.
TelemetryBatch collect(const Simulation& sim, Millis duration, std::uint64_t trace_seed,
                       std::optional<FaultWindow> window);

/// File name for one exported series: <experiment>_<run>_<response>.csv.
std::string series_file_name(std::string_view experiment, std::string_view run,
                             std::string_view response);

/// Writes one CSV per response series (`timestamp_ms,value,label`) and one
/// spans file (`<experiment>_<run>_spans.csv`). Output is byte-stable.
/// Returns the written paths.
std::vector<std::filesystem::path> export_csv(const TelemetryBatch& batch,
                                              const std::filesystem::path& dir,
                                              std::string_view experiment);

std::string series_csv(const ResponseSeries& series);
std::string spans_csv(std::span<const Span> spans);

}  // namespace oxn
