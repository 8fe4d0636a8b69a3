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

// Runs a whole experiment: every fault treatment is expanded into its own
// series of repetitions, each repetition is simulated, its responses are
// materialized and scored by the detection mechanism, and the results are
// reduced into an observability report.

#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>
#include "oxn/config.h"
#include "oxn/cost.h"
#include "oxn/detection.h"
#include "oxn/scoring.h"
#include "oxn/telemetry.h"

namespace oxn {

inline constexpr int kReportSchemaVersion = 1;

struct RunOptions {
  int parallel = 1;
  std::optional<std::filesystem::path> csv_dir;
  bool frozen_clock = false;
  /// Invoked with every finished batch (in arbitrary order, possibly from
  /// worker threads). Used by tests to inspect raw telemetry.
  std::function<void(const TelemetryBatch&)> batch_observer;
};

struct ResponseOutcome {
  std::string response;
  DetectionResult detection;
  std::size_t normal = 0;
  std::size_t fault = 0;
  std::size_t excluded = 0;
  std::vector<std::string> warnings;
};

struct ExperimentRun {
  std::string fault;
  int index = 0;
  std::uint64_t seed = 0;
  RequestStats requests;
  std::uint64_t traces_total = 0;
  std::uint64_t traces_kept = 0;
  std::vector<ResponseOutcome> responses;
  CostReport cost;
};

struct ObservabilityReport {
  std::string experiment;
  std::string spec_digest;
  std::string mechanism;
  std::uint64_t base_seed = 0;
  int repetitions = 0;
  VisibilityMatrix matrix;  // mean DF per (fault, response)
  ScoreReport scores;
  CostReport cost;  // mean over all runs
  std::vector<ExperimentRun> runs;  // ordered by (fault, run index)
  double elapsed_seconds = 0.0;
  std::string started_at;  // empty with a frozen clock
};

/// Seed of repetition `index`. Identical across fault series, so every
/// fault sees the same workload randomness.
std::uint64_t run_seed(std::uint64_t base_seed, int index);

/// Simulates one repetition of one fault treatment and scores it.
ExperimentRun run_single(const ExperimentSpec& spec, const TreatmentSpec& fault, int index,
                         const RunOptions& options = {});

/// Runs every fault treatment for spec.repetitions runs. The spec must be
/// valid; throws ConfigError otherwise and RuntimeError (with run, fault
/// and response context) when a run fails.
ObservabilityReport run_experiment(const ExperimentSpec& spec, const RunOptions& options = {});

nlohmann::ordered_json report_to_json(const ObservabilityReport& report, bool frozen_clock);
std::string render_report(const ObservabilityReport& report, bool frozen_clock);

/// Recomputes v, FC and OFO from a report's own DF table and alpha.
/// Returns a list of inconsistencies (empty when consistent).
std::vector<std::string> check_report_consistency(const nlohmann::json& report);

/// Score report reconstructed from a report document.
ScoreReport scores_from_json(const nlohmann::json& report);

/// Side-by-side comparison of two reports: per-fault and total FC deltas,
/// OFO delta, cost delta and overhead of B relative to A. Throws Error on
/// a dimension mismatch.
nlohmann::ordered_json compare_reports(const nlohmann::json& a, const nlohmann::json& b);

}  // namespace oxn
