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

#include "oxn/orchestrator.h"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <ctime>
#include <exception>
#include <thread>

#include "oxn/rng.h"
#include "oxn/simulator.h"
#include "oxn/treatments.h"
#include "oxn/workload.h"

namespace oxn {

using json = nlohmann::json;
using ordered_json = nlohmann::ordered_json;

std::uint64_t run_seed(std::uint64_t base_seed, int index) {
  return derive_seed(base_seed + static_cast<std::uint64_t>(index), hash_name("run"));
}

ExperimentRun run_single(const ExperimentSpec& spec, const TreatmentSpec& fault, int index,
                         const RunOptions& options) {
  ExperimentRun run;
  run.fault = fault.name;
  run.index = index;
  run.seed = run_seed(spec.seed, index);

  const auto instrumentation = instrumentation_treatments(spec.treatments);
  const SueSpec sue = apply_instrumentation(spec.sue, instrumentation);
  const TreatmentSpec faults[] = {fault};
  FaultSchedule schedule = compile_schedule(faults, spec.workload.duration);

  SimOptions sim_options;
  sim_options.client_timeout = spec.workload.timeout;
  sim_options.record_hops = false;
  for (const auto& m : sue.metric_points) {
    if (m.kind == MetricKind::kCustomGauge) sim_options.emit_queue_gauge = true;
  }
  Simulation sim(sue, run.seed, std::move(schedule), sim_options);
  run_workload(sim, spec.workload);

  const auto& f = fault.fault();
  const FaultWindow window{spec.workload.ramp_up, f.start, f.end, kSettlingMargin};
  TelemetryBatch batch =
      collect(sim, spec.workload.duration, derive_seed(run.seed, hash_name("traces")), window);
  batch.run_id = fault.name + "-r" + std::to_string(index);

  for (const auto& response : spec.responses) {
    ResponseSeries series = materialize_response(response, batch, window);
    ResponseOutcome outcome;
    outcome.response = response.name;
    outcome.normal = series.count(Label::kNormal);
    outcome.fault = series.count(Label::kFault);
    outcome.excluded = series.count(Label::kExcluded);
    outcome.warnings = series.warnings;
    try {
      outcome.detection =
          detect(series, spec.detection, derive_seed(run.seed, hash_name("detect:" + response.name)));
    } catch (const std::exception& e) {
      throw RuntimeError("run " + std::to_string(index) + ", fault '" + fault.name +
                         "', response '" + response.name + "': " + e.what());
    }
    run.responses.push_back(std::move(outcome));
    batch.responses.push_back(std::move(series));
  }

  run.requests = batch.requests;
  run.traces_total = batch.traces_total;
  run.traces_kept = batch.traces_kept;
  run.cost = account(batch, spec.cost_model);
  if (options.csv_dir) export_csv(batch, *options.csv_dir, spec.name);
  if (options.batch_observer) options.batch_observer(batch);
  return run;
}

namespace {

std::string iso_now() {
  const std::time_t t = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace

ObservabilityReport run_experiment(const ExperimentSpec& spec, const RunOptions& options) {
  if (auto violations = validate(spec); !violations.empty()) {
    std::string msg = "invalid experiment:";
    for (const auto& v : violations) msg += "\n  " + v.field + ": " + v.message;
    throw ConfigError(msg);
  }
  const auto started = std::chrono::steady_clock::now();
  const auto faults = fault_treatments(spec.treatments);
  const int reps = spec.repetitions;
  const std::size_t total = faults.size() * static_cast<std::size_t>(reps);

  std::vector<std::optional<ExperimentRun>> results(total);
  std::vector<std::exception_ptr> errors(total);
  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    for (std::size_t task = next++; task < total; task = next++) {
      try {
        results[task] = run_single(spec, faults[task / reps], static_cast<int>(task % reps), options);
      } catch (...) {
        errors[task] = std::current_exception();
      }
    }
  };
  const int threads = std::clamp(options.parallel, 1, static_cast<int>(std::max<std::size_t>(total, 1)));
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (int i = 0; i < threads; ++i) pool.emplace_back(worker);
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }

  ObservabilityReport report;
  report.experiment = spec.name;
  report.spec_digest = spec_digest(spec);
  report.mechanism = mechanism_name(spec.detection.mechanism);
  report.base_seed = spec.seed;
  report.repetitions = reps;

  std::vector<std::string> fault_names, response_names;
  for (const auto& f : faults) fault_names.push_back(f.name);
  for (const auto& r : spec.responses) response_names.push_back(r.name);

  // Deterministic reduction in (fault, run) order. DFs are averaged over
  // the runs where they are defined, then thresholded. A mean resting on
  // fewer than half of the runs is not reported.
  std::vector<std::vector<std::optional<double>>> mean_df(
      faults.size(), std::vector<std::optional<double>>(spec.responses.size()));
  std::vector<CostReport> costs;
  for (std::size_t fi = 0; fi < faults.size(); ++fi) {
    for (std::size_t ri = 0; ri < spec.responses.size(); ++ri) {
      double sum = 0.0;
      int defined = 0;
      for (int k = 0; k < reps; ++k) {
        const auto& d = results[fi * reps + k]->responses[ri].detection;
        if (d.outcome) {
          sum += d.outcome->df;
          ++defined;
        }
      }
      if (defined > 0 && 2 * defined >= reps) mean_df[fi][ri] = sum / defined;
    }
  }
  for (auto& r : results) {
    costs.push_back(r->cost);
    report.runs.push_back(std::move(*r));
  }
  report.matrix = VisibilityMatrix::from_df(fault_names, response_names, mean_df, spec.detection.alpha);
  report.scores = score(report.matrix);
  report.cost = mean_cost(costs);
  report.elapsed_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  if (!options.frozen_clock) report.started_at = iso_now();
  return report;
}

// ---------------------------------------------------------------------------
// Report documents

namespace {

ordered_json optional_number(const std::optional<double>& v) {
  return v ? ordered_json(*v) : ordered_json(nullptr);
}

ordered_json cost_json(const CostReport& c) {
  ordered_json app = ordered_json::object();
  for (const auto& [service, v] : c.application) app[service] = v;
  return ordered_json{{"application", app},
                      {"application_total", c.application_total()},
                      {"collector", c.collector},
                      {"metrics_backend", c.metrics_backend},
                      {"trace_backend", c.trace_backend},
                      {"total", c.total}};
}

}  // namespace

ordered_json report_to_json(const ObservabilityReport& report, bool frozen_clock) {
  ordered_json experiment{{"name", report.experiment},
                          {"schema_version", kReportSchemaVersion},
                          {"spec_digest", report.spec_digest},
                          {"mechanism", report.mechanism},
                          {"alpha", report.matrix.alpha},
                          {"base_seed", report.base_seed},
                          {"repetitions", report.repetitions},
                          {"faults", report.matrix.faults},
                          {"responses", report.matrix.responses}};
  if (frozen_clock) {
    experiment["wall_clock"] = nullptr;
  } else {
    experiment["wall_clock"] = {{"started_at", report.started_at},
                                {"elapsed_seconds", report.elapsed_seconds}};
  }

  ordered_json visibility = ordered_json::array();
  for (std::size_t fi = 0; fi < report.matrix.faults.size(); ++fi) {
    for (std::size_t ri = 0; ri < report.matrix.responses.size(); ++ri) {
      const auto& cell = report.matrix.cells[fi][ri];
      ordered_json per_run = ordered_json::array();
      int defined = 0;
      for (const auto& run : report.runs) {
        if (run.fault != report.matrix.faults[fi]) continue;
        const auto& d = run.responses[ri].detection;
        per_run.push_back(d.outcome ? ordered_json(d.outcome->df) : ordered_json(nullptr));
        defined += d.outcome ? 1 : 0;
      }
      ordered_json entry{{"fault", report.matrix.faults[fi]},
                         {"response", report.matrix.responses[ri]},
                         {"mean_df", optional_number(cell.df)},
                         {"v", cell.v},
                         {"runs_defined", defined},
                         {"per_run_df", per_run}};
      if (!cell.df) entry["note"] = "DF undefined, v=0";
      visibility.push_back(std::move(entry));
    }
  }

  ordered_json coverage = ordered_json::object();
  for (std::size_t fi = 0; fi < report.scores.faults.size(); ++fi) {
    coverage[report.scores.faults[fi]] = report.scores.fault_coverage[fi].str();
  }

  ordered_json runs = ordered_json::array();
  for (const auto& run : report.runs) {
    ordered_json responses = ordered_json::array();
    for (const auto& r : run.responses) {
      ordered_json entry{{"response", r.response},
                         {"observations", {{"normal", r.normal}, {"fault", r.fault}, {"excluded", r.excluded}}}};
      if (r.detection.outcome) {
        entry["df"] = r.detection.outcome->df;
        entry["accuracy"] = r.detection.outcome->accuracy;
        entry["balanced_accuracy"] = r.detection.outcome->balanced_accuracy;
        entry["test_rows"] = r.detection.outcome->test_rows;
      } else {
        entry["df"] = nullptr;
        entry["undefined_reason"] = r.detection.undefined_reason;
      }
      if (!r.warnings.empty()) entry["warnings"] = r.warnings;
      responses.push_back(std::move(entry));
    }
    runs.push_back(ordered_json{
        {"fault", run.fault},
        {"run", run.index},
        {"seed", run.seed},
        {"requests",
         {{"issued", run.requests.issued},
          {"ok", run.requests.ok},
          {"errors", run.requests.errors},
          {"timeouts", run.requests.timeouts},
          {"mean_latency_ms", run.requests.mean_latency_ms},
          {"max_in_flight", run.requests.max_in_flight}}},
        {"traces", {{"total", run.traces_total}, {"kept", run.traces_kept}}},
        {"responses", responses},
        {"cost_total", run.cost.total}});
  }

  return ordered_json{{"experiment", experiment},
                      {"visibility", visibility},
                      {"fault_coverage", coverage},
                      {"ofo", report.scores.ofo.str()},
                      {"cost", cost_json(report.cost)},
                      {"runs", runs}};
}

std::string render_report(const ObservabilityReport& report, bool frozen_clock) {
  return report_to_json(report, frozen_clock).dump(2) + "\n";
}

ScoreReport scores_from_json(const json& report) {
  try {
    ScoreReport s;
    for (const auto& f : report.at("experiment").at("faults")) {
      const auto name = f.get<std::string>();
      s.faults.push_back(name);
      s.fault_coverage.push_back(Ratio::parse(report.at("fault_coverage").at(name).get<std::string>()));
    }
    s.l = static_cast<int>(s.faults.size());
    s.n = static_cast<int>(report.at("experiment").at("responses").size());
    s.ofo = Ratio::parse(report.at("ofo").get<std::string>());
    return s;
  } catch (const json::exception& e) {
    throw Error(std::string("malformed report: ") + e.what());
  }
}

std::vector<std::string> check_report_consistency(const json& report) {
  std::vector<std::string> problems;
  try {
    const double alpha = report.at("experiment").at("alpha").get<double>();
    const auto& faults = report.at("experiment").at("faults");
    const auto& responses = report.at("experiment").at("responses");
    std::vector<std::vector<std::optional<double>>> df(
        faults.size(), std::vector<std::optional<double>>(responses.size()));
    for (const auto& cell : report.at("visibility")) {
      std::size_t fi = 0, ri = 0;
      while (fi < faults.size() && faults[fi] != cell.at("fault")) ++fi;
      while (ri < responses.size() && responses[ri] != cell.at("response")) ++ri;
      if (fi == faults.size() || ri == responses.size()) {
        problems.push_back("visibility cell names an unknown fault or response");
        continue;
      }
      if (!cell.at("mean_df").is_null()) df[fi][ri] = cell.at("mean_df").get<double>();
      const int v = cell.at("v").get<int>();
      const int expected = df[fi][ri] ? visibility(*df[fi][ri], alpha) : 0;
      if (v != expected) {
        problems.push_back("v mismatch for " + faults[fi].get<std::string>() + "/" +
                           responses[ri].get<std::string>());
      }
    }
    std::vector<std::string> fnames, rnames;
    for (const auto& f : faults) fnames.push_back(f.get<std::string>());
    for (const auto& r : responses) rnames.push_back(r.get<std::string>());
    const ScoreReport recomputed = score(VisibilityMatrix::from_df(fnames, rnames, df, alpha));
    const ScoreReport stated = scores_from_json(report);
    for (std::size_t i = 0; i < fnames.size(); ++i) {
      if (!recomputed.fault_coverage[i].identical(stated.fault_coverage[i])) {
        problems.push_back("FC mismatch for " + fnames[i] + ": stated " +
                           stated.fault_coverage[i].str() + ", recomputed " +
                           recomputed.fault_coverage[i].str());
      }
    }
    if (!recomputed.ofo.identical(stated.ofo)) {
      problems.push_back("OFO mismatch: stated " + stated.ofo.str() + ", recomputed " +
                         recomputed.ofo.str());
    }
  } catch (const std::exception& e) {
    problems.push_back(std::string("malformed report: ") + e.what());
  }
  return problems;
}

ordered_json compare_reports(const json& a, const json& b) {
  const ScoreReport sa = scores_from_json(a);
  const ScoreReport sb = scores_from_json(b);
  const ScoreDelta delta = diff_scores(sa, sb);

  ordered_json fc = ordered_json::object();
  for (std::size_t i = 0; i < delta.faults.size(); ++i) {
    fc[delta.faults[i]] = {{"baseline", sa.fault_coverage[i].str()},
                           {"alternative", sb.fault_coverage[i].str()},
                           {"delta", delta.fc_delta[i]}};
  }
  double total_a = 0.0, total_b = 0.0;
  try {
    total_a = a.at("cost").at("total").get<double>();
    total_b = b.at("cost").at("total").get<double>();
  } catch (const json::exception& e) {
    throw Error(std::string("malformed report: ") + e.what());
  }
  ordered_json components = ordered_json::object();
  for (const char* key : {"application_total", "collector", "metrics_backend", "trace_backend"}) {
    const double va = a["cost"].value(key, 0.0);
    const double vb = b["cost"].value(key, 0.0);
    components[key] = {{"baseline", va}, {"alternative", vb}, {"delta", vb - va}};
  }
  return ordered_json{
      {"baseline", a.at("experiment").at("name").get<std::string>()},
      {"alternative", b.at("experiment").at("name").get<std::string>()},
      {"fault_coverage", fc},
      {"delta_fc", delta.fc_delta_total},
      {"ofo", {{"baseline", sa.ofo.str()}, {"alternative", sb.ofo.str()}}},
      {"delta_ofo", delta.ofo_delta},
      {"cost",
       {{"baseline_total", total_a},
        {"alternative_total", total_b},
        {"delta_total", total_b - total_a},
        {"overhead_pct", overhead(total_a, total_b)},
        {"components", components}}}};
}

}  // namespace oxn
