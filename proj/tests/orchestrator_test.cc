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

#include <filesystem>
#include <fstream>
#include <mutex>
#include <set>
#include <sstream>

#include "oxn/orchestrator.h"

namespace oxn {
namespace {

std::filesystem::path source_dir() { return OXN_SOURCE_DIR; }

ExperimentSpec baseline() { return load_experiment(source_dir() / "experiments" / "baseline.yaml"); }

std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Shared across tests; the canonical experiment takes a couple of seconds.
const ObservabilityReport& baseline_report() {
  static const ObservabilityReport report = run_experiment(baseline());
  return report;
}

TEST(RunSeedTest, DistinctAndReproducible) {
  std::set<std::uint64_t> seeds;
  for (int i = 0; i < 100; ++i) seeds.insert(run_seed(0, i));
  EXPECT_EQ(seeds.size(), 100u);
  EXPECT_EQ(run_seed(7, 3), run_seed(7, 3));
  EXPECT_NE(run_seed(0, 1), run_seed(1, 1));
}

TEST(RunExperimentTest, BaselineShape) {
  const auto& r = baseline_report();
  EXPECT_EQ(r.experiment, "baseline");
  EXPECT_EQ(r.runs.size(), 30u);
  EXPECT_EQ(r.scores.faults.size(), 3u);
  auto doc = report_to_json(r, true);
  for (const char* key : {"experiment", "visibility", "fault_coverage", "ofo", "cost", "runs"}) {
    EXPECT_TRUE(doc.contains(key)) << key;
  }
  EXPECT_EQ(doc["visibility"].size(), 9u);
  EXPECT_EQ(doc["experiment"]["schema_version"], kReportSchemaVersion);
  EXPECT_TRUE(doc["experiment"]["wall_clock"].is_null());
}

TEST(RunExperimentTest, RunZeroDoesNotDependOnRepetitions) {
  auto spec = baseline();
  spec.repetitions = 1;
  auto one = report_to_json(run_experiment(spec), true);
  auto ten = report_to_json(baseline_report(), true);
  ASSERT_EQ(one["runs"].size(), 3u);
  for (int f = 0; f < 3; ++f) EXPECT_EQ(one["runs"][f], ten["runs"][f * 10]) << "fault " << f;
}

TEST(RunExperimentTest, ReportIsSelfConsistent) {
  auto doc = nlohmann::json::parse(render_report(baseline_report(), true));
  EXPECT_TRUE(check_report_consistency(doc).empty());
  auto tampered = doc;
  tampered["ofo"] = "3/3";
  EXPECT_FALSE(check_report_consistency(tampered).empty());
  tampered = doc;
  tampered["visibility"][0]["mean_df"] = 0.1;
  EXPECT_FALSE(check_report_consistency(tampered).empty());
}

TEST(RunExperimentTest, ParallelismDoesNotChangeTheReport) {
  RunOptions options;
  options.parallel = 4;
  EXPECT_EQ(render_report(run_experiment(baseline(), options), true),
            render_report(baseline_report(), true));
}

TEST(RunExperimentTest, MatchesGoldenReport) {
  EXPECT_EQ(render_report(baseline_report(), true),
            read_file(source_dir() / "tests" / "golden" / "baseline.report.json"));
}

TEST(RunExperimentTest, InvalidSpecThrowsConfigError) {
  auto spec = baseline();
  spec.responses.clear();
  EXPECT_THROW(run_experiment(spec), ConfigError);
}

TEST(RunExperimentTest, UndefinedCellIsMarked) {
  auto spec = baseline();
  spec.repetitions = 2;
  // No 60 s counter window closes inside [200 s, 230 s].
  spec.treatments = {TreatmentSpec{
      "short_pause", FaultTreatment{PauseFault{}, "recommendation", 200000, 230000}}};
  auto doc = report_to_json(run_experiment(spec), true);
  const auto& cell = doc["visibility"][1];
  ASSERT_EQ(cell["response"], "recomms_per_minute");
  EXPECT_TRUE(cell["mean_df"].is_null());
  EXPECT_EQ(cell["v"], 0);
  EXPECT_EQ(cell["note"], "DF undefined, v=0");
  const auto& run_response = doc["runs"][0]["responses"][1];
  EXPECT_TRUE(run_response["df"].is_null());
  EXPECT_TRUE(run_response.contains("undefined_reason"));
  EXPECT_TRUE(check_report_consistency(doc).empty());
}

TEST(RunExperimentTest, BatchObserverSeesEveryRun) {
  auto spec = baseline();
  spec.repetitions = 2;
  std::set<std::string> ids;
  std::mutex mu;
  RunOptions options;
  options.parallel = 3;
  options.batch_observer = [&](const TelemetryBatch& b) {
    std::lock_guard lock(mu);
    ids.insert(b.run_id);
  };
  run_experiment(spec, options);
  EXPECT_EQ(ids, (std::set<std::string>{"pause-r0", "pause-r1", "packet_loss-r0",
                                        "packet_loss-r1", "network_delay-r0",
                                        "network_delay-r1"}));
}

TEST(CompareTest, SelfComparisonIsZero) {
  auto doc = nlohmann::json::parse(render_report(baseline_report(), true));
  auto c = compare_reports(doc, doc);
  EXPECT_EQ(c["delta_fc"], 0);
  EXPECT_EQ(c["delta_ofo"], 0);
  EXPECT_EQ(c["cost"]["delta_total"], 0.0);
  EXPECT_EQ(c["cost"]["overhead_pct"], 0.0);
  for (const auto& [_, f] : c["fault_coverage"].items()) EXPECT_EQ(f["delta"], 0);
}

TEST(CompareTest, ExtraResponseIsADimensionMismatch) {
  auto a = nlohmann::json::parse(render_report(baseline_report(), true));
  auto spec = baseline();
  spec.repetitions = 1;
  spec.responses.push_back({"trace_duration_frontend", ResponseKind::kTraceDuration, "frontend"});
  auto b = nlohmann::json::parse(render_report(run_experiment(spec), true));
  EXPECT_THROW(compare_reports(a, b), Error);
}

TEST(CompareTest, AlternativeBAddsCoverage) {
  auto a = nlohmann::json::parse(render_report(baseline_report(), true));
  auto b = nlohmann::json::parse(render_report(
      run_experiment(load_experiment(source_dir() / "experiments" / "alternative_b.yaml")), true));
  auto c = compare_reports(a, b);
  EXPECT_EQ(c["delta_fc"], 1);
  EXPECT_EQ(c["delta_ofo"], 1);
  EXPECT_GT(c["cost"]["overhead_pct"].get<double>(), 0.0);
}

}  // namespace
}  // namespace oxn
