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


#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <string>
#include <utility>
#include <vector>

#include "oxn/config.h"
#include "oxn/cost.h"
#include "oxn/orchestrator.h"
#include "oxn/scoring.h"

namespace py = pybind11;

namespace {

std::vector<std::pair<std::string, std::string>> validate_text(const std::string& text) {
  std::vector<std::pair<std::string, std::string>> out;
  for (const auto& v : oxn::validate(oxn::parse_experiment(text))) out.emplace_back(v.field, v.message);
  return out;
}

std::string run_text(const std::string& text, int parallel, bool frozen_clock) {
  const auto spec = oxn::parse_experiment(text);
  oxn::RunOptions options;
  options.parallel = parallel;
  options.frozen_clock = frozen_clock;
  oxn::ObservabilityReport report;
  {
    py::gil_scoped_release release;
    report = oxn::run_experiment(spec, options);
  }
  return oxn::render_report(report, frozen_clock);
}

std::string compare_text(const std::string& a, const std::string& b) {
  return oxn::compare_reports(nlohmann::json::parse(a), nlohmann::json::parse(b)).dump(2);
}

std::pair<int, int> fault_coverage(const std::vector<int>& visible) {
  const auto r = oxn::fault_coverage(visible);
  return {r.num, r.den};
}

std::pair<int, int> ofo(const std::vector<std::pair<int, int>>& coverages) {
  std::vector<oxn::Ratio> rs;
  for (const auto& [n, d] : coverages) rs.push_back({n, d});
  const auto r = oxn::overall_fault_observability(rs);
  return {r.num, r.den};
}

}  // namespace

PYBIND11_MODULE(_oxn, m) {
  m.doc() = "Native core of the oxn observability experiment engine.";

  auto error = py::register_exception<oxn::Error>(m, "Error");
  py::register_exception<oxn::ConfigError>(m, "ConfigError", error);
  py::register_exception<oxn::RuntimeError>(m, "RuntimeError", error);

  m.attr("REPORT_SCHEMA_VERSION") = oxn::kReportSchemaVersion;

  m.def("validate", &validate_text, py::arg("text"),
        "Parses an experiment document and returns (field, message) violations.");
  m.def("canonical", [](const std::string& text) {
    return oxn::render_experiment(oxn::parse_experiment(text));
  }, py::arg("text"));
  m.def("spec_digest", [](const std::string& text) {
    return oxn::spec_digest(oxn::parse_experiment(text));
  }, py::arg("text"));
  m.def("run", &run_text, py::arg("text"), py::arg("parallel") = 1,
        py::arg("frozen_clock") = false, "Runs an experiment; returns the report as JSON text.");
  m.def("compare", &compare_text, py::arg("a"), py::arg("b"));

  m.def("visibility", &oxn::visibility, py::arg("df"), py::arg("alpha"));
  m.def("fault_coverage", &fault_coverage, py::arg("visible"));
  m.def("overall_fault_observability", &ofo, py::arg("coverages"));
  m.def("overhead", py::overload_cast<double, double>(&oxn::overhead), py::arg("baseline_total"),
        py::arg("alt_total"));
}
