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

#include <filesystem>
#include <fstream>
#include <iostream>

#include "CLI11.hpp"
#include <nlohmann/json.hpp>
#include "oxn/config.h"
#include "oxn/orchestrator.h"

namespace fs = std::filesystem;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitValidation = 1;
constexpr int kExitRuntime = 2;

nlohmann::json read_report(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw oxn::RuntimeError("cannot open report '" + path + "'");
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw oxn::ConfigError("report '" + path + "' is not valid JSON: " + e.what());
  }
}

void print_violations(const std::string& file, const std::vector<oxn::Violation>& violations) {
  for (const auto& v : violations) std::cerr << file << ": " << v.field << ": " << v.message << "\n";
}

int cmd_validate(const std::string& file) {
  const auto spec = oxn::load_experiment(file);
  const auto violations = oxn::validate(spec);
  if (!violations.empty()) {
    print_violations(file, violations);
    return kExitValidation;
  }
  std::cout << file << ": ok (" << spec.treatments.size() << " treatments, "
            << spec.responses.size() << " responses)\n";
  return kExitOk;
}

int cmd_run(const std::string& file, const std::string& out, int parallel, bool export_csv,
            bool frozen) {
  const auto spec = oxn::load_experiment(file);
  if (auto violations = oxn::validate(spec); !violations.empty()) {
    print_violations(file, violations);
    return kExitValidation;
  }
  const fs::path dir(out);
  fs::create_directories(dir);
  oxn::RunOptions options;
  options.parallel = parallel;
  options.frozen_clock = frozen;
  if (export_csv) {
    options.csv_dir = dir / "csv";
    fs::create_directories(*options.csv_dir);
  }
  const auto report = oxn::run_experiment(spec, options);
  const fs::path path = dir / (spec.name + ".report.json");
  std::ofstream(path) << oxn::render_report(report, frozen);

  for (std::size_t i = 0; i < report.scores.faults.size(); ++i) {
    std::cout << "FC(" << report.scores.faults[i] << ") = " << report.scores.fault_coverage[i].str()
              << "\n";
  }
  std::cout << "OFO = " << report.scores.ofo.str() << "\n"
            << "cost total = " << report.cost.total << " s\n"
            << "report: " << path.string() << "\n";
  return kExitOk;
}

int cmd_compare(const std::string& a, const std::string& b) {
  const auto doc = oxn::compare_reports(read_report(a), read_report(b));
  std::cout << doc.dump(2) << "\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"oxn: observability experiments on a simulated microservice system"};
  app.require_subcommand(1);

  std::string run_file, out_dir = "oxn-out";
  int parallel = 1;
  bool export_csv = false, frozen = false;
  auto* run = app.add_subcommand("run", "Run an experiment file and write its report");
  run->add_option("file", run_file, "Experiment file")->required();
  run->add_option("--out", out_dir, "Output directory")->capture_default_str();
  run->add_option("--parallel", parallel, "Concurrent runs")->check(CLI::PositiveNumber);
  run->add_flag("--export-csv", export_csv, "Export response series and spans as CSV");
  run->add_flag("--frozen-clock", frozen, "Omit wall-clock metadata from the report");

  std::string report_a, report_b;
  auto* compare = app.add_subcommand("compare", "Compare two reports");
  compare->add_option("reportA", report_a)->required();
  compare->add_option("reportB", report_b)->required();

  std::string validate_file;
  auto* validate = app.add_subcommand("validate", "Validate an experiment file");
  validate->add_option("file", validate_file)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitValidation;
  }

  try {
    if (*run) return cmd_run(run_file, out_dir, parallel, export_csv, frozen);
    if (*compare) return cmd_compare(report_a, report_b);
    return cmd_validate(validate_file);
  } catch (const oxn::ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const oxn::RuntimeError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  } catch (const oxn::Error& e) {
    // Dimension mismatches and malformed reports are input problems.
    std::cerr << "error: " << e.what() << "\n";
    return *compare ? kExitValidation : kExitRuntime;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
}
