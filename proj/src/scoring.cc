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

#include "oxn/scoring.h"

#include <numeric>

namespace oxn {

Ratio Ratio::parse(const std::string& text) {
  const auto slash = text.find('/');
  if (slash == std::string::npos) throw Error("malformed ratio '" + text + "'");
  try {
    Ratio r{std::stoi(text.substr(0, slash)), std::stoi(text.substr(slash + 1))};
    if (r.den <= 0 || r.num < 0 || r.num > r.den) throw Error("malformed ratio '" + text + "'");
    return r;
  } catch (const std::logic_error&) {
    throw Error("malformed ratio '" + text + "'");
  }
}

int visibility(double df, double alpha) { return df > alpha ? 1 : 0; }

Ratio fault_coverage(std::span<const int> visible) {
  if (visible.empty()) throw Error("fault coverage over an empty response set");
  return Ratio{std::accumulate(visible.begin(), visible.end(), 0), static_cast<int>(visible.size())};
}

Ratio overall_fault_observability(std::span<const Ratio> coverages) {
  if (coverages.empty()) throw Error("overall fault observability over an empty fault set");
  int covered = 0;
  for (const auto& fc : coverages) covered += fc.positive() ? 1 : 0;
  return Ratio{covered, static_cast<int>(coverages.size())};
}

VisibilityMatrix VisibilityMatrix::from_df(std::vector<std::string> faults,
                                           std::vector<std::string> responses,
                                           const std::vector<std::vector<std::optional<double>>>& df,
                                           double alpha) {
  VisibilityMatrix m;
  m.alpha = alpha;
  m.faults = std::move(faults);
  m.responses = std::move(responses);
  if (df.size() != m.faults.size()) throw Error("DF table does not match the fault count");
  for (const auto& row : df) {
    if (row.size() != m.responses.size()) throw Error("DF table does not match the response count");
    std::vector<VisibilityCell> cells;
    for (const auto& value : row) cells.push_back({value, value ? visibility(*value, alpha) : 0});
    m.cells.push_back(std::move(cells));
  }
  return m;
}

ScoreReport score(const VisibilityMatrix& matrix) {
  ScoreReport report;
  report.faults = matrix.faults;
  report.l = static_cast<int>(matrix.faults.size());
  report.n = static_cast<int>(matrix.responses.size());
  for (const auto& row : matrix.cells) {
    std::vector<int> v;
    for (const auto& cell : row) v.push_back(cell.v);
    report.fault_coverage.push_back(fault_coverage(v));
  }
  report.ofo = overall_fault_observability(report.fault_coverage);
  return report;
}

ScoreDelta diff_scores(const ScoreReport& before, const ScoreReport& after) {
  if (before.l != after.l || before.n != after.n ||
      before.fault_coverage.size() != after.fault_coverage.size()) {
    throw Error("dimension mismatch: " + std::to_string(before.l) + "x" + std::to_string(before.n) +
                " vs " + std::to_string(after.l) + "x" + std::to_string(after.n));
  }
  ScoreDelta d;
  d.faults = after.faults;
  for (std::size_t i = 0; i < after.fault_coverage.size(); ++i) {
    const int delta = after.fault_coverage[i].num - before.fault_coverage[i].num;
    d.fc_delta.push_back(delta);
    d.fc_delta_total += delta;
  }
  d.ofo_delta = after.ofo.num - before.ofo.num;
  return d;
}

}  // namespace oxn
