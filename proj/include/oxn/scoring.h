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

// Fault observability scores.
//
//   v(f, m)  = 1 if DF > alpha else 0
//   FC(f)    = (1/n) * sum_m v(f, m)           over n response variables
//   OFO      = (1/l) * sum_f [FC(f) > 0]       over l faults
//
// Scores are exact rationals and keep their denominators so they can be
// reported as "k/n".

#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "oxn/common.h"

namespace oxn {

/// Unreduced fraction. 2/6 and 1/3 compare equal but print differently.
struct Ratio {
  int num = 0;
  int den = 1;

  bool positive() const { return num > 0; }
  double value() const { return static_cast<double>(num) / static_cast<double>(den); }
  std::string str() const { return std::to_string(num) + "/" + std::to_string(den); }
  static Ratio parse(const std::string& text);

  /// Same numerator and denominator.
  bool identical(const Ratio& o) const { return num == o.num && den == o.den; }
  bool operator==(const Ratio& o) const {
    return static_cast<long long>(num) * o.den == static_cast<long long>(o.num) * den;
  }
  auto operator<=>(const Ratio& o) const {
    return static_cast<long long>(num) * o.den <=> static_cast<long long>(o.num) * den;
  }
};

/// Strict comparison: a DF equal to alpha is not visible.
int visibility(double df, double alpha);

/// Throws Error on an empty list.
Ratio fault_coverage(std::span<const int> visible);
Ratio overall_fault_observability(std::span<const Ratio> coverages);

struct VisibilityCell {
  std::optional<double> df;  // empty when undefined (dataset failure)
  int v = 0;
};

struct VisibilityMatrix {
  double alpha = 0.7;
  std::vector<std::string> faults;
  std::vector<std::string> responses;
  std::vector<std::vector<VisibilityCell>> cells;  // [fault][response]

  /// Builds the matrix from DF values, thresholding each with `alpha`.
  /// Undefined DFs contribute v = 0.
  static VisibilityMatrix from_df(std::vector<std::string> faults, std::vector<std::string> responses,
                                  const std::vector<std::vector<std::optional<double>>>& df,
                                  double alpha);
};

struct ScoreReport {
  std::vector<std::string> faults;
  std::vector<Ratio> fault_coverage;
  Ratio ofo;
  int l = 0;
  int n = 0;
};

ScoreReport score(const VisibilityMatrix& matrix);

struct ScoreDelta {
  std::vector<std::string> faults;
  std::vector<int> fc_delta;  // change in visible response count per fault
  int fc_delta_total = 0;
  int ofo_delta = 0;  // change in covered fault count
};

/// Throws Error when the reports differ in fault or response counts.
ScoreDelta diff_scores(const ScoreReport& before, const ScoreReport& after);

}  // namespace oxn
