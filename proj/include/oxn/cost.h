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

#pragma once

#include <map>
#include <span>
#include <string>

#include "oxn/config.h"
#include "oxn/telemetry.h"

namespace oxn {

/// CPU time per component, in seconds.
struct CostReport {
  std::map<std::string, double> application;  // per service
  double collector = 0.0;
  double metrics_backend = 0.0;
  double trace_backend = 0.0;
  double total = 0.0;

  double application_total() const;
  bool operator==(const CostReport&) const = default;
};

/// Application cost is the simulated busy time plus a per-call cost for
/// every kept span and every application-level metric event (counters and
/// custom gauges bound to a service). Pipeline costs are event and span
/// counts times their coefficients.
CostReport account(const TelemetryBatch& batch, const CostModel& model);

/// Component-wise mean of several reports.
CostReport mean_cost(std::span<const CostReport> reports);

/// (alt.total / baseline.total - 1) * 100, rounded to two decimals.
/// Throws Error when the baseline total is not positive.
double overhead(const CostReport& baseline, const CostReport& alt);
double overhead(double baseline_total, double alt_total);

}  // namespace oxn
