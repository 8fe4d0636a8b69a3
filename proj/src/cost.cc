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

#include "oxn/cost.h"

#include <cmath>

namespace oxn {

CostModel CostModel::defaults() {
  // Calibrated on the canonical baseline: the collector comes to about a
  // quarter of the application and raising traces from 1% to 5% costs
  // about 3%. One metric event stands for a full scrape.
  CostModel m;
  m.collector_per_metric_event_ms = 650.0;
  m.collector_per_span_ms = 1.8;
  m.trace_backend_per_span_ms = 1.2;
  m.metrics_backend_per_metric_event_ms = 100.0;
  m.app_per_instrumentation_call_ms = 0.1;
  return m;
}

double CostReport::application_total() const {
  double sum = 0.0;
  for (const auto& [_, v] : application) sum += v;
  return sum;
}

CostReport account(const TelemetryBatch& batch, const CostModel& model) {
  constexpr double kMsPerSecond = 1000.0;
  std::vector<double> app_ms(batch.services.size(), 0.0);
  for (const auto& slice : batch.cpu) app_ms[slice.service] += slice.busy_ms;

  auto index_of = [&](const std::string& id) -> std::ptrdiff_t {
    for (std::size_t i = 0; i < batch.services.size(); ++i) {
      if (batch.services[i] == id) return static_cast<std::ptrdiff_t>(i);
    }
    return -1;
  };

  for (const auto& span : batch.spans) {
    if (auto i = index_of(span.service); i >= 0) app_ms[i] += model.app_per_instrumentation_call_ms;
  }
  for (const auto& m : batch.metrics) {
    auto kind = m.labels.find("kind");
    auto service = m.labels.find("service");
    if (kind == m.labels.end() || service == m.labels.end() || kind->second == "cpu_gauge") continue;
    if (auto i = index_of(service->second); i >= 0) app_ms[i] += model.app_per_instrumentation_call_ms;
  }

  CostReport r;
  for (std::size_t i = 0; i < batch.services.size(); ++i) {
    r.application[batch.services[i]] = app_ms[i] / kMsPerSecond;
  }
  const auto metric_events = static_cast<double>(batch.metrics.size());
  const auto spans = static_cast<double>(batch.spans.size());
  r.collector = (metric_events * model.collector_per_metric_event_ms +
                 spans * model.collector_per_span_ms) / kMsPerSecond;
  r.metrics_backend = metric_events * model.metrics_backend_per_metric_event_ms / kMsPerSecond;
  r.trace_backend = spans * model.trace_backend_per_span_ms / kMsPerSecond;
  r.total = r.application_total() + r.collector + r.metrics_backend + r.trace_backend;
  return r;
}

CostReport mean_cost(std::span<const CostReport> reports) {
  CostReport out;
  if (reports.empty()) return out;
  const auto n = static_cast<double>(reports.size());
  for (const auto& r : reports) {
    for (const auto& [service, v] : r.application) out.application[service] += v / n;
    out.collector += r.collector / n;
    out.metrics_backend += r.metrics_backend / n;
    out.trace_backend += r.trace_backend / n;
  }
  out.total = out.application_total() + out.collector + out.metrics_backend + out.trace_backend;
  return out;
}

double overhead(double baseline_total, double alt_total) {
  if (!(baseline_total > 0)) throw Error("overhead against a zero baseline");
  return std::round((alt_total / baseline_total - 1.0) * 100.0 * 100.0) / 100.0;
}

double overhead(const CostReport& baseline, const CostReport& alt) {
  return overhead(baseline.total, alt.total);
}

}  // namespace oxn
