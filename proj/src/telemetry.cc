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

#include "oxn/telemetry.h"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "oxn/format.h"
#include "oxn/rng.h"

namespace oxn {

std::string_view label_name(Label l) {
  switch (l) {
    case Label::kNormal:
      return "normal";
    case Label::kFault:
      return "fault";
    case Label::kExcluded:
      return "excluded";
  }
  return "?";
}

Label FaultWindow::label_for(Millis t) const {
  if (t < normal_start) return Label::kExcluded;
  if (t >= start && t <= end) return Label::kFault;
  if (t > end && t <= end + settling) return Label::kExcluded;
  return Label::kNormal;
}

std::size_t ResponseSeries::count(Label l) const {
  return static_cast<std::size_t>(
      std::count_if(points.begin(), points.end(), [l](const Observation& o) { return o.label == l; }));
}

namespace {

std::string_view metric_kind_name(MetricKind k) {
  switch (k) {
    case MetricKind::kCpuGauge:
      return "cpu_gauge";
    case MetricKind::kRequestCounter:
      return "request_counter";
    case MetricKind::kCustomGauge:
      return "custom_gauge";
  }
  return "?";
}

// Which services a metric point aggregates over.
std::vector<bool> targeted(const MetricPointSpec& point, std::span<const std::string> services) {
  std::vector<bool> out(services.size(), point.target == kSystemTarget);
  for (std::size_t i = 0; i < services.size(); ++i) {
    if (services[i] == point.target) out[i] = true;
  }
  return out;
}

std::vector<double> cpu_windows(std::span<const RawEvent> raw, const std::vector<bool>& mask,
                                std::size_t n_services, Millis window, std::size_t n_windows,
                                bool mean) {
  // busy[w] accumulates busy ms over all targeted services.
  std::vector<double> busy(n_windows, 0.0);
  const auto horizon = static_cast<double>(window) * static_cast<double>(n_windows);
  for (const auto& e : raw) {
    if (e.kind != RawEventKind::kCpuBusy || !mask[e.service]) continue;
    double begin = static_cast<double>(e.time);
    const double finish = std::min(begin + e.value, horizon);
    while (begin < finish) {
      const auto w = static_cast<std::size_t>(begin / static_cast<double>(window));
      const double boundary = static_cast<double>(w + 1) * static_cast<double>(window);
      const double part = std::min(finish, boundary) - begin;
      busy[w] += part;
      begin += part;
    }
  }
  const double targets = mean ? static_cast<double>(std::count(mask.begin(), mask.end(), true)) : 1.0;
  (void)n_services;
  for (auto& b : busy) b = b / static_cast<double>(window) / std::max(targets, 1.0);
  return busy;
}

}  // namespace

std::vector<MetricEvent> sample_metrics(std::span<const RawEvent> raw,
                                        std::span<const std::string> services,
                                        std::span<const MetricPointSpec> points, Millis duration) {
  std::vector<MetricEvent> out;
  for (const auto& point : points) {
    const Millis window = point.aggregation_interval;
    if (window <= 0) continue;
    const auto n_windows = static_cast<std::size_t>(duration / window);
    const auto mask = targeted(point, services);
    std::vector<double> values(n_windows, 0.0);

    switch (point.kind) {
      case MetricKind::kCpuGauge:
        values = cpu_windows(raw, mask, services.size(), window, n_windows,
                             point.target == kSystemTarget &&
                                 point.system_aggregation == SystemAggregation::kMean);
        break;
      case MetricKind::kRequestCounter:
        for (const auto& e : raw) {
          if (e.kind != RawEventKind::kCounterIncrement || !mask[e.service]) continue;
          const auto w = static_cast<std::size_t>(e.time / window);
          if (w < n_windows) values[w] += 1.0;
        }
        break;
      case MetricKind::kCustomGauge: {
        // Last write per service per window, carried forward across empty
        // windows; the system value sums the targeted services.
        std::vector<double> current(services.size(), 0.0);
        std::size_t w = 0;
        auto close_window = [&]() {
          double v = 0.0;
          for (std::size_t s = 0; s < services.size(); ++s) {
            if (mask[s]) v += current[s];
          }
          values[w++] = v;
        };
        for (const auto& e : raw) {
          if (e.kind != RawEventKind::kGaugeSet || !mask[e.service]) continue;
          while (w < n_windows && e.time >= static_cast<Millis>(w + 1) * window) close_window();
          if (w >= n_windows) break;
          current[e.service] = e.value;
        }
        while (w < n_windows) close_window();
        break;
      }
    }

    const std::string service_label = point.target;
    for (std::size_t w = 0; w < n_windows; ++w) {
      MetricEvent ev;
      ev.metric = point.name;
      ev.time = static_cast<Millis>(w + 1) * window;
      ev.value = values[w];
      ev.labels = {{"kind", std::string(metric_kind_name(point.kind))}, {"service", service_label}};
      out.push_back(std::move(ev));
    }
  }
  return out;
}

std::vector<Span> sample_traces(std::span<const RawEvent> raw, std::span<const std::string> services,
                                const TraceConfigSpec& config, std::uint64_t seed,
                                std::uint64_t* traces_total) {
  std::unordered_set<std::uint64_t> kept_traces;
  std::unordered_map<std::uint64_t, std::size_t> open;  // span id -> index in pending
  std::vector<Span> pending;
  std::vector<bool> closed;
  std::uint64_t total = 0;

  for (const auto& e : raw) {
    if (e.kind == RawEventKind::kSpanOpen) {
      if (e.parent_span_id == 0) {
        ++total;
        const bool keep = config.strategy == TraceStrategy::kAlwaysOn ||
                          bits_to_unit(derive_seed(seed, e.trace_id)) < config.rate;
        if (keep) kept_traces.insert(e.trace_id);
      }
      if (!kept_traces.count(e.trace_id)) continue;
      Span s;
      s.trace_id = e.trace_id;
      s.span_id = e.span_id;
      if (e.parent_span_id != 0) s.parent_id = e.parent_span_id;
      s.service = services[e.service];
      s.start = e.time;
      open.emplace(e.span_id, pending.size());
      pending.push_back(std::move(s));
      closed.push_back(false);
    } else if (e.kind == RawEventKind::kSpanClose) {
      auto it = open.find(e.span_id);
      if (it == open.end()) continue;
      pending[it->second].end = e.time;
      pending[it->second].outcome = e.outcome;
      closed[it->second] = true;
      open.erase(it);
    }
  }

  std::vector<Span> out;
  out.reserve(pending.size());
  for (std::size_t i = 0; i < pending.size(); ++i) {
    if (closed[i]) out.push_back(std::move(pending[i]));
  }
  std::sort(out.begin(), out.end(), [](const Span& a, const Span& b) {
    return a.trace_id != b.trace_id ? a.trace_id < b.trace_id : a.span_id < b.span_id;
  });
  if (traces_total) *traces_total = total;
  return out;
}

ResponseSeries materialize_response(const ResponseVariableSpec& spec, const TelemetryBatch& batch,
                                    const FaultWindow& window) {
  ResponseSeries series;
  series.name = spec.name;
  series.kind = spec.kind;
  if (spec.kind == ResponseKind::kMetric) {
    for (const auto& m : batch.metrics) {
      if (m.metric == spec.source) series.points.push_back({m.time, m.value, window.label_for(m.time)});
    }
    if (series.points.empty()) {
      series.warnings.push_back("metric '" + spec.source +
                                "' is absent from the batch; check the instrumentation");
    }
  } else {
    std::unordered_set<std::uint64_t> entering;
    for (const auto& s : batch.spans) {
      if (s.service == spec.source) entering.insert(s.trace_id);
    }
    for (const auto& s : batch.spans) {
      if (s.parent_id || !entering.count(s.trace_id) || s.start >= batch.duration) continue;
      series.points.push_back(
          {s.start, static_cast<double>(s.end - s.start), window.label_for(s.start)});
    }
    std::stable_sort(series.points.begin(), series.points.end(),
                     [](const Observation& a, const Observation& b) { return a.time < b.time; });
    if (series.points.empty()) {
      series.warnings.push_back("no sampled traces enter service '" + spec.source + "'");
    }
  }
  return series;
}

TelemetryBatch collect(const Simulation& sim, Millis duration, std::uint64_t trace_seed,
                       std::optional<FaultWindow> window) {
  TelemetryBatch batch;
  batch.duration = duration;
  batch.window = window;
  for (const auto& s : sim.sue().services) batch.services.push_back(s.id);
  const auto& raw = sim.events();
  batch.metrics = sample_metrics(raw, batch.services, sim.sue().metric_points, duration);
  batch.spans = sample_traces(raw, batch.services, sim.sue().trace_config, trace_seed,
                              &batch.traces_total);
  for (const auto& e : raw) {
    if (e.kind == RawEventKind::kCpuBusy) {
      batch.cpu.push_back({e.service, e.time, e.value});
    } else if (e.kind == RawEventKind::kSpanOpen) {
      ++batch.spans_total;
    }
  }
  batch.traces_kept = static_cast<std::uint64_t>(std::count_if(
      batch.spans.begin(), batch.spans.end(), [](const Span& s) { return !s.parent_id; }));

  double latency_sum = 0.0;
  std::uint64_t finished = 0;
  for (const auto& r : sim.requests()) {
    ++batch.requests.issued;
    if (!r.finished()) continue;
    ++finished;
    latency_sum += static_cast<double>(r.end - r.start);
    switch (r.outcome) {
      case Outcome::kOk:
        ++batch.requests.ok;
        break;
      case Outcome::kError:
        ++batch.requests.errors;
        break;
      case Outcome::kTimeout:
        ++batch.requests.timeouts;
        break;
    }
  }
  batch.requests.max_in_flight = sim.max_outstanding_requests();
  if (finished > 0) batch.requests.mean_latency_ms = latency_sum / static_cast<double>(finished);
  return batch;
}

TelemetryBatch TelemetryBatch::slice(Millis from, Millis to) const {
  TelemetryBatch out;
  out.run_id = run_id;
  out.duration = duration;
  out.services = services;
  out.window = window;
  for (const auto& m : metrics) {
    if (m.time >= from && m.time < to) out.metrics.push_back(m);
  }
  for (const auto& s : spans) {
    if (s.start >= from && s.start < to) {
      out.spans.push_back(s);
      if (!s.parent_id) ++out.traces_kept;
    }
  }
  for (const auto& c : cpu) {
    if (c.time >= from && c.time < to) out.cpu.push_back(c);
  }
  return out;
}

std::string series_file_name(std::string_view experiment, std::string_view run,
                             std::string_view response) {
  return std::string(experiment) + "_" + std::string(run) + "_" + std::string(response) + ".csv";
}

std::string series_csv(const ResponseSeries& series) {
  std::string out = "timestamp_ms,value,label\n";
  for (const auto& p : series.points) {
    out += std::to_string(p.time);
    out += ',';
    out += format_double(p.value);
    out += ',';
    out += label_name(p.label);
    out += '\n';
  }
  return out;
}

std::string spans_csv(std::span<const Span> spans) {
  std::string out = "trace_id,span_id,parent_id,service,start_ms,end_ms,outcome\n";
  for (const auto& s : spans) {
    out += std::to_string(s.trace_id) + ',' + std::to_string(s.span_id) + ',' +
           (s.parent_id ? std::to_string(*s.parent_id) : std::string()) + ',' + s.service + ',' +
           std::to_string(s.start) + ',' + std::to_string(s.end) + ',' +
           std::string(outcome_name(s.outcome)) + '\n';
  }
  return out;
}

namespace {

void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw RuntimeError("cannot write " + path.string());
  out << content;
  if (!out) throw RuntimeError("write failed for " + path.string());
}

}  // namespace

std::vector<std::filesystem::path> export_csv(const TelemetryBatch& batch,
                                              const std::filesystem::path& dir,
                                              std::string_view experiment) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw RuntimeError("cannot create " + dir.string() + ": " + ec.message());
  std::vector<std::filesystem::path> written;
  for (const auto& series : batch.responses) {
    auto path = dir / series_file_name(experiment, batch.run_id, series.name);
    write_file(path, series_csv(series));
    written.push_back(std::move(path));
  }
  auto spans_path = dir / series_file_name(experiment, batch.run_id, "spans");
  write_file(spans_path, spans_csv(batch.spans));
  written.push_back(std::move(spans_path));
  return written;
}

}  // namespace oxn
