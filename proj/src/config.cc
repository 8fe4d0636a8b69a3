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

#include "oxn/config.h"

#include <yaml-cpp/yaml.h>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>

#include "oxn/format.h"
#include "oxn/rng.h"

namespace oxn {

const ServiceSpec* SueSpec::find_service(std::string_view id) const {
  for (const auto& s : services) {
    if (s.id == id) return &s;
  }
  return nullptr;
}

const MetricPointSpec* SueSpec::find_metric(std::string_view name) const {
  for (const auto& m : metric_points) {
    if (m.name == name) return &m;
  }
  return nullptr;
}

std::vector<std::string> SueSpec::entry_services() const {
  std::vector<std::string> out;
  for (const auto& s : services) {
    bool has_inbound = std::any_of(edges.begin(), edges.end(),
                                   [&](const CallEdge& e) { return e.callee == s.id; });
    if (!has_inbound) out.push_back(s.id);
  }
  return out;
}

namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};

}  // namespace

std::string_view treatment_kind_name(const TreatmentSpec& t) {
  if (t.is_fault()) {
    return std::visit(
        Overloaded{[](const PauseFault&) { return std::string_view("pause"); },
                   [](const KillFault&) { return std::string_view("kill"); },
                   [](const NetworkDelayFault&) { return std::string_view("network_delay"); },
                   [](const PacketLossFault&) { return std::string_view("packet_loss"); },
                   [](const PacketCorruptionFault&) {
                     return std::string_view("packet_corruption");
                   },
                   [](const StressFault&) { return std::string_view("stress"); }},
        t.fault().effect);
  }
  return std::visit(
      Overloaded{
          [](const MetricSamplingChange&) { return std::string_view("metric_sampling_interval"); },
          [](const TracingRateChange&) { return std::string_view("tracing_sampling_rate"); },
          [](const TracingStrategyChange&) {
            return std::string_view("tracing_sampling_strategy");
          }},
      t.instrumentation());
}

// ---------------------------------------------------------------------------
// Parsing

namespace {

std::string where(const YAML::Node& node) {
  const YAML::Mark mark = node.Mark();
  if (mark.is_null()) return "";
  return "line " + std::to_string(mark.line + 1) + ", column " + std::to_string(mark.column + 1) +
         ": ";
}

[[noreturn]] void fail(const YAML::Node& node, const std::string& path, const std::string& msg) {
  throw ConfigError(where(node) + path + ": " + msg);
}

/// Wraps one YAML mapping and tracks which keys were consumed so that
/// unknown fields can be reported.
class MapReader {
 public:
  MapReader(YAML::Node node, std::string path) : node_(std::move(node)), path_(std::move(path)) {
    if (!node_.IsMap()) fail(node_, path_, "expected a mapping");
  }

  bool has(const std::string& key) {
    seen_.insert(key);
    return static_cast<bool>(node_[key]);
  }

  YAML::Node required(const std::string& key) {
    if (!has(key)) fail(node_, path_, "missing required field '" + key + "'");
    return node_[key];
  }

  YAML::Node optional(const std::string& key) {
    if (!has(key)) return YAML::Node();
    return node_[key];
  }

  std::string sub(const std::string& key) const {
    return path_.empty() ? key : path_ + "." + key;
  }

  void finish() const {
    for (const auto& kv : node_) {
      const auto key = kv.first.as<std::string>();
      if (!seen_.count(key)) fail(kv.first, path_, "unknown field '" + key + "'");
    }
  }

  const YAML::Node& node() const { return node_; }
  const std::string& path() const { return path_; }

 private:
  YAML::Node node_;
  std::string path_;
  std::set<std::string> seen_;
};

template <class T>
T scalar(const YAML::Node& node, const std::string& path, const char* what) {
  if (!node.IsScalar()) fail(node, path, std::string("expected ") + what);
  try {
    return node.as<T>();
  } catch (const YAML::Exception&) {
    fail(node, path, std::string("expected ") + what + ", got '" + node.Scalar() + "'");
  }
}

std::string str(const YAML::Node& n, const std::string& p) {
  return scalar<std::string>(n, p, "a string");
}
double num(const YAML::Node& n, const std::string& p) {
  const double v = scalar<double>(n, p, "a number");
  if (!std::isfinite(v)) fail(n, p, "expected a finite number");
  return v;
}
int integer(const YAML::Node& n, const std::string& p) { return scalar<int>(n, p, "an integer"); }
Millis seconds(const YAML::Node& n, const std::string& p) { return seconds_to_millis(num(n, p)); }
Millis millis(const YAML::Node& n, const std::string& p) {
  return static_cast<Millis>(std::llround(num(n, p)));
}

template <class E>
E enumerated(const YAML::Node& n, const std::string& p,
             const std::vector<std::pair<std::string_view, E>>& table) {
  const std::string s = str(n, p);
  std::string options;
  for (const auto& [name, value] : table) {
    if (name == s) return value;
    options += (options.empty() ? "" : ", ") + std::string(name);
  }
  fail(n, p, "unknown value '" + s + "' (expected one of: " + options + ")");
}

const std::vector<std::pair<std::string_view, MetricKind>> kMetricKinds = {
    {"cpu_gauge", MetricKind::kCpuGauge},
    {"request_counter", MetricKind::kRequestCounter},
    {"custom_gauge", MetricKind::kCustomGauge}};
const std::vector<std::pair<std::string_view, SystemAggregation>> kSystemAggregations = {
    {"sum", SystemAggregation::kSum}, {"mean", SystemAggregation::kMean}};
const std::vector<std::pair<std::string_view, TraceStrategy>> kTraceStrategies = {
    {"always_on", TraceStrategy::kAlwaysOn}, {"probabilistic", TraceStrategy::kProbabilistic}};
const std::vector<std::pair<std::string_view, ResponseKind>> kResponseKinds = {
    {"metric", ResponseKind::kMetric}, {"trace_duration", ResponseKind::kTraceDuration}};
const std::vector<std::pair<std::string_view, DetectionMechanismKind>> kMechanisms = {
    {"logistic_regression", DetectionMechanismKind::kLogisticRegression},
    {"threshold_alert", DetectionMechanismKind::kThresholdAlert}};

template <class E>
std::string_view name_of(E value, const std::vector<std::pair<std::string_view, E>>& table) {
  for (const auto& [name, v] : table) {
    if (v == value) return name;
  }
  return "?";
}

YAML::Node sequence(const YAML::Node& n, const std::string& p) {
  if (!n.IsSequence()) fail(n, p, "expected a list");
  return n;
}

LognormalSpec parse_lognormal(const YAML::Node& n, const std::string& p) {
  MapReader r(n, p);
  LognormalSpec out;
  out.median_ms = num(r.required("median_ms"), r.sub("median_ms"));
  if (r.has("sigma")) out.sigma = num(r.optional("sigma"), r.sub("sigma"));
  r.finish();
  return out;
}

ServiceSpec parse_service(const YAML::Node& n, const std::string& p) {
  MapReader r(n, p);
  ServiceSpec s;
  s.id = str(r.required("id"), r.sub("id"));
  if (r.has("workers")) s.workers = integer(r.optional("workers"), r.sub("workers"));
  s.service_time = parse_lognormal(r.required("service_time"), r.sub("service_time"));
  if (r.has("cpu_per_request_ms")) {
    s.cpu_per_request_ms = num(r.optional("cpu_per_request_ms"), r.sub("cpu_per_request_ms"));
  }
  if (r.has("error_response_time_ms")) {
    s.error_response_time_ms =
        num(r.optional("error_response_time_ms"), r.sub("error_response_time_ms"));
  }
  r.finish();
  return s;
}

CallEdge parse_edge(const YAML::Node& n, const std::string& p) {
  MapReader r(n, p);
  CallEdge e;
  e.caller = str(r.required("caller"), r.sub("caller"));
  e.callee = str(r.required("callee"), r.sub("callee"));
  if (r.has("calls_per_request")) {
    e.calls_per_request = num(r.optional("calls_per_request"), r.sub("calls_per_request"));
  }
  if (r.has("latency_ms")) e.latency_ms = millis(r.optional("latency_ms"), r.sub("latency_ms"));
  r.finish();
  return e;
}

MetricPointSpec parse_metric_point(const YAML::Node& n, const std::string& p) {
  MapReader r(n, p);
  MetricPointSpec m;
  m.name = str(r.required("name"), r.sub("name"));
  m.kind = enumerated(r.required("kind"), r.sub("kind"), kMetricKinds);
  m.target = str(r.required("target"), r.sub("target"));
  m.sampling_interval = seconds(r.required("sampling_interval"), r.sub("sampling_interval"));
  m.aggregation_interval = m.sampling_interval;
  if (r.has("aggregation_interval")) {
    m.aggregation_interval =
        seconds(r.optional("aggregation_interval"), r.sub("aggregation_interval"));
  }
  if (r.has("system_aggregation")) {
    m.system_aggregation = enumerated(r.optional("system_aggregation"),
                                      r.sub("system_aggregation"), kSystemAggregations);
  }
  r.finish();
  return m;
}

TraceConfigSpec parse_trace_config(const YAML::Node& n, const std::string& p) {
  MapReader r(n, p);
  TraceConfigSpec t;
  if (r.has("strategy")) {
    t.strategy = enumerated(r.optional("strategy"), r.sub("strategy"), kTraceStrategies);
  }
  if (r.has("rate")) t.rate = num(r.optional("rate"), r.sub("rate"));
  r.finish();
  return t;
}

SueSpec parse_sue(const YAML::Node& n, const std::string& p) {
  MapReader r(n, p);
  SueSpec sue;
  const auto services = sequence(r.required("services"), r.sub("services"));
  for (std::size_t i = 0; i < services.size(); ++i) {
    sue.services.push_back(parse_service(services[i], r.sub("services[" + std::to_string(i) + "]")));
  }
  if (r.has("edges")) {
    const auto edges = sequence(r.optional("edges"), r.sub("edges"));
    for (std::size_t i = 0; i < edges.size(); ++i) {
      sue.edges.push_back(parse_edge(edges[i], r.sub("edges[" + std::to_string(i) + "]")));
    }
  }
  if (r.has("metric_points")) {
    const auto points = sequence(r.optional("metric_points"), r.sub("metric_points"));
    for (std::size_t i = 0; i < points.size(); ++i) {
      sue.metric_points.push_back(
          parse_metric_point(points[i], r.sub("metric_points[" + std::to_string(i) + "]")));
    }
  }
  if (r.has("trace_config")) {
    sue.trace_config = parse_trace_config(r.optional("trace_config"), r.sub("trace_config"));
  }
  r.finish();
  return sue;
}

WorkloadSpec parse_workload(const YAML::Node& n, const std::string& p) {
  MapReader r(n, p);
  WorkloadSpec w;
  w.users = integer(r.required("users"), r.sub("users"));
  w.duration = seconds(r.required("duration"), r.sub("duration"));
  if (r.has("think_time")) w.think_time = parse_lognormal(r.optional("think_time"), r.sub("think_time"));
  if (r.has("ramp_up")) w.ramp_up = seconds(r.optional("ramp_up"), r.sub("ramp_up"));
  if (r.has("timeout")) w.timeout = seconds(r.optional("timeout"), r.sub("timeout"));
  r.finish();
  return w;
}

FaultTreatment parse_fault_body(MapReader& r, FaultEffect effect) {
  FaultTreatment f;
  f.effect = std::move(effect);
  f.target = str(r.required("target"), r.sub("target"));
  f.start = seconds(r.required("start"), r.sub("start"));
  f.end = seconds(r.required("end"), r.sub("end"));
  return f;
}

template <class Lossy>
Lossy parse_lossy(MapReader& r) {
  Lossy l;
  l.probability = num(r.required("probability"), r.sub("probability"));
  if (r.has("retransmit_delay_ms")) {
    l.retransmit_delay_ms = millis(r.optional("retransmit_delay_ms"), r.sub("retransmit_delay_ms"));
  }
  if (r.has("retransmit_cpu_ms")) {
    l.retransmit_cpu_ms = num(r.optional("retransmit_cpu_ms"), r.sub("retransmit_cpu_ms"));
  }
  return l;
}

std::variant<FaultTreatment, InstrumentationChange> parse_treatment_body(const std::string& kind,
                                                                         const YAML::Node& n,
                                                                         const std::string& p) {
  MapReader r(n, p);
  std::variant<FaultTreatment, InstrumentationChange> out;
  if (kind == "pause") {
    out = parse_fault_body(r, PauseFault{});
  } else if (kind == "kill") {
    out = parse_fault_body(r, KillFault{});
  } else if (kind == "network_delay") {
    NetworkDelayFault d;
    d.min_ms = millis(r.required("min_ms"), r.sub("min_ms"));
    d.max_ms = millis(r.required("max_ms"), r.sub("max_ms"));
    out = parse_fault_body(r, d);
  } else if (kind == "packet_loss") {
    out = parse_fault_body(r, parse_lossy<PacketLossFault>(r));
  } else if (kind == "packet_corruption") {
    out = parse_fault_body(r, parse_lossy<PacketCorruptionFault>(r));
  } else if (kind == "stress") {
    StressFault s;
    s.factor = num(r.required("factor"), r.sub("factor"));
    out = parse_fault_body(r, s);
  } else if (kind == "metric_sampling_interval") {
    MetricSamplingChange c;
    c.metric = str(r.required("metric"), r.sub("metric"));
    c.interval = seconds(r.required("interval"), r.sub("interval"));
    if (r.has("aggregation_interval")) {
      c.aggregation_interval =
          seconds(r.optional("aggregation_interval"), r.sub("aggregation_interval"));
    }
    out = InstrumentationChange(c);
  } else if (kind == "tracing_sampling_rate") {
    out = InstrumentationChange(TracingRateChange{num(r.required("rate"), r.sub("rate"))});
  } else if (kind == "tracing_sampling_strategy") {
    out = InstrumentationChange(TracingStrategyChange{
        enumerated(r.required("strategy"), r.sub("strategy"), kTraceStrategies)});
  } else {
    fail(n, p, "unknown treatment kind '" + kind + "'");
  }
  r.finish();
  return out;
}

const std::set<std::string> kTreatmentKinds = {
    "pause",  "kill", "network_delay", "packet_loss", "packet_corruption", "stress",
    "metric_sampling_interval", "tracing_sampling_rate", "tracing_sampling_strategy"};

TreatmentSpec parse_treatment(const YAML::Node& n, const std::string& p) {
  MapReader r(n, p);
  TreatmentSpec t;
  t.name = str(r.required("name"), r.sub("name"));
  std::string kind;
  for (const auto& kv : n) {
    const auto key = kv.first.as<std::string>();
    if (key == "name") continue;
    if (!kTreatmentKinds.count(key)) fail(kv.first, p, "unknown field '" + key + "'");
    if (!kind.empty()) fail(kv.first, p, "treatment declares more than one kind");
    kind = key;
  }
  if (kind.empty()) fail(n, p, "missing treatment kind");
  t.body = parse_treatment_body(kind, r.required(kind), r.sub(kind));
  r.finish();
  return t;
}

ResponseVariableSpec parse_response(const YAML::Node& n, const std::string& p) {
  MapReader r(n, p);
  ResponseVariableSpec v;
  v.name = str(r.required("name"), r.sub("name"));
  v.kind = enumerated(r.required("kind"), r.sub("kind"), kResponseKinds);
  v.source = str(r.required("source"), r.sub("source"));
  r.finish();
  return v;
}

DetectionSpec parse_detection(const YAML::Node& n, const std::string& p) {
  MapReader r(n, p);
  DetectionSpec d;
  if (r.has("mechanism")) d.mechanism = enumerated(r.optional("mechanism"), r.sub("mechanism"), kMechanisms);
  if (r.has("alpha")) d.alpha = num(r.optional("alpha"), r.sub("alpha"));
  if (r.has("split_ratio")) d.split_ratio = num(r.optional("split_ratio"), r.sub("split_ratio"));
  if (r.has("feature_window")) {
    d.feature_window = integer(r.optional("feature_window"), r.sub("feature_window"));
  }
  if (r.has("l2")) d.l2 = num(r.optional("l2"), r.sub("l2"));
  if (r.has("tolerance")) d.tolerance = num(r.optional("tolerance"), r.sub("tolerance"));
  if (r.has("threshold_k")) d.threshold_k = num(r.optional("threshold_k"), r.sub("threshold_k"));
  r.finish();
  return d;
}

CostModel parse_cost_model(const YAML::Node& n, const std::string& p) {
  MapReader r(n, p);
  CostModel c = CostModel::defaults();
  auto field = [&](const char* key, double& dst) {
    if (r.has(key)) dst = num(r.optional(key), r.sub(key));
  };
  field("collector_per_metric_event_ms", c.collector_per_metric_event_ms);
  field("collector_per_span_ms", c.collector_per_span_ms);
  field("trace_backend_per_span_ms", c.trace_backend_per_span_ms);
  field("metrics_backend_per_metric_event_ms", c.metrics_backend_per_metric_event_ms);
  field("app_per_instrumentation_call_ms", c.app_per_instrumentation_call_ms);
  r.finish();
  return c;
}

}  // namespace

ExperimentSpec parse_experiment(std::string_view text) {
  YAML::Node root;
  try {
    root = YAML::Load(std::string(text));
  } catch (const YAML::ParserException& e) {
    throw ConfigError("syntax error at line " + std::to_string(e.mark.line + 1) + ", column " +
                      std::to_string(e.mark.column + 1) + ": " + e.msg);
  }
  if (!root || root.IsNull()) throw ConfigError("empty experiment document");

  MapReader r(root, "");
  ExperimentSpec spec;
  spec.name = str(r.required("name"), "name");
  if (r.has("seed")) spec.seed = scalar<std::uint64_t>(r.optional("seed"), "seed", "an unsigned integer");
  if (r.has("repetitions")) spec.repetitions = integer(r.optional("repetitions"), "repetitions");
  spec.sue = parse_sue(r.required("sue"), "sue");
  spec.workload = parse_workload(r.required("workload"), "workload");
  if (r.has("treatments")) {
    const auto ts = sequence(r.optional("treatments"), "treatments");
    for (std::size_t i = 0; i < ts.size(); ++i) {
      spec.treatments.push_back(parse_treatment(ts[i], "treatments[" + std::to_string(i) + "]"));
    }
  }
  const auto responses = sequence(r.required("responses"), "responses");
  if (responses.size() == 0) fail(responses, "responses", "responses must be nonempty");
  for (std::size_t i = 0; i < responses.size(); ++i) {
    spec.responses.push_back(parse_response(responses[i], "responses[" + std::to_string(i) + "]"));
  }
  if (r.has("detection")) spec.detection = parse_detection(r.optional("detection"), "detection");
  if (r.has("cost_model")) spec.cost_model = parse_cost_model(r.optional("cost_model"), "cost_model");
  r.finish();
  return spec;
}

ExperimentSpec load_experiment(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read experiment file " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  try {
    return parse_experiment(buf.str());
  } catch (const ConfigError& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

// ---------------------------------------------------------------------------
// Canonical writer

namespace {

std::string quote(std::string_view s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"' || c == '\\') out += '\\';
    out += c;
  }
  return out + "\"";
}

std::string lognormal(const LognormalSpec& l) {
  return "{median_ms: " + format_double(l.median_ms) + ", sigma: " + format_double(l.sigma) + "}";
}

std::string lossy_fields(double probability, Millis delay, double cpu) {
  return "probability: " + format_double(probability) +
         ", retransmit_delay_ms: " + std::to_string(delay) +
         ", retransmit_cpu_ms: " + format_double(cpu);
}

std::string treatment_body(const TreatmentSpec& t) {
  if (t.is_fault()) {
    const auto& f = t.fault();
    std::string params = std::visit(
        Overloaded{[](const PauseFault&) { return std::string(); },
                   [](const KillFault&) { return std::string(); },
                   [](const NetworkDelayFault& d) {
                     return "min_ms: " + std::to_string(d.min_ms) +
                            ", max_ms: " + std::to_string(d.max_ms) + ", ";
                   },
                   [](const PacketLossFault& l) {
                     return lossy_fields(l.probability, l.retransmit_delay_ms, l.retransmit_cpu_ms) +
                            ", ";
                   },
                   [](const PacketCorruptionFault& l) {
                     return lossy_fields(l.probability, l.retransmit_delay_ms, l.retransmit_cpu_ms) +
                            ", ";
                   },
                   [](const StressFault& s) { return "factor: " + format_double(s.factor) + ", "; }},
        f.effect);
    return "{" + params + "target: " + quote(f.target) + ", start: " + format_seconds(f.start) +
           ", end: " + format_seconds(f.end) + "}";
  }
  return std::visit(
      Overloaded{[](const MetricSamplingChange& c) {
                   std::string s = "{metric: " + quote(c.metric) +
                                   ", interval: " + format_seconds(c.interval);
                   if (c.aggregation_interval) {
                     s += ", aggregation_interval: " + format_seconds(*c.aggregation_interval);
                   }
                   return s + "}";
                 },
                 [](const TracingRateChange& c) { return "{rate: " + format_double(c.rate) + "}"; },
                 [](const TracingStrategyChange& c) {
                   return "{strategy: " + std::string(name_of(c.strategy, kTraceStrategies)) + "}";
                 }},
      t.instrumentation());
}

}  // namespace

std::string render_experiment(const ExperimentSpec& spec) {
  std::ostringstream o;
  o << "name: " << quote(spec.name) << "\n";
  o << "seed: " << spec.seed << "\n";
  o << "repetitions: " << spec.repetitions << "\n";
  o << "sue:\n  services:\n";
  for (const auto& s : spec.sue.services) {
    o << "    - id: " << quote(s.id) << "\n"
      << "      workers: " << s.workers << "\n"
      << "      service_time: " << lognormal(s.service_time) << "\n"
      << "      cpu_per_request_ms: " << format_double(s.cpu_per_request_ms) << "\n"
      << "      error_response_time_ms: " << format_double(s.error_response_time_ms) << "\n";
  }
  o << "  edges:" << (spec.sue.edges.empty() ? " []" : "") << "\n";
  for (const auto& e : spec.sue.edges) {
    o << "    - {caller: " << quote(e.caller) << ", callee: " << quote(e.callee)
      << ", calls_per_request: " << format_double(e.calls_per_request)
      << ", latency_ms: " << e.latency_ms << "}\n";
  }
  o << "  metric_points:" << (spec.sue.metric_points.empty() ? " []" : "") << "\n";
  for (const auto& m : spec.sue.metric_points) {
    o << "    - {name: " << quote(m.name) << ", kind: " << name_of(m.kind, kMetricKinds)
      << ", target: " << quote(m.target)
      << ", sampling_interval: " << format_seconds(m.sampling_interval)
      << ", aggregation_interval: " << format_seconds(m.aggregation_interval)
      << ", system_aggregation: " << name_of(m.system_aggregation, kSystemAggregations) << "}\n";
  }
  o << "  trace_config: {strategy: " << name_of(spec.sue.trace_config.strategy, kTraceStrategies)
    << ", rate: " << format_double(spec.sue.trace_config.rate) << "}\n";
  const auto& w = spec.workload;
  o << "workload:\n"
    << "  users: " << w.users << "\n"
    << "  duration: " << format_seconds(w.duration) << "\n"
    << "  think_time: " << lognormal(w.think_time) << "\n"
    << "  ramp_up: " << format_seconds(w.ramp_up) << "\n"
    << "  timeout: " << format_seconds(w.timeout) << "\n";
  o << "treatments:" << (spec.treatments.empty() ? " []" : "") << "\n";
  for (const auto& t : spec.treatments) {
    o << "  - name: " << quote(t.name) << "\n"
      << "    " << treatment_kind_name(t) << ": " << treatment_body(t) << "\n";
  }
  o << "responses:\n";
  for (const auto& r : spec.responses) {
    o << "  - {name: " << quote(r.name) << ", kind: " << name_of(r.kind, kResponseKinds)
      << ", source: " << quote(r.source) << "}\n";
  }
  const auto& d = spec.detection;
  o << "detection:\n"
    << "  mechanism: " << name_of(d.mechanism, kMechanisms) << "\n"
    << "  alpha: " << format_double(d.alpha) << "\n"
    << "  split_ratio: " << format_double(d.split_ratio) << "\n"
    << "  feature_window: " << d.feature_window << "\n"
    << "  l2: " << format_double(d.l2) << "\n"
    << "  tolerance: " << format_double(d.tolerance) << "\n"
    << "  threshold_k: " << format_double(d.threshold_k) << "\n";
  const auto& c = spec.cost_model;
  o << "cost_model:\n"
    << "  collector_per_metric_event_ms: " << format_double(c.collector_per_metric_event_ms) << "\n"
    << "  collector_per_span_ms: " << format_double(c.collector_per_span_ms) << "\n"
    << "  trace_backend_per_span_ms: " << format_double(c.trace_backend_per_span_ms) << "\n"
    << "  metrics_backend_per_metric_event_ms: "
    << format_double(c.metrics_backend_per_metric_event_ms) << "\n"
    << "  app_per_instrumentation_call_ms: " << format_double(c.app_per_instrumentation_call_ms)
    << "\n";
  return o.str();
}

std::string spec_digest(const ExperimentSpec& spec) {
  const std::uint64_t h = hash_name(render_experiment(spec));
  static const char* kHex = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 0; i < 16; ++i) out[15 - i] = kHex[(h >> (4 * i)) & 0xf];
  return out;
}

// ---------------------------------------------------------------------------
// Validation

namespace {

class Checker {
 public:
  void check(bool ok, std::string field, std::string message) {
    if (!ok) out_.push_back({std::move(field), std::move(message)});
  }
  std::vector<Violation> take() { return std::move(out_); }

 private:
  std::vector<Violation> out_;
};

bool is_identifier(std::string_view s) {
  if (s.empty()) return false;
  return std::all_of(s.begin(), s.end(), [](char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-' || c == '.';
  });
}

bool has_cycle(const SueSpec& sue) {
  std::map<std::string, std::vector<std::string>> adj;
  for (const auto& e : sue.edges) adj[e.caller].push_back(e.callee);
  std::map<std::string, int> state;  // 0 unvisited, 1 on stack, 2 done
  std::function<bool(const std::string&)> dfs = [&](const std::string& u) {
    state[u] = 1;
    for (const auto& v : adj[u]) {
      if (state[v] == 1) return true;
      if (state[v] == 0 && dfs(v)) return true;
    }
    state[u] = 2;
    return false;
  };
  for (const auto& [u, _] : adj) {
    if (state[u] == 0 && dfs(u)) return true;
  }
  return false;
}

bool valid_intervals(Millis sampling, Millis aggregation) {
  return sampling > 0 && aggregation >= sampling && aggregation % sampling == 0;
}

void check_probability(Checker& c, const std::string& field, double p) {
  c.check(p >= 0.0 && p <= 1.0, field, "probability must lie in [0, 1]");
}

}  // namespace

std::vector<Violation> validate(const ExperimentSpec& spec) {
  Checker c;
  c.check(is_identifier(spec.name), "name", "name must be a nonempty identifier");
  c.check(spec.repetitions >= 1, "repetitions", "repetitions must be at least 1");
  c.check(!spec.responses.empty(), "responses", "responses must be nonempty");

  const SueSpec& sue = spec.sue;
  c.check(!sue.services.empty(), "sue.services", "at least one service is required");
  std::set<std::string> ids;
  for (std::size_t i = 0; i < sue.services.size(); ++i) {
    const auto& s = sue.services[i];
    const std::string f = "sue.services[" + std::to_string(i) + "]";
    c.check(is_identifier(s.id), f + ".id", "service id must be a nonempty identifier");
    c.check(s.id != kSystemTarget, f + ".id", "'system' is reserved");
    c.check(ids.insert(s.id).second, f + ".id", "duplicate service id '" + s.id + "'");
    c.check(s.workers >= 1, f + ".workers", "workers must be at least 1");
    c.check(s.service_time.median_ms > 0, f + ".service_time.median_ms", "median must be positive");
    c.check(s.service_time.sigma >= 0, f + ".service_time.sigma", "sigma must be nonnegative");
    c.check(s.cpu_per_request_ms >= 0, f + ".cpu_per_request_ms", "must be nonnegative");
    c.check(s.error_response_time_ms >= 0, f + ".error_response_time_ms", "must be nonnegative");
  }
  for (std::size_t i = 0; i < sue.edges.size(); ++i) {
    const auto& e = sue.edges[i];
    const std::string f = "sue.edges[" + std::to_string(i) + "]";
    c.check(ids.count(e.caller) > 0, f + ".caller", "unresolved target '" + e.caller + "'");
    c.check(ids.count(e.callee) > 0, f + ".callee", "unresolved target '" + e.callee + "'");
    c.check(e.caller != e.callee, f, "self edge");
    c.check(e.calls_per_request >= 0, f + ".calls_per_request", "must be nonnegative");
    c.check(e.latency_ms >= 0, f + ".latency_ms", "must be nonnegative");
  }
  if (!sue.services.empty()) {
    c.check(!has_cycle(sue), "sue.edges", "call graph must be acyclic");
    c.check(sue.entry_services().size() == 1, "sue.edges",
            "call graph must have exactly one entry service");
  }
  std::set<std::string> metric_names;
  for (std::size_t i = 0; i < sue.metric_points.size(); ++i) {
    const auto& m = sue.metric_points[i];
    const std::string f = "sue.metric_points[" + std::to_string(i) + "]";
    c.check(is_identifier(m.name), f + ".name", "metric name must be a nonempty identifier");
    c.check(metric_names.insert(m.name).second, f + ".name", "duplicate metric '" + m.name + "'");
    c.check(m.target == kSystemTarget || ids.count(m.target) > 0, f + ".target",
            "unresolved target '" + m.target + "'");
    c.check(valid_intervals(m.sampling_interval, m.aggregation_interval), f,
            "sampling_interval must be positive and divide aggregation_interval");
  }
  if (sue.trace_config.strategy == TraceStrategy::kProbabilistic) {
    check_probability(c, "sue.trace_config.rate", sue.trace_config.rate);
  }

  const WorkloadSpec& w = spec.workload;
  c.check(w.users >= 1, "workload.users", "users must be at least 1");
  c.check(w.ramp_up >= 0, "workload.ramp_up", "ramp_up must be nonnegative");
  c.check(w.duration > w.ramp_up, "workload.duration", "duration must exceed ramp_up");
  c.check(w.think_time.median_ms > 0, "workload.think_time.median_ms", "median must be positive");
  c.check(w.think_time.sigma >= 0, "workload.think_time.sigma", "sigma must be nonnegative");
  c.check(w.timeout > 0, "workload.timeout", "timeout must be positive");

  std::set<std::string> treatment_names;
  bool seen_fault = false;
  for (std::size_t i = 0; i < spec.treatments.size(); ++i) {
    const auto& t = spec.treatments[i];
    const std::string f = "treatments[" + std::to_string(i) + "]";
    c.check(is_identifier(t.name), f + ".name", "treatment name must be a nonempty identifier");
    c.check(treatment_names.insert(t.name).second, f + ".name",
            "duplicate treatment '" + t.name + "'");
    if (t.is_fault()) {
      seen_fault = true;
      const auto& ft = t.fault();
      c.check(ids.count(ft.target) > 0, f + ".target", "unresolved target '" + ft.target + "'");
      c.check(ft.start > 0 && ft.start < ft.end, f, "fault window must satisfy 0 < start < end");
      c.check(ft.end < w.duration, f, "fault window exceeds workload duration");
      c.check(ft.start > w.ramp_up, f, "fault window leaves no normal interval before start");
      c.check(ft.end + kSettlingMargin < w.duration, f,
              "fault window leaves no normal interval after end");
      std::visit(Overloaded{[](const PauseFault&) {}, [](const KillFault&) {},
                            [&](const NetworkDelayFault& d) {
                              c.check(d.min_ms >= 0 && d.min_ms <= d.max_ms, f,
                                      "delay must satisfy 0 <= min_ms <= max_ms");
                            },
                            [&](const PacketLossFault& l) {
                              check_probability(c, f + ".probability", l.probability);
                              c.check(l.probability < 1.0, f + ".probability",
                                      "probability must be below 1");
                              c.check(l.retransmit_delay_ms >= 0 && l.retransmit_cpu_ms >= 0, f,
                                      "retransmit costs must be nonnegative");
                            },
                            [&](const PacketCorruptionFault& l) {
                              check_probability(c, f + ".probability", l.probability);
                              c.check(l.probability < 1.0, f + ".probability",
                                      "probability must be below 1");
                              c.check(l.retransmit_delay_ms >= 0 && l.retransmit_cpu_ms >= 0, f,
                                      "retransmit costs must be nonnegative");
                            },
                            [&](const StressFault& s) {
                              c.check(s.factor >= 1.0, f + ".factor",
                                      "stress factor must be at least 1");
                            }},
                 ft.effect);
    } else {
      c.check(!seen_fault, f, "instrumentation treatments must precede fault treatments");
      std::visit(Overloaded{[&](const MetricSamplingChange& m) {
                              c.check(metric_names.count(m.metric) > 0, f + ".metric",
                                      "unresolved target '" + m.metric + "'");
                              c.check(valid_intervals(m.interval,
                                                      m.aggregation_interval.value_or(m.interval)),
                                      f, "interval must be positive and divide aggregation_interval");
                            },
                            [&](const TracingRateChange& r) {
                              check_probability(c, f + ".rate", r.rate);
                            },
                            [](const TracingStrategyChange&) {}},
                 t.instrumentation());
    }
  }
  c.check(seen_fault, "treatments", "at least one fault treatment is required");

  std::set<std::string> response_names;
  for (std::size_t i = 0; i < spec.responses.size(); ++i) {
    const auto& r = spec.responses[i];
    const std::string f = "responses[" + std::to_string(i) + "]";
    c.check(is_identifier(r.name), f + ".name", "response name must be a nonempty identifier");
    c.check(response_names.insert(r.name).second, f + ".name", "duplicate response '" + r.name + "'");
    if (r.kind == ResponseKind::kMetric) {
      c.check(metric_names.count(r.source) > 0, f + ".source", "unresolved target '" + r.source + "'");
    } else {
      c.check(ids.count(r.source) > 0, f + ".source", "unresolved target '" + r.source + "'");
    }
  }

  const auto& d = spec.detection;
  c.check(d.alpha > 0 && d.alpha < 1, "detection.alpha", "alpha must lie in (0, 1)");
  c.check(d.split_ratio > 0 && d.split_ratio < 1, "detection.split_ratio",
          "split_ratio must lie in (0, 1)");
  c.check(d.feature_window >= 1, "detection.feature_window", "feature_window must be at least 1");
  c.check(d.l2 >= 0, "detection.l2", "l2 must be nonnegative");
  c.check(d.tolerance > 0, "detection.tolerance", "tolerance must be positive");
  c.check(d.threshold_k > 0, "detection.threshold_k", "threshold_k must be positive");

  const auto& cm = spec.cost_model;
  c.check(cm.collector_per_metric_event_ms >= 0 && cm.collector_per_span_ms >= 0 &&
              cm.trace_backend_per_span_ms >= 0 && cm.metrics_backend_per_metric_event_ms >= 0 &&
              cm.app_per_instrumentation_call_ms >= 0,
          "cost_model", "cost coefficients must be nonnegative");
  return c.take();
}

}  // namespace oxn
