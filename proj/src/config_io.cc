#include "sdsqos/config_io.h"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "absl/status/status.h"
#include "absl/strings/ascii.h"
#include "absl/strings/str_cat.h"
#include "json.hpp"
#include "sdsqos/control_plane.h"

namespace sdsqos {

using nlohmann::json;

namespace {

absl::Status FieldError(absl::string_view path, absl::string_view what) {
  return absl::InvalidArgumentError(absl::StrCat(path, ": ", what));
}

// Typed access to one JSON object, remembering which keys were consumed so
// leftovers can be reported as unknown.
class Fields {
 public:
  Fields(const json& obj, std::string path) : obj_(obj), path_(std::move(path)) {}

  std::string Path(absl::string_view key) const {
    return path_.empty() ? std::string(key) : absl::StrCat(path_, ".", key);
  }

  const json* Find(const std::string& key) {
    auto it = obj_.find(key);
    if (it == obj_.end()) return nullptr;
    seen_.insert(key);
    return &*it;
  }

  absl::Status Number(const std::string& key, double& out) {
    const json* v = Find(key);
    if (!v) return absl::OkStatus();
    if (!v->is_number()) return FieldError(Path(key), "expected a number");
    out = v->get<double>();
    return absl::OkStatus();
  }

  template <typename Int>
  absl::Status Integer(const std::string& key, Int& out) {
    const json* v = Find(key);
    if (!v) return absl::OkStatus();
    if (v->is_number_unsigned()) {
      out = static_cast<Int>(v->get<uint64_t>());
    } else if (v->is_number_integer()) {
      if (std::is_unsigned_v<Int> && v->get<int64_t>() < 0) {
        return FieldError(Path(key), "must be >= 0");
      }
      out = static_cast<Int>(v->get<int64_t>());
    } else {
      return FieldError(Path(key), "expected an integer");
    }
    return absl::OkStatus();
  }

  absl::Status Bool(const std::string& key, bool& out) {
    const json* v = Find(key);
    if (!v) return absl::OkStatus();
    if (!v->is_boolean()) return FieldError(Path(key), "expected true or false");
    out = v->get<bool>();
    return absl::OkStatus();
  }

  absl::Status String(const std::string& key, std::optional<std::string>& out) {
    const json* v = Find(key);
    if (!v) return absl::OkStatus();
    if (!v->is_string()) return FieldError(Path(key), "expected a string");
    out = v->get<std::string>();
    return absl::OkStatus();
  }

  absl::Status Finish() const {
    for (auto it = obj_.begin(); it != obj_.end(); ++it) {
      if (!seen_.count(it.key())) return FieldError(Path(it.key()), "unknown key");
    }
    return absl::OkStatus();
  }

 private:
  const json& obj_;
  std::string path_;
  std::set<std::string> seen_;
};

#define RETURN_IF_ERROR(expr)              \
  do {                                     \
    absl::Status _st = (expr);             \
    if (!_st.ok()) return _st;             \
  } while (0)

absl::StatusOr<WorkloadMode> ParseWorkloadMode(absl::string_view name) {
  std::string n = absl::AsciiStrToLower(name);
  if (n == "normal") return WorkloadMode::kRandomNormal;
  if (n == "fixed") return WorkloadMode::kFixedSize;
  if (n == "scripted") return WorkloadMode::kScripted;
  return absl::InvalidArgumentError(
      absl::StrCat("unknown workload mode \"", name, "\" (normal, fixed, scripted)"));
}

absl::StatusOr<ThresholdMode> ParseThresholdMode(absl::string_view name) {
  std::string n = absl::AsciiStrToLower(name);
  if (n == "cumulative") return ThresholdMode::kCumulative;
  if (n == "instantaneous") return ThresholdMode::kInstantaneous;
  return absl::InvalidArgumentError(
      absl::StrCat("unknown threshold mode \"", name, "\" (cumulative, instantaneous)"));
}

absl::Status ReadScriptEntry(const json& j, const std::string& path, RequestRun& r) {
  if (!j.is_object()) return FieldError(path, "expected an object");
  Fields f(j, path);
  RETURN_IF_ERROR(f.Integer("app_id", r.app_id));
  RETURN_IF_ERROR(f.Integer("server_id", r.server_id));
  RETURN_IF_ERROR(f.Integer("first_node", r.first_node));
  RETURN_IF_ERROR(f.Number("size", r.size));
  RETURN_IF_ERROR(f.Integer("count", r.count));
  std::optional<std::string> kind;
  RETURN_IF_ERROR(f.String("kind", kind));
  if (kind) {
    std::string k = absl::AsciiStrToLower(*kind);
    if (k == "read") {
      r.kind = IoKind::kRead;
    } else if (k == "write") {
      r.kind = IoKind::kWrite;
    } else {
      return FieldError(f.Path("kind"), "expected \"read\" or \"write\"");
    }
  }
  return f.Finish();
}

absl::Status ReadWorkload(const json& j, WorkloadSpec& w) {
  if (!j.is_object()) return FieldError("workload", "expected an object");
  Fields f(j, "workload");
  std::optional<std::string> mode;
  RETURN_IF_ERROR(f.String("mode", mode));
  if (mode) {
    absl::StatusOr<WorkloadMode> m = ParseWorkloadMode(*mode);
    if (!m.ok()) return FieldError("workload.mode", m.status().message());
    w.mode = *m;
  }
  RETURN_IF_ERROR(f.Number("mean_size", w.mean_size));
  RETURN_IF_ERROR(f.Number("stddev_size", w.stddev_size));
  RETURN_IF_ERROR(f.Number("fixed_size", w.fixed_size));
  RETURN_IF_ERROR(f.Number("offered_load_factor", w.offered_load_factor));
  RETURN_IF_ERROR(f.Number("imbalance", w.imbalance));
  RETURN_IF_ERROR(f.Number("read_fraction", w.read_fraction));
  if (const json* sizes = f.Find("io_sizes_kb")) {
    if (!sizes->is_array()) return FieldError("workload.io_sizes_kb", "expected an array");
    w.io_sizes_kb.clear();
    for (size_t i = 0; i < sizes->size(); ++i) {
      if (!(*sizes)[i].is_number()) {
        return FieldError(absl::StrCat("workload.io_sizes_kb[", i, "]"), "expected a number");
      }
      w.io_sizes_kb.push_back((*sizes)[i].get<double>());
    }
  }
  if (const json* script = f.Find("script")) {
    if (!script->is_array()) return FieldError("workload.script", "expected an array");
    w.script.clear();
    for (size_t i = 0; i < script->size(); ++i) {
      RequestRun r;
      RETURN_IF_ERROR(
          ReadScriptEntry((*script)[i], absl::StrCat("workload.script[", i, "]"), r));
      w.script.push_back(r);
    }
  }
  return f.Finish();
}

absl::Status ReadApplication(const json& j, size_t index, ApplicationSpec& a) {
  std::string path = absl::StrCat("applications[", index, "]");
  if (!j.is_object()) return FieldError(path, "expected an object");
  Fields f(j, path);
  a.app_id = static_cast<AppId>(index);
  RETURN_IF_ERROR(f.Integer("app_id", a.app_id));
  std::optional<std::string> name;
  RETURN_IF_ERROR(f.String("name", name));
  a.name = name.value_or(absl::StrCat("app-", a.app_id));
  if (!f.Find("desired_bw")) return FieldError(f.Path("desired_bw"), "is required");
  RETURN_IF_ERROR(f.Number("desired_bw", a.desired_bw));
  RETURN_IF_ERROR(f.Number("delta", a.delta));
  RETURN_IF_ERROR(f.Number("target_delay", a.target_delay));
  return f.Finish();
}

// nlohmann reports a byte offset; turn it into line:column.
std::string Position(absl::string_view text, size_t byte) {
  size_t line = 1;
  size_t col = 1;
  for (size_t i = 0; i < byte && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return absl::StrCat("line ", line, ", column ", col);
}

}  // namespace

absl::string_view WorkloadModeName(WorkloadMode mode) {
  switch (mode) {
    case WorkloadMode::kRandomNormal:
      return "normal";
    case WorkloadMode::kFixedSize:
      return "fixed";
    case WorkloadMode::kScripted:
      return "scripted";
  }
  return "?";
}

absl::string_view ThresholdModeName(ThresholdMode mode) {
  return mode == ThresholdMode::kCumulative ? "cumulative" : "instantaneous";
}

absl::StatusOr<SimConfig> ParseConfig(absl::string_view text) {
  json root;
  try {
    root = json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    return absl::InvalidArgumentError(
        absl::StrCat("config parse error at ", Position(text, e.byte), ": ", e.what()));
  }
  if (!root.is_object()) return absl::InvalidArgumentError("config must be a JSON object");

  SimConfig c;
  Fields f(root, "");
  RETURN_IF_ERROR(f.Integer("num_apps", c.num_apps));
  RETURN_IF_ERROR(f.Integer("num_servers", c.num_servers));
  RETURN_IF_ERROR(f.Integer("num_nodes", c.num_nodes));
  RETURN_IF_ERROR(f.Number("slot_duration", c.slot_duration));
  RETURN_IF_ERROR(f.Integer("num_slots", c.num_slots));
  RETURN_IF_ERROR(f.Integer("warmup_slots", c.warmup_slots));
  std::optional<std::string> scenario;
  RETURN_IF_ERROR(f.String("scenario", scenario));
  if (scenario) {
    absl::StatusOr<Scenario> s = ParseScenario(*scenario);
    if (!s.ok()) return FieldError("scenario", s.status().message());
    c.scenario = *s;
  }
  RETURN_IF_ERROR(f.Integer("seed", c.seed));
  RETURN_IF_ERROR(f.Number("bucket_depth_slots", c.bucket_depth_slots));
  RETURN_IF_ERROR(f.Number("ewma_alpha", c.ewma_alpha));
  RETURN_IF_ERROR(f.Number("request_overhead", c.request_overhead));
  RETURN_IF_ERROR(f.Number("service_quantum", c.service_quantum));
  RETURN_IF_ERROR(f.Number("interference", c.interference));
  std::optional<std::string> thres_mode;
  RETURN_IF_ERROR(f.String("thres_mode", thres_mode));
  if (thres_mode) {
    absl::StatusOr<ThresholdMode> m = ParseThresholdMode(*thres_mode);
    if (!m.ok()) return FieldError("thres_mode", m.status().message());
    c.thres_mode = *m;
  }
  RETURN_IF_ERROR(f.Bool("normalize_borrow_bonus", c.normalize_borrow_bonus));
  RETURN_IF_ERROR(f.Integer("threads", c.threads));

  const json* servers = f.Find("servers");
  if (!servers) return FieldError("servers", "is required");
  if (!servers->is_array()) return FieldError("servers", "expected an array of MB/s limits");
  for (size_t i = 0; i < servers->size(); ++i) {
    if (!(*servers)[i].is_number()) {
      return FieldError(absl::StrCat("servers[", i, "]"), "expected a number");
    }
    c.servers.push_back((*servers)[i].get<double>());
  }

  const json* apps = f.Find("applications");
  if (!apps) return FieldError("applications", "is required");
  if (!apps->is_array()) return FieldError("applications", "expected an array");
  for (size_t i = 0; i < apps->size(); ++i) {
    ApplicationSpec a;
    RETURN_IF_ERROR(ReadApplication((*apps)[i], i, a));
    c.applications.push_back(std::move(a));
  }

  if (const json* w = f.Find("workload")) RETURN_IF_ERROR(ReadWorkload(*w, c.workload));

  if (const json* policies = f.Find("policies")) {
    if (!policies->is_array()) return FieldError("policies", "expected an array of strings");
    for (size_t i = 0; i < policies->size(); ++i) {
      std::string path = absl::StrCat("policies[", i, "]");
      if (!(*policies)[i].is_string()) return FieldError(path, "expected a string");
      absl::StatusOr<PolicyStatement> stmt = ParsePolicy((*policies)[i].get<std::string>());
      if (!stmt.ok()) return FieldError(path, stmt.status().message());
      if (absl::Status st = ApplyPolicy(*stmt, c.applications); !st.ok()) {
        return FieldError(path, st.message());
      }
    }
  }
  RETURN_IF_ERROR(f.Finish());
  return ValidateConfig(std::move(c));
}

absl::StatusOr<SimConfig> LoadConfig(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return absl::NotFoundError(absl::StrCat(path, ": cannot open config"));
  std::stringstream buf;
  buf << in.rdbuf();
  absl::StatusOr<SimConfig> c = ParseConfig(buf.str());
  if (!c.ok()) {
    return absl::Status(c.status().code(), absl::StrCat(path, ": ", c.status().message()));
  }
  return c;
}

std::string ConfigToJson(const SimConfig& c) {
  json root = json::object();
  root["num_apps"] = c.num_apps;
  root["num_servers"] = c.num_servers;
  root["num_nodes"] = c.num_nodes;
  root["slot_duration"] = c.slot_duration;
  root["num_slots"] = c.num_slots;
  root["warmup_slots"] = c.warmup_slots;
  root["scenario"] = std::string(ScenarioName(c.scenario));
  root["seed"] = c.seed;
  root["bucket_depth_slots"] = c.bucket_depth_slots;
  root["ewma_alpha"] = c.ewma_alpha;
  root["request_overhead"] = c.request_overhead;
  root["service_quantum"] = c.service_quantum;
  root["interference"] = c.interference;
  root["thres_mode"] = std::string(ThresholdModeName(c.thres_mode));
  root["normalize_borrow_bonus"] = c.normalize_borrow_bonus;
  root["threads"] = c.threads;
  root["servers"] = c.servers;

  json apps = json::array();
  json policies = json::array();
  for (const ApplicationSpec& a : c.applications) {
    apps.push_back({{"app_id", a.app_id},
                    {"name", a.name},
                    {"desired_bw", a.desired_bw},
                    {"delta", a.delta},
                    {"target_delay", a.target_delay}});
    for (const std::string& p : FormatPolicies(a)) policies.push_back(p);
  }
  root["applications"] = apps;
  root["policies"] = policies;

  const WorkloadSpec& w = c.workload;
  json script = json::array();
  for (const RequestRun& r : w.script) {
    script.push_back({{"app_id", r.app_id},
                      {"server_id", r.server_id},
                      {"first_node", r.first_node},
                      {"size", r.size},
                      {"count", r.count},
                      {"kind", r.kind == IoKind::kRead ? "read" : "write"}});
  }
  root["workload"] = {{"mode", std::string(WorkloadModeName(w.mode))},
                      {"mean_size", w.mean_size},
                      {"stddev_size", w.stddev_size},
                      {"fixed_size", w.fixed_size},
                      {"offered_load_factor", w.offered_load_factor},
                      {"imbalance", w.imbalance},
                      {"read_fraction", w.read_fraction},
                      {"io_sizes_kb", w.io_sizes_kb},
                      {"script", script}};
  return root.dump(2) + "\n";
}

}  // namespace sdsqos
