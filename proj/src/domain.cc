#include "sdsqos/domain.h"

#include <cmath>
#include <set>

#include "absl/status/status.h"
#include "absl/strings/ascii.h"
#include "absl/strings/str_cat.h"

namespace sdsqos {

absl::string_view ScenarioName(Scenario s) {
  switch (s) {
    case Scenario::kBorrowing:
      return "Borrowing";
    case Scenario::kNoBorrowing:
      return "NoBorrowing";
    case Scenario::kTraditional:
      return "Traditional";
  }
  return "?";
}

absl::StatusOr<Scenario> ParseScenario(absl::string_view name) {
  std::string n = absl::AsciiStrToLower(name);
  if (n == "borrowing") return Scenario::kBorrowing;
  if (n == "noborrowing" || n == "no-borrowing") return Scenario::kNoBorrowing;
  if (n == "traditional") return Scenario::kTraditional;
  return absl::InvalidArgumentError(absl::StrCat("unknown scenario \"", name, "\""));
}

std::vector<IORequest> Expand(const std::vector<RequestRun>& runs, int num_nodes) {
  std::vector<IORequest> out;
  for (const RequestRun& run : runs) {
    for (int64_t k = 0; k < run.count; ++k) {
      out.push_back(IORequest{
          .app_id = run.app_id,
          .node_id = static_cast<NodeId>((run.first_node + k) % num_nodes),
          .server_id = run.server_id,
          .size = run.size,
          .kind = run.kind,
          .arrival_slot = run.arrival_slot,
      });
    }
  }
  return out;
}

namespace {

bool Finite(double v) { return std::isfinite(v); }

absl::Status Invalid(const std::string& field, absl::string_view what) {
  return absl::InvalidArgumentError(absl::StrCat(field, " ", what));
}

absl::Status ValidateWorkload(const WorkloadSpec& w, const SimConfig& c) {
  if (!Finite(w.offered_load_factor) || w.offered_load_factor < 0) {
    return Invalid("workload.offered_load_factor", "must be >= 0");
  }
  if (!Finite(w.imbalance) || w.imbalance < 0) {
    return Invalid("workload.imbalance", "must be >= 0");
  }
  if (!(w.read_fraction >= 0 && w.read_fraction <= 1)) {
    return Invalid("workload.read_fraction", "out of [0,1]");
  }
  switch (w.mode) {
    case WorkloadMode::kRandomNormal:
      if (!Finite(w.mean_size) || w.mean_size <= 0) {
        return Invalid("workload.mean_size", "must be > 0");
      }
      if (!Finite(w.stddev_size) || w.stddev_size < 0) {
        return Invalid("workload.stddev_size", "must be >= 0");
      }
      break;
    case WorkloadMode::kFixedSize:
      if (!Finite(w.fixed_size) || w.fixed_size <= 0) {
        return Invalid("workload.fixed_size", "must be > 0");
      }
      break;
    case WorkloadMode::kScripted:
      for (size_t i = 0; i < w.script.size(); ++i) {
        const RequestRun& r = w.script[i];
        std::string path = absl::StrCat("workload.script[", i, "]");
        if (r.app_id < 0 || r.app_id >= c.num_apps) {
          return Invalid(path + ".app_id", "refers to no configured application");
        }
        if (r.server_id < 0 || r.server_id >= c.num_servers) {
          return Invalid(path + ".server_id", "out of range");
        }
        if (!Finite(r.size) || r.size <= 0) return Invalid(path + ".size", "must be > 0");
        if (r.count < 1) return Invalid(path + ".count", "must be >= 1");
      }
      break;
  }
  for (size_t i = 0; i < w.io_sizes_kb.size(); ++i) {
    if (!Finite(w.io_sizes_kb[i]) || w.io_sizes_kb[i] <= 0) {
      return Invalid(absl::StrCat("workload.io_sizes_kb[", i, "]"), "must be > 0");
    }
  }
  return absl::OkStatus();
}

}  // namespace

absl::StatusOr<SimConfig> ValidateConfig(SimConfig c) {
  // Absent (zero) knobs take their defaults.
  if (c.slot_duration == 0) c.slot_duration = 1.0;
  if (c.bucket_depth_slots == 0) c.bucket_depth_slots = 1.0;
  if (c.ewma_alpha == 0) c.ewma_alpha = 0.1;
  if (c.num_apps == 0) c.num_apps = static_cast<int>(c.applications.size());
  if (c.num_servers == 0) c.num_servers = static_cast<int>(c.servers.size());

  if (c.num_apps <= 0) return Invalid("num_apps", "must be positive");
  if (c.num_servers <= 0) return Invalid("num_servers", "must be positive");
  if (c.num_nodes <= 0) return Invalid("num_nodes", "must be positive");
  if (c.num_slots <= 0) return Invalid("num_slots", "must be positive");
  if (c.warmup_slots < 0) return Invalid("warmup_slots", "must be >= 0");
  if (static_cast<size_t>(c.num_apps) != c.applications.size()) {
    return Invalid("num_apps", "does not match the applications list");
  }
  if (static_cast<size_t>(c.num_servers) != c.servers.size()) {
    return Invalid("num_servers", "does not match the servers list");
  }
  if (!Finite(c.slot_duration) || c.slot_duration < 0) {
    return Invalid("slot_duration", "must be > 0");
  }
  if (!Finite(c.bucket_depth_slots) || c.bucket_depth_slots < 0) {
    return Invalid("bucket_depth_slots", "must be > 0");
  }
  if (!(c.ewma_alpha > 0 && c.ewma_alpha <= 1)) return Invalid("ewma_alpha", "out of (0,1]");
  if (!Finite(c.request_overhead) || c.request_overhead < 0) {
    return Invalid("request_overhead", "must be >= 0");
  }
  if (!Finite(c.service_quantum) || c.service_quantum < 0) {
    return Invalid("service_quantum", "must be >= 0");
  }
  if (!(c.interference >= 0 && c.interference < 1)) {
    return Invalid("interference", "out of [0,1)");
  }
  if (c.threads < 1) return Invalid("threads", "must be >= 1");
  if (c.scenario == Scenario::kBorrowing && c.num_servers < 2) {
    return absl::InvalidArgumentError("Borrowing requires ≥ 2 servers");
  }

  std::set<std::string> names;
  for (size_t i = 0; i < c.applications.size(); ++i) {
    ApplicationSpec& a = c.applications[i];
    std::string path = absl::StrCat("applications[", i, "]");
    if (a.app_id != static_cast<AppId>(i)) {
      return Invalid(path + ".app_id", "must equal its position (ids are dense)");
    }
    if (a.name.empty()) a.name = absl::StrCat("app-", i);
    if (!names.insert(absl::AsciiStrToLower(a.name)).second) {
      return Invalid(path + ".name", "is not unique (names compare ignoring case)");
    }
    if (!(a.delta > 0 && a.delta <= 1)) return Invalid(path + ".delta", "out of (0,1]");
    if (!Finite(a.target_delay) || a.target_delay <= 0) {
      return Invalid(path + ".target_delay", "must be > 0");
    }
    if (!Finite(a.desired_bw) || a.desired_bw < 0) {
      return Invalid(path + ".desired_bw", "must be >= 0");
    }
    const Policy& p = a.policy;
    if (p.rate_cap && (!Finite(*p.rate_cap) || *p.rate_cap < 0)) {
      return Invalid(path + ".policy.rate_cap", "must be >= 0");
    }
    if (p.borrow_threshold) {
      if (!p.borrow_allowed) {
        return Invalid(path + ".policy.borrow_threshold", "requires borrow=TRUE");
      }
      if (!(*p.borrow_threshold >= 0 && *p.borrow_threshold <= 1)) {
        return Invalid(path + ".policy.borrow_threshold", "out of [0,1]");
      }
    }
  }
  for (size_t s = 0; s < c.servers.size(); ++s) {
    if (!Finite(c.servers[s]) || c.servers[s] <= 0) {
      return Invalid(absl::StrCat("servers[", s, "]"), "phys_limit must be > 0");
    }
  }
  if (absl::Status st = ValidateWorkload(c.workload, c); !st.ok()) return st;
  return c;
}

}  // namespace sdsqos
