// Core data types shared by the simulator modules.
//
// Units: sizes and volumes are megabytes (MB), bandwidths are MB/s, time is
// measured in slots of `slot_duration` seconds. One token grants permission
// to move one megabyte.

#ifndef SDSQOS_DOMAIN_H_
#define SDSQOS_DOMAIN_H_

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "absl/status/statusor.h"
#include "absl/strings/string_view.h"

namespace sdsqos {

using AppId = int32_t;
using ServerId = int32_t;
using NodeId = int32_t;

enum class Scenario { kBorrowing, kNoBorrowing, kTraditional };

absl::string_view ScenarioName(Scenario s);
absl::StatusOr<Scenario> ParseScenario(absl::string_view name);

enum class IoKind { kRead, kWrite };

// How the borrow threshold of a policy is compared against satisfaction.
//  kCumulative: served / desired over the run so far.
//  kInstantaneous: assigned / required tokens for the (app, server) pair.
enum class ThresholdMode { kCumulative, kInstantaneous };

struct Policy {
  std::optional<double> rate_cap;  // MB/s
  bool borrow_allowed = true;
  std::optional<double> borrow_threshold;

  bool operator==(const Policy&) const = default;
};

struct ApplicationSpec {
  AppId app_id = 0;
  std::string name;  // config-facing label, "app-<id>" unless set
  double desired_bw = 0;  // MB/s
  double delta = 0.1;  // max violation probability, (0,1]
  double target_delay = 1.0;  // seconds
  Policy policy;

  bool operator==(const ApplicationSpec&) const = default;
};

struct IORequest {
  AppId app_id = 0;
  NodeId node_id = 0;
  ServerId server_id = 0;
  double size = 0;  // MB
  IoKind kind = IoKind::kRead;
  int64_t arrival_slot = 0;

  bool operator==(const IORequest&) const = default;
};

// `count` back-to-back requests of identical size from one app to one
// server. Node ids advance round-robin from `first_node`. This is the
// compact form the engine moves around; Expand() yields the request list.
struct RequestRun {
  AppId app_id = 0;
  ServerId server_id = 0;
  NodeId first_node = 0;
  double size = 0;
  int64_t count = 1;
  IoKind kind = IoKind::kRead;
  int64_t arrival_slot = 0;

  double volume() const { return size * static_cast<double>(count); }
  bool operator==(const RequestRun&) const = default;
};

std::vector<IORequest> Expand(const std::vector<RequestRun>& runs, int num_nodes);

// Dense (application x server) table of doubles.
struct AppServerTable {
  int num_apps = 0;
  int num_servers = 0;
  std::vector<double> values;

  AppServerTable() = default;
  AppServerTable(int apps, int servers, double init = 0.0)
      : num_apps(apps), num_servers(servers),
        values(static_cast<size_t>(apps) * servers, init) {}

  double& at(AppId a, ServerId s) { return values[static_cast<size_t>(a) * num_servers + s]; }
  double at(AppId a, ServerId s) const {
    return values[static_cast<size_t>(a) * num_servers + s];
  }
  bool operator==(const AppServerTable&) const = default;
};

enum class WorkloadMode { kRandomNormal, kFixedSize, kScripted };

struct WorkloadSpec {
  WorkloadMode mode = WorkloadMode::kRandomNormal;
  double mean_size = 0.064;  // MB
  double stddev_size = 0.032;  // MB
  double fixed_size = 0.00390625;  // MB (4 KB)
  double offered_load_factor = 1.0;
  double imbalance = 0.0;  // Zipf exponent over servers, 0 = uniform
  double read_fraction = 0.5;
  std::vector<double> io_sizes_kb = {4, 8, 64};  // sweep set
  // kScripted: emitted verbatim every slot (arrival_slot is overwritten).
  std::vector<RequestRun> script;

  bool operator==(const WorkloadSpec&) const = default;
};

inline constexpr double kMinRequestSize = 0.001;  // MB, truncation floor

struct SimConfig {
  int num_apps = 0;
  int num_servers = 0;
  int num_nodes = 1;
  double slot_duration = 1.0;
  int64_t num_slots = 1;
  int64_t warmup_slots = 10;
  Scenario scenario = Scenario::kBorrowing;
  uint64_t seed = 0;
  double bucket_depth_slots = 1.0;
  double ewma_alpha = 0.1;
  // Capacity charged per request started, in MB-equivalent. Tokens are not
  // charged for it.
  double request_overhead = 0.0005;
  // Upper bound on one scheduling decision's transfer. 0 = one request.
  double service_quantum = 0.0;
  // Traditional only: per extra concurrently active application, the
  // fraction of a server's physical bandwidth lost to stream interference.
  double interference = 0.015;
  ThresholdMode thres_mode = ThresholdMode::kCumulative;
  // Divide the borrowed-token bonus by the bucket depth before adding it to
  // the M-LWDF product.
  bool normalize_borrow_bonus = false;
  // Step servers on worker threads during service. Results are identical.
  int threads = 1;
  std::vector<ApplicationSpec> applications;
  std::vector<double> servers;  // phys_limit per server, MB/s
  WorkloadSpec workload;

  bool operator==(const SimConfig&) const = default;
};

// Returns the config with defaults normalized, or the first violated
// invariant as InvalidArgument with a field path.
absl::StatusOr<SimConfig> ValidateConfig(SimConfig config);

}  // namespace sdsqos

#endif  // SDSQOS_DOMAIN_H_
