// Time-slotted orchestration of the QoS procedure. Each slot:
//   1. the slot's requests are handed to the global data plane,
//   2. which classifies them per application,
//   3. computes global priorities and routes requests to their servers;
//   4-6. the controller refills and evenly shapes each app's token bucket;
//   7. local planes classify and report per-(app, server) demand;
//   8. scenario-specific service: borrowing then extended M-LWDF
//      (Borrowing), M-LWDF with no bonus (NoBorrowing), or per-server FIFO
//      bounded by physical bandwidth only (Traditional).

#ifndef SDSQOS_ENGINE_H_
#define SDSQOS_ENGINE_H_

#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "absl/status/statusor.h"
#include "sdsqos/control_plane.h"
#include "sdsqos/data_plane.h"
#include "sdsqos/domain.h"
#include "sdsqos/token_ledger.h"

namespace sdsqos {

// A broken runtime invariant. Indicates a simulator bug, not bad input.
class SimulationError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

struct SlotTrace {
  int64_t slot = 0;
  std::vector<double> per_app_served;  // MB
  std::vector<double> per_server_served;  // MB
  std::vector<double> per_server_utilization;  // capacity used / phys capacity
  std::vector<BorrowRecord> borrows;
  std::vector<double> per_app_queue_backlog;  // MB at slot end
  std::vector<double> global_priority;

  bool operator==(const SlotTrace&) const = default;
};

struct SimReport {
  Scenario scenario = Scenario::kBorrowing;
  uint64_t seed = 0;
  std::optional<double> io_size_kb;  // set by RunSweep
  int64_t measured_slots = 0;
  std::vector<double> per_app_desired_bw;  // MB/s
  std::vector<double> per_app_allocated_bw;  // MB/s averaged over measured slots
  double allocated_pct = 0;  // sum min(allocated, desired) / sum desired, in %
  double total_served_mb = 0;  // measured slots only
  int64_t borrow_count = 0;
  double borrowed_tokens = 0;
  std::vector<std::vector<double>> per_server_utilization;  // [slot][server]
  std::vector<SlotTrace> slot_traces;  // only when traces were requested

  bool operator==(const SimReport&) const = default;
};

// Fraction of physical bandwidth a Traditional server delivers while
// `active_apps` applications interleave on it: 1 - interference * (k - 1),
// floored at kMinTraditionalEfficiency.
inline constexpr double kMinTraditionalEfficiency = 0.1;
double TraditionalEfficiency(int active_apps, double interference);

double AllocatedPct(std::span<const double> allocated, std::span<const double> desired);

class Simulator {
 public:
  // Validates the config first.
  static absl::StatusOr<Simulator> Create(SimConfig config);

  // Runs the next slot on generated arrivals.
  SlotTrace RunSlot();
  // Runs the next slot on the given arrivals instead of the generator.
  SlotTrace RunSlot(std::span<const RequestRun> arrivals);

  int64_t next_slot() const { return next_slot_; }
  const SimConfig& config() const { return config_; }
  const TokenLedger& ledger() const { return ledger_; }
  const std::vector<ServerState>& servers() const { return servers_; }
  const TokenGrantPlan& plan() const { return plan_; }

 private:
  explicit Simulator(SimConfig config);

  void ServeTokened(SlotTrace& trace, bool borrowing);
  void ServeTraditional(SlotTrace& trace);
  void FinishSlot(SlotTrace& trace);

  SimConfig config_;
  std::vector<EffectivePolicy> policies_;
  TokenGrantPlan plan_;
  TokenLedger ledger_;
  GlobalDataPlane global_;
  std::vector<ServerState> servers_;
  std::vector<double> app_avg_rate_;  // app-wide EWMA, global plane diagnostics
  std::vector<double> cumulative_served_;
  AppServerTable pair_served_;  // this slot
  std::vector<double> start_capacity_;  // this slot, after interference
  int64_t next_slot_ = 0;
};

// Runs warmup_slots + num_slots slots; averages exclude the warmup.
absl::StatusOr<SimReport> RunSimulation(const SimConfig& config, bool keep_traces = false);

// One FixedSize run per I/O size (MB), everything else held equal.
absl::StatusOr<std::vector<SimReport>> RunSweep(const SimConfig& base,
                                                std::span<const double> io_sizes_mb);

// One application wanting 300 MB/s on three 500 MB/s servers, issuing
// 150/100/50 MB per slot to servers 0/1/2.
SimConfig UnbalancedExampleConfig(Scenario scenario, int64_t num_slots = 1);

}  // namespace sdsqos

#endif  // SDSQOS_ENGINE_H_
