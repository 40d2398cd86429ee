// Data-plane logic shared by the global plane and every per-server plane:
// classification into per-application FIFO queues, QoS bookkeeping, and the
// (extended) M-LWDF scheduling decision on one storage server.

#ifndef SDSQOS_DATA_PLANE_H_
#define SDSQOS_DATA_PLANE_H_

#include <cstdint>
#include <deque>
#include <optional>
#include <span>
#include <vector>

#include "absl/status/status.h"
#include "sdsqos/domain.h"
#include "sdsqos/token_ledger.h"

namespace sdsqos {

// Volumes below this are treated as exhausted.
inline constexpr double kVolumeEpsilon = 1e-9;

// A queued run of identical requests. Only the head request may be
// partially served.
struct QueuedRun {
  int64_t arrival_slot = 0;
  uint64_t first_seq = 0;  // arrival sequence number of the head request
  double size = 0;
  int64_t count = 0;
  double head_served = 0;
  bool head_started = false;  // overhead already charged for the head
  IoKind kind = IoKind::kRead;
  NodeId first_node = 0;

  double residue() const { return size * static_cast<double>(count) - head_served; }
};

struct AppQueue {
  std::deque<QueuedRun> runs;
  double queue_len_mb = 0;
  double avg_served_rate = 0;  // MB/s, EWMA
  uint64_t next_seq = 0;
};

struct AppQueueStats {
  double queue_len_mb = 0;
  double avg_served_rate = 0;
  int64_t hol_wait_slots = 0;
};

class ServerState {
 public:
  ServerState() = default;
  ServerState(ServerId id, double phys_limit, int num_apps, double slot_duration = 1.0,
              double request_overhead = 0.0);

  ServerId id() const { return id_; }
  double phys_limit() const { return phys_limit_; }
  double slot_duration() const { return slot_duration_; }
  double request_overhead() const { return request_overhead_; }
  double slot_capacity() const { return phys_limit_ * slot_duration_; }
  int num_apps() const { return static_cast<int>(queues_.size()); }

  double remaining_capacity() const { return remaining_capacity_; }
  void set_remaining_capacity(double mb) { remaining_capacity_ = mb; }
  void BeginSlot() { remaining_capacity_ = slot_capacity(); }

  AppQueue& queue(AppId a) { return queues_[a]; }
  const AppQueue& queue(AppId a) const { return queues_[a]; }
  double queue_len(AppId a) const { return queues_[a].queue_len_mb; }
  double total_backlog() const;

  AppQueueStats Stats(AppId a, int64_t now_slot) const;

  // Appends to the app's FIFO.
  void Enqueue(const RequestRun& run);

 private:
  ServerId id_ = 0;
  double phys_limit_ = 0;
  double slot_duration_ = 1.0;
  double request_overhead_ = 0.0;
  double remaining_capacity_ = 0;
  std::vector<AppQueue> queues_;
};

// Appends each request to its application's queue in input order.
// Fails, naming the request, on an unknown app or a foreign server id.
absl::Status Classify(std::span<const IORequest> requests, ServerState& server);
absl::Status Classify(std::span<const RequestRun> runs, ServerState& server);

// The framework-wide plane: one queue per application across all servers.
class GlobalDataPlane {
 public:
  explicit GlobalDataPlane(int num_apps) : queues_(num_apps) {}

  absl::Status Classify(std::span<const RequestRun> runs);

  double queue_len(AppId a) const;
  size_t pending_runs() const;

  // gamma * L * C over the global queues, C being the app's total tokens
  // per slot. Used for diagnostics; routing is by target server.
  std::vector<double> Priorities(std::span<const ApplicationSpec> specs,
                                 std::span<const double> avg_rates,
                                 std::span<const double> token_rates) const;

  // Moves every queued request to its target server, app by app.
  absl::Status Distribute(std::span<ServerState> servers);

 private:
  std::vector<std::vector<RequestRun>> queues_;
};

// (-ln(delta) / target_delay) / avg_served_rate. Throws std::domain_error
// for a nonpositive rate.
double ComputeGamma(const ApplicationSpec& spec, double avg_served_rate);

// Bandwidth obtainable this slot: min(tokens, remaining capacity) / slot.
double ComputeCapacityShare(const ServerState& server, double tokens_available);

inline double Priority(double gamma, double queue_len_mb, double capacity_share,
                       double borrowed_tokens) {
  return gamma * queue_len_mb * capacity_share + borrowed_tokens;
}

// Borrowed-token bonus for (app, server), optionally divided by depth.
double BorrowBonus(const TokenLedger& ledger, AppId a, ServerId s, bool normalize);

// Argmax of Priority over apps with backlog, tokens and server capacity;
// ties go to the lowest app id.
std::optional<AppId> MlwdfSelect(const ServerState& server, const TokenLedger& ledger,
                                 std::span<const ApplicationSpec> specs,
                                 bool normalize_bonus = false);

struct ServeResult {
  double served = 0;  // MB moved, equal to tokens consumed
  double overhead = 0;  // capacity spent starting requests
  int64_t completed = 0;
  uint64_t first_completed_seq = 0;  // valid when completed > 0
};

// Serves the head of the app's FIFO. `quantum` == 0 limits the chunk to the
// head request's residue; a positive quantum lets one call run across
// consecutive requests of the app. The chunk is further limited by the app's
// tokens and the server's remaining capacity; the per-request overhead is
// taken from capacity when a request starts.
ServeResult ServeOne(ServerState& server, TokenLedger& ledger, AppId app, double quantum = 0);

// Serves from the app's FIFO without tokens: up to `capacity_budget` of
// capacity (data plus overhead), touching only requests that arrived at or
// before `max_arrival_slot`. Deducts from the server's remaining capacity.
ServeResult ServeUntokened(ServerState& server, AppId app, double capacity_budget,
                           int64_t max_arrival_slot);

// Runs the extended M-LWDF loop until no app is eligible. Equivalent to
// repeated MlwdfSelect + ServeOne, with gamma and bonus fixed for the slot.
// Returns MB served per app.
std::vector<double> ServeMlwdf(ServerState& server, TokenLedger& ledger,
                               std::span<const double> gammas,
                               std::span<const double> bonuses, double quantum);

}  // namespace sdsqos

#endif  // SDSQOS_DATA_PLANE_H_
