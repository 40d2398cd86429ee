#include "sdsqos/data_plane.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "absl/strings/str_cat.h"

namespace sdsqos {
namespace {

constexpr int64_t kAnySlot = std::numeric_limits<int64_t>::max();

// Serves up to `data_limit` MB from the front of `q`, spending data plus
// per-request overhead out of `capacity`.
ServeResult Drain(AppQueue& q, double data_limit, double& capacity, double overhead,
                  int64_t max_arrival_slot) {
  ServeResult r;
  auto note_completed = [&r](uint64_t seq, int64_t n) {
    if (r.completed == 0) r.first_completed_seq = seq;
    r.completed += n;
  };
  double data_left = data_limit;
  while (!q.runs.empty() && data_left > kVolumeEpsilon && capacity > kVolumeEpsilon) {
    QueuedRun& h = q.runs.front();
    if (h.arrival_slot > max_arrival_slot) break;
    if (!h.head_started) {
      double oh = std::min(overhead, capacity);
      capacity -= oh;
      r.overhead += oh;
      h.head_started = true;
      if (capacity <= kVolumeEpsilon) break;
    }
    double take = std::min({h.size - h.head_served, data_left, capacity});
    h.head_served += take;
    data_left -= take;
    capacity -= take;
    r.served += take;
    if (h.size - h.head_served > kVolumeEpsilon) break;

    note_completed(h.first_seq, 1);
    --h.count;
    ++h.first_seq;
    h.head_served = 0;
    h.head_started = false;

    // Whole requests in bulk.
    double unit_capacity = h.size + overhead;
    double by_data = std::floor(data_left / h.size + 1e-12);
    double by_capacity = std::floor(capacity / unit_capacity + 1e-12);
    int64_t k = std::min<int64_t>(
        h.count, static_cast<int64_t>(std::max(0.0, std::min(by_data, by_capacity))));
    if (k > 0) {
      double kd = static_cast<double>(k);
      note_completed(h.first_seq, k);
      r.served += kd * h.size;
      r.overhead += kd * overhead;
      data_left = std::max(0.0, data_left - kd * h.size);
      capacity = std::max(0.0, capacity - kd * unit_capacity);
      h.count -= k;
      h.first_seq += static_cast<uint64_t>(k);
    }
    if (h.count == 0) q.runs.pop_front();
  }
  q.queue_len_mb = q.runs.empty() ? 0.0 : std::max(0.0, q.queue_len_mb - r.served);
  return r;
}

}  // namespace

ServerState::ServerState(ServerId id, double phys_limit, int num_apps, double slot_duration,
                         double request_overhead)
    : id_(id),
      phys_limit_(phys_limit),
      slot_duration_(slot_duration),
      request_overhead_(request_overhead),
      remaining_capacity_(phys_limit * slot_duration),
      queues_(num_apps) {}

double ServerState::total_backlog() const {
  double sum = 0;
  for (const AppQueue& q : queues_) sum += q.queue_len_mb;
  return sum;
}

AppQueueStats ServerState::Stats(AppId a, int64_t now_slot) const {
  const AppQueue& q = queues_[a];
  return AppQueueStats{
      .queue_len_mb = q.queue_len_mb,
      .avg_served_rate = q.avg_served_rate,
      .hol_wait_slots = q.runs.empty() ? 0 : now_slot - q.runs.front().arrival_slot,
  };
}

void ServerState::Enqueue(const RequestRun& run) {
  AppQueue& q = queues_[run.app_id];
  q.runs.push_back(QueuedRun{
      .arrival_slot = run.arrival_slot,
      .first_seq = q.next_seq,
      .size = run.size,
      .count = run.count,
      .kind = run.kind,
      .first_node = run.first_node,
  });
  q.next_seq += static_cast<uint64_t>(run.count);
  q.queue_len_mb += run.volume();
}

namespace {

absl::Status CheckTarget(AppId app, ServerId server_id, size_t index,
                         const ServerState& server) {
  if (app < 0 || app >= server.num_apps()) {
    return absl::InvalidArgumentError(
        absl::StrCat("request ", index, ": unknown app_id ", app));
  }
  if (server_id != server.id()) {
    return absl::InvalidArgumentError(absl::StrCat("request ", index, ": server_id ",
                                                   server_id, " does not match server ",
                                                   server.id()));
  }
  return absl::OkStatus();
}

}  // namespace

absl::Status Classify(std::span<const IORequest> requests, ServerState& server) {
  for (size_t i = 0; i < requests.size(); ++i) {
    if (auto st = CheckTarget(requests[i].app_id, requests[i].server_id, i, server); !st.ok()) {
      return st;
    }
  }
  for (const IORequest& r : requests) {
    server.Enqueue(RequestRun{.app_id = r.app_id,
                              .server_id = r.server_id,
                              .first_node = r.node_id,
                              .size = r.size,
                              .count = 1,
                              .kind = r.kind,
                              .arrival_slot = r.arrival_slot});
  }
  return absl::OkStatus();
}

absl::Status Classify(std::span<const RequestRun> runs, ServerState& server) {
  for (size_t i = 0; i < runs.size(); ++i) {
    if (auto st = CheckTarget(runs[i].app_id, runs[i].server_id, i, server); !st.ok()) {
      return st;
    }
  }
  for (const RequestRun& r : runs) server.Enqueue(r);
  return absl::OkStatus();
}

absl::Status GlobalDataPlane::Classify(std::span<const RequestRun> runs) {
  for (size_t i = 0; i < runs.size(); ++i) {
    if (runs[i].app_id < 0 || static_cast<size_t>(runs[i].app_id) >= queues_.size()) {
      return absl::InvalidArgumentError(
          absl::StrCat("request ", i, ": unknown app_id ", runs[i].app_id));
    }
  }
  for (const RequestRun& r : runs) queues_[r.app_id].push_back(r);
  return absl::OkStatus();
}

double GlobalDataPlane::queue_len(AppId a) const {
  double sum = 0;
  for (const RequestRun& r : queues_[a]) sum += r.volume();
  return sum;
}

size_t GlobalDataPlane::pending_runs() const {
  size_t n = 0;
  for (const auto& q : queues_) n += q.size();
  return n;
}

std::vector<double> GlobalDataPlane::Priorities(std::span<const ApplicationSpec> specs,
                                                std::span<const double> avg_rates,
                                                std::span<const double> token_rates) const {
  std::vector<double> out(queues_.size(), 0.0);
  for (size_t a = 0; a < queues_.size(); ++a) {
    double gamma = ComputeGamma(specs[a], std::max(avg_rates[a], 1e-3));
    out[a] = Priority(gamma, queue_len(static_cast<AppId>(a)), token_rates[a], 0.0);
  }
  return out;
}

absl::Status GlobalDataPlane::Distribute(std::span<ServerState> servers) {
  for (auto& q : queues_) {
    for (const RequestRun& r : q) {
      if (r.server_id < 0 || static_cast<size_t>(r.server_id) >= servers.size()) {
        return absl::InvalidArgumentError(
            absl::StrCat("app ", r.app_id, ": server_id ", r.server_id, " out of range"));
      }
    }
  }
  for (auto& q : queues_) {
    for (const RequestRun& r : q) servers[r.server_id].Enqueue(r);
    q.clear();
  }
  return absl::OkStatus();
}

double ComputeGamma(const ApplicationSpec& spec, double avg_served_rate) {
  if (!(avg_served_rate > 0)) {
    throw std::domain_error(absl::StrCat("avg_served_rate must be positive, got ",
                                         avg_served_rate));
  }
  double a = -std::log(spec.delta) / spec.target_delay;
  return a / avg_served_rate;
}

double ComputeCapacityShare(const ServerState& server, double tokens_available) {
  double mb = std::min(std::max(0.0, tokens_available), server.remaining_capacity());
  return mb / server.slot_duration();
}

double BorrowBonus(const TokenLedger& ledger, AppId a, ServerId s, bool normalize) {
  double t = ledger.borrowed(a, s);
  if (normalize && t > 0) {
    double depth = ledger.depth(a, s);
    return depth > 0 ? t / depth : 0.0;
  }
  return t;
}

std::optional<AppId> MlwdfSelect(const ServerState& server, const TokenLedger& ledger,
                                 std::span<const ApplicationSpec> specs, bool normalize_bonus) {
  if (server.remaining_capacity() <= kVolumeEpsilon) return std::nullopt;
  std::optional<AppId> best;
  double best_priority = 0;
  for (AppId a = 0; a < server.num_apps(); ++a) {
    const AppQueue& q = server.queue(a);
    double tokens = ledger.balance(a, server.id());
    if (q.runs.empty() || tokens <= kVolumeEpsilon) continue;
    double p = Priority(ComputeGamma(specs[a], q.avg_served_rate), q.queue_len_mb,
                        ComputeCapacityShare(server, tokens),
                        BorrowBonus(ledger, a, server.id(), normalize_bonus));
    if (!best || p > best_priority) {
      best = a;
      best_priority = p;
    }
  }
  return best;
}

ServeResult ServeOne(ServerState& server, TokenLedger& ledger, AppId app, double quantum) {
  AppQueue& q = server.queue(app);
  if (q.runs.empty()) return {};
  const QueuedRun& head = q.runs.front();
  double limit = quantum > 0 ? quantum : head.size - head.head_served;
  double data_limit = std::min(limit, ledger.balance(app, server.id()));
  if (data_limit <= 0) return {};
  double capacity = server.remaining_capacity();
  ServeResult r = Drain(q, data_limit, capacity, server.request_overhead(), kAnySlot);
  ledger.Consume(app, server.id(), r.served);
  server.set_remaining_capacity(capacity);
  return r;
}

ServeResult ServeUntokened(ServerState& server, AppId app, double capacity_budget,
                           int64_t max_arrival_slot) {
  double budget = std::min(capacity_budget, server.remaining_capacity());
  if (budget <= 0) return {};
  double capacity = budget;
  ServeResult r = Drain(server.queue(app), std::numeric_limits<double>::infinity(), capacity,
                        server.request_overhead(), max_arrival_slot);
  server.set_remaining_capacity(
      std::max(0.0, server.remaining_capacity() - (budget - capacity)));
  return r;
}

std::vector<double> ServeMlwdf(ServerState& server, TokenLedger& ledger,
                               std::span<const double> gammas,
                               std::span<const double> bonuses, double quantum) {
  const int n = server.num_apps();
  const ServerId s = server.id();
  std::vector<double> served(n, 0.0);

  auto eligible = [&](AppId a) {
    return !server.queue(a).runs.empty() && ledger.balance(a, s) > kVolumeEpsilon;
  };
  auto priority = [&](AppId a) {
    return Priority(gammas[a], server.queue(a).queue_len_mb,
                    ComputeCapacityShare(server, ledger.balance(a, s)), bonuses[a]);
  };

  while (server.remaining_capacity() > kVolumeEpsilon) {
    AppId best = -1;
    AppId second = -1;
    double best_p = 0;
    double second_p = 0;
    for (AppId a = 0; a < n; ++a) {
      if (!eligible(a)) continue;
      double p = priority(a);
      if (best < 0 || p > best_p) {
        second = best;
        second_p = best_p;
        best = a;
        best_p = p;
      } else if (second < 0 || p > second_p) {
        second = a;
        second_p = p;
      }
    }
    if (best < 0) break;

    if (second < 0) {
      // Sole eligible app: the choice cannot change until it stops being
      // eligible, so serve it in one go.
      served[best] +=
          ServeOne(server, ledger, best, std::numeric_limits<double>::infinity()).served;
      continue;
    }

    // Other apps' priorities can only fall while `best` is served (only the
    // shared remaining capacity moves), so the runner-up value from the scan
    // bounds them from above.
    while (true) {
      ServeResult r = ServeOne(server, ledger, best, quantum);
      served[best] += r.served;
      if (r.served <= 0 && r.overhead <= 0) break;
      if (server.remaining_capacity() <= kVolumeEpsilon || !eligible(best)) break;
      double p = priority(best);
      if (!(p > second_p || (p == second_p && best < second))) break;
    }
  }
  return served;
}

}  // namespace sdsqos
