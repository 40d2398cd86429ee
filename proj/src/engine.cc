#include "sdsqos/engine.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <thread>

#include "absl/strings/str_cat.h"
#include "sdsqos/workload.h"

namespace sdsqos {
namespace {

constexpr double kMinRate = 1e-3;  // MB/s floor for EWMA rates
constexpr double kCheckTolerance = 1e-6;
constexpr uint64_t kBorrowStream = 0xb0770b0770b0770bULL;

void Check(bool ok, const std::string& what) {
  if (!ok) throw SimulationError(what);
}

// Runs fn(s) for every server, on up to `threads` workers. Each call touches
// only its own server's state.
template <typename Fn>
void ForEachServer(int num_servers, int threads, Fn fn) {
  if (threads <= 1 || num_servers <= 1) {
    for (int s = 0; s < num_servers; ++s) fn(s);
    return;
  }
  int workers = std::min(threads, num_servers);
  std::vector<std::jthread> pool;
  pool.reserve(workers);
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([=, &fn] {
      for (int s = w; s < num_servers; s += workers) fn(s);
    });
  }
}

}  // namespace

double TraditionalEfficiency(int active_apps, double interference) {
  if (active_apps <= 1) return 1.0;
  return std::max(kMinTraditionalEfficiency, 1.0 - interference * (active_apps - 1));
}

double AllocatedPct(std::span<const double> allocated, std::span<const double> desired) {
  double want = 0;
  double got = 0;
  for (size_t a = 0; a < desired.size(); ++a) {
    want += desired[a];
    got += std::min(allocated[a], desired[a]);
  }
  return want > 0 ? 100.0 * got / want : 100.0;
}

absl::StatusOr<Simulator> Simulator::Create(SimConfig config) {
  absl::StatusOr<SimConfig> valid = ValidateConfig(std::move(config));
  if (!valid.ok()) return valid.status();
  return Simulator(*std::move(valid));
}

Simulator::Simulator(SimConfig config)
    : config_(std::move(config)),
      policies_(EnforcePolicies(config_.applications)),
      ledger_(config_.num_apps, config_.num_servers, config_.bucket_depth_slots),
      global_(config_.num_apps),
      app_avg_rate_(config_.num_apps),
      cumulative_served_(config_.num_apps, 0.0),
      pair_served_(config_.num_apps, config_.num_servers),
      start_capacity_(config_.num_servers, 0.0) {
  // Validated: at least one server, so shaping cannot fail.
  plan_ = *ShapeTraffic(GenerateTokenRates(config_.applications, config_.slot_duration),
                        config_.num_servers);
  for (ServerId s = 0; s < config_.num_servers; ++s) {
    servers_.emplace_back(s, config_.servers[s], config_.num_apps, config_.slot_duration,
                          config_.request_overhead);
    for (AppId a = 0; a < config_.num_apps; ++a) {
      servers_.back().queue(a).avg_served_rate =
          std::max(kMinRate, config_.applications[a].desired_bw);
    }
  }
  for (AppId a = 0; a < config_.num_apps; ++a) {
    app_avg_rate_[a] = std::max(kMinRate, config_.applications[a].desired_bw);
  }
}

SlotTrace Simulator::RunSlot() {
  SlotContext ctx{.num_servers = config_.num_servers,
                  .num_nodes = config_.num_nodes,
                  .slot_duration = config_.slot_duration,
                  .slot = next_slot_,
                  .seed = config_.seed};
  std::vector<RequestRun> arrivals =
      GenerateSlotRuns(config_.workload, config_.applications, ctx);
  return RunSlot(arrivals);
}

SlotTrace Simulator::RunSlot(std::span<const RequestRun> arrivals) {
  const int n = config_.num_apps;
  const int m = config_.num_servers;
  SlotTrace trace;
  trace.slot = next_slot_;
  trace.per_app_served.assign(n, 0.0);
  trace.per_server_served.assign(m, 0.0);
  trace.per_server_utilization.assign(m, 0.0);

  // Steps 1-3: global classification, priorities, routing.
  std::vector<RequestRun> stamped(arrivals.begin(), arrivals.end());
  for (RequestRun& r : stamped) r.arrival_slot = next_slot_;
  if (absl::Status st = global_.Classify(stamped); !st.ok()) {
    throw SimulationError(std::string(st.message()));
  }
  trace.global_priority = global_.Priorities(config_.applications, app_avg_rate_,
                                             plan_.per_app_rate);
  if (absl::Status st = global_.Distribute(servers_); !st.ok()) {
    throw SimulationError(std::string(st.message()));
  }
  for (ServerId s = 0; s < m; ++s) {
    servers_[s].BeginSlot();
    start_capacity_[s] = servers_[s].remaining_capacity();
  }

  if (config_.scenario == Scenario::kTraditional) {
    ServeTraditional(trace);
  } else {
    ServeTokened(trace, config_.scenario == Scenario::kBorrowing);
  }
  FinishSlot(trace);
  ++next_slot_;
  return trace;
}

void Simulator::ServeTokened(SlotTrace& trace, bool borrowing) {
  const int n = config_.num_apps;
  const int m = config_.num_servers;

  // Steps 4-6.
  RefillBuckets(ledger_, plan_);

  // Step 7: local demand.
  AppServerTable demand(n, m);
  for (ServerId s = 0; s < m; ++s) {
    for (AppId a = 0; a < n; ++a) demand.at(a, s) = servers_[s].queue_len(a);
  }

  // Step 8.
  if (borrowing) {
    std::vector<double> before(n);
    for (AppId a = 0; a < n; ++a) before[a] = ledger_.AppTotal(a);

    std::vector<double> satisfaction(n, 0.0);
    for (AppId a = 0; a < n; ++a) {
      double desired = config_.applications[a].desired_bw * config_.slot_duration *
                       static_cast<double>(next_slot_);
      satisfaction[a] = desired > 0 ? cumulative_served_[a] / desired : 0.0;
    }
    std::mt19937_64 rng = SlotRng(config_.seed ^ kBorrowStream, next_slot_);
    trace.borrows = BorrowingRound(ledger_,
                                   BorrowInputs{.demands = &demand,
                                                .policies = policies_,
                                                .satisfaction = satisfaction,
                                                .thres_mode = config_.thres_mode,
                                                .slot = next_slot_},
                                   rng);
    for (AppId a = 0; a < n; ++a) {
      Check(std::abs(ledger_.AppTotal(a) - before[a]) <= kCheckTolerance * (1 + before[a]),
            absl::StrCat("borrowing changed app ", a, "'s token total"));
    }
  }

  TokenLedger granted = ledger_;
  std::vector<std::vector<double>> served(m);
  ForEachServer(m, config_.threads, [&](ServerId s) {
    ServerState& server = servers_[s];
    std::vector<double> gammas(n);
    std::vector<double> bonuses(n);
    for (AppId a = 0; a < n; ++a) {
      gammas[a] = ComputeGamma(config_.applications[a], server.queue(a).avg_served_rate);
      bonuses[a] = BorrowBonus(ledger_, a, s, config_.normalize_borrow_bonus);
    }
    served[s] = ServeMlwdf(server, ledger_, gammas, bonuses, config_.service_quantum);
  });

  for (ServerId s = 0; s < m; ++s) {
    for (AppId a = 0; a < n; ++a) {
      double mb = served[s][a];
      Check(mb <= granted.balance(a, s) + kCheckTolerance,
            absl::StrCat("app ", a, " served beyond its tokens on server ", s));
      pair_served_.at(a, s) = mb;
      trace.per_app_served[a] += mb;
      trace.per_server_served[s] += mb;
    }
  }
}

void Simulator::ServeTraditional(SlotTrace& trace) {
  const int n = config_.num_apps;
  const int m = config_.num_servers;
  std::vector<std::vector<double>> served(m, std::vector<double>(n, 0.0));

  ForEachServer(m, config_.threads, [&](ServerId s) {
    ServerState& server = servers_[s];
    int active = 0;
    for (AppId a = 0; a < n; ++a) active += server.queue(a).runs.empty() ? 0 : 1;
    server.set_remaining_capacity(server.slot_capacity() *
                                  TraditionalEfficiency(active, config_.interference));
    start_capacity_[s] = server.remaining_capacity();
    const double overhead = server.request_overhead();

    // Oldest arrival slot first. Requests that arrived in the same slot are
    // interleaved, which in volume terms shares capacity in proportion to
    // outstanding work.
    for (int pass = 0; pass < 64 && server.remaining_capacity() > kVolumeEpsilon; ++pass) {
      int64_t oldest = std::numeric_limits<int64_t>::max();
      for (AppId a = 0; a < n; ++a) {
        const AppQueue& q = server.queue(a);
        if (!q.runs.empty()) oldest = std::min(oldest, q.runs.front().arrival_slot);
      }
      if (oldest == std::numeric_limits<int64_t>::max()) break;

      std::vector<double> work(n, 0.0);
      double total = 0;
      for (AppId a = 0; a < n; ++a) {
        for (const QueuedRun& r : server.queue(a).runs) {
          if (r.arrival_slot != oldest) break;
          double fresh = static_cast<double>(r.count) - (r.head_started ? 1.0 : 0.0);
          work[a] += r.residue() + fresh * overhead;
        }
        total += work[a];
      }
      double available = server.remaining_capacity();
      double before = available;
      for (AppId a = 0; a < n; ++a) {
        if (work[a] <= 0) continue;
        double budget = total <= available ? work[a] : available * work[a] / total;
        served[s][a] += ServeUntokened(server, a, budget, oldest).served;
      }
      if (before - server.remaining_capacity() <= kVolumeEpsilon) break;
    }
  });

  for (ServerId s = 0; s < m; ++s) {
    for (AppId a = 0; a < n; ++a) {
      pair_served_.at(a, s) = served[s][a];
      trace.per_app_served[a] += served[s][a];
      trace.per_server_served[s] += served[s][a];
    }
  }
}

void Simulator::FinishSlot(SlotTrace& trace) {
  const int n = config_.num_apps;
  const int m = config_.num_servers;
  const double dt = config_.slot_duration;
  const double alpha = config_.ewma_alpha;

  trace.per_app_queue_backlog.assign(n, 0.0);
  for (ServerId s = 0; s < m; ++s) {
    ServerState& server = servers_[s];
    double cap = server.slot_capacity();
    Check(trace.per_server_served[s] <= cap + kCheckTolerance,
          absl::StrCat("server ", s, " exceeded its physical limit"));
    trace.per_server_utilization[s] =
        std::max(0.0, start_capacity_[s] - server.remaining_capacity()) / cap;
    for (AppId a = 0; a < n; ++a) {
      trace.per_app_queue_backlog[a] += server.queue_len(a);
      AppQueue& q = server.queue(a);
      q.avg_served_rate = std::max(
          kMinRate, (1 - alpha) * q.avg_served_rate + alpha * pair_served_.at(a, s) / dt);
    }
  }

  double total_app = 0;
  double total_server = 0;
  for (double v : trace.per_server_served) total_server += v;
  for (double v : trace.per_app_served) total_app += v;
  Check(std::abs(total_app - total_server) <= kCheckTolerance * (1 + total_server),
        "per-app and per-server served totals disagree");

  for (AppId a = 0; a < n; ++a) {
    cumulative_served_[a] += trace.per_app_served[a];
    app_avg_rate_[a] = std::max(
        kMinRate, (1 - alpha) * app_avg_rate_[a] + alpha * trace.per_app_served[a] / dt);
  }
}

absl::StatusOr<SimReport> RunSimulation(const SimConfig& config, bool keep_traces) {
  absl::StatusOr<Simulator> sim = Simulator::Create(config);
  if (!sim.ok()) return sim.status();
  const SimConfig& c = sim->config();
  const int n = c.num_apps;

  SimReport report;
  report.scenario = c.scenario;
  report.seed = c.seed;
  report.measured_slots = c.num_slots;
  report.per_app_desired_bw.resize(n);
  for (AppId a = 0; a < n; ++a) report.per_app_desired_bw[a] = c.applications[a].desired_bw;

  std::vector<double> served(n, 0.0);
  try {
    for (int64_t t = 0; t < c.warmup_slots + c.num_slots; ++t) {
      SlotTrace trace = sim->RunSlot();
      if (t < c.warmup_slots) continue;
      for (AppId a = 0; a < n; ++a) served[a] += trace.per_app_served[a];
      report.borrow_count += static_cast<int64_t>(trace.borrows.size());
      for (const BorrowRecord& b : trace.borrows) report.borrowed_tokens += b.amount;
      report.per_server_utilization.push_back(trace.per_server_utilization);
      if (keep_traces) report.slot_traces.push_back(std::move(trace));
    }
  } catch (const SimulationError& e) {
    return absl::InternalError(absl::StrCat("invariant violated: ", e.what()));
  }

  const double seconds = static_cast<double>(c.num_slots) * c.slot_duration;
  report.per_app_allocated_bw.resize(n);
  for (AppId a = 0; a < n; ++a) {
    report.per_app_allocated_bw[a] = served[a] / seconds;
    report.total_served_mb += served[a];
  }
  report.allocated_pct = AllocatedPct(report.per_app_allocated_bw, report.per_app_desired_bw);
  return report;
}

absl::StatusOr<std::vector<SimReport>> RunSweep(const SimConfig& base,
                                                std::span<const double> io_sizes_mb) {
  std::vector<SimReport> out;
  for (double size : io_sizes_mb) {
    SimConfig c = base;
    c.workload.mode = WorkloadMode::kFixedSize;
    c.workload.fixed_size = size;
    absl::StatusOr<SimReport> r = RunSimulation(c);
    if (!r.ok()) return r.status();
    r->io_size_kb = size * 1024.0;
    out.push_back(*std::move(r));
  }
  return out;
}

SimConfig UnbalancedExampleConfig(Scenario scenario, int64_t num_slots) {
  SimConfig c;
  c.num_apps = 1;
  c.num_servers = 3;
  c.num_nodes = 3;
  c.num_slots = num_slots;
  c.warmup_slots = 0;
  c.scenario = scenario;
  c.applications = {ApplicationSpec{.app_id = 0,
                                    .name = "app-0",
                                    .desired_bw = 300,
                                    .delta = 0.1,
                                    .target_delay = 1.0,
                                    .policy = {}}};
  c.servers = {500, 500, 500};
  c.workload.mode = WorkloadMode::kScripted;
  c.workload.script = UnbalancedExampleRuns();
  return c;
}

}  // namespace sdsqos
