#include "sdsqos/engine.h"

#include <gtest/gtest.h>

#include "sdsqos/workload.h"

namespace sdsqos {
namespace {

SimConfig SkewedConfig(Scenario scenario, uint64_t seed, int64_t slots) {
  SimConfig c;
  const double deltas[] = {0.01, 0.05, 0.1, 0.2};
  for (int i = 0; i < 8; ++i) {
    c.applications.push_back(ApplicationSpec{.app_id = i,
                                             .name = "",
                                             .desired_bw = 60.0 + 10 * i,
                                             .delta = deltas[i % 4],
                                             .target_delay = 1.0 + i % 2,
                                             .policy = {}});
  }
  c.servers.assign(4, 250.0);
  c.num_nodes = 16;
  c.num_slots = slots;
  c.seed = seed;
  c.scenario = scenario;
  c.workload.mean_size = 2.0;
  c.workload.stddev_size = 1.0;
  c.workload.imbalance = 0.8;
  return c;
}

double TotalServed(const SlotTrace& t) {
  double sum = 0;
  for (double v : t.per_app_served) sum += v;
  return sum;
}

TEST(RunSlotTest, UnbalancedExampleTotals) {
  for (auto [scenario, want] : {std::pair{Scenario::kNoBorrowing, 250.0},
                                std::pair{Scenario::kBorrowing, 300.0},
                                std::pair{Scenario::kTraditional, 300.0}}) {
    absl::StatusOr<Simulator> sim = Simulator::Create(UnbalancedExampleConfig(scenario));
    ASSERT_TRUE(sim.ok()) << sim.status();
    SlotTrace t = sim->RunSlot();
    EXPECT_EQ(TotalServed(t), want) << ScenarioName(scenario);
  }
}

TEST(RunSlotTest, IdleSlot) {
  SimConfig c = SkewedConfig(Scenario::kBorrowing, 1, 1);
  c.workload.offered_load_factor = 0;
  absl::StatusOr<Simulator> sim = Simulator::Create(c);
  ASSERT_TRUE(sim.ok());
  SlotTrace t = sim->RunSlot();
  EXPECT_EQ(TotalServed(t), 0);
  EXPECT_TRUE(t.borrows.empty());
  for (double u : t.per_server_utilization) EXPECT_EQ(u, 0);
  for (double b : t.per_app_queue_backlog) EXPECT_EQ(b, 0);
}

TEST(RunSlotTest, WorkConservationAfterSlot) {
  for (Scenario s : {Scenario::kBorrowing, Scenario::kNoBorrowing}) {
    absl::StatusOr<Simulator> sim = Simulator::Create(SkewedConfig(s, 3, 1));
    ASSERT_TRUE(sim.ok());
    for (int i = 0; i < 30; ++i) {
      sim->RunSlot();
      for (const ServerState& server : sim->servers()) {
        if (server.remaining_capacity() <= kVolumeEpsilon) continue;
        for (AppId a = 0; a < server.num_apps(); ++a) {
          EXPECT_TRUE(server.queue(a).runs.empty() ||
                      sim->ledger().balance(a, server.id()) <= kVolumeEpsilon);
        }
      }
    }
  }
}

TEST(RunSimulationTest, TraditionalExampleIsStationary) {
  absl::StatusOr<SimReport> one = RunSimulation(UnbalancedExampleConfig(Scenario::kTraditional));
  absl::StatusOr<SimReport> many =
      RunSimulation(UnbalancedExampleConfig(Scenario::kTraditional, 100));
  ASSERT_TRUE(one.ok());
  ASSERT_TRUE(many.ok());
  EXPECT_EQ(one->allocated_pct, many->allocated_pct);
  EXPECT_EQ(many->allocated_pct, 100);
}

TEST(RunSimulationTest, UncontendedSystemServesEverything) {
  SimConfig c;
  for (int i = 0; i < 20; ++i) {
    c.applications.push_back(
        ApplicationSpec{.app_id = i, .name = "", .desired_bw = 10, .policy = {}});
  }
  c.servers.assign(10, 500);
  c.num_nodes = 100;
  c.num_slots = 1000;
  c.seed = 3;
  // Without borrowing, tokens stranded by random placement cost a little.
  for (auto [s, floor] : {std::pair{Scenario::kBorrowing, 99.9},
                          std::pair{Scenario::kNoBorrowing, 99.0}}) {
    c.scenario = s;
    absl::StatusOr<SimReport> r = RunSimulation(c);
    ASSERT_TRUE(r.ok());
    EXPECT_GE(r->allocated_pct, floor) << ScenarioName(s);
  }
}

TEST(RunSimulationTest, Deterministic) {
  for (Scenario s : {Scenario::kBorrowing, Scenario::kNoBorrowing, Scenario::kTraditional}) {
    SimConfig c = SkewedConfig(s, 17, 40);
    absl::StatusOr<SimReport> a = RunSimulation(c, true);
    absl::StatusOr<SimReport> b = RunSimulation(c, true);
    ASSERT_TRUE(a.ok());
    EXPECT_EQ(*a, *b);
    c.threads = 3;
    absl::StatusOr<SimReport> parallel = RunSimulation(c, true);
    ASSERT_TRUE(parallel.ok());
    EXPECT_EQ(*a, *parallel);
  }
}

TEST(RunSimulationTest, WarmupExcludedFromAverages) {
  SimConfig c = UnbalancedExampleConfig(Scenario::kNoBorrowing, 5);
  c.warmup_slots = 3;
  absl::StatusOr<SimReport> r = RunSimulation(c);
  ASSERT_TRUE(r.ok());
  EXPECT_EQ(r->measured_slots, 5);
  EXPECT_EQ(r->per_server_utilization.size(), 5u);
}

TEST(RunSimulationTest, AllocationNeverExceedsDesiredUnderTokens) {
  for (Scenario s : {Scenario::kBorrowing, Scenario::kNoBorrowing}) {
    SimConfig c = SkewedConfig(s, 5, 100);
    c.workload.offered_load_factor = 1.5;
    absl::StatusOr<SimReport> r = RunSimulation(c);
    ASSERT_TRUE(r.ok());
    for (size_t a = 0; a < r->per_app_desired_bw.size(); ++a) {
      EXPECT_LE(r->per_app_allocated_bw[a], r->per_app_desired_bw[a]);
    }
    EXPECT_LE(r->allocated_pct, 100);
    EXPECT_GE(r->allocated_pct, 0);
  }
}

TEST(RunSimulationTest, RateCapLimitsAllocation) {
  SimConfig c = SkewedConfig(Scenario::kBorrowing, 5, 50);
  c.applications[2].policy.rate_cap = 10;
  absl::StatusOr<SimReport> r = RunSimulation(c);
  ASSERT_TRUE(r.ok());
  EXPECT_LE(r->per_app_allocated_bw[2], 10 + 1e-9);
}

TEST(RunSimulationTest, BorrowingNeverHurtsOnSkewedLoad) {
  for (uint64_t seed = 1; seed <= 5; ++seed) {
    absl::StatusOr<SimReport> with = RunSimulation(SkewedConfig(Scenario::kBorrowing, seed, 60));
    absl::StatusOr<SimReport> without =
        RunSimulation(SkewedConfig(Scenario::kNoBorrowing, seed, 60));
    ASSERT_TRUE(with.ok());
    ASSERT_TRUE(without.ok());
    EXPECT_GE(with->total_served_mb, without->total_served_mb) << "seed " << seed;
    EXPECT_GE(with->allocated_pct, without->allocated_pct) << "seed " << seed;
  }
}

TEST(RunSimulationTest, BalancedLoadMakesBorrowingIrrelevant) {
  // Perfectly balanced demand: one 1 MB request stream per server matching
  // the shaped share exactly.
  SimConfig c = UnbalancedExampleConfig(Scenario::kBorrowing, 20);
  c.workload.script = {{.app_id = 0, .server_id = 0, .size = 1.0, .count = 100},
                       {.app_id = 0, .server_id = 1, .size = 1.0, .count = 100},
                       {.app_id = 0, .server_id = 2, .size = 1.0, .count = 100}};
  absl::StatusOr<SimReport> with = RunSimulation(c);
  c.scenario = Scenario::kNoBorrowing;
  absl::StatusOr<SimReport> without = RunSimulation(c);
  ASSERT_TRUE(with.ok());
  ASSERT_TRUE(without.ok());
  EXPECT_EQ(with->borrow_count, 0);
  EXPECT_EQ(with->per_app_allocated_bw, without->per_app_allocated_bw);
}

TEST(RunSimulationTest, TraditionalWithoutInterferenceDominates) {
  // Work-conserving FIFO with no interference serves at least as much as the
  // token-capped schedulers when offered load does not exceed desired.
  for (uint64_t seed = 1; seed <= 3; ++seed) {
    SimConfig c = SkewedConfig(Scenario::kTraditional, seed, 60);
    c.interference = 0;
    absl::StatusOr<SimReport> fifo = RunSimulation(c);
    c.scenario = Scenario::kBorrowing;
    absl::StatusOr<SimReport> borrowing = RunSimulation(c);
    ASSERT_TRUE(fifo.ok());
    ASSERT_TRUE(borrowing.ok());
    EXPECT_GE(fifo->allocated_pct, borrowing->allocated_pct) << "seed " << seed;
  }
}

TEST(RunSimulationTest, BacklogStaysBoundedBelowCapacity) {
  SimConfig c = SkewedConfig(Scenario::kNoBorrowing, 8, 300);
  c.workload.imbalance = 0;
  c.workload.offered_load_factor = 0.9;
  absl::StatusOr<SimReport> r = RunSimulation(c, true);
  ASSERT_TRUE(r.ok());
  double early_max = 0;
  double late_max = 0;
  for (const SlotTrace& t : r->slot_traces) {
    double backlog = 0;
    for (double b : t.per_app_queue_backlog) backlog += b;
    double& worst = t.slot < 160 ? early_max : late_max;
    worst = std::max(worst, backlog);
  }
  // Below one slot of total desired volume (760 MB).
  EXPECT_LT(late_max, 760.0);
  EXPECT_LE(late_max, 2 * early_max + 1);
}

TEST(TraditionalEfficiencyTest, LinearWithFloor) {
  EXPECT_EQ(TraditionalEfficiency(0, 0.5), 1.0);
  EXPECT_EQ(TraditionalEfficiency(1, 0.5), 1.0);
  EXPECT_DOUBLE_EQ(TraditionalEfficiency(3, 0.015), 0.97);
  EXPECT_EQ(TraditionalEfficiency(100, 0.5), kMinTraditionalEfficiency);
}

TEST(AllocatedPctTest, CapsEachAppAtDesired) {
  std::vector<double> allocated = {150, 50};
  std::vector<double> desired = {100, 100};
  EXPECT_EQ(AllocatedPct(allocated, desired), 75);
  EXPECT_EQ(AllocatedPct({}, {}), 100);
}

TEST(RunSweepTest, OneReportPerSize) {
  SimConfig c = SkewedConfig(Scenario::kBorrowing, 2, 10);
  c.service_quantum = 1.0;
  std::vector<double> sizes = {4.0 / 1024, 8.0 / 1024, 64.0 / 1024};
  absl::StatusOr<std::vector<SimReport>> out = RunSweep(c, sizes);
  ASSERT_TRUE(out.ok());
  ASSERT_EQ(out->size(), 3u);
  EXPECT_EQ((*out)[0].io_size_kb, 4.0);
  EXPECT_EQ((*out)[2].io_size_kb, 64.0);

  std::vector<double> one = {sizes[1]};
  absl::StatusOr<std::vector<SimReport>> single = RunSweep(c, one);
  SimConfig fixed = c;
  fixed.workload.mode = WorkloadMode::kFixedSize;
  fixed.workload.fixed_size = sizes[1];
  absl::StatusOr<SimReport> direct = RunSimulation(fixed);
  ASSERT_TRUE(single.ok());
  ASSERT_TRUE(direct.ok());
  SimReport s = (*single)[0];
  s.io_size_kb.reset();
  EXPECT_EQ(s, *direct);
}

TEST(SimulatorTest, RejectsInvalidConfig) {
  SimConfig c = SkewedConfig(Scenario::kBorrowing, 1, 1);
  c.servers = {100};
  EXPECT_FALSE(Simulator::Create(c).ok());
  EXPECT_FALSE(RunSimulation(c).ok());
}

}  // namespace
}  // namespace sdsqos
