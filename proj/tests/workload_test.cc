#include "sdsqos/workload.h"

#include <gtest/gtest.h>

#include <numeric>

#include "oracles.h"

namespace sdsqos {
namespace {

std::vector<ApplicationSpec> Apps(std::vector<double> desired) {
  std::vector<ApplicationSpec> apps;
  for (size_t i = 0; i < desired.size(); ++i) {
    apps.push_back(ApplicationSpec{.app_id = static_cast<AppId>(i),
                                   .name = "",
                                   .desired_bw = desired[i],
                                   .policy = {}});
  }
  return apps;
}

double Volume(const std::vector<IORequest>& reqs, AppId app) {
  double v = 0;
  for (const IORequest& r : reqs) {
    if (r.app_id == app) v += r.size;
  }
  return v;
}

TEST(GenerateSlotWorkloadTest, FourKbFixedSizeCount) {
  WorkloadSpec spec{.mode = WorkloadMode::kFixedSize, .fixed_size = 0.00390625};
  auto apps = Apps({100});
  SlotContext ctx{.num_servers = 10, .num_nodes = 100, .slot = 0, .seed = 1};
  std::vector<IORequest> reqs = GenerateSlotWorkload(spec, apps, ctx);
  EXPECT_EQ(static_cast<int64_t>(reqs.size()), oracle::kFourKbRequestsPer100Mb);
  for (const IORequest& r : reqs) EXPECT_EQ(r.size, 0.00390625);
  EXPECT_DOUBLE_EQ(Volume(reqs, 0), 100.0);
}

TEST(GenerateSlotWorkloadTest, ZeroOfferedLoadIsEmpty) {
  WorkloadSpec spec{.offered_load_factor = 0};
  auto apps = Apps({100, 200});
  SlotContext ctx{.num_servers = 4, .num_nodes = 8, .slot = 3, .seed = 9};
  EXPECT_TRUE(GenerateSlotWorkload(spec, apps, ctx).empty());
}

TEST(GenerateSlotWorkloadTest, VolumeWithinOneRequestOfTarget) {
  WorkloadSpec spec{.mean_size = 2.0, .stddev_size = 1.0, .imbalance = 0.5};
  auto apps = Apps({150, 37.5, 0.5});
  for (int64_t slot = 0; slot < 50; ++slot) {
    SlotContext ctx{.num_servers = 10, .num_nodes = 7, .slot = slot, .seed = 5};
    std::vector<IORequest> reqs = GenerateSlotWorkload(spec, apps, ctx);
    for (AppId a = 0; a < 3; ++a) {
      double biggest = 0;
      for (const IORequest& r : reqs) {
        if (r.app_id == a) biggest = std::max(biggest, r.size);
      }
      // An app whose first request would overshoot by more than its whole
      // target emits nothing, which is still the closer choice.
      EXPECT_LE(std::abs(Volume(reqs, a) - apps[a].desired_bw),
                std::max(biggest, apps[a].desired_bw));
    }
    for (const IORequest& r : reqs) {
      EXPECT_GT(r.size, 0);
      EXPECT_GE(r.server_id, 0);
      EXPECT_LT(r.server_id, 10);
      EXPECT_EQ(r.arrival_slot, slot);
    }
  }
}

TEST(GenerateSlotWorkloadTest, DeterministicPerSeedAndSlot) {
  WorkloadSpec spec{.imbalance = 1.0};
  auto apps = Apps({50, 80});
  SlotContext ctx{.num_servers = 5, .num_nodes = 3, .slot = 17, .seed = 42};
  EXPECT_EQ(GenerateSlotWorkload(spec, apps, ctx), GenerateSlotWorkload(spec, apps, ctx));
  SlotContext other = ctx;
  other.slot = 18;
  EXPECT_NE(GenerateSlotWorkload(spec, apps, ctx), GenerateSlotWorkload(spec, apps, other));
  other = ctx;
  other.seed = 43;
  EXPECT_NE(GenerateSlotWorkload(spec, apps, ctx), GenerateSlotWorkload(spec, apps, other));
}

TEST(GenerateSlotWorkloadTest, UniformTargetingPassesChiSquare) {
  auto apps = Apps({200});
  for (WorkloadMode mode : {WorkloadMode::kRandomNormal, WorkloadMode::kFixedSize}) {
    WorkloadSpec spec{.mode = mode, .fixed_size = 0.0625, .imbalance = 0};
    std::vector<int64_t> counts(10, 0);
    for (int64_t slot = 0; slot < 40; ++slot) {
      SlotContext ctx{.num_servers = 10, .num_nodes = 10, .slot = slot, .seed = 11};
      for (const RequestRun& r : GenerateSlotRuns(spec, apps, ctx)) counts[r.server_id] += r.count;
    }
    EXPECT_LT(oracle::ChiSquareUniform(counts), oracle::kChiSquare9Df999);
  }
}

TEST(GenerateSlotWorkloadTest, ImbalanceSkewsTowardsRotatedRank) {
  std::vector<double> w = ServerWeights(1.0, 2, 4);
  EXPECT_NEAR(std::accumulate(w.begin(), w.end(), 0.0), 1.0, 1e-12);
  EXPECT_GT(w[2], w[3]);
  EXPECT_GT(w[3], w[0]);
  EXPECT_GT(w[0], w[1]);
  for (double x : ServerWeights(0.0, 3, 5)) EXPECT_DOUBLE_EQ(x, 0.2);
}

TEST(GenerateSlotWorkloadTest, OfferedLoadConvergesOverThousandSlots) {
  auto apps = Apps({120, 30});
  for (WorkloadMode mode : {WorkloadMode::kRandomNormal, WorkloadMode::kFixedSize}) {
    WorkloadSpec spec{.mode = mode, .mean_size = 0.5, .stddev_size = 0.4,
                      .fixed_size = 0.375, .offered_load_factor = 0.8, .imbalance = 0.7};
    std::vector<double> total(2, 0.0);
    const int slots = 1000;
    for (int64_t slot = 0; slot < slots; ++slot) {
      SlotContext ctx{.num_servers = 6, .num_nodes = 4, .slot = slot, .seed = 2024};
      for (const RequestRun& r : GenerateSlotRuns(spec, apps, ctx)) total[r.app_id] += r.volume();
    }
    for (AppId a = 0; a < 2; ++a) {
      double expected = apps[a].desired_bw * 0.8;
      EXPECT_NEAR(total[a] / slots, expected, 0.02 * expected);
    }
  }
}

TEST(UnbalancedExampleTest, DemandSplit) {
  std::vector<IORequest> reqs = MakeUnbalancedExample();
  std::vector<double> per_server(3, 0.0);
  double total = 0;
  for (const IORequest& r : reqs) {
    EXPECT_EQ(r.app_id, 0);
    per_server[r.server_id] += r.size;
    total += r.size;
  }
  EXPECT_EQ(per_server, (std::vector<double>{150, 100, 50}));
  EXPECT_EQ(total, 300);
}

}  // namespace
}  // namespace sdsqos
