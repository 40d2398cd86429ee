#include "sdsqos/domain.h"

#include <gmock/gmock.h>
#include <gtest/gtest.h>

namespace sdsqos {
namespace {

using ::testing::HasSubstr;

SimConfig EvalShapedConfig() {
  SimConfig c;
  for (int i = 0; i < 20; ++i) {
    c.applications.push_back(ApplicationSpec{
        .app_id = i, .name = "", .desired_bw = 150.0 + 10 * i, .policy = {}});
  }
  c.servers.assign(10, 500.0);
  c.num_nodes = 100;
  return c;
}

TEST(ValidateConfigTest, AcceptsTwentyAppsOnTenServersUnchanged) {
  absl::StatusOr<SimConfig> first = ValidateConfig(EvalShapedConfig());
  ASSERT_TRUE(first.ok()) << first.status();
  EXPECT_EQ(first->num_apps, 20);
  EXPECT_EQ(first->num_servers, 10);
  EXPECT_EQ(first->applications[3].name, "app-3");

  absl::StatusOr<SimConfig> second = ValidateConfig(*first);
  ASSERT_TRUE(second.ok());
  EXPECT_EQ(*second, *first);
}

TEST(ValidateConfigTest, NormalizesAbsentKnobs) {
  SimConfig c = EvalShapedConfig();
  c.slot_duration = 0;
  c.bucket_depth_slots = 0;
  c.ewma_alpha = 0;
  absl::StatusOr<SimConfig> v = ValidateConfig(c);
  ASSERT_TRUE(v.ok());
  EXPECT_EQ(v->slot_duration, 1.0);
  EXPECT_EQ(v->bucket_depth_slots, 1.0);
  EXPECT_EQ(v->ewma_alpha, 0.1);
}

TEST(ValidateConfigTest, RejectsZeroDeltaWithPath) {
  SimConfig c = EvalShapedConfig();
  c.applications[3].delta = 0;
  absl::StatusOr<SimConfig> v = ValidateConfig(c);
  ASSERT_FALSE(v.ok());
  EXPECT_EQ(v.status().message(), "applications[3].delta out of (0,1]");
}

TEST(ValidateConfigTest, BorrowingNeedsTwoServers) {
  SimConfig c = EvalShapedConfig();
  c.servers = {500};
  c.scenario = Scenario::kBorrowing;
  absl::StatusOr<SimConfig> v = ValidateConfig(c);
  ASSERT_FALSE(v.ok());
  EXPECT_EQ(v.status().message(), "Borrowing requires ≥ 2 servers");

  c.scenario = Scenario::kNoBorrowing;
  EXPECT_TRUE(ValidateConfig(c).ok());
}

TEST(ValidateConfigTest, RejectsBadFields) {
  struct Case {
    std::function<void(SimConfig&)> mutate;
    std::string message;
  };
  const std::vector<Case> cases = {
      {[](SimConfig& c) { c.applications[0].target_delay = 0; }, "target_delay must be > 0"},
      {[](SimConfig& c) { c.applications[1].desired_bw = -1; }, "desired_bw must be >= 0"},
      {[](SimConfig& c) { c.applications[2].policy.borrow_threshold = 1.5; },
       "applications[2].policy.borrow_threshold out of [0,1]"},
      {[](SimConfig& c) {
         c.applications[2].policy.borrow_allowed = false;
         c.applications[2].policy.borrow_threshold = 0.5;
       },
       "requires borrow=TRUE"},
      {[](SimConfig& c) { c.applications[4].app_id = 7; }, "applications[4].app_id"},
      {[](SimConfig& c) { c.applications[5].name = "APP-0"; }, "is not unique"},
      {[](SimConfig& c) { c.servers[9] = 0; }, "servers[9] phys_limit must be > 0"},
      {[](SimConfig& c) { c.ewma_alpha = 1.5; }, "ewma_alpha out of (0,1]"},
      {[](SimConfig& c) { c.num_slots = 0; }, "num_slots must be positive"},
      {[](SimConfig& c) { c.workload.mean_size = 0; }, "workload.mean_size must be > 0"},
      {[](SimConfig& c) { c.workload.stddev_size = -1; }, "workload.stddev_size"},
      {[](SimConfig& c) {
         c.workload.mode = WorkloadMode::kFixedSize;
         c.workload.fixed_size = 0;
       },
       "workload.fixed_size must be > 0"},
      {[](SimConfig& c) {
         c.workload.mode = WorkloadMode::kScripted;
         c.workload.script = {RequestRun{.app_id = 0, .server_id = 10, .size = 1}};
       },
       "workload.script[0].server_id out of range"},
      {[](SimConfig& c) { c.interference = 1; }, "interference out of [0,1)"},
      {[](SimConfig& c) { c.num_apps = 3; }, "num_apps does not match"},
  };
  for (const Case& tc : cases) {
    SimConfig c = EvalShapedConfig();
    tc.mutate(c);
    absl::StatusOr<SimConfig> v = ValidateConfig(c);
    ASSERT_FALSE(v.ok()) << tc.message;
    EXPECT_THAT(std::string(v.status().message()), HasSubstr(tc.message));
  }
}

TEST(ScenarioTest, ParsesNamesIgnoringCase) {
  EXPECT_EQ(*ParseScenario("borrowing"), Scenario::kBorrowing);
  EXPECT_EQ(*ParseScenario("NoBorrowing"), Scenario::kNoBorrowing);
  EXPECT_EQ(*ParseScenario("TRADITIONAL"), Scenario::kTraditional);
  EXPECT_FALSE(ParseScenario("fifo").ok());
  for (Scenario s : {Scenario::kBorrowing, Scenario::kNoBorrowing, Scenario::kTraditional}) {
    EXPECT_EQ(*ParseScenario(ScenarioName(s)), s);
  }
}

TEST(ExpandTest, NodesAdvanceRoundRobin) {
  std::vector<RequestRun> runs = {
      {.app_id = 1, .server_id = 2, .first_node = 2, .size = 0.5, .count = 3}};
  std::vector<IORequest> out = Expand(runs, 3);
  ASSERT_EQ(out.size(), 3u);
  EXPECT_EQ(out[0].node_id, 2);
  EXPECT_EQ(out[1].node_id, 0);
  EXPECT_EQ(out[2].node_id, 1);
  for (const IORequest& r : out) {
    EXPECT_EQ(r.app_id, 1);
    EXPECT_EQ(r.server_id, 2);
    EXPECT_EQ(r.size, 0.5);
  }
}

}  // namespace
}  // namespace sdsqos
