#include "sdsqos/cli.h"

#include <gmock/gmock.h>
#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace sdsqos {
namespace {

using ::testing::HasSubstr;
using ::testing::StartsWith;

struct CliResult {
  int code;
  std::string out;
  std::string err;
};

CliResult Cli(std::vector<std::string> args) {
  std::ostringstream out;
  std::ostringstream err;
  int code = RunCli(args, out, err);
  return {code, out.str(), err.str()};
}

std::string Config(const char* name) { return std::string(SDSQOS_CONFIG_DIR) + "/" + name; }

std::string FreshDir(const std::string& tag) {
  auto dir = std::filesystem::temp_directory_path() / ("sdsqos_cli_" + tag);
  std::filesystem::remove_all(dir);
  return dir.string();
}

std::string ReadFile(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

TEST(CliTest, UnbalancedExampleSubcommand) {
  CliResult r = Cli({"paper-example"});
  EXPECT_EQ(r.code, kExitOk) << r.err;
  EXPECT_THAT(r.out, HasSubstr("NoBorrowing  total served 250.000000 MB\n"));
  EXPECT_THAT(r.out, HasSubstr("Borrowing    total served 300.000000 MB\n"));
}

TEST(CliTest, UsageErrorsExitOne) {
  EXPECT_EQ(Cli({}).code, kExitUsage);
  EXPECT_EQ(Cli({"launch"}).code, kExitUsage);

  CliResult missing = Cli({"run"});
  EXPECT_EQ(missing.code, kExitUsage);
  EXPECT_THAT(missing.err, HasSubstr("--config is required"));

  EXPECT_EQ(Cli({"run", "--config", Config("unbalanced.json"), "--format", "xml"}).code,
            kExitUsage);
  EXPECT_EQ(Cli({"run", "--config", Config("unbalanced.json"), "--trace"}).code, kExitUsage);
  EXPECT_EQ(Cli({"run", "--config", Config("unbalanced.json"), "--slots", "0"}).code,
            kExitUsage);
}

TEST(CliTest, ConfigErrorsExitTwo) {
  CliResult absent = Cli({"run", "--config", "/nonexistent.json"});
  EXPECT_EQ(absent.code, kExitConfig);
  EXPECT_THAT(absent.err, HasSubstr("/nonexistent.json"));

  std::string dir = FreshDir("bad_config");
  std::filesystem::create_directories(dir);
  std::string path = dir + "/bad.json";
  std::ofstream(path) << R"({"servers": [500], "applications": [{"desired_bw": 1}]})";
  CliResult one_server = Cli({"run", "--config", path});
  EXPECT_EQ(one_server.code, kExitConfig);
  EXPECT_THAT(one_server.err, HasSubstr("Borrowing requires ≥ 2 servers"));

  EXPECT_EQ(Cli({"run", "--config", Config("unbalanced.json"), "--scenario", "fifo"}).code,
            kExitConfig);
}

TEST(CliTest, RunPrintsReportWithoutOut) {
  CliResult r = Cli({"run", "--config", Config("unbalanced.json"), "--scenario", "noborrowing"});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  EXPECT_THAT(r.out, StartsWith("NoBorrowing  allocated_pct"));
  EXPECT_THAT(r.out, HasSubstr("scenario,app_id,desired_bw_mbps,allocated_bw_mbps,allocated_pct\n"));
  EXPECT_THAT(r.out, HasSubstr("NoBorrowing,all,300.000000,250.000000,83.333333\n"));
}

TEST(CliTest, CompareWritesOrderedReportAndManifest) {
  std::string dir = FreshDir("compare");
  CliResult r = Cli({"compare", "--config", Config("eval.json"), "--seed", "7", "--slots", "20",
                     "--out", dir, "--format", "json", "--trace"});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  std::string report = dir + "/compare-seed7.json";
  EXPECT_THAT(r.out, HasSubstr("wrote " + report));

  nlohmann::json rows = nlohmann::json::parse(ReadFile(report))["rows"];
  ASSERT_EQ(rows.size(), 63u);
  EXPECT_EQ(rows[0]["scenario"], "Borrowing");
  EXPECT_EQ(rows[21]["scenario"], "NoBorrowing");
  EXPECT_EQ(rows[62]["scenario"], "Traditional");
  EXPECT_EQ(rows[62]["app_id"], "all");

  nlohmann::json manifest = nlohmann::json::parse(ReadFile(dir + "/manifest.json"));
  EXPECT_EQ(manifest["seeds"], nlohmann::json::array({7}));
  EXPECT_EQ(manifest["scenarios"],
            nlohmann::json::array({"Borrowing", "NoBorrowing", "Traditional"}));
  ASSERT_EQ(manifest["artifacts"].size(), 2u);
  EXPECT_TRUE(std::filesystem::exists(dir + "/compare-seed7.trace.json"));

  // A rerun reproduces every artifact byte for byte.
  std::string first = ReadFile(report);
  ASSERT_EQ(Cli({"compare", "--config", Config("eval.json"), "--seed", "7", "--slots", "20",
                 "--out", dir, "--format", "json"})
                .code,
            kExitOk);
  EXPECT_EQ(ReadFile(report), first);
}

TEST(CliTest, UnwritableOutputExitsTwo) {
  CliResult r = Cli({"paper-example", "--out", "/proc/sdsqos-cannot-write"});
  EXPECT_EQ(r.code, kExitConfig);
  EXPECT_FALSE(r.err.empty());
}

TEST(ExitCodeForTest, InternalMeansInvariant) {
  EXPECT_EQ(ExitCodeFor(absl::OkStatus()), kExitOk);
  EXPECT_EQ(ExitCodeFor(absl::InternalError("conservation")), kExitInvariant);
  EXPECT_EQ(ExitCodeFor(absl::InvalidArgumentError("delta")), kExitConfig);
  EXPECT_EQ(ExitCodeFor(absl::NotFoundError("file")), kExitConfig);
}

}  // namespace
}  // namespace sdsqos
