#include "sdsqos/cli.h"

#include <filesystem>
#include <optional>

#include "CLI11.hpp"
#include "absl/status/statusor.h"
#include "absl/strings/str_cat.h"
#include "absl/strings/str_format.h"
#include "sdsqos/config_io.h"
#include "sdsqos/engine.h"
#include "sdsqos/report.h"

namespace sdsqos {

int ExitCodeFor(const absl::Status& status) {
  if (status.ok()) return kExitOk;
  if (status.code() == absl::StatusCode::kInternal) return kExitInvariant;
  return kExitConfig;
}

namespace {

struct Options {
  std::string config_path;
  std::string scenario;
  std::optional<uint64_t> seed;
  std::optional<int64_t> slots;
  std::string out_dir;
  std::string format = "csv";
  bool trace = false;
};

constexpr Scenario kAllScenarios[] = {Scenario::kBorrowing, Scenario::kNoBorrowing,
                                      Scenario::kTraditional};

class Command {
 public:
  Command(const Options& opts, std::ostream& out) : opts_(opts), out_(out) {}

  absl::Status Prepare(bool needs_config) {
    absl::StatusOr<ReportFormat> f = ParseReportFormat(opts_.format);
    if (!f.ok()) return f.status();
    format_ = *f;
    if (!needs_config) return absl::OkStatus();

    absl::StatusOr<SimConfig> c = LoadConfig(opts_.config_path);
    if (!c.ok()) return c.status();
    config_ = *std::move(c);
    if (!opts_.scenario.empty()) {
      absl::StatusOr<Scenario> s = ParseScenario(opts_.scenario);
      if (!s.ok()) return s.status();
      config_.scenario = *s;
    }
    if (opts_.seed) config_.seed = *opts_.seed;
    if (opts_.slots) config_.num_slots = *opts_.slots;
    absl::StatusOr<SimConfig> valid = ValidateConfig(config_);
    if (!valid.ok()) return valid.status();
    config_ = *std::move(valid);

    manifest_.config_path = opts_.config_path;
    manifest_.seeds = {config_.seed};
    return absl::OkStatus();
  }

  const SimConfig& config() const { return config_; }

  // Scenarios named by --scenario, or all three.
  std::vector<Scenario> Scenarios() const {
    if (!opts_.scenario.empty()) return {config_.scenario};
    return {std::begin(kAllScenarios), std::end(kAllScenarios)};
  }

  absl::StatusOr<SimReport> Run(Scenario s) {
    SimConfig c = config_;
    c.scenario = s;
    NoteScenario(s);
    return RunSimulation(c, opts_.trace);
  }

  void NoteScenario(Scenario s) {
    std::string name(ScenarioName(s));
    for (const std::string& n : manifest_.scenarios) {
      if (n == name) return;
    }
    manifest_.scenarios.push_back(name);
  }

  // Writes the report (and traces) under --out, then the manifest. Without
  // --out the rendered report goes to stdout instead.
  absl::Status Emit(const std::string& stem, std::span<const SimReport> reports) {
    if (opts_.out_dir.empty()) {
      out_ << Render(reports, format_);
      return absl::OkStatus();
    }
    std::error_code ec;
    std::filesystem::create_directories(opts_.out_dir, ec);
    if (ec) {
      return absl::UnavailableError(
          absl::StrCat(opts_.out_dir, ": cannot create output directory: ", ec.message()));
    }
    manifest_.output_dir = opts_.out_dir;
    std::string base = (std::filesystem::path(opts_.out_dir) / stem).string();
    absl::StatusOr<Artifact> a =
        EmitReport(reports, format_, absl::StrCat(base, ".", ReportFormatExtension(format_)));
    if (!a.ok()) return a.status();
    manifest_.artifacts.push_back(*a);
    if (opts_.trace) {
      absl::StatusOr<Artifact> t =
          EmitArtifact(absl::StrCat(base, ".trace.json"), RenderTraces(reports));
      if (!t.ok()) return t.status();
      manifest_.artifacts.push_back(*t);
    }
    std::string manifest_path =
        (std::filesystem::path(opts_.out_dir) / "manifest.json").string();
    if (absl::Status st = WriteFileAtomic(manifest_path, ManifestToJson(manifest_)); !st.ok()) {
      return st;
    }
    for (const Artifact& art : manifest_.artifacts) out_ << "wrote " << art.path << "\n";
    return absl::OkStatus();
  }

  std::ostream& out() { return out_; }

 private:
  const Options& opts_;
  std::ostream& out_;
  ReportFormat format_ = ReportFormat::kCsv;
  SimConfig config_;
  RunManifest manifest_;
};

void PrintSummary(std::ostream& out, const SimReport& r) {
  out << absl::StrFormat("%-12s allocated_pct %10.6f  served %.6f MB", ScenarioName(r.scenario),
                         r.allocated_pct, r.total_served_mb);
  if (r.io_size_kb) out << absl::StrFormat("  io_size_kb %g", *r.io_size_kb);
  out << "\n";
}

absl::Status DoRun(Command& cmd) {
  absl::StatusOr<SimReport> r = cmd.Run(cmd.config().scenario);
  if (!r.ok()) return r.status();
  PrintSummary(cmd.out(), *r);
  return cmd.Emit(absl::StrCat("run-", ScenarioName(r->scenario), "-seed", r->seed),
                  std::span(&*r, 1));
}

absl::Status DoCompare(Command& cmd) {
  std::vector<SimReport> reports;
  for (Scenario s : kAllScenarios) {
    absl::StatusOr<SimReport> r = cmd.Run(s);
    if (!r.ok()) return r.status();
    PrintSummary(cmd.out(), *r);
    reports.push_back(*std::move(r));
  }
  return cmd.Emit(absl::StrCat("compare-seed", cmd.config().seed), reports);
}

absl::Status DoSweep(Command& cmd) {
  std::vector<double> sizes_mb;
  for (double kb : cmd.config().workload.io_sizes_kb) sizes_mb.push_back(kb / 1024.0);
  std::vector<SimReport> reports;
  for (Scenario s : cmd.Scenarios()) {
    SimConfig c = cmd.config();
    c.scenario = s;
    cmd.NoteScenario(s);
    absl::StatusOr<std::vector<SimReport>> series = RunSweep(c, sizes_mb);
    if (!series.ok()) return series.status();
    for (SimReport& r : *series) {
      PrintSummary(cmd.out(), r);
      reports.push_back(std::move(r));
    }
  }
  return cmd.Emit(absl::StrCat("sweep-seed", cmd.config().seed), reports);
}

absl::Status DoUnbalancedExample(Command& cmd, bool trace) {
  std::vector<SimReport> reports;
  for (Scenario s : {Scenario::kNoBorrowing, Scenario::kBorrowing}) {
    cmd.NoteScenario(s);
    absl::StatusOr<SimReport> r = RunSimulation(UnbalancedExampleConfig(s), trace);
    if (!r.ok()) return r.status();
    cmd.out() << absl::StrFormat("%-12s total served %.6f MB\n", ScenarioName(s),
                                 r->total_served_mb);
    reports.push_back(*std::move(r));
  }
  return cmd.Emit("paper-example", reports);
}

}  // namespace

int RunCli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Software-defined storage QoS simulator"};
  app.name("sdsqos");
  app.require_subcommand(1);

  Options opts;
  auto add_common = [&opts](CLI::App* sub, bool with_config, bool with_scenario) {
    if (with_config) {
      sub->add_option("--config", opts.config_path, "JSON config file")->required();
      sub->add_option("--seed", opts.seed, "override the config seed");
      sub->add_option("--slots", opts.slots, "override num_slots")->check(CLI::PositiveNumber);
    }
    if (with_scenario) {
      sub->add_option("--scenario", opts.scenario, "Borrowing, NoBorrowing or Traditional");
    }
    sub->add_option("--out", opts.out_dir, "write artifacts and manifest.json here");
    sub->add_option("--format", opts.format, "csv or json")
        ->check(CLI::IsMember({"csv", "json"}, CLI::ignore_case));
    sub->add_flag("--trace", opts.trace, "also write full per-slot traces (needs --out)");
  };
  CLI::App* run = app.add_subcommand("run", "run one scenario");
  add_common(run, true, true);
  CLI::App* compare = app.add_subcommand("compare", "run all three scenarios on one seed");
  add_common(compare, true, false);
  CLI::App* sweep = app.add_subcommand("sweep", "fixed-size I/O sweep over io_sizes_kb");
  add_common(sweep, true, true);
  CLI::App* example =
      app.add_subcommand("paper-example", "three-server unbalanced example, 250 vs 300 MB");
  add_common(example, false, false);

  std::vector<std::string> argv_store = {"sdsqos"};
  argv_store.insert(argv_store.end(), args.begin(), args.end());
  std::vector<char*> argv;
  for (std::string& a : argv_store) argv.push_back(a.data());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "sdsqos: " << e.what() << "\n";
    return kExitUsage;
  }
  if (opts.trace && opts.out_dir.empty()) {
    err << "sdsqos: --trace requires --out\n";
    return kExitUsage;
  }

  Command cmd(opts, out);
  absl::Status st = cmd.Prepare(!example->parsed());
  if (st.ok()) {
    if (run->parsed()) {
      st = DoRun(cmd);
    } else if (compare->parsed()) {
      st = DoCompare(cmd);
    } else if (sweep->parsed()) {
      st = DoSweep(cmd);
    } else {
      st = DoUnbalancedExample(cmd, opts.trace);
    }
  }
  if (!st.ok()) {
    err << "sdsqos: " << st.message() << "\n";
    return ExitCodeFor(st);
  }
  return kExitOk;
}

}  // namespace sdsqos
