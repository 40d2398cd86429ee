#include "sdsqos/report.h"

#include <openssl/evp.h>
#include <unistd.h>

#include <cerrno>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "absl/strings/ascii.h"
#include "absl/strings/numbers.h"
#include "absl/strings/str_cat.h"
#include "absl/strings/str_format.h"
#include "absl/strings/str_split.h"
#include "json.hpp"

namespace sdsqos {

using nlohmann::json;

namespace {

std::string Fixed6(double v) { return absl::StrFormat("%.6f", v); }

double Round6(double v) {
  double out = 0;
  (void)absl::SimpleAtod(Fixed6(v), &out);
  return out;
}

bool AnySweep(std::span<const SimReport> reports) {
  for (const SimReport& r : reports) {
    if (r.io_size_kb) return true;
  }
  return false;
}

}  // namespace

absl::StatusOr<ReportFormat> ParseReportFormat(absl::string_view name) {
  std::string n = absl::AsciiStrToLower(name);
  if (n == "csv") return ReportFormat::kCsv;
  if (n == "json") return ReportFormat::kJson;
  return absl::InvalidArgumentError(absl::StrCat("unknown format \"", name, "\" (csv, json)"));
}

absl::string_view ReportFormatExtension(ReportFormat f) {
  return f == ReportFormat::kCsv ? "csv" : "json";
}

std::vector<ReportRow> ReportRows(std::span<const SimReport> reports) {
  std::vector<ReportRow> rows;
  for (const SimReport& r : reports) {
    std::string scenario(ScenarioName(r.scenario));
    std::optional<double> kb;
    if (r.io_size_kb) kb = Round6(*r.io_size_kb);
    double want = 0;
    double got = 0;
    for (size_t a = 0; a < r.per_app_desired_bw.size(); ++a) {
      double d = r.per_app_desired_bw[a];
      double g = r.per_app_allocated_bw[a];
      want += d;
      got += g;
      rows.push_back(ReportRow{.scenario = scenario,
                               .app_id = absl::StrCat(a),
                               .desired_bw_mbps = Round6(d),
                               .allocated_bw_mbps = Round6(g),
                               .allocated_pct = Round6(AllocatedPct(std::span(&g, 1),
                                                                    std::span(&d, 1))),
                               .io_size_kb = kb});
    }
    rows.push_back(ReportRow{.scenario = scenario,
                             .app_id = "all",
                             .desired_bw_mbps = Round6(want),
                             .allocated_bw_mbps = Round6(got),
                             .allocated_pct = Round6(r.allocated_pct),
                             .io_size_kb = kb});
  }
  return rows;
}

std::string RenderCsv(std::span<const SimReport> reports) {
  const bool sweep = AnySweep(reports);
  std::string out(kCsvHeader);
  if (sweep) out += ",io_size_kb";
  out += "\n";
  for (const ReportRow& row : ReportRows(reports)) {
    absl::StrAppend(&out, row.scenario, ",", row.app_id, ",", Fixed6(row.desired_bw_mbps), ",",
                    Fixed6(row.allocated_bw_mbps), ",", Fixed6(row.allocated_pct));
    if (sweep) absl::StrAppend(&out, ",", row.io_size_kb ? Fixed6(*row.io_size_kb) : "");
    out += "\n";
  }
  return out;
}

std::string RenderJson(std::span<const SimReport> reports) {
  json rows = json::array();
  for (const ReportRow& row : ReportRows(reports)) {
    json j = {{"scenario", row.scenario},
              {"app_id", row.app_id},
              {"desired_bw_mbps", row.desired_bw_mbps},
              {"allocated_bw_mbps", row.allocated_bw_mbps},
              {"allocated_pct", row.allocated_pct}};
    if (row.io_size_kb) j["io_size_kb"] = *row.io_size_kb;
    rows.push_back(std::move(j));
  }
  return json{{"rows", rows}}.dump(2) + "\n";
}

std::string Render(std::span<const SimReport> reports, ReportFormat format) {
  return format == ReportFormat::kCsv ? RenderCsv(reports) : RenderJson(reports);
}

std::string RenderTraces(std::span<const SimReport> reports) {
  json out = json::array();
  for (const SimReport& r : reports) {
    json slots = json::array();
    for (const SlotTrace& t : r.slot_traces) {
      json borrows = json::array();
      for (const BorrowRecord& b : t.borrows) {
        borrows.push_back({{"app_id", b.app_id},
                           {"from_server", b.from_server},
                           {"to_server", b.to_server},
                           {"amount", b.amount}});
      }
      slots.push_back({{"slot", t.slot},
                       {"per_app_served", t.per_app_served},
                       {"per_server_served", t.per_server_served},
                       {"per_server_utilization", t.per_server_utilization},
                       {"per_app_queue_backlog", t.per_app_queue_backlog},
                       {"global_priority", t.global_priority},
                       {"borrows", borrows}});
    }
    json entry = {{"scenario", std::string(ScenarioName(r.scenario))},
                  {"seed", r.seed},
                  {"slots", slots}};
    if (r.io_size_kb) entry["io_size_kb"] = *r.io_size_kb;
    out.push_back(std::move(entry));
  }
  return out.dump() + "\n";
}

absl::StatusOr<std::vector<ReportRow>> ParseCsvRows(absl::string_view csv) {
  std::vector<absl::string_view> lines = absl::StrSplit(csv, '\n', absl::SkipEmpty());
  if (lines.empty()) return absl::InvalidArgumentError("csv: missing header");
  bool sweep = false;
  if (lines[0] == absl::StrCat(kCsvHeader, ",io_size_kb")) {
    sweep = true;
  } else if (lines[0] != kCsvHeader) {
    return absl::InvalidArgumentError(absl::StrCat("csv: unexpected header \"", lines[0], "\""));
  }
  std::vector<ReportRow> rows;
  for (size_t i = 1; i < lines.size(); ++i) {
    std::vector<absl::string_view> f = absl::StrSplit(lines[i], ',');
    if (f.size() != (sweep ? 6u : 5u)) {
      return absl::InvalidArgumentError(absl::StrCat("csv line ", i + 1, ": wrong field count"));
    }
    ReportRow row;
    row.scenario = std::string(f[0]);
    row.app_id = std::string(f[1]);
    if (!absl::SimpleAtod(f[2], &row.desired_bw_mbps) ||
        !absl::SimpleAtod(f[3], &row.allocated_bw_mbps) ||
        !absl::SimpleAtod(f[4], &row.allocated_pct)) {
      return absl::InvalidArgumentError(absl::StrCat("csv line ", i + 1, ": bad number"));
    }
    if (sweep && !f[5].empty()) {
      double kb = 0;
      if (!absl::SimpleAtod(f[5], &kb)) {
        return absl::InvalidArgumentError(absl::StrCat("csv line ", i + 1, ": bad io_size_kb"));
      }
      row.io_size_kb = kb;
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

absl::StatusOr<std::vector<ReportRow>> ParseJsonRows(absl::string_view text) {
  json root = json::parse(text.begin(), text.end(), nullptr, false);
  if (root.is_discarded() || !root.contains("rows") || !root["rows"].is_array()) {
    return absl::InvalidArgumentError("json: expected {\"rows\": [...]}");
  }
  std::vector<ReportRow> rows;
  for (const json& j : root["rows"]) {
    try {
      ReportRow row{.scenario = j.at("scenario").get<std::string>(),
                    .app_id = j.at("app_id").get<std::string>(),
                    .desired_bw_mbps = j.at("desired_bw_mbps").get<double>(),
                    .allocated_bw_mbps = j.at("allocated_bw_mbps").get<double>(),
                    .allocated_pct = j.at("allocated_pct").get<double>(),
                    .io_size_kb = std::nullopt};
      if (j.contains("io_size_kb")) row.io_size_kb = j["io_size_kb"].get<double>();
      rows.push_back(std::move(row));
    } catch (const json::exception& e) {
      return absl::InvalidArgumentError(absl::StrCat("json row: ", e.what()));
    }
  }
  return rows;
}

std::string Sha256Hex(absl::string_view bytes) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_Digest(bytes.data(), bytes.size(), md, &len, EVP_sha256(), nullptr);
  std::string hex;
  for (unsigned int i = 0; i < len; ++i) absl::StrAppendFormat(&hex, "%02x", md[i]);
  return hex;
}

absl::Status WriteFileAtomic(const std::string& path, absl::string_view content) {
  std::string tmp = absl::StrCat(path, ".tmp.", getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) {
      return absl::UnavailableError(
          absl::StrCat(path, ": cannot create temp file: ", std::strerror(errno)));
    }
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.flush();
    if (!out) {
      std::remove(tmp.c_str());
      return absl::UnavailableError(absl::StrCat(path, ": write failed"));
    }
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::remove(tmp.c_str());
    return absl::UnavailableError(absl::StrCat(path, ": rename failed: ", ec.message()));
  }
  return absl::OkStatus();
}

absl::StatusOr<Artifact> EmitArtifact(const std::string& path, absl::string_view content) {
  if (absl::Status st = WriteFileAtomic(path, content); !st.ok()) return st;
  return Artifact{.path = path, .sha256 = Sha256Hex(content)};
}

absl::StatusOr<Artifact> EmitReport(std::span<const SimReport> reports, ReportFormat format,
                                    const std::string& path) {
  return EmitArtifact(path, Render(reports, format));
}

std::string ManifestToJson(const RunManifest& m) {
  json artifacts = json::array();
  for (const Artifact& a : m.artifacts) {
    artifacts.push_back({{"path", a.path}, {"sha256", a.sha256}});
  }
  json root = {{"config_path", m.config_path},
               {"scenarios", m.scenarios},
               {"seeds", m.seeds},
               {"output_dir", m.output_dir},
               {"artifacts", artifacts}};
  return root.dump(2) + "\n";
}

absl::Status VerifyManifest(const RunManifest& m) {
  for (const Artifact& a : m.artifacts) {
    std::ifstream in(a.path, std::ios::binary);
    if (!in) return absl::NotFoundError(absl::StrCat(a.path, ": listed artifact is missing"));
    std::stringstream buf;
    buf << in.rdbuf();
    if (Sha256Hex(buf.str()) != a.sha256) {
      return absl::DataLossError(absl::StrCat(a.path, ": digest mismatch"));
    }
  }
  return absl::OkStatus();
}

}  // namespace sdsqos
