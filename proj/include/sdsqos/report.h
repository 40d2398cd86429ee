// Result emission: CSV/JSON tables, per-slot traces and the run manifest.
//
// CSV header: scenario,app_id,desired_bw_mbps,allocated_bw_mbps,allocated_pct
// with a trailing io_size_kb column when any report came from a sweep. Each
// report contributes its per-app rows (by app_id) followed by one summary row
// whose app_id is "all". Numbers carry six decimals; JSON holds the same
// rounded values.

#ifndef SDSQOS_REPORT_H_
#define SDSQOS_REPORT_H_

#include <span>
#include <string>
#include <vector>

#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "absl/strings/string_view.h"
#include "sdsqos/engine.h"

namespace sdsqos {

enum class ReportFormat { kCsv, kJson };

absl::StatusOr<ReportFormat> ParseReportFormat(absl::string_view name);
absl::string_view ReportFormatExtension(ReportFormat f);

inline constexpr absl::string_view kCsvHeader =
    "scenario,app_id,desired_bw_mbps,allocated_bw_mbps,allocated_pct";

struct ReportRow {
  std::string scenario;
  std::string app_id;  // decimal id, or "all" for the summary row
  double desired_bw_mbps = 0;
  double allocated_bw_mbps = 0;
  double allocated_pct = 0;
  std::optional<double> io_size_kb;

  bool operator==(const ReportRow&) const = default;
};

// Values already rounded to six decimals.
std::vector<ReportRow> ReportRows(std::span<const SimReport> reports);

std::string RenderCsv(std::span<const SimReport> reports);
std::string RenderJson(std::span<const SimReport> reports);
std::string Render(std::span<const SimReport> reports, ReportFormat format);

// Full per-slot traces, JSON.
std::string RenderTraces(std::span<const SimReport> reports);

// Reads back either rendering. Used to check that both carry the same values.
absl::StatusOr<std::vector<ReportRow>> ParseCsvRows(absl::string_view csv);
absl::StatusOr<std::vector<ReportRow>> ParseJsonRows(absl::string_view json);

std::string Sha256Hex(absl::string_view bytes);

// Writes to a sibling temp file and renames it over `path`, so readers never
// see a partial file.
absl::Status WriteFileAtomic(const std::string& path, absl::string_view content);

struct Artifact {
  std::string path;
  std::string sha256;

  bool operator==(const Artifact&) const = default;
};

struct RunManifest {
  std::string config_path;
  std::vector<std::string> scenarios;
  std::vector<uint64_t> seeds;
  std::string output_dir;
  std::vector<Artifact> artifacts;

  bool operator==(const RunManifest&) const = default;
};

// Renders and writes `reports`, returning the artifact entry.
absl::StatusOr<Artifact> EmitReport(std::span<const SimReport> reports, ReportFormat format,
                                    const std::string& path);

// Writes `content` atomically and records its digest.
absl::StatusOr<Artifact> EmitArtifact(const std::string& path, absl::string_view content);

std::string ManifestToJson(const RunManifest& manifest);

// Every listed artifact exists and hashes to its recorded digest.
absl::Status VerifyManifest(const RunManifest& manifest);

}  // namespace sdsqos

#endif  // SDSQOS_REPORT_H_
