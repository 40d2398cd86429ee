// JSON configuration files.
//
// {
//   "num_nodes": 100, "num_slots": 1000, "warmup_slots": 10,
//   "scenario": "Borrowing", "seed": 1, "interference": 0.015, ...
//   "servers": [500, 500, 500],
//   "applications": [{"name": "app-0", "desired_bw": 300, "delta": 0.1,
//                     "target_delay": 1}],
//   "policies": ["<app-0, rate=100 MB/s>", "<app-0, borrow=TRUE, thres=0.8>"],
//   "workload": {"mode": "normal", "mean_size": 8, "stddev_size": 4, ...}
// }
//
// Every key is optional except "servers" and "applications"; absent keys
// take the SimConfig defaults. Unknown keys are rejected.

#ifndef SDSQOS_CONFIG_IO_H_
#define SDSQOS_CONFIG_IO_H_

#include <string>

#include "absl/status/statusor.h"
#include "absl/strings/string_view.h"
#include "sdsqos/domain.h"

namespace sdsqos {

// Parses, applies policy strings, then validates.
absl::StatusOr<SimConfig> ParseConfig(absl::string_view text);

// Reads `path` and parses it; errors are prefixed with the path.
absl::StatusOr<SimConfig> LoadConfig(const std::string& path);

// Inverse of ParseConfig for validated configs: ParseConfig(ConfigToJson(c))
// reproduces c exactly.
std::string ConfigToJson(const SimConfig& config);

absl::string_view WorkloadModeName(WorkloadMode mode);
absl::string_view ThresholdModeName(ThresholdMode mode);

}  // namespace sdsqos

#endif  // SDSQOS_CONFIG_IO_H_
