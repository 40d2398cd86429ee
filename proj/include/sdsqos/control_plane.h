// The centralized controller: token rate generation, even traffic shaping,
// virtual token buckets, policy enforcement and the borrowing model.

#ifndef SDSQOS_CONTROL_PLANE_H_
#define SDSQOS_CONTROL_PLANE_H_

#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "absl/strings/string_view.h"
#include "sdsqos/domain.h"
#include "sdsqos/token_ledger.h"

namespace sdsqos {

struct TokenGrantPlan {
  std::vector<double> per_app_rate;  // tokens per slot
  AppServerTable per_app_server_share;  // tokens per slot, filled by ShapeTraffic
};

struct BorrowRecord {
  AppId app_id = 0;
  ServerId from_server = 0;
  ServerId to_server = 0;
  double amount = 0;
  int64_t slot = 0;

  bool operator==(const BorrowRecord&) const = default;
};

// What the policy enforcer hands to the rest of the controller.
struct EffectivePolicy {
  double rate = 0;  // MB/s after any rate cap
  bool borrow_allowed = true;
  std::optional<double> borrow_threshold;

  bool operator==(const EffectivePolicy&) const = default;
};

std::vector<EffectivePolicy> EnforcePolicies(std::span<const ApplicationSpec> specs);

TokenGrantPlan GenerateTokenRates(std::span<const ApplicationSpec> specs,
                                  double slot_duration = 1.0);

// Splits each app's rate evenly over the servers in 0.001-token units; the
// indivisible remainder goes one unit at a time to the lowest server ids.
absl::StatusOr<TokenGrantPlan> ShapeTraffic(TokenGrantPlan plan, int num_servers);

// Adds one slot of shares, clamps each bucket at depth_slots x share and
// clears the borrow counters.
void RefillBuckets(TokenLedger& ledger, const TokenGrantPlan& plan);

struct BorrowInputs {
  // Required tokens per (app, server): the MB currently enqueued there.
  const AppServerTable* demands = nullptr;
  std::span<const EffectivePolicy> policies;
  // Per app, served / desired over the run so far (kCumulative gating).
  std::span<const double> satisfaction;
  ThresholdMode thres_mode = ThresholdMode::kCumulative;
  int64_t slot = 0;
  // Sweeps over all deficit pairs; 0 means num_servers.
  int rounds_cap = 0;
};

// One borrowing pass of the controller. Every (app, server) pair whose
// assigned tokens fall short of its demand asks for the difference; two
// servers holding unused tokens of the same app are drawn at random and the
// one with more unused tokens lends up to the shortfall. Lenders never drop
// below their own demand. Repeats until nothing more can be borrowed or the
// round cap is hit.
std::vector<BorrowRecord> BorrowingRound(TokenLedger& ledger, const BorrowInputs& in,
                                         std::mt19937_64& rng);

// Policy strings: "<app-N, rate=X MB/s>", "<app-N, borrow=TRUE|FALSE>",
// "<app-N, borrow=TRUE, thres=F>". Case-insensitive, whitespace-tolerant.
struct PolicyStatement {
  std::string app;
  std::optional<double> rate;
  std::optional<bool> borrow;
  std::optional<double> thres;

  bool operator==(const PolicyStatement&) const = default;
};

absl::StatusOr<PolicyStatement> ParsePolicy(absl::string_view text);

// Applies a statement to the application whose name matches (ignoring case).
absl::Status ApplyPolicy(const PolicyStatement& stmt, std::vector<ApplicationSpec>& specs);

// Canonical strings that reproduce `spec.policy` through ParsePolicy.
std::vector<std::string> FormatPolicies(const ApplicationSpec& spec);

}  // namespace sdsqos

#endif  // SDSQOS_CONTROL_PLANE_H_
