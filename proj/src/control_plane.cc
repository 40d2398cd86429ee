#include "sdsqos/control_plane.h"

#include <algorithm>
#include <cmath>

#include "absl/strings/ascii.h"
#include "absl/strings/match.h"
#include "absl/strings/numbers.h"
#include "absl/strings/str_cat.h"
#include "absl/strings/str_format.h"
#include "absl/strings/str_split.h"
#include "absl/strings/strip.h"

namespace sdsqos {

namespace {
constexpr double kTokenEpsilon = 1e-9;
constexpr int64_t kMilliTokens = 1000;
}  // namespace

std::vector<EffectivePolicy> EnforcePolicies(std::span<const ApplicationSpec> specs) {
  std::vector<EffectivePolicy> out;
  out.reserve(specs.size());
  for (const ApplicationSpec& s : specs) {
    out.push_back(EffectivePolicy{
        .rate = s.policy.rate_cap.value_or(s.desired_bw),
        .borrow_allowed = s.policy.borrow_allowed,
        .borrow_threshold = s.policy.borrow_threshold,
    });
  }
  return out;
}

TokenGrantPlan GenerateTokenRates(std::span<const ApplicationSpec> specs, double slot_duration) {
  TokenGrantPlan plan;
  for (const EffectivePolicy& p : EnforcePolicies(specs)) {
    plan.per_app_rate.push_back(p.rate * slot_duration);
  }
  return plan;
}

absl::StatusOr<TokenGrantPlan> ShapeTraffic(TokenGrantPlan plan, int num_servers) {
  if (num_servers <= 0) {
    return absl::InvalidArgumentError("traffic shaping needs at least one server");
  }
  const int num_apps = static_cast<int>(plan.per_app_rate.size());
  plan.per_app_server_share = AppServerTable(num_apps, num_servers);
  for (AppId a = 0; a < num_apps; ++a) {
    int64_t total = std::llround(plan.per_app_rate[a] * kMilliTokens);
    int64_t base = total / num_servers;
    int64_t extra = total % num_servers;
    for (ServerId s = 0; s < num_servers; ++s) {
      int64_t units = base + (s < extra ? 1 : 0);
      plan.per_app_server_share.at(a, s) =
          static_cast<double>(units) / static_cast<double>(kMilliTokens);
    }
  }
  return plan;
}

void RefillBuckets(TokenLedger& ledger, const TokenGrantPlan& plan) {
  const AppServerTable& share = plan.per_app_server_share;
  for (AppId a = 0; a < ledger.num_apps(); ++a) {
    for (ServerId s = 0; s < ledger.num_servers(); ++s) {
      double depth = share.at(a, s) * ledger.depth_slots();
      ledger.set_depth(a, s, depth);
      ledger.set_balance(a, s, std::min(ledger.balance(a, s) + share.at(a, s), depth));
    }
  }
  ledger.reset_borrowed();
}

namespace {

bool ThresholdPermits(const EffectivePolicy& policy, const BorrowInputs& in, AppId a,
                      double assigned, double required) {
  if (!policy.borrow_threshold) return true;
  double satisfied = 0;
  if (in.thres_mode == ThresholdMode::kCumulative) {
    satisfied = static_cast<size_t>(a) < in.satisfaction.size() ? in.satisfaction[a] : 0.0;
  } else {
    satisfied = required > 0 ? assigned / required : 1.0;
  }
  return satisfied < *policy.borrow_threshold;
}

}  // namespace

std::vector<BorrowRecord> BorrowingRound(TokenLedger& ledger, const BorrowInputs& in,
                                         std::mt19937_64& rng) {
  std::vector<BorrowRecord> records;
  const AppServerTable& demand = *in.demands;
  const int m = ledger.num_servers();
  const int rounds = in.rounds_cap > 0 ? in.rounds_cap : m;

  auto unused = [&](AppId a, ServerId s) {
    return std::max(0.0, ledger.balance(a, s) - demand.at(a, s));
  };

  std::vector<ServerId> candidates;
  candidates.reserve(m);
  for (int round = 0; round < rounds; ++round) {
    bool moved = false;
    for (AppId a = 0; a < ledger.num_apps(); ++a) {
      const EffectivePolicy& policy = in.policies[a];
      if (!policy.borrow_allowed) continue;
      for (ServerId s = 0; s < m; ++s) {
        double assigned = ledger.balance(a, s);
        double required = demand.at(a, s);
        double shortfall = required - assigned;
        if (shortfall <= kTokenEpsilon) continue;
        if (!ThresholdPermits(policy, in, a, assigned, required)) continue;

        candidates.clear();
        for (ServerId o = 0; o < m; ++o) {
          if (o != s && unused(a, o) > kTokenEpsilon) candidates.push_back(o);
        }
        if (candidates.empty()) continue;

        ServerId lender = candidates[0];
        if (candidates.size() > 1) {
          std::uniform_int_distribution<size_t> pick(0, candidates.size() - 1);
          size_t i = pick(rng);
          size_t j = pick(rng);
          while (j == i) j = pick(rng);
          ServerId x = candidates[i];
          ServerId y = candidates[j];
          double ux = unused(a, x);
          double uy = unused(a, y);
          lender = (ux > uy || (ux == uy && x < y)) ? x : y;
        }
        double amount = std::min(shortfall, unused(a, lender));
        ledger.Transfer(a, lender, s, amount);
        ledger.add_borrowed(a, s, amount);
        records.push_back(BorrowRecord{.app_id = a,
                                       .from_server = lender,
                                       .to_server = s,
                                       .amount = amount,
                                       .slot = in.slot});
        moved = true;
      }
    }
    if (!moved) break;
  }
  return records;
}

namespace {

absl::Status PolicyError(absl::string_view text, absl::string_view what) {
  return absl::InvalidArgumentError(absl::StrCat("policy \"", text, "\": ", what));
}

}  // namespace

absl::StatusOr<PolicyStatement> ParsePolicy(absl::string_view text) {
  absl::string_view body = absl::StripAsciiWhitespace(text);
  if (!absl::ConsumePrefix(&body, "<") || !absl::ConsumeSuffix(&body, ">")) {
    return PolicyError(text, "expected <app-N, key=value, ...>");
  }
  std::vector<absl::string_view> parts = absl::StrSplit(body, ',');
  PolicyStatement stmt;
  stmt.app = std::string(absl::StripAsciiWhitespace(parts[0]));
  if (stmt.app.empty()) return PolicyError(text, "missing application name");
  if (parts.size() < 2) return PolicyError(text, "no settings");

  for (size_t i = 1; i < parts.size(); ++i) {
    std::vector<absl::string_view> kv = absl::StrSplit(parts[i], absl::MaxSplits('=', 1));
    if (kv.size() != 2) return PolicyError(text, absl::StrCat("bad setting \"", parts[i], "\""));
    std::string key = absl::AsciiStrToLower(absl::StripAsciiWhitespace(kv[0]));
    std::string value = absl::AsciiStrToLower(absl::StripAsciiWhitespace(kv[1]));
    if (key == "rate") {
      absl::string_view num = value;
      if (absl::ConsumeSuffix(&num, "mb/s")) num = absl::StripAsciiWhitespace(num);
      double rate = 0;
      if (!absl::SimpleAtod(num, &rate)) return PolicyError(text, "bad rate");
      stmt.rate = rate;
    } else if (key == "borrow") {
      if (value == "true") {
        stmt.borrow = true;
      } else if (value == "false") {
        stmt.borrow = false;
      } else {
        return PolicyError(text, "borrow must be TRUE or FALSE");
      }
    } else if (key == "thres") {
      double thres = 0;
      if (!absl::SimpleAtod(value, &thres)) return PolicyError(text, "bad thres");
      stmt.thres = thres;
    } else {
      return PolicyError(text, absl::StrCat("unknown key \"", key, "\""));
    }
  }
  return stmt;
}

absl::Status ApplyPolicy(const PolicyStatement& stmt, std::vector<ApplicationSpec>& specs) {
  for (ApplicationSpec& s : specs) {
    std::string name = s.name.empty() ? absl::StrCat("app-", s.app_id) : s.name;
    if (!absl::EqualsIgnoreCase(name, stmt.app)) continue;
    if (stmt.rate) s.policy.rate_cap = stmt.rate;
    if (stmt.borrow) s.policy.borrow_allowed = *stmt.borrow;
    if (stmt.thres) s.policy.borrow_threshold = stmt.thres;
    return absl::OkStatus();
  }
  return absl::InvalidArgumentError(
      absl::StrCat("policy names unknown application \"", stmt.app, "\""));
}

std::vector<std::string> FormatPolicies(const ApplicationSpec& spec) {
  std::vector<std::string> out;
  std::string name = spec.name.empty() ? absl::StrCat("app-", spec.app_id) : spec.name;
  const Policy& p = spec.policy;
  if (p.rate_cap) out.push_back(absl::StrFormat("<%s, rate=%.17g MB/s>", name, *p.rate_cap));
  if (p.borrow_threshold) {
    out.push_back(absl::StrFormat("<%s, borrow=TRUE, thres=%.17g>", name, *p.borrow_threshold));
  } else if (!p.borrow_allowed) {
    out.push_back(absl::StrFormat("<%s, borrow=FALSE>", name));
  }
  return out;
}

}  // namespace sdsqos
