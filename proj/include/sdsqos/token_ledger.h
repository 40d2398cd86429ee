#ifndef SDSQOS_TOKEN_LEDGER_H_
#define SDSQOS_TOKEN_LEDGER_H_

#include <vector>

#include "sdsqos/domain.h"

namespace sdsqos {

// Per (application, server) token balances plus the tokens each pair
// borrowed during the current slot. Depth is the refill clamp, set from the
// pair's share at each refill.
class TokenLedger {
 public:
  TokenLedger() = default;
  TokenLedger(int num_apps, int num_servers, double depth_slots = 1.0)
      : num_apps_(num_apps),
        num_servers_(num_servers),
        depth_slots_(depth_slots),
        balance_(static_cast<size_t>(num_apps) * num_servers, 0.0),
        borrowed_(balance_.size(), 0.0),
        depth_(balance_.size(), 0.0) {}

  int num_apps() const { return num_apps_; }
  int num_servers() const { return num_servers_; }
  double depth_slots() const { return depth_slots_; }

  double balance(AppId a, ServerId s) const { return balance_[Index(a, s)]; }
  double borrowed(AppId a, ServerId s) const { return borrowed_[Index(a, s)]; }
  double depth(AppId a, ServerId s) const { return depth_[Index(a, s)]; }

  void set_balance(AppId a, ServerId s, double v) { balance_[Index(a, s)] = v; }
  void set_depth(AppId a, ServerId s, double v) { depth_[Index(a, s)] = v; }
  void add_borrowed(AppId a, ServerId s, double v) { borrowed_[Index(a, s)] += v; }
  void reset_borrowed() { std::fill(borrowed_.begin(), borrowed_.end(), 0.0); }

  // Removes up to `amount`; returns what was actually taken.
  double Consume(AppId a, ServerId s, double amount);

  // Moves `amount` tokens of `a` between servers. Never creates tokens.
  void Transfer(AppId a, ServerId from, ServerId to, double amount);

  double AppTotal(AppId a) const;

  bool operator==(const TokenLedger&) const = default;

 private:
  size_t Index(AppId a, ServerId s) const {
    return static_cast<size_t>(a) * num_servers_ + s;
  }

  int num_apps_ = 0;
  int num_servers_ = 0;
  double depth_slots_ = 1.0;
  std::vector<double> balance_;
  std::vector<double> borrowed_;
  std::vector<double> depth_;
};

}  // namespace sdsqos

#endif  // SDSQOS_TOKEN_LEDGER_H_
