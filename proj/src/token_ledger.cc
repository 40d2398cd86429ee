#include "sdsqos/token_ledger.h"

#include <algorithm>

namespace sdsqos {

double TokenLedger::Consume(AppId a, ServerId s, double amount) {
  double& b = balance_[Index(a, s)];
  double taken = std::min(b, std::max(0.0, amount));
  b = std::max(0.0, b - taken);
  return taken;
}

void TokenLedger::Transfer(AppId a, ServerId from, ServerId to, double amount) {
  double& src = balance_[Index(a, from)];
  amount = std::min(amount, src);
  src -= amount;
  balance_[Index(a, to)] += amount;
}

double TokenLedger::AppTotal(AppId a) const {
  double sum = 0;
  for (ServerId s = 0; s < num_servers_; ++s) sum += balance_[Index(a, s)];
  return sum;
}

}  // namespace sdsqos
