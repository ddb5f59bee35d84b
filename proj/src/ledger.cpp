#include "adiv/ledger.hpp"

#include <limits>

namespace adiv {

BudgetExhausted::BudgetExhausted(std::uint64_t total, std::uint64_t requested, std::uint64_t limit)
    : std::runtime_error("sample budget exhausted: " + std::to_string(total) + " + " +
                         std::to_string(requested) + " > " + std::to_string(limit)),
      total_(total),
      requested_(requested),
      limit_(limit) {}

void BudgetLedger::record(std::string tag, std::uint64_t n) {
  if (would_exceed(n)) throw BudgetExhausted(total_, n, *limit_);
  total_ += n;
  log_.emplace_back(std::move(tag), n);
}

std::uint64_t BudgetLedger::remaining() const {
  if (!limit_) return std::numeric_limits<std::uint64_t>::max();
  return *limit_ > total_ ? *limit_ - total_ : 0;
}

bool BudgetLedger::would_exceed(std::uint64_t n) const { return limit_ && n > remaining(); }

BudgetLedger ledger_record(BudgetLedger ledger, std::string tag, std::uint64_t n) {
  ledger.record(std::move(tag), n);
  return ledger;
}

}  // namespace adiv
