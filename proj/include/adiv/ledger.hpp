#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace adiv {

// Thrown when a record would push a limited ledger past its budget. Nothing is
// recorded in that case.
class BudgetExhausted : public std::runtime_error {
 public:
  BudgetExhausted(std::uint64_t total, std::uint64_t requested, std::uint64_t limit);
  std::uint64_t total() const { return total_; }
  std::uint64_t requested() const { return requested_; }
  std::uint64_t limit() const { return limit_; }

 private:
  std::uint64_t total_;
  std::uint64_t requested_;
  std::uint64_t limit_;
};

// Running count of generator draws. This is the x-axis of every convergence
// curve: optimizers are compared at equal totals.
class BudgetLedger {
 public:
  BudgetLedger() = default;
  explicit BudgetLedger(std::uint64_t limit) : limit_(limit) {}

  void record(std::string tag, std::uint64_t n);

  std::uint64_t total() const { return total_; }
  std::optional<std::uint64_t> limit() const { return limit_; }
  std::uint64_t remaining() const;
  bool would_exceed(std::uint64_t n) const;
  const std::vector<std::pair<std::string, std::uint64_t>>& log() const { return log_; }

 private:
  std::uint64_t total_ = 0;
  std::optional<std::uint64_t> limit_;
  std::vector<std::pair<std::string, std::uint64_t>> log_;
};

// Value-semantics form: returns a copy with the record applied.
BudgetLedger ledger_record(BudgetLedger ledger, std::string tag, std::uint64_t n);

}  // namespace adiv
