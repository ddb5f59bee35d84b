#pragma once
// Pseudo-divergence families, the grid-search adaptive divergence, the plain
// JSD estimator and the train/validation gap criterion that decides how many
// generator samples one divergence evaluation needs.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "adiv/core.hpp"
#include "adiv/ledger.hpp"
#include "adiv/rng.hpp"
#include "adiv/simulators.hpp"

namespace adiv {

struct Probe {
  double alpha = 0.0;
  double value = 0.0;
  double train_loss = 0.0;
  double valid_loss = 0.0;
  std::size_t n = 0;
};

struct DivergenceEstimate {
  double value = 0.0;  // ln 2 - validation loss, in nats
  double alpha_used = 1.0;
  double train_loss = kLn2;
  double valid_loss = kLn2;
  std::uint64_t samples_used = 0;
  std::vector<Probe> probes;

  double gap() const { return std::abs(train_loss - valid_loss); }
};

// Train and validation halves for both distributions. Validation sets have the
// same size as the training sets.
struct SplitSample {
  Dataset p_train;
  Dataset q_train;
  Dataset p_valid;
  Dataset q_valid;

  std::size_t total_rows() const {
    return p_train.rows() + q_train.rows() + p_valid.rows() + q_valid.rows();
  }
};

// Trains one discriminator on a split and reports its losses. Trainers must be
// deterministic given the split and the rng state.
using Trainer = std::function<DivergenceEstimate(const SplitSample&, Rng&)>;

enum class GrowthPolicy { bisection, doubling };

struct GapCriterion {
  double tolerance = 1e-2;
  std::size_t min_n = 32;
  std::size_t max_n = 16384;
  GrowthPolicy policy = GrowthPolicy::bisection;

  static GapCriterion gbdt() { return {1e-2, 32, 65536, GrowthPolicy::bisection}; }
  static GapCriterion nn() { return {5e-2, 64, 16384, GrowthPolicy::doubling}; }
  void validate() const;
};

// Thrown when no probed size satisfies the gap tolerance.
class GapNotReached : public std::runtime_error {
 public:
  GapNotReached(double best_gap, std::size_t best_n, std::size_t max_n);
  double best_gap() const { return best_gap_; }
  std::size_t best_n() const { return best_n_; }

 private:
  double best_gap_;
  std::size_t best_n_;
};

// Draws n rows per side for training and n more for validation. The draws are
// charged to `ledger`.
SplitSample draw_split(const Sampler& p, const Sampler& q, std::size_t n, Rng& rng,
                       BudgetLedger& ledger);

// Single evaluation at a fixed size n.
DivergenceEstimate estimate_at(const Trainer& trainer, const Sampler& p, const Sampler& q,
                               std::size_t n, BudgetLedger& ledger, Rng& rng);

struct SizedEstimate {
  std::size_t n = 0;
  DivergenceEstimate estimate;
  std::size_t search_rows = 0;  // rows drawn by rejected probes, not charged
};

// Searches for the smallest training-set size whose train/validation loss gap
// is within crit.tolerance. Probes are a measuring device: each draws fresh
// data into a scratch ledger, and only the accepted probe's rows are charged
// to `ledger` (one record, tagged "estimate"). A BudgetExhausted from that
// record abandons the estimate.
SizedEstimate min_training_size(const Trainer& trainer, const Sampler& p, const Sampler& q,
                                const GapCriterion& crit, BudgetLedger& ledger, Rng& rng);

// JSD through the variational bound with a full-capacity trainer.
DivergenceEstimate estimate_jsd(const Trainer& trainer, const Sampler& p, const Sampler& q,
                                const GapCriterion& crit, BudgetLedger& ledger, Rng& rng);

enum class FamilyKind { model_restricted, regularized, boosted, stub };

// An indexed set of trainers {D_alpha : alpha in [0, 1]}; alpha = 1 is the
// highest-capacity member. The family claims D_alpha is nondecreasing in alpha.
struct PseudoDivergenceFamily {
  FamilyKind kind = FamilyKind::model_restricted;
  std::string name;
  std::function<Trainer(double alpha)> at;
};

// Scans alpha = 0, eps, 2 eps, ..., 1 and returns D_alpha at the first point
// where D_alpha >= (1 - alpha) ln 2. Each probe retrains from scratch on fresh
// data sized by `crit`. The probe log records every alpha visited.
DivergenceEstimate estimate_ad_grid(const PseudoDivergenceFamily& family, const Sampler& p,
                                    const Sampler& q, double eps, const GapCriterion& crit,
                                    BudgetLedger& ledger, Rng& rng);

// Family with exact, data-independent values D_alpha = value(alpha). Useful
// for checking the scan logic.
PseudoDivergenceFamily stub_family(std::function<double(double)> value);

std::string to_string(GrowthPolicy policy);
GrowthPolicy parse_growth_policy(const std::string& name);

}  // namespace adiv
