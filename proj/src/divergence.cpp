#include "adiv/divergence.hpp"

#include <cmath>
#include <limits>
#include <sstream>

namespace adiv {

void GapCriterion::validate() const {
  if (!(tolerance > 0.0 && tolerance < kLn2)) {
    throw std::invalid_argument("gap tolerance must lie in (0, ln 2)");
  }
  if (min_n == 0 || !(min_n < max_n)) throw std::invalid_argument("gap search needs 0 < min_n < max_n");
}

namespace {

std::string gap_message(double gap, std::size_t n, std::size_t max_n) {
  std::ostringstream os;
  os << "gap criterion unreachable within max_n=" << max_n << " (best gap " << gap << " at n=" << n
     << ")";
  return os.str();
}

}  // namespace

GapNotReached::GapNotReached(double best_gap, std::size_t best_n, std::size_t max_n)
    : std::runtime_error(gap_message(best_gap, best_n, max_n)), best_gap_(best_gap), best_n_(best_n) {}

SplitSample draw_split(const Sampler& p, const Sampler& q, std::size_t n, Rng& rng,
                       BudgetLedger& ledger) {
  Rng rp = rng.fork();
  Rng rq = rng.fork();
  Rng rpv = rng.fork();
  Rng rqv = rng.fork();
  SplitSample s{p(n, rp, ledger), q(n, rq, ledger), p(n, rpv, ledger), q(n, rqv, ledger)};
  check_pair(s.p_train, s.q_train);
  return s;
}

DivergenceEstimate estimate_at(const Trainer& trainer, const Sampler& p, const Sampler& q,
                               std::size_t n, BudgetLedger& ledger, Rng& rng) {
  Rng data_rng = rng.fork();
  Rng train_rng = rng.fork();
  const SplitSample split = draw_split(p, q, n, data_rng, ledger);
  DivergenceEstimate est = trainer(split, train_rng);
  est.samples_used = split.total_rows();
  return est;
}

SizedEstimate min_training_size(const Trainer& trainer, const Sampler& p, const Sampler& q,
                                const GapCriterion& crit, BudgetLedger& ledger, Rng& rng) {
  crit.validate();
  SizedEstimate result;
  double best_gap = std::numeric_limits<double>::infinity();
  std::size_t best_gap_n = 0;
  std::optional<std::pair<std::size_t, DivergenceEstimate>> accepted;

  auto probe = [&](std::size_t n) {
    BudgetLedger scratch;
    Rng probe_rng = rng.fork();
    DivergenceEstimate est = estimate_at(trainer, p, q, n, scratch, probe_rng);
    result.search_rows += scratch.total();
    if (est.gap() < best_gap) {
      best_gap = est.gap();
      best_gap_n = n;
    }
    const bool ok = est.gap() <= crit.tolerance;
    if (ok && (!accepted || n < accepted->first)) accepted.emplace(n, std::move(est));
    return ok;
  };

  // Bracket by doubling from min_n. The doubling policy stops here.
  std::size_t lo = 0;  // largest size known to fail
  std::size_t hi = crit.min_n;
  for (;;) {
    if (probe(hi)) break;
    if (hi >= crit.max_n) throw GapNotReached(best_gap, best_gap_n, crit.max_n);
    lo = hi;
    hi = std::min(hi * 2, crit.max_n);
  }
  if (crit.policy == GrowthPolicy::bisection && lo > 0) {
    // Bisection between a failing and a passing size, to 1/8 relative width.
    while (hi - lo > std::max<std::size_t>(1, lo / 8)) {
      const std::size_t mid = lo + (hi - lo) / 2;
      if (probe(mid)) {
        hi = mid;
      } else {
        lo = mid;
      }
    }
  }

  result.n = accepted->first;
  result.estimate = std::move(accepted->second);
  result.search_rows -= result.estimate.samples_used;
  ledger.record("estimate", result.estimate.samples_used);
  return result;
}

DivergenceEstimate estimate_jsd(const Trainer& trainer, const Sampler& p, const Sampler& q,
                                const GapCriterion& crit, BudgetLedger& ledger, Rng& rng) {
  return min_training_size(trainer, p, q, crit, ledger, rng).estimate;
}

DivergenceEstimate estimate_ad_grid(const PseudoDivergenceFamily& family, const Sampler& p,
                                    const Sampler& q, double eps, const GapCriterion& crit,
                                    BudgetLedger& ledger, Rng& rng) {
  if (!(eps > 0.0 && eps < 1.0)) throw std::invalid_argument("grid step eps must lie in (0, 1)");
  std::vector<Probe> log;
  std::uint64_t used = 0;
  for (std::size_t k = 0;; ++k) {
    const double alpha = std::min(1.0, static_cast<double>(k) * eps);
    Rng probe_rng = rng.split(k);
    SizedEstimate sized = min_training_size(family.at(alpha), p, q, crit, ledger, probe_rng);
    DivergenceEstimate& est = sized.estimate;
    used += est.samples_used;
    log.push_back({alpha, est.value, est.train_loss, est.valid_loss, sized.n});
    if (est.value >= (1.0 - alpha) * kLn2 || alpha >= 1.0) {
      est.alpha_used = alpha;
      est.samples_used = used;
      est.probes = std::move(log);
      return est;
    }
  }
}

PseudoDivergenceFamily stub_family(std::function<double(double)> value) {
  PseudoDivergenceFamily family;
  family.kind = FamilyKind::stub;
  family.name = "stub";
  family.at = [value = std::move(value)](double alpha) -> Trainer {
    return [value, alpha](const SplitSample&, Rng&) {
      DivergenceEstimate est;
      est.value = value(alpha);
      est.alpha_used = alpha;
      est.train_loss = kLn2 - est.value;
      est.valid_loss = est.train_loss;
      return est;
    };
  };
  return family;
}

std::string to_string(GrowthPolicy policy) {
  return policy == GrowthPolicy::bisection ? "bisection" : "doubling";
}

GrowthPolicy parse_growth_policy(const std::string& name) {
  if (name == "bisection") return GrowthPolicy::bisection;
  if (name == "doubling") return GrowthPolicy::doubling;
  throw std::invalid_argument("unknown growth policy: " + name);
}

}  // namespace adiv
