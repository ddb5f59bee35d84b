#pragma once
// Bayesian optimization over a box: uniform initial design, then a GP fitted
// to the history and the expected-improvement maximizer as the next point.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "adiv/gp.hpp"
#include "adiv/ledger.hpp"
#include "adiv/rng.hpp"
#include "adiv/simulators.hpp"

namespace adiv::opt {

struct BoSettings {
  std::size_t n_init = 5;
  std::size_t n_candidates = 2048;
  std::size_t refine_starts = 4;
  std::size_t refine_steps = 16;  // per start; 4 x 16 = 64 refinements
};

struct Evaluation {
  std::vector<double> psi;
  double value = 0.0;
  std::uint64_t cumulative_samples = 0;
};

struct BoState {
  ParamBox bounds;
  BoSettings settings;
  std::vector<Evaluation> history;
  Rng rng;

  std::vector<double> to_unit(std::span<const double> psi) const;
  std::vector<double> from_unit(std::span<const double> u) const;
  std::vector<double> uniform_point();
};

// The GP works in unit-cube coordinates of the box.
GpModel fit_history(const BoState& state);

// EI maximizer over uniform candidates plus local Gaussian refinements of the
// best few. Falls back to a uniform point when EI vanishes everywhere. Draws
// the same number of variates whatever the values, so a shifted objective
// sees the same random stream.
std::vector<double> propose_next(BoState& state, const GpModel& gp);

using Objective = std::function<double(std::span<const double> psi, BudgetLedger& ledger, Rng& rng)>;

struct BoResult {
  std::vector<Evaluation> history;
  bool budget_exhausted = false;
};

// n_init uniform evaluations followed by up to n_iters model-guided ones. A
// BudgetExhausted from the objective ends the run at the last completed
// evaluation; other errors propagate.
BoResult bo_run(const Objective& objective, const ParamBox& bounds, std::size_t n_iters,
                BudgetLedger& ledger, Rng& rng, const BoSettings& settings = {});

}  // namespace adiv::opt
