#include "adiv/bo.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace adiv::opt {

std::vector<double> BoState::to_unit(std::span<const double> psi) const {
  std::vector<double> u(psi.size());
  for (std::size_t k = 0; k < psi.size(); ++k) u[k] = (psi[k] - bounds.lo[k]) / bounds.width(k);
  return u;
}

std::vector<double> BoState::from_unit(std::span<const double> u) const {
  std::vector<double> psi(u.size());
  for (std::size_t k = 0; k < u.size(); ++k) {
    psi[k] = std::clamp(bounds.lo[k] + u[k] * bounds.width(k), bounds.lo[k], bounds.hi[k]);
  }
  return psi;
}

std::vector<double> BoState::uniform_point() {
  std::vector<double> u(bounds.dim());
  for (double& v : u) v = rng.uniform();
  return from_unit(u);
}

GpModel fit_history(const BoState& state) {
  std::vector<std::vector<double>> xs;
  std::vector<double> ys;
  for (const Evaluation& e : state.history) {
    xs.push_back(state.to_unit(e.psi));
    ys.push_back(e.value);
  }
  return gp_fit(std::move(xs), std::move(ys));
}

std::vector<double> propose_next(BoState& state, const GpModel& gp) {
  const std::size_t dim = state.bounds.dim();
  const BoSettings& s = state.settings;
  double best = gp.values().front();
  for (double v : gp.values()) best = std::min(best, v);
  auto ei = [&](std::span<const double> u) {
    const Posterior post = gp.predict(u);
    return expected_improvement(post.mean, std::sqrt(post.var), best);
  };

  std::vector<std::vector<double>> cand(s.n_candidates, std::vector<double>(dim));
  std::vector<double> score(s.n_candidates);
  for (std::size_t i = 0; i < s.n_candidates; ++i) {
    for (double& v : cand[i]) v = state.rng.uniform();
    score[i] = ei(cand[i]);
  }
  std::vector<std::size_t> order(s.n_candidates);
  std::iota(order.begin(), order.end(), 0);
  const std::size_t starts = std::min(s.refine_starts, s.n_candidates);
  std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(starts), order.end(),
                    [&](std::size_t a, std::size_t b) { return score[a] > score[b] || (score[a] == score[b] && a < b); });

  std::vector<double> best_u = s.n_candidates ? cand[order[0]] : std::vector<double>(dim, 0.5);
  double best_ei = s.n_candidates ? score[order[0]] : 0.0;
  for (std::size_t r = 0; r < starts; ++r) {
    std::vector<double> cur = cand[order[r]];
    double cur_ei = score[order[r]];
    double scale = 0.05;
    for (std::size_t t = 0; t < s.refine_steps; ++t, scale *= 0.75) {
      std::vector<double> next(dim);
      for (std::size_t k = 0; k < dim; ++k) next[k] = std::clamp(cur[k] + scale * state.rng.normal(), 0.0, 1.0);
      const double e = ei(next);
      if (e > cur_ei) {
        cur = std::move(next);
        cur_ei = e;
      }
    }
    if (cur_ei > best_ei) {
      best_ei = cur_ei;
      best_u = cur;
    }
  }
  std::vector<double> fallback = state.uniform_point();
  if (!(best_ei > 0.0)) return fallback;
  return state.from_unit(best_u);
}

BoResult bo_run(const Objective& objective, const ParamBox& bounds, std::size_t n_iters,
                BudgetLedger& ledger, Rng& rng, const BoSettings& settings) {
  if (settings.n_init < 2) throw std::invalid_argument("bo_run: need at least 2 initial points");
  BoState state{bounds, settings, {}, rng.split(0)};
  BoResult out;
  try {
    for (std::size_t i = 0; i < settings.n_init || i - settings.n_init < n_iters; ++i) {
      std::vector<double> psi;
      if (i < settings.n_init) {
        psi = state.uniform_point();
      } else {
        psi = propose_next(state, fit_history(state));
      }
      Rng eval_rng = rng.split(1 + i);
      const double value = objective(psi, ledger, eval_rng);
      state.history.push_back({std::move(psi), value, ledger.total()});
    }
  } catch (const BudgetExhausted&) {
    out.budget_exhausted = true;
  }
  out.history = std::move(state.history);
  return out;
}

}  // namespace adiv::opt
