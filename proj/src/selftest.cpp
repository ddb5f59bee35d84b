#include "adiv/selftest.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include "adiv/bo.hpp"
#include "adiv/capacity.hpp"
#include "adiv/csv.hpp"
#include "adiv/divergence.hpp"
#include "adiv/gbdt.hpp"
#include "adiv/gp.hpp"
#include "adiv/kernels.hpp"
#include "adiv/nn.hpp"
#include "adiv/simulators.hpp"
#include "adiv/vo.hpp"

namespace adiv {

namespace {

SelftestRow kernel_equivalence(Rng& rng) {
  const auto& ref = kernels::scalar_table();
  const auto& act = kernels::active();
  std::vector<double> a(37);
  std::vector<double> b(37);
  for (std::size_t i = 0; i < a.size(); ++i) {
    a[i] = rng.normal();
    b[i] = rng.normal();
  }
  const double diff = std::abs(ref.dot(a.data(), b.data(), a.size()) - act.dot(a.data(), b.data(), a.size()));
  return {"kernel_dot_matches_scalar", diff <= 1e-12, diff};
}

SelftestRow capacity_monotone() {
  double worst = 0.0;
  for (const auto& c : {CapacityFunction::linear(0.25, 100), CapacityFunction::logarithmic(0.25, 100)}) {
    for (std::size_t i = 1; i <= 100; ++i) worst = std::min(worst, c(i) - c(i - 1));
  }
  return {"capacity_nondecreasing", worst >= 0.0, worst};
}

SelftestRow grid_scan_below_jsd(Rng& rng) {
  // Any ordered family's adaptive value never exceeds its top member.
  const auto family = stub_family([](double a) { return a * a * kLn2; });
  BudgetLedger ledger;
  const Sampler none = [](std::size_t n, Rng&, BudgetLedger& l) {
    l.record("stub", n);
    return Dataset(n, 1);
  };
  const DivergenceEstimate est = estimate_ad_grid(family, none, none, 0.05, GapCriterion::gbdt(), ledger, rng);
  return {"adaptive_not_above_top_member", est.value <= kLn2, est.value};
}

SelftestRow gbdt_train_loss_monotone(Rng& rng) {
  const XorTask task;
  BudgetLedger ledger;
  SplitSample split;
  split.p_train = task.ground_truth(256, rng, ledger);
  split.q_train = task.sample(std::vector<double>{1.0}, 256, rng, ledger);
  split.p_valid = task.ground_truth(256, rng, ledger);
  split.q_valid = task.sample(std::vector<double>{1.0}, 256, rng, ledger);
  gbdt::GbdtConfig cfg;
  cfg.n_trees = 30;
  const auto res = gbdt::boosted_ad(split, cfg);
  double worst = 0.0;
  for (std::size_t i = 1; i < res.trajectory.size(); ++i) {
    worst = std::max(worst, res.trajectory[i].train_loss - res.trajectory[i - 1].train_loss);
  }
  return {"gbdt_train_loss_nonincreasing", worst <= 1e-6, worst};
}

SelftestRow nn_gradient_check(Rng& rng) {
  Rng init = rng.fork();
  const nn::Mlp net(3, 5, init);
  Dataset p(6, 3);
  Dataset q(6, 3);
  for (std::size_t i = 0; i < 6; ++i) {
    for (std::size_t j = 0; j < 3; ++j) {
      p(i, j) = rng.normal();
      q(i, j) = rng.normal() + 0.5;
    }
  }
  const nn::Regularization reg{nn::Variant::l2, 0.1};
  Rng r0(0);
  const nn::Gradient g = nn::backward(net, p, q, reg, 10.0, r0);
  double worst = 0.0;
  const double h = 1e-6;
  for (std::size_t k = 0; k < net.param_count(); ++k) {
    std::vector<double> plus(net.params().begin(), net.params().end());
    std::vector<double> minus = plus;
    plus[k] += h;
    minus[k] -= h;
    Rng r1(0);
    Rng r2(0);
    const double fd = (nn::objective(nn::Mlp(3, 5, plus), p, q, reg, 10.0, r1) -
                       nn::objective(nn::Mlp(3, 5, minus), p, q, reg, 10.0, r2)) /
                      (2 * h);
    worst = std::max(worst, std::abs(fd - g.g[k]) / std::max(1.0, std::abs(fd)));
  }
  return {"nn_gradient_matches_finite_differences", worst <= 1e-4, worst};
}

SelftestRow gp_interpolates(Rng& rng) {
  std::vector<std::vector<double>> xs;
  std::vector<double> ys;
  for (int i = 0; i < 5; ++i) {
    const double x = rng.uniform();
    xs.push_back({x});
    ys.push_back(std::sin(3 * x));
  }
  const opt::GpModel gp = opt::gp_fit(xs, ys);
  double worst = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) worst = std::max(worst, std::abs(gp.predict(xs[i]).mean - ys[i]));
  return {"gp_mean_interpolates_targets", worst <= 1e-6, worst};
}

SelftestRow ei_nonnegative(Rng& rng) {
  double worst = 0.0;
  for (int i = 0; i < 1000; ++i) {
    worst = std::min(worst, opt::expected_improvement(rng.normal(), std::abs(rng.normal()), rng.normal()));
  }
  return {"expected_improvement_nonnegative", worst >= 0.0, worst};
}

SelftestRow vo_baseline_cancels(Rng& rng) {
  const opt::SearchDistribution dist({0.1, -0.2}, 0.3);
  std::vector<std::vector<double>> psis;
  for (int k = 0; k < 16; ++k) psis.push_back(dist.sample(rng));
  const std::vector<double> d(16, 0.37);
  const opt::VoGradient g = opt::vo_gradient(d, psis, dist);
  double worst = 0.0;
  for (double v : g.mu) worst = std::max(worst, std::abs(v));
  for (double v : g.log_std) worst = std::max(worst, std::abs(v));
  return {"vo_gradient_zero_on_constant_values", worst == 0.0, worst};
}

SelftestRow ledger_exact(Rng& rng) {
  BudgetLedger ledger;
  std::uint64_t expect = 0;
  for (const char* name : {"xor", "roll", "detector"}) {
    const auto task = make_task(name);
    for (std::size_t n : {1, 7, 30}) {
      task->ground_truth(n, rng, ledger);
      expect += n;
    }
  }
  return {"ledger_counts_every_draw", ledger.total() == expect, static_cast<double>(ledger.total())};
}

}  // namespace

std::vector<SelftestRow> run_selftest(std::uint64_t seed) {
  Rng rng(seed);
  std::vector<SelftestRow> rows;
  Rng r = rng.fork();
  rows.push_back(kernel_equivalence(r));
  rows.push_back(capacity_monotone());
  r = rng.fork();
  rows.push_back(grid_scan_below_jsd(r));
  r = rng.fork();
  rows.push_back(gbdt_train_loss_monotone(r));
  r = rng.fork();
  rows.push_back(nn_gradient_check(r));
  r = rng.fork();
  rows.push_back(gp_interpolates(r));
  r = rng.fork();
  rows.push_back(ei_nonnegative(r));
  r = rng.fork();
  rows.push_back(vo_baseline_cancels(r));
  r = rng.fork();
  rows.push_back(ledger_exact(r));
  return rows;
}

void write_selftest_csv(std::ostream& os, std::uint64_t seed, const std::vector<SelftestRow>& rows) {
  CsvWriter csv(os);
  csv.comment("seed", std::to_string(seed));
  csv.header({"check", "passed", "detail"});
  for (const SelftestRow& r : rows) csv.row(r.check, std::string(r.passed ? "true" : "false"), r.detail);
}

}  // namespace adiv
