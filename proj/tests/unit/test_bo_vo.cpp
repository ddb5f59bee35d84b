#include <algorithm>
#include <cmath>
#include <sstream>

#include "adiv/bo.hpp"
#include "adiv/vo.hpp"
#include "doctest.h"

using namespace adiv;
using namespace adiv::opt;

namespace {

Objective quadratic(double centre, std::uint64_t cost) {
  return [centre, cost](std::span<const double> psi, BudgetLedger& ledger, Rng&) {
    ledger.record("quad", cost);
    return (psi[0] - centre) * (psi[0] - centre);
  };
}

}  // namespace

TEST_SUITE("optimizers") {
  TEST_CASE("vo gradient on hand-computed draws") {
    const SearchDistribution dist({1.0}, 2.0);
    const std::vector<std::vector<double>> psis{{3.0}, {1.0}};
    const std::vector<double> d{1.0, 0.0};
    // baseline 0.5; t = (1, 0); mu: (0.5*1/2 + -0.5*0/2) / 2 ; log_std: (0.5*0 - 0.5*(-1)) / 2
    const VoGradient g = vo_gradient(d, psis, dist);
    CHECK(g.mu[0] == doctest::Approx(0.125));
    CHECK(g.log_std[0] == doctest::Approx(0.25));
  }

  TEST_CASE("vo gradient ignores constant values") {
    const SearchDistribution dist({0.0, 0.0}, 1.0);
    Rng rng(1);
    std::vector<std::vector<double>> psis;
    for (int k = 0; k < 8; ++k) psis.push_back(dist.sample(rng));
    const VoGradient g = vo_gradient(std::vector<double>(8, 3.0), psis, dist);
    for (double v : g.mu) CHECK(v == 0.0);
    for (double v : g.log_std) CHECK(v == 0.0);
    CHECK_THROWS(vo_gradient(std::vector<double>{1.0}, {{0.0, 0.0}}, dist));
  }

  TEST_CASE("vo gradient is unbiased for a linear objective") {
    // E[(a . psi) grad_mu log q] = a for a Gaussian search distribution.
    const SearchDistribution dist({0.5, -1.0}, 0.3);
    Rng rng(2);
    std::vector<std::vector<double>> psis;
    std::vector<double> d;
    for (int k = 0; k < 200000; ++k) {
      psis.push_back(dist.sample(rng));
      d.push_back(2.0 * psis.back()[0] - psis.back()[1]);
    }
    const VoGradient g = vo_gradient(d, psis, dist);
    CHECK(g.mu[0] == doctest::Approx(2.0).epsilon(0.02));
    CHECK(g.mu[1] == doctest::Approx(-1.0).epsilon(0.02));
  }

  TEST_CASE("search distribution validation") {
    CHECK_THROWS(SearchDistribution({}, 1.0));
    SearchDistribution d({0.0}, 1.0);
    d.mu[0] = INFINITY;
    CHECK_THROWS(d.validate());
  }

  TEST_CASE("bo finds the minimum of a quadratic") {
    BudgetLedger ledger;
    Rng rng(3);
    const ParamBox box{{-2.0}, {2.0}};
    const BoResult res = bo_run(quadratic(0.7, 1), box, 20, ledger, rng);
    REQUIRE(res.history.size() == 25);
    double best = 1e9, best_psi = 0;
    for (const auto& e : res.history) {
      CHECK(box.contains(e.psi));
      if (e.value < best) {
        best = e.value;
        best_psi = e.psi[0];
      }
    }
    CHECK(std::abs(best_psi - 0.7) <= 0.05);
    CHECK(res.history.back().cumulative_samples == 25);
  }

  TEST_CASE("bo stops at the budget") {
    BudgetLedger ledger(1000);
    Rng rng(4);
    const BoResult res = bo_run(quadratic(0.0, 300), {{-1.0}, {1.0}}, 50, ledger, rng);
    CHECK(res.budget_exhausted);
    CHECK(res.history.size() == 3);
    CHECK(ledger.total() == 900);
  }

  TEST_CASE("bo is deterministic and shift-invariant in its draws") {
    const ParamBox box{{-1.0}, {1.0}};
    BudgetLedger l1, l2;
    Rng r1(5), r2(5);
    const BoResult a = bo_run(quadratic(0.3, 1), box, 8, l1, r1);
    const BoResult b = bo_run(quadratic(0.3, 1), box, 8, l2, r2);
    REQUIRE(a.history.size() == b.history.size());
    for (std::size_t i = 0; i < a.history.size(); ++i) CHECK(a.history[i].psi == b.history[i].psi);
  }

  TEST_CASE("proposals stay in the box and unit mapping round-trips") {
    BoState state{{{-3.0, 10.0}, {1.0, 20.0}}, {}, {}, Rng(6)};
    for (int i = 0; i < 6; ++i) {
      std::vector<double> psi = state.uniform_point();
      state.history.push_back({psi, psi[0] * psi[0] + 0.01 * psi[1], 0});
    }
    const std::vector<double> u = state.to_unit(std::vector<double>{-1.0, 15.0});
    CHECK(u[0] == doctest::Approx(0.5));
    CHECK(u[1] == doctest::Approx(0.5));
    const auto back = state.from_unit(u);
    CHECK(back[0] == doctest::Approx(-1.0));
    const std::vector<double> next = propose_next(state, fit_history(state));
    CHECK(state.bounds.contains(next));
  }

  TEST_CASE("avo smoke run on the xor task") {
    XorTask task;
    AvoSettings s;
    s.variant = nn::Variant::dropout;
    s.max_steps = 5;
    s.inner_steps = 5;
    BudgetLedger ledger;
    Rng rng(7);
    const AvoResult res = avo_run(task, SearchDistribution({1.0}, 0.1), s, ledger, rng);
    REQUIRE(res.trajectory.size() == 5);
    std::uint64_t prev = 0;
    for (const AvoStep& st : res.trajectory) {
      CHECK(st.cumulative_samples == prev + 4 * st.n);
      prev = st.cumulative_samples;
      CHECK(st.std_dev[0] >= s.min_std);
      CHECK(task.bounds().contains(st.mu));
    }
    std::ostringstream os;
    write_avo_csv(os, res.trajectory);
    CHECK(os.str().rfind("step,mu_0,std_0,n,value,gap,zeta,cumulative_samples\n", 0) == 0);
  }

  TEST_CASE("avo ends at the budget without a partial step") {
    XorTask task;
    AvoSettings s;
    s.inner_steps = 2;
    s.n_max = 64;
    BudgetLedger ledger(4 * 64 * 3 + 10);
    Rng rng(8);
    const AvoResult res = avo_run(task, SearchDistribution({1.0}, 0.1), s, ledger, rng);
    CHECK(res.budget_exhausted);
    CHECK(res.trajectory.size() == 3);
    CHECK(ledger.total() == 4 * 64 * 3);
  }

  TEST_CASE("avo settings validation") {
    AvoSettings s;
    s.draws = 1;
    CHECK_THROWS(s.validate());
    s = {};
    s.n_min = 8;
    CHECK_THROWS(s.validate());
  }
}
