#pragma once
// Small samplers and trainers shared by the unit tests.

#include <cmath>
#include <vector>

#include "adiv/core.hpp"
#include "adiv/divergence.hpp"
#include "adiv/ledger.hpp"
#include "adiv/rng.hpp"
#include "adiv/simulators.hpp"

namespace adiv::test {

// Isotropic Gaussian with the given mean and standard deviation.
inline Sampler gaussian(std::vector<double> mean, double sd = 1.0) {
  return [mean, sd](std::size_t n, Rng& rng, BudgetLedger& ledger) {
    ledger.record("test", n);
    Dataset out(n, mean.size());
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < mean.size(); ++j) out(i, j) = rng.normal(mean[j], sd);
    }
    return out;
  };
}

// Uniform on [lo, hi) in one dimension.
inline Sampler uniform(double lo, double hi) {
  return [lo, hi](std::size_t n, Rng& rng, BudgetLedger& ledger) {
    ledger.record("test", n);
    Dataset out(n, 1);
    for (std::size_t i = 0; i < n; ++i) out(i, 0) = rng.uniform(lo, hi);
    return out;
  };
}

// Scores every row 1/2, so train and validation losses are both ln 2.
inline Trainer constant_trainer() {
  return [](const SplitSample& s, Rng&) {
    const Scorer half = [](std::span<const double>) { return 0.5; };
    DivergenceEstimate est;
    est.train_loss = cross_entropy(half, s.p_train, s.q_train);
    est.valid_loss = cross_entropy(half, s.p_valid, s.q_valid);
    est.value = kLn2 - est.valid_loss;
    return est;
  };
}

// Jensen-Shannon divergence of N(0, 1) and N(mu, 1) by the trapezoid rule.
inline double jsd_unit_gaussians(double mu) {
  const auto pdf = [](double x, double m) { return std::exp(-0.5 * (x - m) * (x - m)) / std::sqrt(2 * M_PI); };
  const double lo = -14.0, hi = 14.0 + mu;
  const int steps = 200000;
  const double dx = (hi - lo) / steps;
  double total = 0.0;
  for (int i = 0; i <= steps; ++i) {
    const double x = lo + i * dx;
    const double p = pdf(x, 0.0), q = pdf(x, mu), m = 0.5 * (p + q);
    double term = 0.0;
    if (p > 0) term += 0.5 * p * std::log(p / m);
    if (q > 0) term += 0.5 * q * std::log(q / m);
    total += (i == 0 || i == steps ? 0.5 : 1.0) * term;
  }
  return total * dx;
}

}  // namespace adiv::test
