#pragma once
// Gaussian variational optimization with score-function gradients, and its
// adversarial form: one warm-started discriminator per run, retrained for a
// few steps against the pooled samples of K parameter draws, whose per-draw
// losses serve as the objective values.

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "adiv/ledger.hpp"
#include "adiv/nn.hpp"
#include "adiv/rng.hpp"
#include "adiv/simulators.hpp"

namespace adiv::opt {

struct SearchDistribution {
  std::vector<double> mu;
  std::vector<double> log_std;

  SearchDistribution() = default;
  SearchDistribution(std::vector<double> mean, double std);

  std::size_t dim() const { return mu.size(); }
  double std_dev(std::size_t k) const;
  std::vector<double> sample(Rng& rng) const;
  void validate() const;

  friend bool operator==(const SearchDistribution&, const SearchDistribution&) = default;
};

struct VoGradient {
  std::vector<double> mu;
  std::vector<double> log_std;
};

// mean_k[(d_k - mean(d)) * grad log q(psi_k)] with the closed-form Gaussian
// score. Needs at least two samples.
VoGradient vo_gradient(std::span<const double> d_values, const std::vector<std::vector<double>>& psis,
                       const SearchDistribution& dist);

struct AvoSettings {
  std::size_t draws = 16;           // K parameter draws per step
  double lr = 1e-2;                 // Adam on (mu, log_std)
  std::size_t max_steps = 100000;   // usually the budget ends the run first
  std::size_t inner_steps = 50;     // discriminator updates per step
  std::size_t n_min = 64;           // mixture rows per half, adapted by the gap
  std::size_t n_max = 4096;
  double gap_tolerance = 5e-2;
  double min_std = 1e-3;
  nn::Variant variant = nn::Variant::dropout;
  nn::NnConfig nn;

  void validate() const;
};

struct AvoStep {
  std::size_t step = 0;
  std::vector<double> mu;
  std::vector<double> std_dev;
  std::size_t n = 0;
  double value = 0.0;  // ln 2 - validation loss against the whole mixture
  double gap = 0.0;
  double zeta = 0.0;
  std::uint64_t cumulative_samples = 0;
};

struct AvoResult {
  std::vector<AvoStep> trajectory;
  SearchDistribution final;
  bool budget_exhausted = false;
};

// Each step charges 4n rows (real and mixture, train and validation) to the
// ledger before drawing; BudgetExhausted ends the run at the previous step.
AvoResult avo_run(const Task& task, SearchDistribution init, const AvoSettings& settings,
                  BudgetLedger& ledger, Rng& rng);

void write_avo_csv(std::ostream& os, std::span<const AvoStep> rows);

}  // namespace adiv::opt
