#pragma once
// One-hidden-layer ReLU network with a sigmoid output and hand-written
// backpropagation, trained by the EMA-scheduled adaptive divergence loops:
//
//   L_acc <- ln 2
//   repeat:
//     zeta  <- c(L_acc / ln 2)
//     g0    <- grad of the cross-entropy under dropout p = zeta
//              (or of cross-entropy + zeta * mean(W^2) for the l2 variant)
//     g1    <- grad of mean_{x in P} ||d f(x) / dx||^2            (R1 penalty)
//     L_acc <- rho * L_acc + (1 - rho) * (unregularized batch loss)
//     theta <- Adam(theta, g0 + beta * g1)
//
// Dropout uses c(a) = 1 - a: an untrained discriminator (L_acc = ln 2) runs
// without dropout, and p grows as the batches become separable. The l2
// variant uses c(a) = -log(a), clamped to [0, zeta_max].

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "adiv/core.hpp"
#include "adiv/divergence.hpp"
#include "adiv/rng.hpp"

namespace adiv::nn {

enum class Variant { none, dropout, l2 };

// What the R1 penalty differentiates: the output probability or the logit.
enum class R1Target { output, logit };

struct NnConfig {
  std::size_t hidden = 32;
  double ema_coeff = 0.9;
  double r1_coeff = 10.0;
  R1Target r1_target = R1Target::output;
  double lr = 1e-3;
  std::size_t batch = 64;
  std::size_t patience = 200;
  double conv_tol = 1e-4;
  std::size_t max_steps = 20000;
  double zeta_max = 10.0;
  // Pins the regularization strength instead of deriving it from L_acc.
  std::optional<double> fixed_zeta;
  bool record_trace = false;

  void validate() const;
};

// Parameters live in one flat vector laid out as
//   [ W1 (input_dim x hidden, input-major) | b1 (hidden) | w2 (hidden) | b2 ].
class Mlp {
 public:
  Mlp(std::size_t input_dim, std::size_t hidden, Rng& rng);
  Mlp(std::size_t input_dim, std::size_t hidden, std::vector<double> params);

  std::size_t input_dim() const { return d_; }
  std::size_t hidden() const { return h_; }
  std::size_t param_count() const { return params_.size(); }

  std::span<double> params() { return params_; }
  std::span<const double> params() const { return params_; }
  std::span<const double> w1_row(std::size_t j) const { return {params_.data() + j * h_, h_}; }
  std::span<const double> b1() const { return {params_.data() + d_ * h_, h_}; }
  std::span<const double> w2() const { return {params_.data() + d_ * h_ + h_, h_}; }
  double b2() const { return params_.back(); }

  // Output logit; `mask` scales hidden activations (dropout) when given.
  double logit(std::span<const double> x, std::span<const double> mask = {}) const;
  // Evaluation mode: no mask, no rescaling.
  double forward(std::span<const double> x) const { return sigmoid(logit(x)); }
  // Training-mode forward with dropout probability p in [0, 1].
  double forward(std::span<const double> x, double dropout_p, Rng& rng) const;

  // Squared norm of the weights (biases excluded).
  double weight_norm_sq() const;
  std::size_t weight_count() const { return d_ * h_ + h_; }
  // The l2 regularizer: mean squared weight, so that zeta means the same
  // thing whatever the input dimension.
  double weight_penalty() const;

  friend bool operator==(const Mlp&, const Mlp&) = default;

 private:
  std::size_t d_;
  std::size_t h_;
  std::vector<double> params_;
};

// Inverted-dropout mask: entries are 0 or 1/(1-p); all zeros at p = 1.
std::vector<double> dropout_mask(std::size_t hidden, double p, Rng& rng);

struct Regularization {
  Variant variant = Variant::none;
  double zeta = 0.0;
};

struct Gradient {
  std::vector<double> g0;  // cross-entropy (+ zeta * R for l2)
  std::vector<double> g1;  // R1 penalty
  std::vector<double> g;   // g0 + beta * g1
  double loss = 0.0;       // unregularized, mask-free cross-entropy of the batch
};

// Gradient of the training objective on one batch. Dropout masks (when the
// variant is dropout) are drawn from `rng`, P rows first, in the same order as
// objective() draws them.
Gradient backward(const Mlp& net, const Dataset& batch_p, const Dataset& batch_q,
                  const Regularization& reg, double beta, Rng& rng, R1Target r1 = R1Target::output);

// Value of the objective whose gradient backward() returns. Computes the input
// gradients directly, so it serves as an independent check.
double objective(const Mlp& net, const Dataset& batch_p, const Dataset& batch_q,
                 const Regularization& reg, double beta, Rng& rng, R1Target r1 = R1Target::output);

// mean_{x in P} ||d f(x)/dx||^2 (or of the logit) computed explicitly.
double r1_penalty(const Mlp& net, const Dataset& batch_p, R1Target r1 = R1Target::output);

double regularization_strength(Variant variant, double l_acc, const NnConfig& cfg);

struct TraceRow {
  std::size_t step = 0;
  double batch_loss = 0.0;
  double l_acc = 0.0;
  double zeta = 0.0;
};

struct TrainOutcome {
  std::size_t steps = 0;
  bool converged = false;
};

// Stateful discriminator. Keeps its network, optimizer moments and L_acc so
// that it can be warm-started across calls.
class Discriminator {
 public:
  Discriminator(std::size_t input_dim, Variant variant, NnConfig cfg, Rng& init_rng);

  // Runs until convergence (or cfg.max_steps) when `steps` is empty,
  // otherwise exactly `steps` updates.
  TrainOutcome train(const Dataset& xp, const Dataset& xq, Rng& rng,
                     std::optional<std::size_t> steps = {});

  double score(std::span<const double> x) const { return net_.forward(x); }
  double loss(const Dataset& xp, const Dataset& xq) const;

  const Mlp& net() const { return net_; }
  Variant variant() const { return variant_; }
  const NnConfig& config() const { return cfg_; }
  double l_acc() const { return l_acc_; }
  double zeta() const { return regularization_strength(variant_, l_acc_, cfg_); }
  double alpha() const;
  const std::vector<TraceRow>& trace() const { return trace_; }

 private:
  Mlp net_;
  Variant variant_;
  NnConfig cfg_;
  Adam adam_;
  double l_acc_ = kLn2;
  std::size_t step_ = 0;
  std::vector<TraceRow> trace_;
};

struct NnEstimate {
  DivergenceEstimate estimate;
  std::vector<TraceRow> trace;
  Mlp net;
};

// Trains a fresh discriminator on the training halves and reports
// ln 2 - L on the validation halves with the mask-free network.
NnEstimate ad_nn(const SplitSample& split, Variant variant, const NnConfig& cfg, Rng& rng);

Trainer trainer(Variant variant, NnConfig cfg);
// Regularized family: D_alpha trains at a fixed strength (dropout p = 1 - alpha,
// l2 zeta = -log(alpha)).
PseudoDivergenceFamily regularized_family(Variant variant, NnConfig cfg);

void write_trace_csv(std::ostream& os, std::span<const TraceRow> rows);

std::string to_string(Variant v);
Variant parse_variant(const std::string& name);
std::string to_string(R1Target t);
R1Target parse_r1_target(const std::string& name);

}  // namespace adiv::nn
