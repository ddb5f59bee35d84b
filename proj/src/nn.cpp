#include "adiv/nn.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <stdexcept>
#include <string>

#include "adiv/csv.hpp"
#include "adiv/kernels.hpp"

namespace adiv::nn {

void NnConfig::validate() const {
  if (hidden == 0) throw std::invalid_argument("nn: hidden must be >= 1");
  if (!(ema_coeff >= 0.0 && ema_coeff < 1.0)) throw std::invalid_argument("nn: ema_coeff must lie in [0, 1)");
  if (r1_coeff < 0.0) throw std::invalid_argument("nn: r1_coeff must be >= 0");
  if (!(lr > 0.0)) throw std::invalid_argument("nn: lr must be > 0");
  if (batch == 0) throw std::invalid_argument("nn: batch must be >= 1");
  if (max_steps == 0) throw std::invalid_argument("nn: max_steps must be >= 1");
  if (!(zeta_max > 0.0)) throw std::invalid_argument("nn: zeta_max must be > 0");
}

// --- network -----------------------------------------------------------------

Mlp::Mlp(std::size_t input_dim, std::size_t hidden, Rng& rng)
    : d_(input_dim), h_(hidden), params_(input_dim * hidden + 2 * hidden + 1, 0.0) {
  const double a1 = std::sqrt(6.0 / static_cast<double>(d_ + h_));
  const double a2 = std::sqrt(6.0 / static_cast<double>(h_ + 1));
  for (std::size_t i = 0; i < d_ * h_; ++i) params_[i] = rng.uniform(-a1, a1);
  for (std::size_t k = 0; k < h_; ++k) params_[d_ * h_ + h_ + k] = rng.uniform(-a2, a2);
}

Mlp::Mlp(std::size_t input_dim, std::size_t hidden, std::vector<double> params)
    : d_(input_dim), h_(hidden), params_(std::move(params)) {
  if (params_.size() != d_ * h_ + 2 * h_ + 1) throw std::invalid_argument("Mlp: parameter count mismatch");
}

namespace {

// Indices of the nonzero entries of x. Detector maps are mostly empty.
void nonzeros(std::span<const double> x, std::vector<std::size_t>& idx) {
  idx.clear();
  for (std::size_t j = 0; j < x.size(); ++j) {
    if (x[j] != 0.0) idx.push_back(j);
  }
}

// Hidden pre-activations z = b1 + sum_j x_j W1[j, :] over the nonzero inputs.
void pre_activation(const Mlp& net, std::span<const double> x, std::span<const std::size_t> nz,
                    std::span<double> z) {
  const auto b1 = net.b1();
  std::copy(b1.begin(), b1.end(), z.begin());
  for (std::size_t j : nz) kernels::axpy(x[j], net.w1_row(j), z);
}

void pre_activation(const Mlp& net, std::span<const double> x, std::span<double> z) {
  std::vector<std::size_t> nz;
  nonzeros(x, nz);
  pre_activation(net, x, nz, z);
}

double output_logit(const Mlp& net, std::span<const double> z, std::span<const double> mask,
                    std::span<double> act) {
  const std::size_t h = net.hidden();
  for (std::size_t k = 0; k < h; ++k) {
    const double r = z[k] > 0.0 ? z[k] : 0.0;
    act[k] = mask.empty() ? r : r * mask[k];
  }
  return kernels::dot(net.w2(), act) + net.b2();
}

}  // namespace

double Mlp::logit(std::span<const double> x, std::span<const double> mask) const {
  std::vector<double> z(h_);
  std::vector<double> act(h_);
  pre_activation(*this, x, z);
  return output_logit(*this, z, mask, act);
}

std::vector<double> dropout_mask(std::size_t hidden, double p, Rng& rng) {
  if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("dropout probability must lie in [0, 1]");
  if (p <= 0.0) return std::vector<double>(hidden, 1.0);
  if (p >= 1.0) return std::vector<double>(hidden, 0.0);
  const double keep = 1.0 / (1.0 - p);
  std::vector<double> mask(hidden);
  for (double& m : mask) m = rng.uniform() < p ? 0.0 : keep;
  return mask;
}

double Mlp::forward(std::span<const double> x, double dropout_p, Rng& rng) const {
  const std::vector<double> mask = dropout_mask(h_, dropout_p, rng);
  return sigmoid(logit(x, mask));
}

double Mlp::weight_penalty() const { return weight_norm_sq() / static_cast<double>(weight_count()); }

double Mlp::weight_norm_sq() const {
  return kernels::sum_sq({params_.data(), d_ * h_}) + kernels::sum_sq(w2());
}

// --- gradients ---------------------------------------------------------------

namespace {

struct Offsets {
  std::size_t b1;
  std::size_t w2;
  std::size_t b2;
};

Offsets offsets(const Mlp& net) {
  const std::size_t dh = net.input_dim() * net.hidden();
  return {dh, dh + net.hidden(), dh + 2 * net.hidden()};
}

// Adds d(objective)/d(logit) = dout backpropagated through one sample.
void backprop_logit(const Mlp& net, std::span<const double> x, std::span<const std::size_t> nz,
                    std::span<const double> z, std::span<const double> act,
                    std::span<const double> mask, double dout, std::span<double> grad,
                    std::span<double> dz) {
  const Offsets o = offsets(net);
  const std::size_t h = net.hidden();
  const auto w2 = net.w2();
  kernels::axpy(dout, act, grad.subspan(o.w2, h));
  grad[o.b2] += dout;
  for (std::size_t k = 0; k < h; ++k) {
    const double m = mask.empty() ? 1.0 : mask[k];
    dz[k] = z[k] > 0.0 ? dout * w2[k] * m : 0.0;
  }
  kernels::axpy(1.0, dz, grad.subspan(o.b1, h));
  for (std::size_t j : nz) kernels::axpy(x[j], dz, grad.subspan(j * h, h));
}

// Gram matrix G = W1^T W1 (hidden x hidden, row-major).
std::vector<double> gram(const Mlp& net) {
  const std::size_t h = net.hidden();
  std::vector<double> g(h * h);
  kernels::active().gram(net.params().data(), net.input_dim(), h, g.data());
  return g;
}

// Row-major (rows x hidden) dropout masks, drawn in the order dropout_mask()
// would draw them. Empty unless the variant is dropout.
std::vector<double> draw_masks(const Mlp& net, std::size_t rows, const Regularization& reg, Rng& rng) {
  std::vector<double> masks;
  if (reg.variant != Variant::dropout) return masks;
  const std::size_t h = net.hidden();
  const double p = reg.zeta;
  if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("dropout probability must lie in [0, 1]");
  if (p <= 0.0 || p >= 1.0) return std::vector<double>(rows * h, p <= 0.0 ? 1.0 : 0.0);
  const double keep = 1.0 / (1.0 - p);
  masks.resize(rows * h);
  for (double& m : masks) m = rng.uniform() < p ? 0.0 : keep;
  return masks;
}

// A sample with the nonzero pattern of every row, plus the rows in use.
struct RowSet {
  const Dataset* data;
  const std::vector<std::vector<std::size_t>>* nz;
  std::span<const std::size_t> rows;

  std::size_t size() const { return rows.size(); }
  std::span<const double> x(std::size_t i) const { return data->row(rows[i]); }
  std::span<const std::size_t> pattern(std::size_t i) const { return (*nz)[rows[i]]; }
};

std::vector<std::vector<std::size_t>> patterns(const Dataset& xs) {
  std::vector<std::vector<std::size_t>> out(xs.rows());
  for (std::size_t i = 0; i < xs.rows(); ++i) nonzeros(xs.row(i), out[i]);
  return out;
}

std::vector<std::size_t> all_rows(std::size_t n) {
  std::vector<std::size_t> idx(n);
  for (std::size_t i = 0; i < n; ++i) idx[i] = i;
  return idx;
}

Gradient backward_rows(const Mlp& net, const RowSet& batch_p, const RowSet& batch_q,
                       const Regularization& reg, double beta, Rng& rng, R1Target r1) {
  const std::size_t h = net.hidden();
  const std::size_t np = batch_p.size();
  const std::size_t nq = batch_q.size();
  const Offsets off = offsets(net);
  const auto masks = draw_masks(net, np + nq, reg, rng);

  Gradient out;
  out.g0.assign(net.param_count(), 0.0);
  out.g1.assign(net.param_count(), 0.0);
  std::vector<double> z(h);
  std::vector<double> act(h);
  std::vector<double> dz(h);
  std::vector<double> plain(h);
  double loss_p = 0.0;
  double loss_q = 0.0;
  // Pre-activations of the P rows are reused by R1.
  std::vector<double> z_p(np * h);

  // Cross-entropy part. Masked forward for dropout; the mask-free logit feeds
  // the reported batch loss.
  for (std::size_t i = 0; i < np + nq; ++i) {
    const bool is_p = i < np;
    const auto x = is_p ? batch_p.x(i) : batch_q.x(i - np);
    const auto nz = is_p ? batch_p.pattern(i) : batch_q.pattern(i - np);
    const std::span<const double> mask =
        masks.empty() ? std::span<const double>{} : std::span<const double>(masks.data() + i * h, h);
    pre_activation(net, x, nz, z);
    if (is_p) std::copy(z.begin(), z.end(), z_p.begin() + static_cast<std::ptrdiff_t>(i * h));
    const double o = output_logit(net, z, mask, act);
    const double f = sigmoid(o);
    const double dout = is_p ? -0.5 * (1.0 - f) / static_cast<double>(np) : 0.5 * f / static_cast<double>(nq);
    backprop_logit(net, x, nz, z, act, mask, dout, out.g0, dz);
    const double plain_o = mask.empty() ? o : output_logit(net, z, {}, plain);
    if (is_p) {
      loss_p += softplus(-plain_o);
    } else {
      loss_q += softplus(plain_o);
    }
  }
  out.loss = 0.5 * loss_p / static_cast<double>(np) + 0.5 * loss_q / static_cast<double>(nq);

  if (reg.variant == Variant::l2 && reg.zeta != 0.0) {
    const auto params = net.params();
    const double scale = 2.0 * reg.zeta / static_cast<double>(net.weight_count());
    for (std::size_t i = 0; i < net.input_dim() * h; ++i) out.g0[i] += scale * params[i];
    for (std::size_t k = 0; k < h; ++k) out.g0[off.w2 + k] += scale * params[off.w2 + k];
  }

  // R1: ||d t/dx||^2 = k^2 ||W1 u||^2 = k^2 u^T G u with u = w2 * relu'(z) and
  // G = W1^T W1, where t is the output probability (k = f(1-f)) or the logit
  // (k = 1). Narrow inputs work with v = W1 u directly; wide ones go through G.
  if (beta != 0.0) {
    const std::size_t d = net.input_dim();
    const bool on_output = r1 == R1Target::output;
    const bool direct = d < h;
    const std::vector<double> g_mat = direct ? std::vector<double>{} : gram(net);
    std::vector<double> a_mat(direct ? 0 : h * h, 0.0);
    std::vector<double> u(h);
    std::vector<double> gu(h);
    std::vector<double> v(direct ? d : 0);
    const auto params = net.params();
    const auto w2 = net.w2();
    const double c = 1.0 / static_cast<double>(np);
    for (std::size_t i = 0; i < np; ++i) {
      const auto x = batch_p.x(i);
      std::copy_n(z_p.begin() + static_cast<std::ptrdiff_t>(i * h), h, z.begin());
      for (std::size_t k = 0; k < h; ++k) u[k] = z[k] > 0.0 ? w2[k] : 0.0;
      double q = 0.0;
      if (direct) {
        std::fill(gu.begin(), gu.end(), 0.0);
        for (std::size_t j = 0; j < d; ++j) {
          v[j] = kernels::dot(net.w1_row(j), u);
          q += v[j] * v[j];
          kernels::axpy(v[j], net.w1_row(j), gu);
        }
      } else {
        kernels::active().gemv(g_mat.data(), u.data(), gu.data(), h, h);
        q = kernels::dot(u, gu);
      }
      double k2 = 1.0;
      if (on_output) {
        const double f = sigmoid(output_logit(net, z, {}, act));
        const double s = f * (1.0 - f);
        k2 = s * s;
        // Through the logit: d(s^2)/do = 2 s s', s' = s (1 - 2f).
        backprop_logit(net, x, batch_p.pattern(i), z, act, {}, c * 2.0 * s * s * (1.0 - 2.0 * f) * q, out.g1, dz);
      }
      // Through u (w2 on active units).
      for (std::size_t k = 0; k < h; ++k) {
        if (z[k] > 0.0) out.g1[off.w2 + k] += c * k2 * 2.0 * gu[k];
      }
      // Through W1: 2 v u^T per row, or 2 W1 A with A = sum of u u^T.
      if (direct) {
        for (std::size_t j = 0; j < d; ++j) {
          kernels::axpy(c * k2 * 2.0 * v[j], u, std::span<double>(out.g1).subspan(j * h, h));
        }
      } else {
        kernels::active().syr(c * k2, u.data(), a_mat.data(), h);
      }
    }
    if (!direct) kernels::active().gemm_acc(2.0, params.data(), a_mat.data(), out.g1.data(), d, h);
  }

  out.g = out.g0;
  if (beta != 0.0) kernels::axpy(beta, out.g1, out.g);
  return out;
}

}  // namespace

Gradient backward(const Mlp& net, const Dataset& batch_p, const Dataset& batch_q,
                  const Regularization& reg, double beta, Rng& rng, R1Target r1) {
  check_pair(batch_p, batch_q);
  if (batch_p.cols() != net.input_dim()) throw std::invalid_argument("backward: input dimension mismatch");
  const auto nz_p = patterns(batch_p);
  const auto nz_q = patterns(batch_q);
  const auto idx_p = all_rows(batch_p.rows());
  const auto idx_q = all_rows(batch_q.rows());
  return backward_rows(net, {&batch_p, &nz_p, idx_p}, {&batch_q, &nz_q, idx_q}, reg, beta, rng, r1);
}

double r1_penalty(const Mlp& net, const Dataset& batch_p, R1Target r1) {
  const std::size_t h = net.hidden();
  std::vector<double> z(h);
  std::vector<double> act(h);
  std::vector<double> u(h);
  const auto w2 = net.w2();
  double total = 0.0;
  for (std::size_t i = 0; i < batch_p.rows(); ++i) {
    pre_activation(net, batch_p.row(i), z);
    double k = 1.0;
    if (r1 == R1Target::output) {
      const double f = sigmoid(output_logit(net, z, {}, act));
      k = f * (1.0 - f);
    }
    for (std::size_t j = 0; j < h; ++j) u[j] = z[j] > 0.0 ? w2[j] : 0.0;
    double norm = 0.0;
    for (std::size_t j = 0; j < net.input_dim(); ++j) {
      const double v = k * kernels::dot(net.w1_row(j), u);
      norm += v * v;
    }
    total += norm;
  }
  return total / static_cast<double>(batch_p.rows());
}

double objective(const Mlp& net, const Dataset& batch_p, const Dataset& batch_q,
                 const Regularization& reg, double beta, Rng& rng, R1Target r1) {
  check_pair(batch_p, batch_q);
  const std::size_t np = batch_p.rows();
  const auto masks = draw_masks(net, np + batch_q.rows(), reg, rng);
  std::vector<double> lp(np);
  std::vector<double> lq(batch_q.rows());
  for (std::size_t i = 0; i < np; ++i) {
    lp[i] = net.logit(batch_p.row(i), masks.empty() ? std::span<const double>{}
                                                   : std::span<const double>(masks.data() + i * net.hidden(), net.hidden()));
  }
  for (std::size_t i = 0; i < batch_q.rows(); ++i) {
    lq[i] = net.logit(batch_q.row(i), masks.empty() ? std::span<const double>{}
                                                   : std::span<const double>(masks.data() + (np + i) * net.hidden(), net.hidden()));
  }
  double value = logit_cross_entropy(lp, lq);
  if (reg.variant == Variant::l2) value += reg.zeta * net.weight_penalty();
  if (beta != 0.0) value += beta * r1_penalty(net, batch_p, r1);
  return value;
}

double regularization_strength(Variant variant, double l_acc, const NnConfig& cfg) {
  if (cfg.fixed_zeta) return *cfg.fixed_zeta;
  const double a = l_acc / kLn2;
  switch (variant) {
    case Variant::none:
      return 0.0;
    case Variant::dropout:
      return std::clamp(1.0 - a, 0.0, 1.0);
    case Variant::l2:
      if (!(a > 0.0)) return cfg.zeta_max;
      return std::clamp(-std::log(a), 0.0, cfg.zeta_max);
  }
  return 0.0;
}

// --- training ----------------------------------------------------------------

Discriminator::Discriminator(std::size_t input_dim, Variant variant, NnConfig cfg, Rng& init_rng)
    : net_(input_dim, cfg.hidden, init_rng),
      variant_(variant),
      cfg_(cfg),
      adam_(net_.param_count(), Adam::Params{cfg.lr, 0.9, 0.999, 1e-8}) {
  cfg_.validate();
}

double Discriminator::alpha() const {
  if (variant_ == Variant::none) return 1.0;
  return std::clamp(l_acc_ / kLn2, 0.0, 1.0);
}

namespace {

// Batch rows drawn with replacement.
void gather(std::size_t population, std::vector<std::size_t>& idx, Rng& rng) {
  for (std::size_t& i : idx) i = rng.below(population);
}

}  // namespace

TrainOutcome Discriminator::train(const Dataset& xp, const Dataset& xq, Rng& rng,
                                  std::optional<std::size_t> steps) {
  check_pair(xp, xq);
  if (xp.cols() != net_.input_dim()) throw std::invalid_argument("Discriminator: input dimension mismatch");
  const std::size_t limit = steps.value_or(cfg_.max_steps);
  TrainOutcome out;
  std::size_t calm = 0;
  const auto nz_p = patterns(xp);
  const auto nz_q = patterns(xq);
  std::vector<std::size_t> idx_p(cfg_.batch);
  std::vector<std::size_t> idx_q(cfg_.batch);
  for (std::size_t t = 0; t < limit; ++t) {
    gather(xp.rows(), idx_p, rng);
    gather(xq.rows(), idx_q, rng);
    const double zeta = regularization_strength(variant_, l_acc_, cfg_);
    const Regularization reg{variant_, variant_ == Variant::none ? 0.0 : zeta};
    const Gradient grad = backward_rows(net_, {&xp, &nz_p, idx_p}, {&xq, &nz_q, idx_q}, reg,
                                        cfg_.r1_coeff, rng, cfg_.r1_target);
    if (!std::isfinite(grad.loss)) {
      throw std::runtime_error("discriminator training diverged at step " + std::to_string(step_));
    }
    const double prev = l_acc_;
    l_acc_ = cfg_.ema_coeff * l_acc_ + (1.0 - cfg_.ema_coeff) * grad.loss;
    adam_.step(net_.params(), grad.g);
    ++step_;
    ++out.steps;
    if (cfg_.record_trace) trace_.push_back({step_, grad.loss, l_acc_, zeta});
    if (!steps) {
      calm = std::abs(l_acc_ - prev) < cfg_.conv_tol ? calm + 1 : 0;
      if (calm >= cfg_.patience) {
        out.converged = true;
        break;
      }
    }
  }
  return out;
}

double Discriminator::loss(const Dataset& xp, const Dataset& xq) const {
  return cross_entropy([this](std::span<const double> x) { return net_.forward(x); }, xp, xq);
}

NnEstimate ad_nn(const SplitSample& split, Variant variant, const NnConfig& cfg, Rng& rng) {
  check_pair(split.p_train, split.q_train);
  check_pair(split.p_valid, split.q_valid);
  Rng init_rng = rng.fork();
  Rng train_rng = rng.fork();
  Discriminator disc(split.p_train.cols(), variant, cfg, init_rng);
  disc.train(split.p_train, split.q_train, train_rng);
  NnEstimate out{{}, disc.trace(), disc.net()};
  out.estimate.train_loss = disc.loss(split.p_train, split.q_train);
  out.estimate.valid_loss = disc.loss(split.p_valid, split.q_valid);
  out.estimate.value = kLn2 - out.estimate.valid_loss;
  out.estimate.alpha_used = cfg.fixed_zeta ? 1.0 : disc.alpha();
  out.estimate.samples_used = split.total_rows();
  return out;
}

Trainer trainer(Variant variant, NnConfig cfg) {
  cfg.validate();
  return [variant, cfg](const SplitSample& split, Rng& rng) { return ad_nn(split, variant, cfg, rng).estimate; };
}

namespace {

// Strength at capacity alpha: dropout p = 1 - alpha, l2 = -log(alpha).
double strength_at(Variant variant, double alpha, const NnConfig& cfg) {
  switch (variant) {
    case Variant::none:
      return 0.0;
    case Variant::dropout:
      return std::clamp(1.0 - alpha, 0.0, 1.0);
    case Variant::l2:
      return alpha > 0.0 ? std::clamp(-std::log(alpha), 0.0, cfg.zeta_max) : cfg.zeta_max;
  }
  return 0.0;
}

}  // namespace

PseudoDivergenceFamily regularized_family(Variant variant, NnConfig cfg) {
  if (variant == Variant::none) throw std::invalid_argument("regularized_family: needs dropout or l2");
  PseudoDivergenceFamily family;
  family.kind = FamilyKind::regularized;
  family.name = "nn-" + to_string(variant);
  family.at = [variant, cfg](double alpha) -> Trainer {
    NnConfig c = cfg;
    c.fixed_zeta = strength_at(variant, alpha, cfg);
    return [variant, c, alpha](const SplitSample& split, Rng& rng) {
      DivergenceEstimate est = ad_nn(split, variant, c, rng).estimate;
      est.alpha_used = alpha;
      return est;
    };
  };
  return family;
}

void write_trace_csv(std::ostream& os, std::span<const TraceRow> rows) {
  CsvWriter csv(os);
  csv.header({"step", "batch_loss", "l_acc", "zeta"});
  for (const TraceRow& r : rows) csv.row(r.step, r.batch_loss, r.l_acc, r.zeta);
}

std::string to_string(Variant v) {
  switch (v) {
    case Variant::none:
      return "none";
    case Variant::dropout:
      return "dropout";
    case Variant::l2:
      return "l2";
  }
  return "?";
}

Variant parse_variant(const std::string& name) {
  if (name == "none") return Variant::none;
  if (name == "dropout") return Variant::dropout;
  if (name == "l2") return Variant::l2;
  throw std::invalid_argument("unknown nn variant: " + name);
}

std::string to_string(R1Target t) { return t == R1Target::logit ? "logit" : "output"; }

R1Target parse_r1_target(const std::string& name) {
  if (name == "output") return R1Target::output;
  if (name == "logit") return R1Target::logit;
  throw std::invalid_argument("unknown R1 target: " + name);
}

}  // namespace adiv::nn
