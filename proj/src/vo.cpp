#include "adiv/vo.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <stdexcept>
#include <string>

#include "adiv/core.hpp"
#include "adiv/csv.hpp"

namespace adiv::opt {

SearchDistribution::SearchDistribution(std::vector<double> mean, double std)
    : mu(std::move(mean)), log_std(mu.size(), std::log(std)) {
  validate();
}

double SearchDistribution::std_dev(std::size_t k) const { return std::exp(log_std[k]); }

std::vector<double> SearchDistribution::sample(Rng& rng) const {
  std::vector<double> psi(dim());
  for (std::size_t k = 0; k < dim(); ++k) psi[k] = mu[k] + std_dev(k) * rng.normal();
  return psi;
}

void SearchDistribution::validate() const {
  if (mu.empty() || mu.size() != log_std.size()) throw std::invalid_argument("SearchDistribution: dimension mismatch");
  for (std::size_t k = 0; k < dim(); ++k) {
    if (!std::isfinite(mu[k]) || !std::isfinite(log_std[k])) {
      throw std::invalid_argument("SearchDistribution: non-finite parameter");
    }
  }
}

VoGradient vo_gradient(std::span<const double> d_values, const std::vector<std::vector<double>>& psis,
                       const SearchDistribution& dist) {
  const std::size_t k_count = d_values.size();
  if (k_count < 2) throw std::invalid_argument("vo_gradient: need at least 2 samples for the baseline");
  if (psis.size() != k_count) throw std::invalid_argument("vo_gradient: values and samples differ in count");
  double baseline = 0.0;
  for (std::size_t k = 0; k < k_count; ++k) {
    if (!std::isfinite(d_values[k])) throw std::invalid_argument("vo_gradient: non-finite value");
    baseline += (d_values[k] - baseline) / static_cast<double>(k + 1);
  }
  const std::size_t dim = dist.dim();
  VoGradient g{std::vector<double>(dim, 0.0), std::vector<double>(dim, 0.0)};
  for (std::size_t k = 0; k < k_count; ++k) {
    if (psis[k].size() != dim) throw std::invalid_argument("vo_gradient: sample dimension mismatch");
    const double w = d_values[k] - baseline;
    if (w == 0.0) continue;
    for (std::size_t j = 0; j < dim; ++j) {
      const double s = dist.std_dev(j);
      const double t = (psis[k][j] - dist.mu[j]) / s;
      g.mu[j] += w * t / s;
      g.log_std[j] += w * (t * t - 1.0);
    }
  }
  for (std::size_t j = 0; j < dim; ++j) {
    g.mu[j] /= static_cast<double>(k_count);
    g.log_std[j] /= static_cast<double>(k_count);
  }
  return g;
}

void AvoSettings::validate() const {
  if (draws < 2) throw std::invalid_argument("avo: need at least 2 draws per step");
  if (!(lr > 0.0)) throw std::invalid_argument("avo: lr must be > 0");
  if (inner_steps == 0) throw std::invalid_argument("avo: inner_steps must be >= 1");
  if (n_min < draws || n_max < n_min) throw std::invalid_argument("avo: need draws <= n_min <= n_max");
  if (!(gap_tolerance > 0.0)) throw std::invalid_argument("avo: gap tolerance must be > 0");
  if (!(min_std > 0.0)) throw std::invalid_argument("avo: min_std must be > 0");
  nn.validate();
}

AvoResult avo_run(const Task& task, SearchDistribution init, const AvoSettings& settings,
                  BudgetLedger& ledger, Rng& rng) {
  settings.validate();
  init.validate();
  const ParamBox box = task.bounds();
  if (init.dim() != box.dim()) throw std::invalid_argument("avo_run: search distribution dimension mismatch");
  const std::size_t dim = init.dim();
  const std::size_t k_count = settings.draws;

  Rng init_rng = rng.split(0);
  nn::Discriminator disc(task.feature_dim(), settings.variant, settings.nn, init_rng);
  Adam adam(2 * dim, Adam::Params{settings.lr, 0.9, 0.999, 1e-8});
  std::vector<double> phi(2 * dim);
  std::copy(init.mu.begin(), init.mu.end(), phi.begin());
  std::copy(init.log_std.begin(), init.log_std.end(), phi.begin() + static_cast<std::ptrdiff_t>(dim));
  const double min_log_std = std::log(settings.min_std);

  AvoResult out;
  out.final = init;
  std::size_t n = settings.n_min;
  for (std::size_t step = 0; step < settings.max_steps; ++step) {
    SearchDistribution& dist = out.final;
    const std::size_t per = (n + k_count - 1) / k_count;
    const std::size_t rows = per * k_count;
    try {
      ledger.record("avo", 4 * static_cast<std::uint64_t>(rows));
    } catch (const BudgetExhausted&) {
      out.budget_exhausted = true;
      break;
    }
    BudgetLedger scratch;
    Rng step_rng = rng.split(1 + step);
    Rng psi_rng = step_rng.fork();
    Rng data_rng = step_rng.fork();
    Rng train_rng = step_rng.fork();

    std::vector<std::vector<double>> psis(k_count);
    for (auto& psi : psis) psi = dist.sample(psi_rng);

    Rng p_rng = data_rng.fork();
    const Dataset p_train = task.ground_truth(rows, p_rng, scratch);
    const Dataset p_valid = task.ground_truth(rows, p_rng, scratch);
    Dataset q_train(0, task.feature_dim());
    std::vector<Dataset> q_valid;
    q_valid.reserve(k_count);
    for (std::size_t k = 0; k < k_count; ++k) {
      Rng q_rng = data_rng.fork();
      const std::vector<double> at = box.clamp(psis[k]);
      q_train.append(task.sample(at, per, q_rng, scratch));
      q_valid.push_back(task.sample(at, per, q_rng, scratch));
    }

    disc.train(p_train, q_train, train_rng, settings.inner_steps);
    const double train_loss = disc.loss(p_train, q_train);
    auto scores = [&disc](const Dataset& xs) {
      std::vector<double> out(xs.rows());
      for (std::size_t i = 0; i < xs.rows(); ++i) out[i] = disc.score(xs.row(i));
      return out;
    };
    const std::vector<double> sp = scores(p_valid);
    std::vector<double> sq_all;
    std::vector<double> values(k_count);
    for (std::size_t k = 0; k < k_count; ++k) {
      const std::vector<double> sq = scores(q_valid[k]);
      values[k] = kLn2 - cross_entropy(sp, sq);
      sq_all.insert(sq_all.end(), sq.begin(), sq.end());
    }
    const double valid_loss = cross_entropy(sp, sq_all);
    const double gap = std::abs(train_loss - valid_loss);
    const VoGradient g = vo_gradient(values, psis, dist);
    std::vector<double> grad(2 * dim);
    std::copy(g.mu.begin(), g.mu.end(), grad.begin());
    std::copy(g.log_std.begin(), g.log_std.end(), grad.begin() + static_cast<std::ptrdiff_t>(dim));
    adam.step(phi, grad);
    for (std::size_t j = 0; j < dim; ++j) {
      phi[j] = std::clamp(phi[j], box.lo[j], box.hi[j]);
      phi[dim + j] = std::max(phi[dim + j], min_log_std);
      dist.mu[j] = phi[j];
      dist.log_std[j] = phi[dim + j];
    }

    AvoStep row;
    row.step = step;
    row.mu = dist.mu;
    for (std::size_t j = 0; j < dim; ++j) row.std_dev.push_back(dist.std_dev(j));
    row.n = rows;
    row.value = kLn2 - valid_loss;
    row.gap = gap;
    row.zeta = disc.zeta();
    row.cumulative_samples = ledger.total();
    out.trajectory.push_back(std::move(row));

    if (gap > settings.gap_tolerance) {
      n = std::min(2 * n, settings.n_max);
    } else if (gap < settings.gap_tolerance / 4) {
      n = std::max(n / 2, settings.n_min);
    }
  }
  return out;
}

void write_avo_csv(std::ostream& os, std::span<const AvoStep> rows) {
  CsvWriter csv(os);
  const std::size_t dim = rows.empty() ? 0 : rows.front().mu.size();
  std::vector<std::string> names{"step"};
  for (std::size_t j = 0; j < dim; ++j) names.push_back("mu_" + std::to_string(j));
  for (std::size_t j = 0; j < dim; ++j) names.push_back("std_" + std::to_string(j));
  for (const char* c : {"n", "value", "gap", "zeta", "cumulative_samples"}) names.emplace_back(c);
  csv.header(names);
  for (const AvoStep& r : rows) {
    std::vector<std::string> cells{std::to_string(r.step)};
    for (double v : r.mu) cells.push_back(format_double(v));
    for (double v : r.std_dev) cells.push_back(format_double(v));
    cells.push_back(std::to_string(r.n));
    cells.push_back(format_double(r.value));
    cells.push_back(format_double(r.gap));
    cells.push_back(format_double(r.zeta));
    cells.push_back(std::to_string(r.cumulative_samples));
    csv.row(cells);
  }
}

}  // namespace adiv::opt
