#include "adiv/gp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace adiv::opt {

double matern32(std::span<const double> x, std::span<const double> y, double ell, double sigma2) {
  if (!(ell > 0.0)) throw std::invalid_argument("matern32: length-scale must be > 0");
  double r2 = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    const double d = x[k] - y[k];
    r2 += d * d;
  }
  const double t = std::sqrt(3.0) * std::sqrt(r2) / ell;
  return sigma2 * (1.0 + t) * std::exp(-t);
}

bool cholesky(std::vector<double>& a, std::size_t n) {
  for (std::size_t j = 0; j < n; ++j) {
    double d = a[j * n + j];
    for (std::size_t k = 0; k < j; ++k) d -= a[j * n + k] * a[j * n + k];
    if (!(d > 0.0)) return false;
    const double ljj = std::sqrt(d);
    a[j * n + j] = ljj;
    for (std::size_t i = j + 1; i < n; ++i) {
      double s = a[i * n + j];
      for (std::size_t k = 0; k < j; ++k) s -= a[i * n + k] * a[j * n + k];
      a[i * n + j] = s / ljj;
    }
    for (std::size_t i = 0; i < j; ++i) a[i * n + j] = 0.0;
  }
  return true;
}

namespace {

void forward_solve(const std::vector<double>& l, std::size_t n, std::vector<double>& b) {
  for (std::size_t i = 0; i < n; ++i) {
    double s = b[i];
    for (std::size_t k = 0; k < i; ++k) s -= l[i * n + k] * b[k];
    b[i] = s / l[i * n + i];
  }
}

void backward_solve(const std::vector<double>& l, std::size_t n, std::vector<double>& b) {
  for (std::size_t i = n; i-- > 0;) {
    double s = b[i];
    for (std::size_t k = i + 1; k < n; ++k) s -= l[k * n + i] * b[k];
    b[i] = s / l[i * n + i];
  }
}

double population_variance(const std::vector<double>& z) {
  double mean = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) mean += (z[i] - mean) / static_cast<double>(i + 1);
  double var = 0.0;
  for (double v : z) var += (v - mean) * (v - mean);
  return var / static_cast<double>(z.size());
}

}  // namespace

GpModel::GpModel(std::vector<std::vector<double>> points, std::vector<double> values, double ell)
    : x_(std::move(points)), y_(std::move(values)), ell_(ell) {
  const std::size_t n = x_.size();
  if (n == 0 || n != y_.size()) throw std::invalid_argument("GpModel: need matching, non-empty points and values");
  for (double v : y_) {
    if (!std::isfinite(v)) throw std::invalid_argument("GpModel: non-finite target");
  }
  for (const auto& p : x_) {
    if (p.size() != x_.front().size()) throw std::invalid_argument("GpModel: inconsistent point dimensions");
  }
  for (std::size_t i = 0; i < n; ++i) y_mean_ += (y_[i] - y_mean_) / static_cast<double>(i + 1);
  std::vector<double> z(n);
  for (std::size_t i = 0; i < n; ++i) z[i] = y_[i] - y_mean_;
  const double var = population_variance(z);
  y_scale_ = var > 0.0 ? std::sqrt(var) : 1.0;
  for (double& v : z) v /= y_scale_;
  sigma2_ = population_variance(z);

  std::vector<double> k(n * n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j <= i; ++j) {
      k[i * n + j] = k[j * n + i] = matern32(x_[i], x_[j], ell_, sigma2_);
    }
  }
  for (noise_ = kBaseNoise;; noise_ *= 10.0) {
    if (noise_ > 1.0) throw std::runtime_error("GpModel: kernel matrix not positive definite at max jitter");
    chol_ = k;
    for (std::size_t i = 0; i < n; ++i) chol_[i * n + i] += noise_;
    if (cholesky(chol_, n)) break;
  }
  weights_ = z;
  forward_solve(chol_, n, weights_);
  double quad = 0.0;
  for (double w : weights_) quad += w * w;
  backward_solve(chol_, n, weights_);
  double logdet = 0.0;
  for (std::size_t i = 0; i < n; ++i) logdet += std::log(chol_[i * n + i]);
  lml_ = -0.5 * quad - logdet - 0.5 * static_cast<double>(n) * std::log(2.0 * std::numbers::pi);
}

Posterior GpModel::predict(std::span<const double> x) const {
  const std::size_t n = x_.size();
  std::vector<double> ks(n);
  for (std::size_t i = 0; i < n; ++i) ks[i] = matern32(x, x_[i], ell_, sigma2_);
  double mean = 0.0;
  for (std::size_t i = 0; i < n; ++i) mean += ks[i] * weights_[i];
  forward_solve(chol_, n, ks);
  double explained = 0.0;
  for (double v : ks) explained += v * v;
  const double var = std::max(0.0, sigma2_ - explained);
  return {y_mean_ + y_scale_ * mean, var * y_scale_ * y_scale_};
}

GpModel gp_fit(std::vector<std::vector<double>> points, std::vector<double> values) {
  if (points.size() < 2) throw std::invalid_argument("gp_fit: need at least 2 points");
  constexpr int kGrid = 61;
  const double lo = std::log10(kMinLengthScale);
  const double hi = std::log10(kMaxLengthScale);
  const double step = (hi - lo) / (kGrid - 1);
  auto lml_at = [&](double log_ell) {
    return GpModel(points, values, std::pow(10.0, log_ell)).log_marginal_likelihood();
  };
  int best = 0;
  double best_lml = -std::numeric_limits<double>::infinity();
  for (int i = 0; i < kGrid; ++i) {
    const double v = lml_at(lo + step * i);
    if (v > best_lml) {
      best_lml = v;
      best = i;
    }
  }
  // Golden-section maximization on [best - 1, best + 1] in log10 units.
  double a = lo + step * std::max(0, best - 1);
  double b = lo + step * std::min(kGrid - 1, best + 1);
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double c = b - inv_phi * (b - a);
  double d = a + inv_phi * (b - a);
  double fc = lml_at(c);
  double fd = lml_at(d);
  for (int it = 0; it < 30; ++it) {
    if (fc > fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - inv_phi * (b - a);
      fc = lml_at(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + inv_phi * (b - a);
      fd = lml_at(d);
    }
  }
  const double refined = fc > fd ? c : d;
  const double refined_lml = std::max(fc, fd);
  const double log_ell = refined_lml > best_lml ? refined : lo + step * best;
  return GpModel(std::move(points), std::move(values), std::pow(10.0, log_ell));
}

double expected_improvement(double mean, double std, double best) {
  if (!(std > 1e-12)) return 0.0;
  const double z = (best - mean) / std;
  const double cdf = 0.5 * std::erfc(-z / std::numbers::sqrt2);
  const double pdf = std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi);
  return std::max(0.0, (best - mean) * cdf + std * pdf);
}

}  // namespace adiv::opt
