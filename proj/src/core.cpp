#include "adiv/core.hpp"

#include <algorithm>
#include <string>

#include "adiv/kernels.hpp"

namespace adiv {

Dataset::Dataset(std::size_t rows, std::size_t cols)
    : rows_(rows), cols_(cols), values_(rows * cols, 0.0) {}

Dataset::Dataset(std::size_t rows, std::size_t cols, std::vector<double> values)
    : rows_(rows), cols_(cols), values_(std::move(values)) {
  if (values_.size() != rows * cols) throw std::invalid_argument("Dataset: shape mismatch");
}

void Dataset::append(const Dataset& other) {
  if (rows_ == 0) {
    *this = other;
    return;
  }
  if (other.cols_ != cols_) throw std::invalid_argument("Dataset::append: dimension mismatch");
  values_.insert(values_.end(), other.values_.begin(), other.values_.end());
  rows_ += other.rows_;
}

Dataset Dataset::slice(std::size_t begin, std::size_t end) const {
  if (begin > end || end > rows_) throw std::out_of_range("Dataset::slice");
  return Dataset(end - begin, cols_,
                 std::vector<double>(values_.begin() + static_cast<std::ptrdiff_t>(begin * cols_),
                                     values_.begin() + static_cast<std::ptrdiff_t>(end * cols_)));
}

void Dataset::validate() const {
  if (rows_ == 0) throw std::invalid_argument("empty sample");
  if (!std::all_of(values_.begin(), values_.end(), [](double v) { return std::isfinite(v); })) {
    throw std::invalid_argument("non-finite sample entry");
  }
}

void check_pair(const Dataset& xp, const Dataset& xq) {
  if (xp.empty() || xq.empty()) throw std::invalid_argument("empty sample");
  if (xp.cols() != xq.cols()) {
    throw std::invalid_argument("feature dimension mismatch: " + std::to_string(xp.cols()) +
                                " vs " + std::to_string(xq.cols()));
  }
}

double clip_score(double s) { return std::clamp(s, kScoreClip, 1.0 - kScoreClip); }

namespace {

// Running mean; exact for constant sequences.
template <class F>
double mean_of(std::span<const double> xs, F term) {
  double m = 0.0;
  std::size_t k = 0;
  for (double x : xs) {
    ++k;
    m += (term(x) - m) / static_cast<double>(k);
  }
  return m;
}

}  // namespace

double cross_entropy(std::span<const double> scores_p, std::span<const double> scores_q) {
  if (scores_p.empty() || scores_q.empty()) throw std::invalid_argument("empty sample");
  const double lp = mean_of(scores_p, [](double s) { return -std::log(clip_score(s)); });
  const double lq = mean_of(scores_q, [](double s) { return -std::log(1.0 - clip_score(s)); });
  return 0.5 * lp + 0.5 * lq;
}

double cross_entropy(const Scorer& f, const Dataset& xp, const Dataset& xq) {
  if (xp.empty() || xq.empty()) throw std::invalid_argument("empty sample");
  std::vector<double> sp(xp.rows());
  std::vector<double> sq(xq.rows());
  for (std::size_t i = 0; i < xp.rows(); ++i) sp[i] = f(xp.row(i));
  for (std::size_t i = 0; i < xq.rows(); ++i) sq[i] = f(xq.row(i));
  return cross_entropy(sp, sq);
}

double logit_cross_entropy(std::span<const double> logits_p, std::span<const double> logits_q) {
  if (logits_p.empty() || logits_q.empty()) throw std::invalid_argument("empty sample");
  return 0.5 * mean_of(logits_p, [](double z) { return softplus(-z); }) +
         0.5 * mean_of(logits_q, [](double z) { return softplus(z); });
}

Adam::Adam(std::size_t n, Params params) : params_(params), m_(n, 0.0), v_(n, 0.0) {}

void Adam::step(std::span<double> params, std::span<const double> grad) {
  if (params.size() != m_.size() || grad.size() != m_.size()) {
    throw std::invalid_argument("Adam::step: size mismatch");
  }
  ++t_;
  const kernels::AdamStep s{params_.lr,
                            params_.beta1,
                            params_.beta2,
                            params_.eps,
                            1.0 - std::pow(params_.beta1, static_cast<double>(t_)),
                            1.0 - std::pow(params_.beta2, static_cast<double>(t_))};
  kernels::active().adam(s, grad.data(), params.data(), m_.data(), v_.data(), m_.size());
}

}  // namespace adiv
