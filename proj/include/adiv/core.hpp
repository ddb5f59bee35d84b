#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <numbers>
#include <span>
#include <stdexcept>
#include <vector>

namespace adiv {

inline constexpr double kLn2 = std::numbers::ln2;
// Scores are clipped to [kScoreClip, 1 - kScoreClip] before taking logs.
inline constexpr double kScoreClip = 1e-7;

// Dense n x d matrix of samples from one distribution. Rows are contiguous.
class Dataset {
 public:
  Dataset() = default;
  Dataset(std::size_t rows, std::size_t cols);
  Dataset(std::size_t rows, std::size_t cols, std::vector<double> values);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  bool empty() const { return rows_ == 0; }

  std::span<const double> row(std::size_t i) const { return {values_.data() + i * cols_, cols_}; }
  std::span<double> row(std::size_t i) { return {values_.data() + i * cols_, cols_}; }
  double operator()(std::size_t i, std::size_t j) const { return values_[i * cols_ + j]; }
  double& operator()(std::size_t i, std::size_t j) { return values_[i * cols_ + j]; }

  const std::vector<double>& values() const { return values_; }

  void append(const Dataset& other);
  Dataset slice(std::size_t begin, std::size_t end) const;
  // Throws std::invalid_argument on empty data or non-finite entries.
  void validate() const;

  friend bool operator==(const Dataset&, const Dataset&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> values_;
};

// Throws unless both datasets are non-empty and share a feature dimension.
void check_pair(const Dataset& xp, const Dataset& xq);

using Scorer = std::function<double(std::span<const double>)>;

double clip_score(double s);

// Cross-entropy of a discriminator that should output 1 on P and 0 on Q:
//   -1/2 mean log f(xp) - 1/2 mean log(1 - f(xq)).
// ln 2 minus this value is the variational JSD lower bound.
double cross_entropy(const Scorer& f, const Dataset& xp, const Dataset& xq);
double cross_entropy(std::span<const double> scores_p, std::span<const double> scores_q);

// Same loss computed from raw logits with log-sum-exp, no clipping.
double logit_cross_entropy(std::span<const double> logits_p, std::span<const double> logits_q);

inline double sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

// log(1 + exp(z)) without overflow.
inline double softplus(double z) {
  return z > 0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z));
}

// Adam over a flat parameter vector.
class Adam {
 public:
  struct Params {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
  };

  Adam() = default;
  Adam(std::size_t n, Params params);

  void step(std::span<double> params, std::span<const double> grad);
  std::size_t steps() const { return t_; }
  const Params& params() const { return params_; }

 private:
  Params params_;
  std::vector<double> m_;
  std::vector<double> v_;
  std::size_t t_ = 0;
};

}  // namespace adiv
