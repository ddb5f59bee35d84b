#pragma once
// Gaussian-process regression with a Matern 3/2 kernel. Targets are
// standardized before fitting; the length-scale is chosen by maximum marginal
// likelihood over [1e-3, 1e3].

#include <cstddef>
#include <span>
#include <vector>

namespace adiv::opt {

inline constexpr double kMinLengthScale = 1e-3;
inline constexpr double kMaxLengthScale = 1e3;
inline constexpr double kBaseNoise = 1e-6;

double matern32(std::span<const double> x, std::span<const double> y, double ell, double sigma2);

// Lower Cholesky factor of a dense symmetric matrix (row-major, in place).
// Returns false when a pivot is not positive.
bool cholesky(std::vector<double>& a, std::size_t n);

struct Posterior {
  double mean = 0.0;
  double var = 0.0;
};

class GpModel {
 public:
  // Fits at a fixed length-scale. Noise starts at kBaseNoise and grows tenfold
  // until the kernel matrix factorizes; throws std::runtime_error past 1.
  GpModel(std::vector<std::vector<double>> points, std::vector<double> values, double ell);

  Posterior predict(std::span<const double> x) const;

  double length_scale() const { return ell_; }
  double signal_variance() const { return sigma2_; }
  double noise() const { return noise_; }
  double log_marginal_likelihood() const { return lml_; }
  double target_mean() const { return y_mean_; }
  double target_scale() const { return y_scale_; }
  const std::vector<std::vector<double>>& points() const { return x_; }
  const std::vector<double>& values() const { return y_; }

 private:
  std::vector<std::vector<double>> x_;
  std::vector<double> y_;
  double y_mean_ = 0.0;
  double y_scale_ = 1.0;
  double ell_;
  double sigma2_ = 1.0;
  double noise_ = kBaseNoise;
  std::vector<double> chol_;   // n x n lower factor of K + noise I
  std::vector<double> weights_;  // (K + noise I)^-1 z
  double lml_ = 0.0;
};

// Maximum-likelihood fit: 61-point log grid over the length-scale range, then
// golden-section refinement between the neighbours of the best grid point.
// Needs at least two points.
GpModel gp_fit(std::vector<std::vector<double>> points, std::vector<double> values);

// Expected improvement below `best` (minimization). Zero when std is zero.
double expected_improvement(double mean, double std, double best);

}  // namespace adiv::opt
