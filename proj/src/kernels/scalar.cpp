#include <cmath>

#include "adiv/kernels.hpp"
#include "kernels_impl.hpp"

namespace adiv::kernels::scalar {

double dot(const double* a, const double* b, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += a[i] * b[i];
  return s;
}

void axpy(double alpha, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

double sum_sq(const double* x, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += x[i] * x[i];
  return s;
}

void gemv(const double* a, const double* x, double* y, std::size_t rows, std::size_t cols) {
  for (std::size_t r = 0; r < rows; ++r) y[r] = dot(a + r * cols, x, cols);
}

void syr(double alpha, const double* u, double* a, std::size_t n) {
  for (std::size_t r = 0; r < n; ++r) axpy(alpha * u[r], u, a + r * n, n);
}

void gram(const double* w, std::size_t rows, std::size_t h, double* g) {
  for (std::size_t i = 0; i < h * h; ++i) g[i] = 0.0;
  for (std::size_t r = 0; r < rows; ++r) syr(1.0, w + r * h, g, h);
}

void gemm_acc(double alpha, const double* w, const double* a, double* y, std::size_t rows, std::size_t h) {
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t i = 0; i < h; ++i) axpy(alpha * w[r * h + i], a + i * h, y + r * h, h);
  }
}

void adam(const AdamStep& step, const double* grad, double* param, double* m, double* v,
          std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) {
    m[i] = step.beta1 * m[i] + (1.0 - step.beta1) * grad[i];
    v[i] = step.beta2 * v[i] + (1.0 - step.beta2) * grad[i] * grad[i];
    const double mhat = m[i] / step.bias1;
    const double vhat = v[i] / step.bias2;
    param[i] -= step.lr * mhat / (std::sqrt(vhat) + step.eps);
  }
}

}  // namespace adiv::kernels::scalar
