#include <immintrin.h>

#include "adiv/kernel_types.hpp"
#include "kernels_impl.hpp"

namespace adiv::kernels::avx2 {

namespace {

inline double hsum(__m256d v) {
  const __m128d lo = _mm256_castpd256_pd128(v);
  const __m128d hi = _mm256_extractf128_pd(v, 1);
  const __m128d s = _mm_add_pd(lo, hi);
  return _mm_cvtsd_f64(_mm_add_sd(s, _mm_unpackhi_pd(s, s)));
}

}  // namespace

double dot(const double* a, const double* b, std::size_t n) {
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
    acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + 4), _mm256_loadu_pd(b + i + 4), acc1);
  }
  for (; i + 4 <= n; i += 4) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
  }
  double s = hsum(_mm256_add_pd(acc0, acc1));
  for (; i < n; ++i) s += a[i] * b[i];
  return s;
}

void axpy(double alpha, const double* x, double* y, std::size_t n) {
  const __m256d va = _mm256_set1_pd(alpha);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    _mm256_storeu_pd(y + i, _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
  }
  for (; i < n; ++i) y[i] += alpha * x[i];
}

double sum_sq(const double* x, std::size_t n) { return dot(x, x, n); }

void gemv(const double* a, const double* x, double* y, std::size_t rows, std::size_t cols) {
  for (std::size_t r = 0; r < rows; ++r) y[r] = dot(a + r * cols, x, cols);
}

void syr(double alpha, const double* u, double* a, std::size_t n) {
  for (std::size_t r = 0; r < n; ++r) axpy(alpha * u[r], u, a + r * n, n);
}

void gram(const double* w, std::size_t rows, std::size_t h, double* g) {
  for (std::size_t i = 0; i < h * h; ++i) g[i] = 0.0;
  const std::size_t hv = h & ~std::size_t{3};
  std::size_t r = 0;
  // Four rows of W per pass over G.
  for (; r + 4 <= rows; r += 4) {
    const double* w0 = w + r * h;
    const double* w1 = w0 + h;
    const double* w2 = w1 + h;
    const double* w3 = w2 + h;
    for (std::size_t i = 0; i < h; ++i) {
      const __m256d b0 = _mm256_set1_pd(w0[i]);
      const __m256d b1 = _mm256_set1_pd(w1[i]);
      const __m256d b2 = _mm256_set1_pd(w2[i]);
      const __m256d b3 = _mm256_set1_pd(w3[i]);
      double* gi = g + i * h;
      std::size_t c = 0;
      for (; c < hv; c += 4) {
        __m256d acc = _mm256_loadu_pd(gi + c);
        acc = _mm256_fmadd_pd(b0, _mm256_loadu_pd(w0 + c), acc);
        acc = _mm256_fmadd_pd(b1, _mm256_loadu_pd(w1 + c), acc);
        acc = _mm256_fmadd_pd(b2, _mm256_loadu_pd(w2 + c), acc);
        acc = _mm256_fmadd_pd(b3, _mm256_loadu_pd(w3 + c), acc);
        _mm256_storeu_pd(gi + c, acc);
      }
      for (; c < h; ++c) gi[c] += w0[i] * w0[c] + w1[i] * w1[c] + w2[i] * w2[c] + w3[i] * w3[c];
    }
  }
  for (; r < rows; ++r) syr(1.0, w + r * h, g, h);
}

void gemm_acc(double alpha, const double* w, const double* a, double* y, std::size_t rows, std::size_t h) {
  const std::size_t hv = h & ~std::size_t{3};
  const __m256d va = _mm256_set1_pd(alpha);
  for (std::size_t r = 0; r < rows; ++r) {
    const double* wr = w + r * h;
    double* yr = y + r * h;
    std::size_t c = 0;
    // Sixteen output columns at a time in four accumulators.
    for (; c + 16 <= hv; c += 16) {
      __m256d s0 = _mm256_setzero_pd();
      __m256d s1 = _mm256_setzero_pd();
      __m256d s2 = _mm256_setzero_pd();
      __m256d s3 = _mm256_setzero_pd();
      for (std::size_t i = 0; i < h; ++i) {
        const __m256d b = _mm256_set1_pd(wr[i]);
        const double* ai = a + i * h + c;
        s0 = _mm256_fmadd_pd(b, _mm256_loadu_pd(ai), s0);
        s1 = _mm256_fmadd_pd(b, _mm256_loadu_pd(ai + 4), s1);
        s2 = _mm256_fmadd_pd(b, _mm256_loadu_pd(ai + 8), s2);
        s3 = _mm256_fmadd_pd(b, _mm256_loadu_pd(ai + 12), s3);
      }
      _mm256_storeu_pd(yr + c, _mm256_fmadd_pd(va, s0, _mm256_loadu_pd(yr + c)));
      _mm256_storeu_pd(yr + c + 4, _mm256_fmadd_pd(va, s1, _mm256_loadu_pd(yr + c + 4)));
      _mm256_storeu_pd(yr + c + 8, _mm256_fmadd_pd(va, s2, _mm256_loadu_pd(yr + c + 8)));
      _mm256_storeu_pd(yr + c + 12, _mm256_fmadd_pd(va, s3, _mm256_loadu_pd(yr + c + 12)));
    }
    for (; c < hv; c += 4) {
      __m256d s0 = _mm256_setzero_pd();
      for (std::size_t i = 0; i < h; ++i) {
        s0 = _mm256_fmadd_pd(_mm256_set1_pd(wr[i]), _mm256_loadu_pd(a + i * h + c), s0);
      }
      _mm256_storeu_pd(yr + c, _mm256_fmadd_pd(va, s0, _mm256_loadu_pd(yr + c)));
    }
    for (; c < h; ++c) {
      double s = 0.0;
      for (std::size_t i = 0; i < h; ++i) s += wr[i] * a[i * h + c];
      yr[c] += alpha * s;
    }
  }
}

void adam(const AdamStep& step, const double* grad, double* param, double* m, double* v,
          std::size_t n) {
  const __m256d b1 = _mm256_set1_pd(step.beta1);
  const __m256d b2 = _mm256_set1_pd(step.beta2);
  const __m256d c1 = _mm256_set1_pd(1.0 - step.beta1);
  const __m256d c2 = _mm256_set1_pd(1.0 - step.beta2);
  const __m256d bias1 = _mm256_set1_pd(step.bias1);
  const __m256d bias2 = _mm256_set1_pd(step.bias2);
  const __m256d lr = _mm256_set1_pd(step.lr);
  const __m256d eps = _mm256_set1_pd(step.eps);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d g = _mm256_loadu_pd(grad + i);
    const __m256d mi = _mm256_add_pd(_mm256_mul_pd(b1, _mm256_loadu_pd(m + i)), _mm256_mul_pd(c1, g));
    const __m256d vi = _mm256_add_pd(_mm256_mul_pd(b2, _mm256_loadu_pd(v + i)),
                                     _mm256_mul_pd(_mm256_mul_pd(c2, g), g));
    _mm256_storeu_pd(m + i, mi);
    _mm256_storeu_pd(v + i, vi);
    const __m256d mhat = _mm256_div_pd(mi, bias1);
    const __m256d vhat = _mm256_div_pd(vi, bias2);
    const __m256d delta = _mm256_div_pd(_mm256_mul_pd(lr, mhat), _mm256_add_pd(_mm256_sqrt_pd(vhat), eps));
    _mm256_storeu_pd(param + i, _mm256_sub_pd(_mm256_loadu_pd(param + i), delta));
  }
  for (; i < n; ++i) {
    m[i] = step.beta1 * m[i] + (1.0 - step.beta1) * grad[i];
    v[i] = step.beta2 * v[i] + (1.0 - step.beta2) * grad[i] * grad[i];
    const double mhat = m[i] / step.bias1;
    const double vhat = v[i] / step.bias2;
    param[i] -= step.lr * mhat / (__builtin_sqrt(vhat) + step.eps);
  }
}

}  // namespace adiv::kernels::avx2
