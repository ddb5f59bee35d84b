#pragma once
// Data-parallel inner loops used by the discriminators and optimizers.
//
// Every kernel has a scalar reference implementation. Vectorized variants
// (AVX2+FMA on x86-64) are compiled in separate translation units and picked
// once at startup from the CPU feature bits. Setting ADIV_SIMD=scalar in the
// environment forces the reference path.

#include <cstddef>
#include <span>
#include <string_view>

#include "adiv/kernel_types.hpp"

namespace adiv::kernels {

struct KernelTable {
  const char* name;
  double (*dot)(const double* a, const double* b, std::size_t n);
  void (*axpy)(double alpha, const double* x, double* y, std::size_t n);
  double (*sum_sq)(const double* x, std::size_t n);
  // y[i] = A[i, :] . x for a row-major rows x cols matrix.
  void (*gemv)(const double* a, const double* x, double* y, std::size_t rows, std::size_t cols);
  // A += alpha * u u^T on a row-major n x n matrix.
  void (*syr)(double alpha, const double* u, double* a, std::size_t n);
  // G = W^T W for a row-major rows x h matrix W (G is h x h, overwritten).
  void (*gram)(const double* w, std::size_t rows, std::size_t h, double* g);
  // Y += alpha * W A for row-major W, Y (rows x h) and A (h x h).
  void (*gemm_acc)(double alpha, const double* w, const double* a, double* y, std::size_t rows,
                   std::size_t h);
  void (*adam)(const AdamStep& step, const double* grad, double* param, double* m, double* v,
               std::size_t n);
};

const KernelTable& scalar_table();
// nullptr when the variant was not compiled in or the CPU lacks the features.
const KernelTable* avx2_table();
const KernelTable& active();

inline double dot(std::span<const double> a, std::span<const double> b) {
  return active().dot(a.data(), b.data(), a.size());
}

inline void axpy(double alpha, std::span<const double> x, std::span<double> y) {
  active().axpy(alpha, x.data(), y.data(), x.size());
}

inline double sum_sq(std::span<const double> x) { return active().sum_sq(x.data(), x.size()); }

}  // namespace adiv::kernels
