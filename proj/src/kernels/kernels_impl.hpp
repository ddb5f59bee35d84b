#pragma once
// Declarations shared by the per-ISA kernel translation units. Keep this header
// free of standard-library templates: the AVX2 unit is built with -mavx2 and
// must not emit inline code the linker could fold into baseline callers.

#include <cstddef>

#include "adiv/kernel_types.hpp"

namespace adiv::kernels {
struct KernelTable;

namespace scalar {
double dot(const double* a, const double* b, std::size_t n);
void axpy(double alpha, const double* x, double* y, std::size_t n);
double sum_sq(const double* x, std::size_t n);
void gemv(const double* a, const double* x, double* y, std::size_t rows, std::size_t cols);
void syr(double alpha, const double* u, double* a, std::size_t n);
void gram(const double* w, std::size_t rows, std::size_t h, double* g);
void gemm_acc(double alpha, const double* w, const double* a, double* y, std::size_t rows, std::size_t h);
void adam(const AdamStep& step, const double* grad, double* param, double* m, double* v,
          std::size_t n);
}  // namespace scalar

namespace avx2 {
double dot(const double* a, const double* b, std::size_t n);
void axpy(double alpha, const double* x, double* y, std::size_t n);
double sum_sq(const double* x, std::size_t n);
void gemv(const double* a, const double* x, double* y, std::size_t rows, std::size_t cols);
void syr(double alpha, const double* u, double* a, std::size_t n);
void gram(const double* w, std::size_t rows, std::size_t h, double* g);
void gemm_acc(double alpha, const double* w, const double* a, double* y, std::size_t rows, std::size_t h);
void adam(const AdamStep& step, const double* grad, double* param, double* m, double* v,
          std::size_t n);
}  // namespace avx2

}  // namespace adiv::kernels
