#include <cstdlib>
#include <string_view>

#include "adiv/kernels.hpp"
#include "kernels_impl.hpp"

namespace adiv::kernels {

namespace {

constexpr KernelTable kScalar{"scalar",    scalar::dot,  scalar::axpy,     scalar::sum_sq,
                              scalar::gemv, scalar::syr, scalar::gram, scalar::gemm_acc,
                              scalar::adam};

#if defined(ADIV_HAVE_AVX2)
constexpr KernelTable kAvx2{"avx2",    avx2::dot,  avx2::axpy,     avx2::sum_sq, avx2::gemv,
                            avx2::syr, avx2::gram, avx2::gemm_acc, avx2::adam};

bool cpu_has_avx2() {
  __builtin_cpu_init();
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
}
#endif

const KernelTable& select() {
  if (const char* env = std::getenv("ADIV_SIMD"); env && std::string_view(env) == "scalar") {
    return kScalar;
  }
  if (const KernelTable* t = avx2_table()) return *t;
  return kScalar;
}

}  // namespace

const KernelTable& scalar_table() { return kScalar; }

const KernelTable* avx2_table() {
#if defined(ADIV_HAVE_AVX2)
  static const bool ok = cpu_has_avx2();
  return ok ? &kAvx2 : nullptr;
#else
  return nullptr;
#endif
}

const KernelTable& active() {
  static const KernelTable& table = select();
  return table;
}

}  // namespace adiv::kernels
