#include <cstdlib>
#include <string_view>

#include "aissqp/kernels.hpp"

namespace aissqp::kernels {

#if defined(AISSQP_HAVE_AVX2)
const KernelTable& avx2_table() noexcept;
#endif
#if defined(AISSQP_HAVE_NEON)
const KernelTable& neon_table() noexcept;
#endif

const KernelTable* simd_table() noexcept {
#if defined(AISSQP_HAVE_AVX2)
  __builtin_cpu_init();
  if (__builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma")) return &avx2_table();
  return nullptr;
#elif defined(AISSQP_HAVE_NEON)
  return &neon_table();
#else
  return nullptr;
#endif
}

const KernelTable& active() noexcept {
  static const KernelTable* const chosen = [] {
    const char* env = std::getenv("AISSQP_SIMD");
    if (env != nullptr && std::string_view(env) == "scalar") return &scalar_table();
    const KernelTable* simd = simd_table();
    return simd != nullptr ? simd : &scalar_table();
  }();
  return *chosen;
}

}  // namespace aissqp::kernels
