#include <cstdlib>
#include <string_view>

#include "snl/kernels.hpp"

namespace snl::kernels {

#if defined(SNL_HAVE_AVX2_TU)
const KernelTable& avx2_table_unchecked() noexcept;
#endif
#if defined(SNL_HAVE_NEON_TU)
const KernelTable& neon_table_unchecked() noexcept;
#endif

const KernelTable* avx2_table() noexcept {
#if defined(SNL_HAVE_AVX2_TU) && (defined(__GNUC__) || defined(__clang__))
  __builtin_cpu_init();
  if (__builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma")) return &avx2_table_unchecked();
#endif
  return nullptr;
}

const KernelTable* neon_table() noexcept {
#if defined(SNL_HAVE_NEON_TU)
  return &neon_table_unchecked();
#else
  return nullptr;
#endif
}

namespace {

const KernelTable& resolve() noexcept {
  if (const char* env = std::getenv("SNL_KERNELS"); env != nullptr && std::string_view(env) == "scalar") {
    return scalar_table();
  }
  if (const KernelTable* t = avx2_table()) return *t;
  if (const KernelTable* t = neon_table()) return *t;
  return scalar_table();
}

}  // namespace

const KernelTable& active() noexcept {
  static const KernelTable& table = resolve();
  return table;
}

}  // namespace snl::kernels
