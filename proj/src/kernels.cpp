#include <cstdlib>
#include <string_view>

#include "dagnas/kernels.hpp"

namespace dagnas::kernels {

#if defined(DAGNAS_HAVE_AVX2)
const Table& avx2_table();
#endif

const Table* avx2() {
#if defined(DAGNAS_HAVE_AVX2)
  static const bool supported = __builtin_cpu_supports("avx2");
  return supported ? &avx2_table() : nullptr;
#else
  return nullptr;
#endif
}

const Table& active() {
  static const Table& chosen = [&]() -> const Table& {
    const char* forced = std::getenv("DAGNAS_KERNELS");
    if (forced != nullptr && std::string_view(forced) == "scalar") return scalar();
    if (const Table* t = avx2()) return *t;
    return scalar();
  }();
  return chosen;
}

}  // namespace dagnas::kernels
