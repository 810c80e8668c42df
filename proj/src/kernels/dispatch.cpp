#include <atomic>
#include <cstdlib>
#include <string>

#include "eaglass/kernels.hpp"

namespace eaglass::kernels {

#if defined(EAGLASS_HAVE_AVX2)
namespace avx2 {
const KernelTable& table();
}
#endif

const KernelTable* avx2_table() {
#if defined(EAGLASS_HAVE_AVX2)
  static const bool supported = __builtin_cpu_supports("avx2");
  return supported ? &avx2::table() : nullptr;
#else
  return nullptr;
#endif
}

namespace {

const KernelTable* initial_choice() {
  const char* env = std::getenv("EAGLASS_SIMD");
  const std::string want = env ? env : "auto";
  if (want == "scalar") return &scalar_table();
  if (const KernelTable* t = avx2_table()) return t;
  return &scalar_table();
}

std::atomic<const KernelTable*>& slot() {
  static std::atomic<const KernelTable*> current{initial_choice()};
  return current;
}

}  // namespace

const KernelTable& active() { return *slot().load(std::memory_order_acquire); }

bool select(std::string_view name) {
  if (name == "scalar") {
    slot().store(&scalar_table(), std::memory_order_release);
    return true;
  }
  if (name == "avx2" || name == "auto") {
    if (const KernelTable* t = avx2_table()) {
      slot().store(t, std::memory_order_release);
      return true;
    }
    if (name == "auto") {
      slot().store(&scalar_table(), std::memory_order_release);
      return true;
    }
  }
  return false;
}

}  // namespace eaglass::kernels
