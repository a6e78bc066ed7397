#include <cstdlib>
#include <cstring>

#include "kernels_impl.hpp"

namespace qrotor::kernels {

std::string to_string(Isa isa) {
  switch (isa) {
    case Isa::Scalar: return "scalar";
    case Isa::Avx2: return "avx2";
  }
  return "unknown";
}

namespace {
bool cpu_has_avx2() {
#if defined(QROTOR_HAVE_AVX2_KERNELS) && (defined(__GNUC__) || defined(__clang__))
  __builtin_cpu_init();
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}
}  // namespace

std::vector<const KernelTable*> available_tables() {
  std::vector<const KernelTable*> out{&scalar_table()};
#if defined(QROTOR_HAVE_AVX2_KERNELS)
  if (cpu_has_avx2()) out.push_back(&avx2_table());
#endif
  return out;
}

const KernelTable& active() {
  static const KernelTable* chosen = [] {
    const char* env = std::getenv("QROTOR_SIMD");
    if (env != nullptr && std::strcmp(env, "scalar") == 0) return &scalar_table();
    return available_tables().back();
  }();
  return *chosen;
}

}  // namespace qrotor::kernels
