#include <atomic>
#include <cstdlib>
#include <string_view>

#include "motility/error.hpp"
#include "motility/simd/kernels.hpp"

namespace motility::simd {

const char* isa_name(Isa isa) {
  switch (isa) {
    case Isa::Scalar: return "scalar";
    case Isa::Avx2: return "avx2";
  }
  return "unknown";
}

bool cpu_supports(Isa isa) {
  switch (isa) {
    case Isa::Scalar:
      return true;
    case Isa::Avx2:
#if defined(__x86_64__) && (defined(__GNUC__) || defined(__clang__))
      return avx2_kernels() != nullptr && __builtin_cpu_supports("avx2") &&
             __builtin_cpu_supports("fma");
#else
      return false;
#endif
  }
  return false;
}

namespace {

const KernelTable* initial_table() {
  if (const char* env = std::getenv("MOTILITY_SIMD")) {
    if (std::string_view(env) == "scalar") return &scalar_kernels();
  }
  if (cpu_supports(Isa::Avx2)) return avx2_kernels();
  return &scalar_kernels();
}

std::atomic<const KernelTable*>& table_slot() {
  static std::atomic<const KernelTable*> slot{initial_table()};
  return slot;
}

}  // namespace

const KernelTable& active() { return *table_slot().load(std::memory_order_relaxed); }

Isa active_isa() { return active().isa; }

void select(Isa isa) {
  if (!cpu_supports(isa)) {
    throw Error(Errc::Usage, std::string("SIMD variant not available: ") + isa_name(isa));
  }
  table_slot().store(isa == Isa::Scalar ? &scalar_kernels() : avx2_kernels());
}

}  // namespace motility::simd
