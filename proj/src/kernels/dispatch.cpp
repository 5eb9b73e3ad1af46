#include <atomic>
#include <cstdlib>
#include <string>

#include "pbpolicy/error.hpp"
#include "pbpolicy/kernels.hpp"

namespace pbpolicy::kernels {
namespace {

Isa detect() {
  if (const char* env = std::getenv("PBPOLICY_KERNEL")) {
    const std::string v(env);
    if (v == "scalar") return Isa::scalar;
    if (v == "avx2" && isa_available(Isa::avx2)) return Isa::avx2;
  }
  return isa_available(Isa::avx2) ? Isa::avx2 : Isa::scalar;
}

std::atomic<Isa>& current() {
  static std::atomic<Isa> isa{detect()};
  return isa;
}

}  // namespace

std::string_view isa_name(Isa isa) {
  switch (isa) {
    case Isa::scalar:
      return "scalar";
    case Isa::avx2:
      return "avx2";
  }
  return "unknown";
}

bool isa_available(Isa isa) {
  switch (isa) {
    case Isa::scalar:
      return true;
    case Isa::avx2:
#if defined(PBPOLICY_HAVE_AVX2) && (defined(__GNUC__) || defined(__clang__))
      return __builtin_cpu_supports("avx2");
#else
      return false;
#endif
  }
  return false;
}

const KernelTable& table(Isa isa) {
  if (!isa_available(isa)) throw ValidationError("kernel variant not available: " + std::string(isa_name(isa)));
#if defined(PBPOLICY_HAVE_AVX2)
  if (isa == Isa::avx2) return avx2_table();
#endif
  return scalar_table();
}

Isa active_isa() { return current().load(std::memory_order_relaxed); }

void force_isa(Isa isa) {
  if (!isa_available(isa)) throw ValidationError("kernel variant not available: " + std::string(isa_name(isa)));
  current().store(isa, std::memory_order_relaxed);
}

const KernelTable& active() { return table(active_isa()); }

}  // namespace pbpolicy::kernels
