#include <atomic>
#include <cstdlib>
#include <stdexcept>
#include <string>

#include "ttn/kernels.hpp"

namespace ttn::kernels {

#if defined(TTN_BUILD_AVX2)
const KernelTable* avx2_table_impl();
#endif

const KernelTable* avx2_table() {
#if defined(TTN_BUILD_AVX2)
  return avx2_table_impl();
#else
  return nullptr;
#endif
}

bool isa_supported(Isa isa) {
  switch (isa) {
    case Isa::scalar:
      return true;
    case Isa::avx2:
#if defined(TTN_BUILD_AVX2) && (defined(__GNUC__) || defined(__clang__))
      return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
      return false;
#endif
  }
  return false;
}

std::string_view isa_name(Isa isa) { return isa == Isa::avx2 ? "avx2" : "scalar"; }

namespace {

Isa detect() {
  if (const char* env = std::getenv("TTN_KERNELS")) {
    const std::string v(env);
    if (v == "scalar") return Isa::scalar;
    if (v == "avx2" && isa_supported(Isa::avx2)) return Isa::avx2;
  }
  return isa_supported(Isa::avx2) ? Isa::avx2 : Isa::scalar;
}

const KernelTable* table_for(Isa isa) {
  return isa == Isa::avx2 ? avx2_table() : &scalar_table();
}

std::atomic<Isa>& current() {
  static std::atomic<Isa> isa{detect()};
  return isa;
}

}  // namespace

Isa active_isa() { return current().load(std::memory_order_relaxed); }

void set_isa(Isa isa) {
  if (!isa_supported(isa))
    throw std::invalid_argument("kernel ISA not supported: " + std::string(isa_name(isa)));
  current().store(isa, std::memory_order_relaxed);
}

const KernelTable& active() { return *table_for(active_isa()); }

}  // namespace ttn::kernels
