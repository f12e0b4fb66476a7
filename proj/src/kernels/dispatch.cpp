#include <atomic>
#include <cstdlib>
#include <cstring>

#include "cvshadow/kernels.hpp"

namespace cvshadow::kernels {

namespace {

Isa detect() {
  if (const char* env = std::getenv("CVSHADOW_SIMD")) {
    if (std::strcmp(env, "scalar") == 0) return Isa::scalar;
  }
  return isa_available(Isa::avx2) ? Isa::avx2 : Isa::scalar;
}

std::atomic<int>& selected() {
  static std::atomic<int> isa{static_cast<int>(detect())};
  return isa;
}

}  // namespace

const char* isa_name(Isa isa) { return isa == Isa::avx2 ? "avx2" : "scalar"; }

bool isa_available(Isa isa) {
  if (isa == Isa::scalar) return true;
#if defined(__x86_64__) || defined(__i386__)
  __builtin_cpu_init();
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

Isa active_isa() { return static_cast<Isa>(selected().load(std::memory_order_relaxed)); }

void force_isa(Isa isa) {
  if (!isa_available(isa)) isa = Isa::scalar;
  selected().store(static_cast<int>(isa), std::memory_order_relaxed);
}

void chebyshev_batch(const double* coeffs, int ncoef, int nf, double t, double* out) {
  if (active_isa() == Isa::avx2) return avx2::chebyshev_batch(coeffs, ncoef, nf, t, out);
  scalar::chebyshev_batch(coeffs, ncoef, nf, t, out);
}

void outer_accumulate(const double* a_re, const double* a_im, int na, const double* b_re, const double* b_im,
                      int nb, double* acc_re, double* acc_im) {
  if (active_isa() == Isa::avx2) return avx2::outer_accumulate(a_re, a_im, na, b_re, b_im, nb, acc_re, acc_im);
  scalar::outer_accumulate(a_re, a_im, na, b_re, b_im, nb, acc_re, acc_im);
}

}  // namespace cvshadow::kernels
