#pragma once

namespace cvshadow::kernels {

enum class Isa { scalar, avx2 };

const char* isa_name(Isa isa);
bool isa_available(Isa isa);

// ISA used by the dispatching entry points. Chosen once from CPU features;
// CVSHADOW_SIMD=scalar forces the reference path.
Isa active_isa();
void force_isa(Isa isa);

// out[f] = sum_{c < ncoef} coeffs[c * nf + f] * T_c(t), for f < nf (Clenshaw).
void chebyshev_batch(const double* coeffs, int ncoef, int nf, double t, double* out);

// acc[j * nb + k] += a[j] * b[k] for complex vectors stored as separate re/im arrays.
void outer_accumulate(const double* a_re, const double* a_im, int na, const double* b_re, const double* b_im,
                      int nb, double* acc_re, double* acc_im);

namespace scalar {
void chebyshev_batch(const double* coeffs, int ncoef, int nf, double t, double* out);
void outer_accumulate(const double* a_re, const double* a_im, int na, const double* b_re, const double* b_im,
                      int nb, double* acc_re, double* acc_im);
}  // namespace scalar

namespace avx2 {
void chebyshev_batch(const double* coeffs, int ncoef, int nf, double t, double* out);
void outer_accumulate(const double* a_re, const double* a_im, int na, const double* b_re, const double* b_im,
                      int nb, double* acc_re, double* acc_im);
}  // namespace avx2

}  // namespace cvshadow::kernels
