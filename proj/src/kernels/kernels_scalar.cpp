#include "cvshadow/kernels.hpp"

namespace cvshadow::kernels::scalar {

void chebyshev_batch(const double* coeffs, int ncoef, int nf, double t, double* out) {
  const double two_t = 2.0 * t;
  for (int f = 0; f < nf; ++f) {
    double b1 = 0.0;
    double b2 = 0.0;
    for (int c = ncoef - 1; c >= 1; --c) {
      const double b0 = coeffs[c * nf + f] + two_t * b1 - b2;
      b2 = b1;
      b1 = b0;
    }
    out[f] = coeffs[f] + t * b1 - b2;
  }
}

void outer_accumulate(const double* a_re, const double* a_im, int na, const double* b_re, const double* b_im,
                      int nb, double* acc_re, double* acc_im) {
  for (int j = 0; j < na; ++j) {
    const double ar = a_re[j];
    const double ai = a_im[j];
    double* row_re = acc_re + static_cast<long>(j) * nb;
    double* row_im = acc_im + static_cast<long>(j) * nb;
    for (int k = 0; k < nb; ++k) {
      row_re[k] += ar * b_re[k] - ai * b_im[k];
      row_im[k] += ar * b_im[k] + ai * b_re[k];
    }
  }
}

}  // namespace cvshadow::kernels::scalar
