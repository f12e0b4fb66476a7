#include "cvshadow/kernels.hpp"

#include <cmath>

#if defined(__AVX2__) && defined(__FMA__)
#include <immintrin.h>
#endif

namespace cvshadow::kernels::avx2 {

#if defined(__AVX2__) && defined(__FMA__)

void chebyshev_batch(const double* coeffs, int ncoef, int nf, double t, double* out) {
  const __m256d two_t = _mm256_set1_pd(2.0 * t);
  const __m256d tv = _mm256_set1_pd(t);
  int f = 0;
  for (; f + 4 <= nf; f += 4) {
    __m256d b1 = _mm256_setzero_pd();
    __m256d b2 = _mm256_setzero_pd();
    for (int c = ncoef - 1; c >= 1; --c) {
      const __m256d a = _mm256_loadu_pd(coeffs + c * nf + f);
      const __m256d b0 = _mm256_sub_pd(_mm256_fmadd_pd(two_t, b1, a), b2);
      b2 = b1;
      b1 = b0;
    }
    const __m256d a0 = _mm256_loadu_pd(coeffs + f);
    _mm256_storeu_pd(out + f, _mm256_sub_pd(_mm256_fmadd_pd(tv, b1, a0), b2));
  }
  for (; f < nf; ++f) {
    double b1 = 0.0;
    double b2 = 0.0;
    for (int c = ncoef - 1; c >= 1; --c) {
      const double b0 = std::fma(2.0 * t, b1, coeffs[c * nf + f]) - b2;
      b2 = b1;
      b1 = b0;
    }
    out[f] = std::fma(t, b1, coeffs[f]) - b2;
  }
}

void outer_accumulate(const double* a_re, const double* a_im, int na, const double* b_re, const double* b_im,
                      int nb, double* acc_re, double* acc_im) {
  for (int j = 0; j < na; ++j) {
    const __m256d ar = _mm256_set1_pd(a_re[j]);
    const __m256d ai = _mm256_set1_pd(a_im[j]);
    double* row_re = acc_re + static_cast<long>(j) * nb;
    double* row_im = acc_im + static_cast<long>(j) * nb;
    int k = 0;
    for (; k + 4 <= nb; k += 4) {
      const __m256d br = _mm256_loadu_pd(b_re + k);
      const __m256d bi = _mm256_loadu_pd(b_im + k);
      __m256d re = _mm256_loadu_pd(row_re + k);
      __m256d im = _mm256_loadu_pd(row_im + k);
      re = _mm256_fnmadd_pd(ai, bi, _mm256_fmadd_pd(ar, br, re));
      im = _mm256_fmadd_pd(ai, br, _mm256_fmadd_pd(ar, bi, im));
      _mm256_storeu_pd(row_re + k, re);
      _mm256_storeu_pd(row_im + k, im);
    }
    for (; k < nb; ++k) {
      row_re[k] += a_re[j] * b_re[k] - a_im[j] * b_im[k];
      row_im[k] += a_re[j] * b_im[k] + a_im[j] * b_re[k];
    }
  }
}

#else

void chebyshev_batch(const double* coeffs, int ncoef, int nf, double t, double* out) {
  scalar::chebyshev_batch(coeffs, ncoef, nf, t, out);
}

void outer_accumulate(const double* a_re, const double* a_im, int na, const double* b_re, const double* b_im,
                      int nb, double* acc_re, double* acc_im) {
  scalar::outer_accumulate(a_re, a_im, na, b_re, b_im, nb, acc_re, acc_im);
}

#endif

}  // namespace cvshadow::kernels::avx2
