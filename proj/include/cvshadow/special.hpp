#pragma once

#include <vector>

namespace cvshadow {

// Generalized Laguerre polynomial L_k^{(j)}(x) via the three-term recurrence in k.
double laguerre(int k, int j, double x);

// Fills out[0..kmax] with L_k^{(j)}(x) for k = 0..kmax.
void laguerre_sequence(int kmax, int j, double x, double* out);

// Normalized oscillator eigenfunction psi_n(q) for X = (a + a^dagger)/sqrt(2).
double hermite_wavefunction(int n, double q);

// Fills out[0..nmax] with psi_n(q).
void hermite_wavefunctions(int nmax, double q, double* out);

// I0(x) represented as scaled * exp(exponent). For x <= 30 the exponent is 0.
struct ScaledBessel {
  double scaled;
  double exponent;
  double value() const;
};

ScaledBessel bessel_i0(double x);

// exp(-x) * I0(x) for any x >= 0.
double bessel_i0_scaled(double x);

double log_factorial(int n);

// sqrt(a! / b!) evaluated in the log domain.
double sqrt_factorial_ratio(int a, int b);

}  // namespace cvshadow
