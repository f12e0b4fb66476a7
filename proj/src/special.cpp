#include "cvshadow/special.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace cvshadow {

namespace {

constexpr int kMaxLaguerreOrder = 2000;
constexpr int kMaxHermiteOrder = 200;

}  // namespace

void laguerre_sequence(int kmax, int j, double x, double* out) {
  if (kmax < 0 || j < 0) throw std::invalid_argument("laguerre: negative order");
  if (kmax + j > kMaxLaguerreOrder) throw std::out_of_range("laguerre: order out of range");
  const double a = j;
  out[0] = 1.0;
  if (kmax == 0) return;
  out[1] = 1.0 + a - x;
  for (int k = 1; k < kmax; ++k) {
    out[k + 1] = ((2.0 * k + 1.0 + a - x) * out[k] - (k + a) * out[k - 1]) / (k + 1.0);
  }
  if (!std::isfinite(out[kmax])) throw std::out_of_range("laguerre: value overflow");
}

double laguerre(int k, int j, double x) {
  if (k < 0 || j < 0) throw std::invalid_argument("laguerre: negative order");
  if (k + j > kMaxLaguerreOrder) throw std::out_of_range("laguerre: order out of range");
  if (k == 0) return 1.0;
  const double a = j;
  double prev = 1.0;
  double cur = 1.0 + a - x;
  for (int n = 1; n < k; ++n) {
    const double next = ((2.0 * n + 1.0 + a - x) * cur - (n + a) * prev) / (n + 1.0);
    prev = cur;
    cur = next;
  }
  if (!std::isfinite(cur)) throw std::out_of_range("laguerre: value overflow");
  return cur;
}

void hermite_wavefunctions(int nmax, double q, double* out) {
  if (nmax < 0) throw std::invalid_argument("hermite_wavefunction: negative order");
  if (nmax > kMaxHermiteOrder) throw std::out_of_range("hermite_wavefunction: order above 200");
  out[0] = std::pow(std::numbers::pi, -0.25) * std::exp(-0.5 * q * q);
  if (nmax == 0) return;
  out[1] = std::numbers::sqrt2 * q * out[0];
  for (int n = 1; n < nmax; ++n) {
    out[n + 1] = std::sqrt(2.0 / (n + 1.0)) * q * out[n] - std::sqrt(n / (n + 1.0)) * out[n - 1];
  }
}

double hermite_wavefunction(int n, double q) {
  if (n < 0) throw std::invalid_argument("hermite_wavefunction: negative order");
  if (n > kMaxHermiteOrder) throw std::out_of_range("hermite_wavefunction: order above 200");
  double buf[kMaxHermiteOrder + 1];
  hermite_wavefunctions(n, q, buf);
  return buf[n];
}

double ScaledBessel::value() const { return scaled * std::exp(exponent); }

namespace {

double i0_series(double x) {
  const double y = 0.25 * x * x;
  double term = 1.0;
  double sum = 1.0;
  for (int k = 1; k < 500; ++k) {
    term *= y / (static_cast<double>(k) * k);
    sum += term;
    if (term < 1e-17 * sum) break;
  }
  return sum;
}

// Asymptotic expansion of exp(-x) I0(x); used only for x > 30 where it
// reaches full double precision before the terms start to grow.
double i0_scaled_asymptotic(double x) {
  double term = 1.0;
  double sum = 1.0;
  for (int k = 1; k < 200; ++k) {
    const double next = term * (2.0 * k - 1.0) * (2.0 * k - 1.0) / (8.0 * k * x);
    if (std::abs(next) > std::abs(term)) break;
    term = next;
    sum += term;
    if (term < 1e-17 * sum) break;
  }
  return sum / std::sqrt(2.0 * std::numbers::pi * x);
}

}  // namespace

ScaledBessel bessel_i0(double x) {
  if (x < 0.0) x = -x;
  if (x <= 30.0) return {i0_series(x), 0.0};
  return {i0_scaled_asymptotic(x), x};
}

double bessel_i0_scaled(double x) {
  if (x < 0.0) x = -x;
  if (x <= 30.0) return i0_series(x) * std::exp(-x);
  return i0_scaled_asymptotic(x);
}

double log_factorial(int n) {
  if (n < 0) throw std::invalid_argument("log_factorial: negative argument");
  return std::lgamma(n + 1.0);
}

double sqrt_factorial_ratio(int a, int b) {
  return std::exp(0.5 * (log_factorial(a) - log_factorial(b)));
}

}  // namespace cvshadow
