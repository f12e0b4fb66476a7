#pragma once

#include <limits>
#include <string>
#include <vector>

#include "cvshadow/states.hpp"

namespace cvshadow {

// Polynomial entropy surrogate
//   H(sigma) = tr(P - sigma) - sum_{k=2}^{d_p} tr[(P - sigma)^k] / (k (k-1)),
// with P the identity on the truncated space. Powers are formed by repeated multiplication and
// re-Hermitized after every step; sigma need not be positive.
double entropy_poly(const FockMatrix& sigma, int d_p);

// Real number stored as sign * exp(log_magnitude).
struct SignedLog {
  double log_magnitude = -std::numeric_limits<double>::infinity();
  int sign = 0;
  double value() const;
};

// C_j = (-1)^j sum_{k=max(2,j)}^{d_p} (k-2)!/(k-j)! for j = 0..d_p.
std::vector<SignedLog> entropy_coefficients(int d_p);

// The same polynomial written through moments: tr(P - sigma) - sum_j C_j tr(sigma^j) / j!.
// Suffers cancellation for large d_p; intended for cross-checks with d_p <= 12.
double entropy_poly_moment_form(const FockMatrix& sigma, int d_p);

struct EntropyPlan {
  int M = 0;
  int r = 1;
  double epsilon = 0.0;
  double E = 0.0;
  int d_p = 0;
  double epsilon_prime = 0.0;
  double log10_epsilon_prime = 0.0;
  double gamma = 0.0;            // 2 r E / (sqrt(1+M) - 2 r E)
  double truncation_error = 0.0; // h(gamma) + rE h(gamma/(rE)) + 2 r ln(M+1) gamma
  double sigma = 0.0;            // homodyne Sigma_r^{(0)}(M)
  long long m = 1;
  double delta = 0.05;
  double log10_N = 0.0;          // samples implied by the concentration bound
  std::string warning;
};

// Parameter selection of the entropy theorem. Requires 0 < epsilon <= 1 and 1 + M > 4 r^2 E^2.
EntropyPlan plan_entropy(int M, int r, double epsilon, double E, long long m = 1, double delta = 0.05);

std::string plan_to_json(const EntropyPlan& plan);

// Exact von Neumann entropy (nats) of a Gaussian state from its symplectic spectrum.
double entropy_reference(const GaussianStateSpec& spec);
// Thermal state with mean photon number nu.
double thermal_entropy(double nu);
// -tr(A ln A) of a Hermitian matrix, negative eigenvalues clipped to zero (oracle use only).
double matrix_entropy(const FockMatrix& A);

// Binary entropy in nats.
double binary_entropy(double x);

// h(gamma) + rE h(gamma / (rE)); requires 0 <= gamma <= rE / (1 + rE).
double continuity_bound(double gamma, int r, double E);

}  // namespace cvshadow
