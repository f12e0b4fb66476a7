#pragma once

#include <optional>
#include <string>

#include "cvshadow/shadow.hpp"

namespace cvshadow {

// Moment data of the unknown state: E_n = max_{|A|<=r} tr(rho_A H_r^n) and the same for alpha.
struct MomentProfile {
  double n = 2.0;
  double alpha = 0.0;
  double E_n = 1.0;
  double E_alpha = 1.0;

  void validate() const;
};

// ||H^{alpha/2} T H^{alpha/2}||_1 with H = 1 + total photon number.
double sobolev_norm(const FockMatrix& T, double alpha);

// delta_0(eta, M, alpha, m) = (mM+1)^{2 alpha} (M+1)^m 3^{mM} e^{-m eta^2/4} (sum_{p<=2M} eta^{2p}/(2^p p!))^{m/2},
// evaluated in the log domain. Throws std::logic_error if the incomplete-gamma form disagrees
// by more than 1e-10 relative.
double delta0(double eta, int M, double alpha, int m);
double log_delta0(double eta, int M, double alpha, int m);
// Same quantity written with the regularized upper incomplete gamma Q(2M+1, eta^2/2).
double delta0_gamma_form(double eta, int M, double alpha, int m);

enum class TruncationBase { m_plus_two, m_plus_one };

// 2 (M+2)^{-(n-alpha)/2} E_n. The m_plus_one base is the weaker variant with (1+M).
double truncation_error_bound(double E_n, int M, double alpha, double n,
                              TruncationBase base = TruncationBase::m_plus_two);

// Operator norm of the homodyne almost-sure bound matrix, evaluated as printed
// (integrand |sqrt(pi) y|^{1+d} e^{-y^2/(8 pi)} |L_{max}^{(d)}(pi y^2)|).
double sigma_homodyne(int M, int r, double alpha);

// The same bound expressed with the normalization used by build_homodyne_shadow:
// per-mode entries sqrt(m!/M!) 2^{-d/2} int_0^inf k^{1+d} e^{-k^2/4} |L_m^{(d)}(k^2/2)| dk.
double sigma_homodyne_consistent(int M, int r, double alpha);

// Operator norm of K_r(M, R), integrated over the per-mode window disks.
double sigma_heterodyne(int M, int r, double alpha, const WindowSpec& w);

struct BoundReport {
  Protocol protocol = Protocol::homodyne;
  bool feasible = true;
  std::string message;
  int M_chosen = 0;
  double N_required = 0.0;  // ceiling, may exceed 2^53
  double log10_N = 0.0;
  double delta0_value = 0.0;
  double sigma_value = 0.0;
  bool sigma_exact = true;  // false when the weighted norm was replaced by its product upper bound
  double eta_chosen = 0.0;
  // Inputs.
  MomentProfile profile;
  int r = 1;
  double epsilon = 0.0;
  double delta = 0.0;
  long long m = 1;
  std::optional<long long> L;
  std::optional<WindowSpec> window;
};

std::string report_to_json(const BoundReport& report);

BoundReport required_samples_homodyne(const MomentProfile& profile, int r, double epsilon, double delta, long long m,
                                      std::optional<long long> L = std::nullopt);

// Smallest M' with eta^2 > 2 M'^2 and 2 (1+M')^{(alpha-n)/2} E_n + delta_0(eta, M', alpha/2, r) <= epsilon/2.
std::optional<int> heterodyne_truncation(const MomentProfile& profile, int r, double epsilon, double eta,
                                         int cap = 200);

// Minimizes the sample count over 64 logarithmic eta values in [2.02, 0.99 R] with R = w.R.
BoundReport required_samples_heterodyne(const MomentProfile& profile, int r, double epsilon, double delta,
                                        long long m, const WindowSpec& w, std::optional<long long> L = std::nullopt);

// 2 dim exp(-N eps^2 / (2 Sigma^2 + 2 R eps / 3)); returned raw, may exceed 1.
double bernstein_tail(double N, double epsilon, double Sigma, double Rbound, double dim);

// Smallest N with bernstein_tail(N, ...) <= delta.
double bernstein_samples(double epsilon, double delta, double Sigma, double Rbound, double dim);

}  // namespace cvshadow
