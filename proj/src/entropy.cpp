#include "cvshadow/entropy.hpp"

#include <cmath>
#include <json.hpp>
#include <stdexcept>

#include "cvshadow/bounds.hpp"
#include "cvshadow/special.hpp"

namespace cvshadow {

namespace {

double log_add(double a, double b) {
  if (a < b) std::swap(a, b);
  if (std::isinf(b) && b < 0) return a;
  return a + std::log1p(std::exp(b - a));
}

void hermitize(Eigen::MatrixXcd& A) { A = 0.5 * (A + A.adjoint()).eval(); }

}  // namespace

double SignedLog::value() const { return sign == 0 ? 0.0 : sign * std::exp(log_magnitude); }

double entropy_poly(const FockMatrix& sigma, int d_p) {
  if (d_p < 2) throw std::invalid_argument("entropy_poly: d_p must be at least 2");
  const int D = sigma.dim();
  Eigen::MatrixXcd X = Eigen::MatrixXcd::Identity(D, D) - sigma.data();
  hermitize(X);
  double h = X.trace().real();
  Eigen::MatrixXcd power = X;
  for (int k = 2; k <= d_p; ++k) {
    power = (power * X).eval();
    hermitize(power);
    h -= power.trace().real() / (static_cast<double>(k) * (k - 1));
  }
  return h;
}

std::vector<SignedLog> entropy_coefficients(int d_p) {
  if (d_p < 2) throw std::invalid_argument("entropy_coefficients: d_p must be at least 2");
  std::vector<SignedLog> out(d_p + 1);
  for (int j = 0; j <= d_p; ++j) {
    double acc = -std::numeric_limits<double>::infinity();
    for (int k = std::max(2, j); k <= d_p; ++k) acc = log_add(acc, log_factorial(k - 2) - log_factorial(k - j));
    out[j] = {acc, (j % 2 == 0) ? 1 : -1};
  }
  return out;
}

double entropy_poly_moment_form(const FockMatrix& sigma, int d_p) {
  const auto C = entropy_coefficients(d_p);
  const int D = sigma.dim();
  Eigen::MatrixXcd S = sigma.data();
  hermitize(S);
  double h = D - S.trace().real();
  Eigen::MatrixXcd power = Eigen::MatrixXcd::Identity(D, D);
  for (int j = 0; j <= d_p; ++j) {
    if (j > 0) {
      power = (power * S).eval();
      hermitize(power);
    }
    h -= C[j].sign * std::exp(C[j].log_magnitude - log_factorial(j)) * power.trace().real();
  }
  return h;
}

EntropyPlan plan_entropy(int M, int r, double epsilon, double E, long long m, double delta) {
  if (M < 0 || r < 1) throw std::invalid_argument("plan_entropy: need M >= 0 and r >= 1");
  if (!(epsilon > 0.0 && epsilon <= 1.0)) throw std::invalid_argument("plan_entropy: epsilon must lie in (0, 1]");
  if (!(E > 0.0)) throw std::invalid_argument("plan_entropy: energy bound must be positive");
  if (!(1.0 + M > 4.0 * r * r * E * E))
    throw std::invalid_argument("plan_entropy: truncation too small for the energy bound (need 1 + M > 4 r^2 E^2)");
  if (m < r || !(delta > 0.0 && delta < 1.0)) throw std::invalid_argument("plan_entropy: need m >= r and delta in (0, 1)");
  EntropyPlan plan;
  plan.M = M;
  plan.r = r;
  plan.epsilon = epsilon;
  plan.E = E;
  plan.m = m;
  plan.delta = delta;
  const double D = std::pow(M + 1.0, r);
  plan.d_p = static_cast<int>(std::ceil(3.0 * D / epsilon - 1e-12 * D / epsilon));
  const double log_eps_prime = 2.0 * std::log(epsilon) - std::log(12.0 * D * std::exp(1.0)) - 4.0 * D / epsilon * std::log(2.0);
  plan.log10_epsilon_prime = log_eps_prime / std::log(10.0);
  plan.epsilon_prime = std::exp(log_eps_prime);
  const double rE = r * E;
  plan.gamma = 2.0 * rE / (std::sqrt(1.0 + M) - 2.0 * rE);
  if (plan.gamma <= rE / (1.0 + rE)) {
    plan.truncation_error = continuity_bound(plan.gamma, r, E) + 2.0 * r * std::log(M + 1.0) * plan.gamma;
  } else {
    plan.truncation_error = std::numeric_limits<double>::infinity();
    plan.warning = "gamma lies outside the continuity-bound range; increase M. ";
  }
  plan.sigma = sigma_homodyne(M, r, 0.0);
  // 2 [m(M+1)]^r exp(-3 N eps'^2 (M+1)^{-2r} / (6 Sigma^2 + 2 (Sigma+1) eps')) <= delta, solved for N.
  const double eps_p = plan.epsilon_prime;
  const double denom = 6.0 * plan.sigma * plan.sigma + 2.0 * (plan.sigma + 1.0) * eps_p;
  const double log_term = std::log(2.0) + r * std::log(static_cast<double>(m) * (M + 1.0)) - std::log(delta);
  const double logN = 2.0 * r * std::log(M + 1.0) + std::log(denom) - std::log(3.0) - 2.0 * log_eps_prime + std::log(log_term);
  plan.log10_N = logN / std::log(10.0);
  if (plan.log10_N > 15.0)
    plan.warning += "the implied sample count is astronomically large (epsilon' decays like 2^{-4(M+1)^r/epsilon})";
  return plan;
}

std::string plan_to_json(const EntropyPlan& p) {
  nlohmann::json j;
  j["M"] = p.M;
  j["r"] = p.r;
  j["epsilon"] = p.epsilon;
  j["E"] = p.E;
  j["d_p"] = p.d_p;
  j["epsilon_prime"] = p.epsilon_prime;
  j["log10_epsilon_prime"] = p.log10_epsilon_prime;
  j["gamma"] = p.gamma;
  j["truncation_error"] = std::isfinite(p.truncation_error) ? nlohmann::json(p.truncation_error) : nlohmann::json(nullptr);
  j["sigma"] = p.sigma;
  j["m"] = p.m;
  j["delta"] = p.delta;
  j["log10_N"] = p.log10_N;
  if (!p.warning.empty()) j["warning"] = p.warning;
  return j.dump(2);
}

double thermal_entropy(double nu) {
  if (!(nu >= 0.0)) throw std::invalid_argument("thermal_entropy: negative mean photon number");
  if (nu == 0.0) return 0.0;
  return (nu + 1.0) * std::log(nu + 1.0) - nu * std::log(nu);
}

double entropy_reference(const GaussianStateSpec& spec) {
  spec.validate();
  double s = 0.0;
  for (double nu : symplectic_eigenvalues(spec.cov)) s += thermal_entropy(std::max(0.0, 0.5 * (nu - 1.0)));
  return s;
}

double matrix_entropy(const FockMatrix& A) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(0.5 * (A.data() + A.data().adjoint()));
  double s = 0.0;
  for (double p : es.eigenvalues())
    if (p > 0.0) s -= p * std::log(p);
  return s;
}

double binary_entropy(double x) {
  if (!(x >= 0.0 && x <= 1.0)) throw std::invalid_argument("binary_entropy: argument outside [0, 1]");
  double h = 0.0;
  if (x > 0.0) h -= x * std::log(x);
  if (x < 1.0) h -= (1.0 - x) * std::log1p(-x);
  return h;
}

double continuity_bound(double gamma, int r, double E) {
  const double rE = r * E;
  if (!(gamma >= 0.0) || gamma > rE / (1.0 + rE) + 1e-15)
    throw std::invalid_argument("continuity_bound: gamma outside [0, rE/(1+rE)]");
  return binary_entropy(gamma) + rE * binary_entropy(std::min(1.0, gamma / rE));
}

}  // namespace cvshadow
