#include "cvshadow/bounds.hpp"

#include <boost/math/special_functions/gamma.hpp>
#include <cmath>
#include <json.hpp>
#include <limits>
#include <numbers>
#include <stdexcept>

#include "cvshadow/quadrature.hpp"
#include "cvshadow/special.hpp"

namespace cvshadow {

namespace {

// log(exp(a) + exp(b)) without overflow.
double log_add(double a, double b) {
  if (a < b) std::swap(a, b);
  if (std::isinf(b) && b < 0) return a;
  return a + std::log1p(std::exp(b - a));
}

double checked_integral(const QuadResult<double>& res, const char* what) {
  if (!res.converged || !std::isfinite(res.value)) throw std::runtime_error(std::string(what) + ": quadrature failed");
  return res.value;
}

struct TensorNorm {
  double value;
  bool exact;
};

// Largest singular value of W (B x ... x B) W with W = diag((1+|n|)^{alpha/2}).
TensorNorm weighted_tensor_norm(const Eigen::MatrixXd& B, int r, double alpha) {
  const int M = static_cast<int>(B.rows()) - 1;
  const double single = Eigen::JacobiSVD<Eigen::MatrixXd>(B).singularValues()(0);
  if (alpha == 0.0) return {std::pow(single, r), true};
  long long dim = 1;
  for (int j = 0; j < r; ++j) dim *= (M + 1);
  if (dim > 1200) return {std::pow(1.0 + r * M, alpha) * std::pow(single, r), false};
  FockMatrix shape(r, M);
  Eigen::MatrixXd full(dim, dim);
  for (int a = 0; a < dim; ++a) {
    const auto na = shape.multi_index(a);
    for (int b = 0; b < dim; ++b) {
      const auto nb = shape.multi_index(b);
      double v = std::pow((1.0 + shape.photon_number(a)) * (1.0 + shape.photon_number(b)), 0.5 * alpha);
      for (int j = 0; j < r; ++j) v *= B(na[j], nb[j]);
      full(a, b) = v;
    }
  }
  return {Eigen::BDCSVD<Eigen::MatrixXd>(full).singularValues()(0), true};
}

void check_shape(int M, int r, double alpha, const char* what) {
  if (M < 0 || r < 1) throw std::invalid_argument(std::string(what) + ": need M >= 0 and r >= 1");
  if (!(alpha >= 0.0)) throw std::invalid_argument(std::string(what) + ": alpha must be non-negative");
}

Eigen::MatrixXd homodyne_printed_block(int M) {
  Eigen::MatrixXd B(M + 1, M + 1);
  const double sqrt_pi = std::sqrt(std::numbers::pi);
  for (int n1 = 0; n1 <= M; ++n1) {
    for (int n2 = 0; n2 <= M; ++n2) {
      const int hi = std::max(n1, n2);
      const int d = std::abs(n1 - n2);
      auto f = [&](double y) {
        return std::pow(sqrt_pi * y, 1 + d) * std::exp(-y * y / (8.0 * std::numbers::pi)) *
               std::abs(laguerre(hi, d, std::numbers::pi * y * y));
      };
      const double ymax = std::sqrt(8.0 * std::numbers::pi * (50.0 + 2.0 * (1 + d + 2 * hi)));
      const double half = checked_integral(integrate_adaptive<double>(f, 0.0, ymax, 0.0, 1e-10), "sigma_homodyne");
      B(n1, n2) = 2.0 * half * std::exp(0.5 * (log_factorial(n2) - log_factorial(n1)));
    }
  }
  return B;
}

Eigen::MatrixXd homodyne_consistent_block(int M) {
  Eigen::MatrixXd B(M + 1, M + 1);
  const double kmax = homodyne_k_max(M);
  for (int n1 = 0; n1 <= M; ++n1) {
    for (int n2 = n1; n2 <= M; ++n2) {
      const int d = n2 - n1;
      auto f = [&](double k) {
        return std::pow(k, 1 + d) * std::exp(-0.25 * k * k) * std::abs(laguerre(n1, d, 0.5 * k * k));
      };
      const double v = checked_integral(integrate_adaptive<double>(f, 0.0, kmax, 0.0, 1e-10), "sigma_homodyne");
      B(n1, n2) = B(n2, n1) = v * sqrt_factorial_ratio(n1, n2) * std::pow(2.0, -0.5 * d);
    }
  }
  return B;
}

Eigen::MatrixXd heterodyne_block(int M, const WindowSpec& w) {
  Eigen::MatrixXd B(M + 1, M + 1);
  for (int n1 = 0; n1 <= M; ++n1) {
    for (int n2 = n1; n2 <= M; ++n2) {
      const int d = n2 - n1;
      auto f = [&](double rho) {
        return rho * std::pow(rho / std::sqrt(2.0), d) * std::abs(laguerre(n1, d, 0.5 * rho * rho)) * w(rho);
      };
      const double v = checked_integral(integrate_adaptive<double>(f, 0.0, w.eta, 0.0, 1e-10), "sigma_heterodyne") +
                       checked_integral(integrate_adaptive<double>(f, w.eta, w.R, 0.0, 1e-10), "sigma_heterodyne");
      B(n1, n2) = B(n2, n1) = v * sqrt_factorial_ratio(n1, n2);
    }
  }
  return B;
}

// Exact ceiling of a real that may carry floating-point noise around an integer.
double stable_ceil(double x) {
  const double rounded = std::round(x);
  if (std::abs(x - rounded) <= 1e-12 * std::max(1.0, std::abs(x))) return rounded;
  return std::ceil(x);
}

void check_confidence(double epsilon, double delta) {
  if (!(epsilon > 0.0 && epsilon < 1.0)) throw std::invalid_argument("required_samples: epsilon must lie in (0, 1)");
  if (!(delta > 0.0 && delta < 1.0)) throw std::invalid_argument("required_samples: delta must lie in (0, 1)");
}

// Fills N_required and log10_N from the common sample-count formula.
void fill_sample_count(BoundReport& rep, double extra) {
  const int M = rep.M_chosen;
  const int r = rep.r;
  const double eps = rep.epsilon;
  const double sigma = rep.sigma_value;
  const double bracket = 24.0 * sigma * sigma + 4.0 * (sigma + rep.profile.E_alpha + extra) * eps;
  const double log_term = rep.L ? std::log(2.0 * static_cast<double>(*rep.L)) + r * std::log(M + 1.0) - std::log(rep.delta)
                                : std::log(2.0) + r * std::log(static_cast<double>(rep.m) * (M + 1.0)) - std::log(rep.delta);
  const double logN = 2.0 * r * std::log(M + 1.0) - std::log(3.0 * eps * eps) + std::log(bracket) + std::log(log_term);
  rep.log10_N = logN / std::log(10.0);
  rep.N_required = std::ceil(std::exp(logN));
}

}  // namespace

void MomentProfile::validate() const {
  if (!(alpha >= 0.0)) throw std::invalid_argument("MomentProfile: alpha must be non-negative");
  if (!(alpha < n)) throw std::invalid_argument("MomentProfile: need alpha < n");
  if (!(E_n >= 1.0) || !(E_alpha >= 1.0)) throw std::invalid_argument("MomentProfile: moments must be >= 1");
}

double sobolev_norm(const FockMatrix& T, double alpha) {
  if (!(alpha >= 0.0)) throw std::invalid_argument("sobolev_norm: alpha must be non-negative");
  Eigen::VectorXd w(T.dim());
  for (int i = 0; i < T.dim(); ++i) w(i) = std::pow(1.0 + T.photon_number(i), 0.5 * alpha);
  const Eigen::MatrixXcd weighted = w.asDiagonal() * T.data() * w.asDiagonal();
  return Eigen::BDCSVD<Eigen::MatrixXcd>(weighted).singularValues().sum();
}

double log_delta0(double eta, int M, double alpha, int m) {
  if (!(eta >= 0.0) || M < 0 || m < 0 || !(alpha >= 0.0)) throw std::invalid_argument("delta0: invalid arguments");
  const double x = 0.5 * eta * eta;
  double log_sum = 0.0;  // p = 0 term
  for (int p = 1; p <= 2 * M; ++p) {
    if (x == 0.0) break;
    log_sum = log_add(log_sum, p * std::log(x) - log_factorial(p));
  }
  return 2.0 * alpha * std::log(m * static_cast<double>(M) + 1.0) + m * std::log(M + 1.0) + m * M * std::log(3.0) -
         m * eta * eta / 4.0 + 0.5 * m * log_sum;
}

double delta0_gamma_form(double eta, int M, double alpha, int m) {
  if (!(eta >= 0.0) || M < 0 || m < 0 || !(alpha >= 0.0)) throw std::invalid_argument("delta0: invalid arguments");
  const double q = boost::math::gamma_q(2.0 * M + 1.0, 0.5 * eta * eta);
  return std::pow(m * static_cast<double>(M) + 1.0, 2.0 * alpha) * std::pow(M + 1.0, m) * std::pow(3.0, m * M) *
         std::pow(q, 0.5 * m);
}

double delta0(double eta, int M, double alpha, int m) {
  const double value = std::exp(log_delta0(eta, M, alpha, m));
  const double other = delta0_gamma_form(eta, M, alpha, m);
  if (value > std::numeric_limits<double>::min() && std::isfinite(value) && std::isfinite(other) &&
      std::abs(value - other) > 1e-10 * value)
    throw std::logic_error("delta0: closed forms disagree");
  return value;
}

double truncation_error_bound(double E_n, int M, double alpha, double n, TruncationBase base) {
  if (!(alpha < n)) throw std::invalid_argument("truncation_error_bound: need alpha < n");
  if (M < 0) throw std::invalid_argument("truncation_error_bound: negative truncation");
  const double b = base == TruncationBase::m_plus_two ? M + 2.0 : M + 1.0;
  return 2.0 * std::pow(b, -(n - alpha) / 2.0) * E_n;
}

double sigma_homodyne(int M, int r, double alpha) {
  check_shape(M, r, alpha, "sigma_homodyne");
  return weighted_tensor_norm(homodyne_printed_block(M), r, alpha).value;
}

double sigma_homodyne_consistent(int M, int r, double alpha) {
  check_shape(M, r, alpha, "sigma_homodyne_consistent");
  return weighted_tensor_norm(homodyne_consistent_block(M), r, alpha).value;
}

double sigma_heterodyne(int M, int r, double alpha, const WindowSpec& w) {
  check_shape(M, r, alpha, "sigma_heterodyne");
  w.validate();
  return weighted_tensor_norm(heterodyne_block(M, w), r, alpha).value;
}

std::string report_to_json(const BoundReport& rep) {
  nlohmann::json j;
  j["protocol"] = to_string(rep.protocol);
  j["feasible"] = rep.feasible;
  if (!rep.message.empty()) j["message"] = rep.message;
  j["M_chosen"] = rep.M_chosen;
  j["N_required"] = rep.N_required;
  j["log10_N"] = rep.log10_N;
  j["delta0_value"] = rep.delta0_value;
  j["sigma_value"] = rep.sigma_value;
  j["sigma_exact"] = rep.sigma_exact;
  if (rep.protocol == Protocol::heterodyne) j["eta_chosen"] = rep.eta_chosen;
  nlohmann::json in;
  in["n"] = rep.profile.n;
  in["alpha"] = rep.profile.alpha;
  in["E_n"] = rep.profile.E_n;
  in["E_alpha"] = rep.profile.E_alpha;
  in["r"] = rep.r;
  in["epsilon"] = rep.epsilon;
  in["delta"] = rep.delta;
  in["m"] = rep.m;
  if (rep.L) in["L"] = *rep.L;
  if (rep.window) in["window"] = {{"eta", rep.window->eta}, {"R", rep.window->R}, {"profile", rep.window->profile}};
  j["inputs"] = in;
  return j.dump(2);
}

BoundReport required_samples_homodyne(const MomentProfile& profile, int r, double epsilon, double delta, long long m,
                                      std::optional<long long> L) {
  profile.validate();
  check_confidence(epsilon, delta);
  if (r < 1 || m < 1 || (L && *L < 1)) throw std::invalid_argument("required_samples_homodyne: r, m, L must be >= 1");
  BoundReport rep;
  rep.protocol = Protocol::homodyne;
  rep.profile = profile;
  rep.r = r;
  rep.epsilon = epsilon;
  rep.delta = delta;
  rep.m = m;
  rep.L = L;
  const double Mreal = stable_ceil(std::pow(4.0 * profile.E_n / epsilon, 2.0 / (profile.n - profile.alpha)));
  if (Mreal > 2000) throw std::invalid_argument("required_samples_homodyne: truncation above 2000 modes is unsupported");
  rep.M_chosen = static_cast<int>(Mreal);
  const auto norm = weighted_tensor_norm(homodyne_printed_block(rep.M_chosen), r, profile.alpha);
  rep.sigma_value = norm.value;
  rep.sigma_exact = norm.exact;
  fill_sample_count(rep, 0.0);
  return rep;
}

std::optional<int> heterodyne_truncation(const MomentProfile& profile, int r, double epsilon, double eta, int cap) {
  profile.validate();
  for (int Mp = 0; Mp <= cap && eta * eta > 2.0 * Mp * Mp; ++Mp) {
    const double trunc = 2.0 * std::pow(1.0 + Mp, (profile.alpha - profile.n) / 2.0) * profile.E_n;
    if (trunc >= epsilon / 2.0) continue;
    // Compare delta_0 against the remaining budget in the log domain; delta_0 itself may underflow.
    if (log_delta0(eta, Mp, profile.alpha / 2.0, r) <= std::log(epsilon / 2.0 - trunc)) return Mp;
  }
  return std::nullopt;
}

BoundReport required_samples_heterodyne(const MomentProfile& profile, int r, double epsilon, double delta,
                                        long long m, const WindowSpec& w, std::optional<long long> L) {
  profile.validate();
  check_confidence(epsilon, delta);
  w.validate();
  if (r < 1 || m < 1 || (L && *L < 1)) throw std::invalid_argument("required_samples_heterodyne: r, m, L must be >= 1");
  BoundReport best;
  best.protocol = Protocol::heterodyne;
  best.feasible = false;
  best.profile = profile;
  best.r = r;
  best.epsilon = epsilon;
  best.delta = delta;
  best.m = m;
  best.L = L;
  best.window = w;
  const double lo = 2.02;
  const double hi = 0.99 * w.R;
  if (!(hi > lo)) {
    best.message = "window radius too small for the eta scan";
    return best;
  }
  constexpr int kGrid = 64;
  for (int i = 0; i < kGrid; ++i) {
    const double eta = lo * std::pow(hi / lo, static_cast<double>(i) / (kGrid - 1));
    const auto M = heterodyne_truncation(profile, r, epsilon, eta);
    if (!M) continue;
    BoundReport rep = best;
    rep.feasible = true;
    rep.eta_chosen = eta;
    rep.M_chosen = *M;
    rep.window = WindowSpec{eta, w.R, w.profile};
    const auto norm = weighted_tensor_norm(heterodyne_block(*M, *rep.window), r, profile.alpha);
    rep.sigma_value = norm.value;
    rep.sigma_exact = norm.exact;
    rep.delta0_value = std::exp(log_delta0(eta, *M, profile.alpha / 2.0, r));
    fill_sample_count(rep, rep.delta0_value);
    if (!best.feasible || rep.log10_N < best.log10_N) best = rep;
  }
  if (!best.feasible) best.message = "no truncation satisfies the accuracy target on the eta grid";
  return best;
}

double bernstein_tail(double N, double epsilon, double Sigma, double Rbound, double dim) {
  return 2.0 * dim * std::exp(-N * epsilon * epsilon / (2.0 * Sigma * Sigma + 2.0 * Rbound * epsilon / 3.0));
}

double bernstein_samples(double epsilon, double delta, double Sigma, double Rbound, double dim) {
  if (!(epsilon > 0.0) || !(delta > 0.0) || !(Sigma > 0.0) || !(Rbound > 0.0) || !(dim >= 1.0))
    throw std::invalid_argument("bernstein_samples: arguments must be positive");
  const double n = (2.0 * Sigma * Sigma + 2.0 * Rbound * epsilon / 3.0) / (epsilon * epsilon) *
                   std::log(2.0 * dim / delta);
  return std::max(1.0, std::ceil(n));
}

}  // namespace cvshadow
