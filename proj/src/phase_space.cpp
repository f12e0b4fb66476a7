#include "cvshadow/phase_space.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "cvshadow/special.hpp"

namespace cvshadow {

int mode_count(const PhasePoint& x) {
  if (x.size() % 2 != 0) throw std::invalid_argument("phase-space vector must have even length");
  return static_cast<int>(x.size() / 2);
}

ModePoint mode_component(const PhasePoint& x, int j) {
  const int m = mode_count(x);
  return ModePoint(x[j], x[m + j]);
}

PhasePoint apply_omega(const PhasePoint& x) {
  const int m = mode_count(x);
  PhasePoint out(2 * m);
  out.head(m) = x.tail(m);
  out.tail(m) = -x.head(m);
  return out;
}

double symplectic_product(const PhasePoint& u, const PhasePoint& x) {
  const int m = mode_count(u);
  if (x.size() != u.size()) throw std::invalid_argument("symplectic_product: dimension mismatch");
  return u.head(m).dot(x.tail(m)) - u.tail(m).dot(x.head(m));
}

double symplectic_product(const ModePoint& u, const ModePoint& x) {
  return u[0] * x[1] - u[1] * x[0];
}

Eigen::MatrixXd symplectic_form(int m) {
  Eigen::MatrixXd omega = Eigen::MatrixXd::Zero(2 * m, 2 * m);
  omega.topRightCorner(m, m).setIdentity();
  omega.bottomLeftCorner(m, m) = -Eigen::MatrixXd::Identity(m, m);
  return omega;
}

Eigen::Matrix2d Rotation2::matrix() const {
  Eigen::Matrix2d r;
  r << std::cos(theta), -std::sin(theta), std::sin(theta), std::cos(theta);
  return r;
}

Complex alpha_of(const ModePoint& u) {
  return Complex(u[0], u[1]) / std::numbers::sqrt2;
}

Complex char_coherent_dyad(const ModePoint& x, const ModePoint& y, const ModePoint& u) {
  const ModePoint upx = u + x;
  const double phase = -0.5 * symplectic_product(u, x) + 0.5 * symplectic_product(y, upx);
  const double decay = -0.25 * (upx - y).squaredNorm();
  return std::polar(std::exp(decay), phase);
}

Complex char_fock_dyad(int n1, int n2, const ModePoint& u) {
  if (n1 < 0 || n2 < 0) throw std::invalid_argument("char_fock_dyad: negative photon number");
  const int k = std::min(n1, n2);
  const int j = std::max(n1, n2);
  const int d = j - k;
  const double r2 = u.squaredNorm();
  const double lag = laguerre(k, d, 0.5 * r2);
  if (d > 0 && r2 == 0.0) return Complex(0.0, 0.0);
  double log_mag = 0.5 * (log_factorial(k) - log_factorial(j)) - 0.25 * r2;
  if (d > 0) log_mag += d * 0.5 * std::log(0.5 * r2);
  const double phi = std::atan2(u[1], u[0]);
  // n2 >= n1: alpha^d; otherwise (-conj(alpha))^d.
  const double phase = (n2 >= n1) ? d * phi : d * (std::numbers::pi - phi);
  return (std::exp(log_mag) * lag) * std::polar(1.0, phase);
}

Complex char_fock_dyad(const std::vector<int>& n1, const std::vector<int>& n2, const PhasePoint& u) {
  const int m = mode_count(u);
  if (static_cast<int>(n1.size()) != m || static_cast<int>(n2.size()) != m)
    throw std::invalid_argument("char_fock_dyad: multi-index length mismatch");
  Complex out(1.0, 0.0);
  for (int j = 0; j < m; ++j) out *= char_fock_dyad(n1[j], n2[j], mode_component(u, j));
  return out;
}

Eigen::MatrixXcd displacement_oracle(const ModePoint& u, int M_osc) {
  using LComplex = std::complex<long double>;
  const int n = M_osc + 1;
  const LComplex a(static_cast<long double>(u[0]) / std::sqrt(2.0L),
                   static_cast<long double>(u[1]) / std::sqrt(2.0L));
  // C = exp(alpha a^dagger): C_{jl} = alpha^{j-l} / (j-l)! * sqrt(j!/l!) for j >= l.
  // A = exp(-conj(alpha) a): A_{lk} = (-conj(alpha))^{k-l} / (k-l)! * sqrt(k!/l!) for k >= l.
  std::vector<long double> lf(n + 1);
  lf[0] = 0.0L;
  for (int i = 1; i <= n; ++i) lf[i] = lf[i - 1] + std::log(static_cast<long double>(i));
  std::vector<LComplex> apow(n), bpow(n);
  apow[0] = bpow[0] = LComplex(1.0L, 0.0L);
  const LComplex b = -std::conj(a);
  for (int i = 1; i < n; ++i) {
    apow[i] = apow[i - 1] * a;
    bpow[i] = bpow[i - 1] * b;
  }
  auto coeff = [&](int hi, int lo) {
    return std::exp(0.5L * (lf[hi] - lf[lo]) - lf[hi - lo]);
  };
  const long double pref = std::exp(-0.25L * static_cast<long double>(u.squaredNorm()));
  Eigen::MatrixXcd out(n, n);
  for (int j = 0; j < n; ++j) {
    for (int k = 0; k < n; ++k) {
      LComplex acc(0.0L, 0.0L);
      for (int l = 0; l <= std::min(j, k); ++l) {
        acc += apow[j - l] * coeff(j, l) * bpow[k - l] * coeff(k, l);
      }
      acc *= pref;
      out(j, k) = Complex(static_cast<double>(acc.real()), static_cast<double>(acc.imag()));
    }
  }
  return out;
}

void GaussianStateSpec::validate() const {
  const int n = static_cast<int>(mean.size());
  if (n % 2 != 0 || n == 0) throw std::invalid_argument("GaussianStateSpec: mean must have even length");
  if (cov.rows() != n || cov.cols() != n) throw std::invalid_argument("GaussianStateSpec: covariance shape");
  if ((cov - cov.transpose()).cwiseAbs().maxCoeff() > 1e-10 * (1.0 + cov.cwiseAbs().maxCoeff()))
    throw std::invalid_argument("GaussianStateSpec: covariance not symmetric");
  const int m = n / 2;
  if (m <= 64) {
    Eigen::MatrixXcd form = cov.cast<Complex>() + Complex(0.0, 1.0) * symplectic_form(m).cast<Complex>();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(form, Eigen::EigenvaluesOnly);
    if (es.eigenvalues().minCoeff() < -1e-10)
      throw std::invalid_argument("GaussianStateSpec: covariance violates the uncertainty relation");
  } else {
    const Eigen::VectorXd nu = symplectic_eigenvalues(cov);
    if (nu.minCoeff() < 1.0 - 1e-8)
      throw std::invalid_argument("GaussianStateSpec: covariance violates the uncertainty relation");
  }
}

GaussianStateSpec GaussianStateSpec::reduce(const std::vector<int>& modes_in) const {
  const int m = modes();
  const int r = static_cast<int>(modes_in.size());
  GaussianStateSpec out;
  out.mean.resize(2 * r);
  out.cov.resize(2 * r, 2 * r);
  std::vector<int> idx(2 * r);
  for (int a = 0; a < r; ++a) {
    if (modes_in[a] < 0 || modes_in[a] >= m) throw std::out_of_range("reduce: mode index out of range");
    idx[a] = modes_in[a];
    idx[r + a] = m + modes_in[a];
  }
  for (int a = 0; a < 2 * r; ++a) {
    out.mean[a] = mean[idx[a]];
    for (int b = 0; b < 2 * r; ++b) out.cov(a, b) = cov(idx[a], idx[b]);
  }
  return out;
}

Complex char_gaussian(const GaussianStateSpec& spec, const PhasePoint& u) {
  if (u.size() != spec.mean.size()) throw std::invalid_argument("char_gaussian: dimension mismatch");
  const PhasePoint w = apply_omega(u);
  const double quad = w.dot(spec.cov * w);
  return std::polar(std::exp(-0.25 * quad), -symplectic_product(u, spec.mean));
}

Eigen::VectorXd symplectic_eigenvalues(const Eigen::MatrixXd& cov) {
  const int m = static_cast<int>(cov.rows() / 2);
  // V^{1/2} Omega^T V Omega V^{1/2} has eigenvalues nu_k^2, each twice.
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> sv(cov);
  const Eigen::MatrixXd sq = sv.eigenvectors() * sv.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal() *
                             sv.eigenvectors().transpose();
  const Eigen::MatrixXd omega = symplectic_form(m);
  const Eigen::MatrixXd k = sq * omega.transpose() * cov * omega * sq;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (k + k.transpose()), Eigen::EigenvaluesOnly);
  Eigen::VectorXd all = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  Eigen::VectorXd out(m);
  for (int i = 0; i < m; ++i) out[i] = all[2 * i];
  return out;
}

std::size_t CharGrid::size() const {
  std::size_t n = 1;
  for (int s : shape) n *= static_cast<std::size_t>(s);
  return n;
}

std::vector<double> CharGrid::point(std::size_t flat_index) const {
  const std::size_t dims = shape.size();
  std::vector<double> p(dims);
  for (std::size_t a = dims; a-- > 0;) {
    const std::size_t i = flat_index % static_cast<std::size_t>(shape[a]);
    flat_index /= static_cast<std::size_t>(shape[a]);
    p[a] = origin[a] + step[a] * static_cast<double>(i);
  }
  return p;
}

void CharGrid::validate() const {
  if (origin.size() != shape.size() || step.size() != shape.size())
    throw std::invalid_argument("CharGrid: axis metadata mismatch");
  if (values.size() != size()) throw std::invalid_argument("CharGrid: value count does not match shape");
  for (const Complex& v : values)
    if (!std::isfinite(v.real()) || !std::isfinite(v.imag())) throw std::invalid_argument("CharGrid: non-finite value");
}

CharGrid make_grid(const std::vector<double>& lo, const std::vector<double>& hi, int points_per_axis,
                   const std::string& provenance) {
  if (lo.size() != hi.size() || points_per_axis < 2) throw std::invalid_argument("make_grid: bad axes");
  CharGrid g;
  g.origin = lo;
  g.shape.assign(lo.size(), points_per_axis);
  for (std::size_t a = 0; a < lo.size(); ++a) g.step.push_back((hi[a] - lo[a]) / (points_per_axis - 1));
  g.values.assign(g.size(), Complex(0.0, 0.0));
  g.provenance = provenance;
  return g;
}

}  // namespace cvshadow
