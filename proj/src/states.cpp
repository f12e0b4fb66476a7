#include "cvshadow/states.hpp"

#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>

#include "cvshadow/quadrature.hpp"
#include "cvshadow/special.hpp"

namespace cvshadow {

FockMatrix::FockMatrix(int modes, int M) : modes_(modes), M_(M) {
  if (modes < 1 || M < 0) throw std::invalid_argument("FockMatrix: invalid shape");
  int d = 1;
  for (int i = 0; i < modes; ++i) d *= (M + 1);
  data_ = Eigen::MatrixXcd::Zero(d, d);
}

FockMatrix::FockMatrix(int modes, int M, Eigen::MatrixXcd data) : FockMatrix(modes, M) {
  if (data.rows() != data_.rows() || data.cols() != data_.cols())
    throw std::invalid_argument("FockMatrix: data shape does not match (M+1)^r");
  data_ = std::move(data);
}

std::vector<int> FockMatrix::multi_index(int flat) const {
  std::vector<int> n(modes_);
  for (int j = modes_ - 1; j >= 0; --j) {
    n[j] = flat % (M_ + 1);
    flat /= (M_ + 1);
  }
  return n;
}

int FockMatrix::flat_index(const std::vector<int>& n) const {
  int flat = 0;
  for (int j = 0; j < modes_; ++j) {
    if (n[j] < 0 || n[j] > M_) throw std::out_of_range("FockMatrix: index above truncation");
    flat = flat * (M_ + 1) + n[j];
  }
  return flat;
}

int FockMatrix::photon_number(int flat) const {
  int total = 0;
  for (int j = 0; j < modes_; ++j) {
    total += flat % (M_ + 1);
    flat /= (M_ + 1);
  }
  return total;
}

FockMatrix kron(const FockMatrix& a, const FockMatrix& b) {
  if (a.truncation() != b.truncation()) throw std::invalid_argument("kron: truncation mismatch");
  FockMatrix out(a.modes() + b.modes(), a.truncation());
  const int db = b.dim();
  for (int i = 0; i < a.dim(); ++i)
    for (int j = 0; j < a.dim(); ++j) out.data().block(i * db, j * db, db, db) = a(i, j) * b.data();
  return out;
}

GaussianStateSpec vacuum_state(int m) {
  if (m < 1) throw std::invalid_argument("vacuum_state: m must be positive");
  return {Eigen::VectorXd::Zero(2 * m), Eigen::MatrixXd::Identity(2 * m, 2 * m)};
}

GaussianStateSpec coherent_state(const PhasePoint& x) {
  const int m = mode_count(x);
  return {x, Eigen::MatrixXd::Identity(2 * m, 2 * m)};
}

GaussianStateSpec thermal_state(double nu) {
  if (nu < 0.0) throw std::invalid_argument("thermal_state: negative mean photon number");
  return {Eigen::VectorXd::Zero(2), (2.0 * nu + 1.0) * Eigen::MatrixXd::Identity(2, 2)};
}

namespace {

Eigen::MatrixXd sym_function(const Eigen::MatrixXd& a, double (*fn)(double)) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (a + a.transpose()));
  Eigen::VectorXd ev = es.eigenvalues();
  for (int i = 0; i < ev.size(); ++i) ev[i] = fn(std::max(ev[i], 1e-12));
  return es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
}

double inv_sqrt(double x) { return 1.0 / std::sqrt(x); }
double plain_sqrt(double x) { return std::sqrt(x); }
double reciprocal(double x) { return 1.0 / x; }

}  // namespace

GaussianStateSpec chain_ground_state(const ChainSpec& spec) {
  const int m = spec.m;
  if (m < 1) throw std::invalid_argument("chain_ground_state: m must be positive");
  if (std::abs(spec.kappa) > 1.0) throw std::invalid_argument("chain_ground_state: |kappa| must be <= 1");
  Eigen::MatrixXd hxx = 0.5 * Eigen::MatrixXd::Identity(m, m);
  if (m > 1) {
    for (int i = 0; i < m; ++i) {
      hxx(i, (i + 1) % m) = -0.25 * spec.kappa;
      hxx((i + 1) % m, i) = -0.25 * spec.kappa;
    }
  }
  if (spec.disorder) {
    std::mt19937_64 rng(spec.disorder_seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    Eigen::MatrixXd a(m, m);
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < m; ++j) a(i, j) = normal(rng);
    const Eigen::MatrixXd q = 0.5 * (a + a.transpose());
    hxx += (q * q) / (2.0 * m);
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> check(hxx, Eigen::EigenvaluesOnly);
  if (check.eigenvalues().minCoeff() <= 1e-12)
    throw std::domain_error("chain_ground_state: h_XX is not positive definite (conditioning)");
  const Eigen::MatrixXd hpp = 0.5 * Eigen::MatrixXd::Identity(m, m);
  const Eigen::MatrixXd h_sqrt = sym_function(hxx, plain_sqrt);
  const Eigen::MatrixXd h_isqrt = sym_function(hxx, inv_sqrt);
  const Eigen::MatrixXd inner = sym_function(h_sqrt * hpp * h_sqrt, plain_sqrt);
  Eigen::MatrixXd x = h_isqrt * inner * h_isqrt;
  x = 0.5 * (x + x.transpose()).eval();
  const Eigen::MatrixXd x_inv = sym_function(x, reciprocal);
  GaussianStateSpec out;
  out.mean = Eigen::VectorXd::Zero(2 * m);
  out.cov = Eigen::MatrixXd::Zero(2 * m, 2 * m);
  out.cov.topLeftCorner(m, m) = x;
  out.cov.bottomRightCorner(m, m) = x_inv;
  return out;
}

int modes_of(const StateSpec& state) {
  if (const auto* g = std::get_if<GaussianStateSpec>(&state)) return g->modes();
  return 1;
}

double cat_norm_plus(const CatStateSpec& spec) {
  return std::sqrt(2.0 * (1.0 + std::exp(-spec.alpha.squaredNorm())));
}

double cat_norm_minus(const CatStateSpec& spec) {
  return std::sqrt(-2.0 * std::expm1(-spec.alpha.squaredNorm()));
}

namespace {

void check_cat(const CatStateSpec& spec) {
  const bool odd_part = spec.logical != CatLogical::plus;
  if (odd_part && spec.alpha.norm() < 1e-6)
    throw std::invalid_argument("cat state: |alpha| too small, odd cat is degenerate");
}

}  // namespace

std::array<double, 2> cat_amplitudes(const CatStateSpec& spec) {
  check_cat(spec);
  const double np = cat_norm_plus(spec);
  if (spec.logical == CatLogical::plus) return {1.0 / np, 1.0 / np};
  const double nm = cat_norm_minus(spec);
  switch (spec.logical) {
    case CatLogical::minus:
      return {1.0 / nm, -1.0 / nm};
    case CatLogical::zero:
      return {(1.0 / np + 1.0 / nm) / std::numbers::sqrt2, (1.0 / np - 1.0 / nm) / std::numbers::sqrt2};
    case CatLogical::one:
      return {(1.0 / np - 1.0 / nm) / std::numbers::sqrt2, (1.0 / np + 1.0 / nm) / std::numbers::sqrt2};
    default:
      break;
  }
  return {1.0 / np, 1.0 / np};
}

Complex cat_char(const CatStateSpec& spec, const ModePoint& u) {
  check_cat(spec);
  const ModePoint a = spec.alpha;
  const ModePoint b = -spec.alpha;
  const Complex diag = char_coherent_dyad(a, a, u) + char_coherent_dyad(b, b, u);
  const Complex cross = char_coherent_dyad(a, b, u) + char_coherent_dyad(b, a, u);
  const double np = cat_norm_plus(spec);
  if (spec.logical == CatLogical::plus) return (diag + cross) / (np * np);
  const double nm = cat_norm_minus(spec);
  if (spec.logical == CatLogical::minus) return (diag - cross) / (nm * nm);
  const double c1 = 0.5 * (1.0 / (np * np) + 1.0 / (nm * nm));
  const double c2 = 0.5 * (1.0 / (np * np) - 1.0 / (nm * nm));
  const double c3 = 1.0 / (np * nm);
  const Complex polarization = char_coherent_dyad(a, a, u) - char_coherent_dyad(b, b, u);
  const double sign = spec.logical == CatLogical::zero ? 1.0 : -1.0;
  return c1 * diag + c2 * cross + sign * c3 * polarization;
}

double cat_position_pdf(const CatStateSpec& spec, const ModePoint& x) {
  const auto w = cat_amplitudes(spec);
  // <x|y> = exp((i/2) x^T Omega y - |x - y|^2 / 4).
  auto overlap = [&](const ModePoint& y) {
    return std::polar(std::exp(-0.25 * (x - y).squaredNorm()), 0.5 * symplectic_product(x, y));
  };
  const Complex amp = w[0] * overlap(spec.alpha) + w[1] * overlap(-spec.alpha);
  return std::norm(amp);
}

Complex char_of(const StateSpec& state, const PhasePoint& u) {
  if (const auto* g = std::get_if<GaussianStateSpec>(&state)) return char_gaussian(*g, u);
  if (u.size() != 2) throw std::invalid_argument("char_of: single-mode state needs a 2-vector");
  const ModePoint v(u[0], u[1]);
  if (const auto* c = std::get_if<CatStateSpec>(&state)) return cat_char(*c, v);
  const auto& f = std::get<FockNumberSpec>(state);
  return char_fock_dyad(f.n, f.n, v);
}

Eigen::VectorXcd coherent_amplitudes(const ModePoint& y, int M) {
  Eigen::VectorXcd c(M + 1);
  const Complex a = alpha_of(y);
  c[0] = std::exp(-0.25 * y.squaredNorm());
  for (int n = 1; n <= M; ++n) c[n] = c[n - 1] * a / std::sqrt(static_cast<double>(n));
  return c;
}

double thermal_population(double nu, int n) {
  return std::exp(n * std::log(nu) - (n + 1) * std::log1p(nu));
}

namespace {

// rho_{jk} = int conj(chi_{|j><k|}(u)) chi_rho(u) d^2u / (2 pi) on a polar grid.
FockMatrix gaussian_fock_by_plancherel(const GaussianStateSpec& g, int M) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(g.cov, Eigen::EigenvaluesOnly);
  const double lmin = es.eigenvalues().minCoeff();
  const double rmax = std::sqrt(160.0 / (1.0 + lmin)) + std::sqrt(2.0 * M + 1.0);
  std::vector<double> rn, rw;
  composite_gauss_legendre(0.0, rmax, static_cast<int>(std::ceil(rmax)) * 2, 24, rn, rw);
  const double tnorm = g.mean.norm();
  const int nphi = 64 + 2 * static_cast<int>(std::ceil(rmax * (tnorm + 1.0))) + 4 * M;
  FockMatrix out(1, M);
  for (std::size_t ir = 0; ir < rn.size(); ++ir) {
    const double r = rn[ir];
    for (int ip = 0; ip < nphi; ++ip) {
      const double phi = 2.0 * std::numbers::pi * ip / nphi;
      PhasePoint u(2);
      u << r * std::cos(phi), r * std::sin(phi);
      const Complex chi = char_gaussian(g, u);
      const double weight = rw[ir] * r * (2.0 * std::numbers::pi / nphi) / (2.0 * std::numbers::pi);
      const ModePoint v(u[0], u[1]);
      for (int j = 0; j <= M; ++j)
        for (int k = 0; k <= M; ++k) out(j, k) += weight * std::conj(char_fock_dyad(j, k, v)) * chi;
    }
  }
  return out;
}

}  // namespace

TruncatedState fock_matrix_of(const StateSpec& state, int M) {
  if (M < 0) throw std::invalid_argument("fock_matrix_of: negative truncation");
  TruncatedState out;
  out.rho = FockMatrix(1, M);
  if (const auto* g = std::get_if<GaussianStateSpec>(&state)) {
    if (g->modes() != 1) throw std::invalid_argument("fock_matrix_of: only one-mode Gaussian states");
    const Eigen::Matrix2d v = g->cov;
    const double iso = 0.5 * (v(0, 0) + v(1, 1));
    const bool isotropic = std::abs(v(0, 1)) < 1e-14 && std::abs(v(0, 0) - v(1, 1)) < 1e-14;
    if (isotropic && std::abs(iso - 1.0) < 1e-14) {
      const Eigen::VectorXcd c = coherent_amplitudes(ModePoint(g->mean[0], g->mean[1]), M);
      out.rho.data() = c * c.adjoint();
    } else if (isotropic && g->mean.norm() == 0.0) {
      const double nu = 0.5 * (iso - 1.0);
      for (int n = 0; n <= M; ++n) out.rho(n, n) = nu == 0.0 ? (n == 0 ? 1.0 : 0.0) : thermal_population(nu, n);
    } else {
      out.rho = gaussian_fock_by_plancherel(*g, M);
    }
  } else if (const auto* c = std::get_if<CatStateSpec>(&state)) {
    const auto w = cat_amplitudes(*c);
    const Eigen::VectorXcd psi =
        w[0] * coherent_amplitudes(c->alpha, M) + w[1] * coherent_amplitudes(-c->alpha, M);
    out.rho.data() = psi * psi.adjoint();
  } else {
    const auto& f = std::get<FockNumberSpec>(state);
    if (f.n < 0) throw std::invalid_argument("fock_matrix_of: negative photon number");
    if (f.n <= M) out.rho(f.n, f.n) = 1.0;
  }
  out.trace_deficit = 1.0 - out.rho.data().trace().real();
  return out;
}

}  // namespace cvshadow
