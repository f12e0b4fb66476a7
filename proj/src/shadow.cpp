#include "cvshadow/shadow.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>
#include <stdexcept>

#include "cvshadow/parallel.hpp"
#include "cvshadow/qmc.hpp"
#include "cvshadow/quadrature.hpp"
#include "cvshadow/shadow_kernel.hpp"
#include "cvshadow/special.hpp"

namespace cvshadow {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

double smoothstep(int profile, double t) {
  switch (profile) {
    case 1:
      return t;
    case 3:
      return t * t * (3.0 - 2.0 * t);
    default:
      return t * t * t * (t * (6.0 * t - 15.0) + 10.0);
  }
}

// Radial nodes for integrals over the window disk: coarser panels on the flat part, finer on the edge.
void window_radial_nodes(const WindowSpec& w, std::vector<double>& r, std::vector<double>& wr) {
  r.clear();
  wr.clear();
  composite_gauss_legendre(0.0, w.eta, std::max(1, static_cast<int>(std::ceil(w.eta / 0.5))), 16, r, wr);
  composite_gauss_legendre(w.eta, w.R, std::max(1, static_cast<int>(std::ceil((w.R - w.eta) / 0.25))), 16, r, wr);
}

// Single-mode heterodyne integrand weight conj(chi_{n1 n2}(u)) xi e^{|u|^2/4 - i u^T Omega x} / (2 pi).
Complex heterodyne_integrand(int n1, int n2, const ModePoint& u, const ModePoint& x, const WindowSpec& w) {
  const double radius = u.norm();
  const double xi = w(radius);
  if (xi == 0.0) return {0.0, 0.0};
  const Complex chi = std::conj(char_fock_dyad(n1, n2, u));
  return chi * std::polar(xi * std::exp(0.25 * radius * radius) / kTwoPi, -symplectic_product(u, x));
}

Complex heterodyne_single_mode(int n1, int n2, const ModePoint& x, const WindowSpec& w, const QuadratureRule& rule) {
  if (rule.kind == QuadratureRule::Kind::adaptive_1d) {
    const double tol = rule.tolerance;
    auto radial = [&](double r) -> Complex {
      if (r == 0.0) return {0.0, 0.0};
      auto angular = [&](double phi) -> Complex {
        const ModePoint u(r * std::cos(phi), r * std::sin(phi));
        return heterodyne_integrand(n1, n2, u, x, w);
      };
      const auto inner = integrate_adaptive<Complex>(angular, 0.0, kTwoPi, 1e-3 * tol, 1e-3 * tol, rule.budget);
      if (!inner.converged) throw std::runtime_error("heterodyne_shadow_entry: angular quadrature did not converge");
      return inner.value * r;
    };
    Complex total{};
    for (const auto& [a, b] : {std::pair{0.0, w.eta}, std::pair{w.eta, w.R}}) {
      const auto res = integrate_adaptive<Complex>(radial, a, b, tol, tol, rule.budget);
      if (!res.converged) throw std::runtime_error("heterodyne_shadow_entry: radial quadrature did not converge");
      total += res.value;
    }
    return total;
  }
  // Polar tensor grid: Gauss-Legendre in r, trapezoid in phi (spectrally accurate for periodic integrands).
  std::vector<double> r, wr;
  window_radial_nodes(w, r, wr);
  const int d = std::abs(n2 - n1);
  const int nphi = 64 + 2 * static_cast<int>(std::ceil(w.R * (x.norm() + 1.0))) + 2 * d;
  Complex total{};
  for (std::size_t i = 0; i < r.size(); ++i) {
    Complex ring{};
    for (int k = 0; k < nphi; ++k) {
      const double phi = kTwoPi * k / nphi;
      ring += heterodyne_integrand(n1, n2, ModePoint(r[i] * std::cos(phi), r[i] * std::sin(phi)), x, w);
    }
    total += ring * (wr[i] * r[i] * kTwoPi / nphi);
  }
  return total;
}

void check_subset(const std::vector<int>& A, int modes) {
  if (A.empty()) throw std::invalid_argument("shadow: mode subset A is empty");
  std::set<int> seen;
  for (int j : A) {
    if (j < 0 || j >= modes) throw std::out_of_range("shadow: mode index outside the record");
    if (!seen.insert(j).second) throw std::invalid_argument("shadow: repeated mode in A");
  }
}

FockMatrix tensor_modes(const std::vector<Eigen::MatrixXcd>& per_mode, int M) {
  FockMatrix out(1, M, per_mode[0]);
  for (std::size_t j = 1; j < per_mode.size(); ++j) out = kron(out, FockMatrix(1, M, per_mode[j]));
  return out;
}

// Running mean and second central moments (real and imaginary parts separately).
struct Moments {
  std::size_t n = 0;
  Eigen::MatrixXcd mean;
  Eigen::MatrixXd m2_re, m2_im;

  void add(const Eigen::MatrixXcd& x) {
    if (n == 0) {
      mean = Eigen::MatrixXcd::Zero(x.rows(), x.cols());
      m2_re = Eigen::MatrixXd::Zero(x.rows(), x.cols());
      m2_im = Eigen::MatrixXd::Zero(x.rows(), x.cols());
    }
    ++n;
    const Eigen::MatrixXcd delta = x - mean;
    mean += delta / static_cast<double>(n);
    const Eigen::MatrixXcd delta2 = x - mean;
    m2_re.array() += delta.real().array() * delta2.real().array();
    m2_im.array() += delta.imag().array() * delta2.imag().array();
  }

  void merge(const Moments& o) {
    if (o.n == 0) return;
    if (n == 0) {
      *this = o;
      return;
    }
    const double na = static_cast<double>(n);
    const double nb = static_cast<double>(o.n);
    const double nt = na + nb;
    const Eigen::MatrixXcd delta = o.mean - mean;
    mean += delta * (nb / nt);
    m2_re.array() += o.m2_re.array() + delta.real().array().square() * (na * nb / nt);
    m2_im.array() += o.m2_im.array() + delta.imag().array().square() * (na * nb / nt);
    n += o.n;
  }
};

ShadowAverage finish(const Moments& mom, int modes_count, int M, Protocol protocol, std::vector<int> modes) {
  ShadowAverage out;
  out.count = mom.n;
  out.protocol = protocol;
  out.modes = std::move(modes);
  out.mean = FockMatrix(modes_count, M, mom.mean);
  const double n = static_cast<double>(mom.n);
  if (mom.n > 1) {
    out.stderr_re = (mom.m2_re / ((n - 1.0) * n)).array().sqrt();
    out.stderr_im = (mom.m2_im / ((n - 1.0) * n)).array().sqrt();
  } else {
    out.stderr_re = Eigen::MatrixXd::Zero(mom.mean.rows(), mom.mean.cols());
    out.stderr_im = out.stderr_re;
  }
  out.stderr_abs = (out.stderr_re.array().square() + out.stderr_im.array().square()).sqrt();
  return out;
}

constexpr std::size_t kAverageBlock = 256;

}  // namespace

double WindowSpec::operator()(double radius) const {
  if (radius <= eta) return 1.0;
  if (radius >= R) return 0.0;
  return 1.0 - smoothstep(profile, (radius - eta) / (R - eta));
}

void WindowSpec::validate() const {
  if (!(eta > 0.0) || !(R > eta) || !std::isfinite(R)) throw std::invalid_argument("WindowSpec: need 0 < eta < R");
  if (profile != 1 && profile != 3 && profile != 5)
    throw std::invalid_argument("WindowSpec: profile must be 1, 3 or 5");
}

WindowSpec WindowSpec::default_for(int M) {
  const double eta = std::max(6.0, std::sqrt(2.0) * M + 1.0);
  return {eta, eta + 2.0, 5};
}

void QuadratureRule::validate() const {
  if (budget <= 0) throw std::invalid_argument("QuadratureRule: budget must be positive");
  if (!(tolerance > 0.0)) throw std::invalid_argument("QuadratureRule: tolerance must be positive");
}

Complex windowed_dyad_char(const std::vector<int>& n1, const std::vector<int>& n2, const PhasePoint& u,
                           const WindowSpec& w) {
  Complex value = char_fock_dyad(n1, n2, u);
  for (int j = 0; j < mode_count(u); ++j) value *= w(mode_component(u, j).norm());
  return value;
}

double homodyne_k_max(int M) { return 2.0 * std::sqrt(2.0 * (1.0 + 2.0 * M)) + 14.0; }

Complex homodyne_shadow_entry(int n1, int n2, double theta, double q, const QuadratureRule& rule) {
  if (n1 < 0 || n2 < 0) throw std::invalid_argument("homodyne_shadow_entry: negative Fock index");
  if (!std::isfinite(theta) || !std::isfinite(q)) throw std::invalid_argument("homodyne_shadow_entry: non-finite outcome");
  rule.validate();
  const ModePoint e(-std::sin(theta), std::cos(theta));
  auto g = [&](double k) -> Complex {
    const Complex plus = std::polar(1.0, k * q) * std::conj(char_fock_dyad(n1, n2, ModePoint(k * e)));
    const Complex minus = std::polar(1.0, -k * q) * std::conj(char_fock_dyad(n1, n2, ModePoint(-k * e)));
    return 0.5 * k * (plus + minus);
  };
  const double kmax = homodyne_k_max(std::max(n1, n2));
  switch (rule.kind) {
    case QuadratureRule::Kind::adaptive_1d: {
      const auto res = integrate_adaptive<Complex>(g, 0.0, kmax, rule.tolerance, rule.tolerance, rule.budget);
      if (!res.converged) throw std::runtime_error("homodyne_shadow_entry: quadrature did not converge");
      return res.value;
    }
    case QuadratureRule::Kind::tensor_grid: {
      std::vector<double> x, w;
      composite_gauss_legendre(0.0, kmax, static_cast<int>(std::ceil(kmax / 0.25)), 16, x, w);
      Complex total{};
      for (std::size_t i = 0; i < x.size(); ++i) total += w[i] * g(x[i]);
      return total;
    }
    case QuadratureRule::Kind::qmc: {
      const BoxDomain box{{0.0}, {kmax}};
      return qmc_integrate(ComplexIntegrand([&](const double* k) { return g(k[0]); }), box,
                           static_cast<std::uint64_t>(rule.budget))
          .value;
    }
  }
  return {};
}

Complex heterodyne_shadow_entry(const std::vector<int>& n1, const std::vector<int>& n2,
                                const std::vector<ModePoint>& x, const WindowSpec& w, const QuadratureRule& rule) {
  const std::size_t r = n1.size();
  if (r == 0 || n2.size() != r || x.size() != r)
    throw std::invalid_argument("heterodyne_shadow_entry: index and outcome sizes differ");
  w.validate();
  rule.validate();
  if (rule.kind == QuadratureRule::Kind::qmc) {
    const BoxDomain box = BoxDomain::centered(static_cast<int>(2 * r), w.R);
    auto f = [&](const double* u) -> Complex {
      Complex value{1.0, 0.0};
      for (std::size_t j = 0; j < r; ++j) {
        value *= heterodyne_integrand(n1[j], n2[j], ModePoint(u[2 * j], u[2 * j + 1]), x[j], w);
        if (value == Complex{}) break;
      }
      return value;
    };
    return qmc_integrate(ComplexIntegrand(f), box, static_cast<std::uint64_t>(rule.budget)).value;
  }
  if (rule.kind == QuadratureRule::Kind::tensor_grid && r > 3)
    throw std::invalid_argument("heterodyne_shadow_entry: tensor-grid rule supports at most 3 modes");
  Complex value{1.0, 0.0};
  for (std::size_t j = 0; j < r; ++j) value *= heterodyne_single_mode(n1[j], n2[j], x[j], w, rule);
  return value;
}

ShadowMatrix build_homodyne_shadow(const ShadowRecord& record, const std::vector<int>& A, int M,
                                   const QuadratureRule& rule, const ShadowKernel* kernel) {
  if (record.protocol != Protocol::homodyne) throw std::invalid_argument("build_homodyne_shadow: not a homodyne record");
  if (M < 0) throw std::invalid_argument("build_homodyne_shadow: negative truncation");
  check_subset(A, record.modes());
  if (kernel && (kernel->protocol() != Protocol::homodyne || kernel->truncation() != M))
    throw std::invalid_argument("build_homodyne_shadow: kernel does not match protocol or truncation");
  std::vector<Eigen::MatrixXcd> per_mode;
  for (int j : A) {
    const double theta = record.thetas[j];
    const double q = record.outcome[j];
    if (kernel) {
      per_mode.push_back(kernel->homodyne_matrix(theta, q));
      continue;
    }
    Eigen::MatrixXcd m(M + 1, M + 1);
    for (int a = 0; a <= M; ++a) {
      for (int b = a; b <= M; ++b) {
        m(a, b) = homodyne_shadow_entry(a, b, theta, q, rule);
        m(b, a) = std::conj(m(a, b));
      }
    }
    per_mode.push_back(std::move(m));
  }
  return {tensor_modes(per_mode, M), Protocol::homodyne, 0, A};
}

ShadowMatrix build_heterodyne_shadow(const ShadowRecord& record, const std::vector<int>& A, int M,
                                     const WindowSpec& w, const QuadratureRule& rule, const ShadowKernel* kernel) {
  if (record.protocol != Protocol::heterodyne)
    throw std::invalid_argument("build_heterodyne_shadow: not a heterodyne record");
  if (M < 0) throw std::invalid_argument("build_heterodyne_shadow: negative truncation");
  check_subset(A, record.modes());
  if (kernel && (kernel->protocol() != Protocol::heterodyne || kernel->truncation() != M))
    throw std::invalid_argument("build_heterodyne_shadow: kernel does not match protocol or truncation");
  if (!kernel && rule.kind == QuadratureRule::Kind::qmc) {
    // The QMC rule integrates the joint 2|A|-dimensional integral entry by entry.
    FockMatrix out(static_cast<int>(A.size()), M);
    std::vector<ModePoint> x;
    for (int j : A) x.push_back(record.heterodyne_point(j));
    for (int a = 0; a < out.dim(); ++a) {
      for (int b = a; b < out.dim(); ++b) {
        out(a, b) = heterodyne_shadow_entry(out.multi_index(a), out.multi_index(b), x, w, rule);
        out(b, a) = std::conj(out(a, b));
      }
    }
    return {std::move(out), Protocol::heterodyne, 0, A};
  }
  std::vector<Eigen::MatrixXcd> per_mode;
  for (int j : A) {
    const ModePoint x = record.heterodyne_point(j);
    if (kernel) {
      per_mode.push_back(kernel->heterodyne_matrix(x));
      continue;
    }
    Eigen::MatrixXcd m(M + 1, M + 1);
    for (int a = 0; a <= M; ++a) {
      for (int b = a; b <= M; ++b) {
        m(a, b) = heterodyne_single_mode(a, b, x, w, rule);
        m(b, a) = std::conj(m(a, b));
      }
    }
    per_mode.push_back(std::move(m));
  }
  return {tensor_modes(per_mode, M), Protocol::heterodyne, 0, A};
}

ShadowAverage empirical_average(std::vector<ShadowMatrix> shadows) {
  if (shadows.empty()) throw std::invalid_argument("empirical_average: empty list");
  const ShadowMatrix& first = shadows.front();
  for (const auto& s : shadows) {
    if (s.matrix.modes() != first.matrix.modes() || s.matrix.truncation() != first.matrix.truncation() ||
        s.protocol != first.protocol || s.modes != first.modes)
      throw std::invalid_argument("empirical_average: shadows have different shapes");
  }
  std::stable_sort(shadows.begin(), shadows.end(),
                   [](const ShadowMatrix& a, const ShadowMatrix& b) { return a.sample_index < b.sample_index; });
  const std::size_t blocks = (shadows.size() + kAverageBlock - 1) / kAverageBlock;
  Moments total;
  for (std::size_t b = 0; b < blocks; ++b) {
    Moments block;
    for (std::size_t i = b * kAverageBlock; i < std::min(shadows.size(), (b + 1) * kAverageBlock); ++i)
      block.add(shadows[i].matrix.data());
    total.merge(block);
  }
  return finish(total, first.matrix.modes(), first.matrix.truncation(), first.protocol, first.modes);
}

ShadowAverage average_shadows(const SampleBatch& batch, const std::vector<int>& A, int M, const WindowSpec& w,
                              const ShadowKernel* kernel, const QuadratureRule& rule) {
  if (batch.records.empty()) throw std::invalid_argument("average_shadows: empty batch");
  const Protocol protocol = batch.records.front().protocol;
  const std::size_t blocks = (batch.size() + kAverageBlock - 1) / kAverageBlock;
  std::vector<Moments> partial(blocks);
  parallel_for(blocks, [&](std::size_t b) {
    for (std::size_t i = b * kAverageBlock; i < std::min(batch.size(), (b + 1) * kAverageBlock); ++i) {
      const ShadowRecord& rec = batch.records[i];
      if (rec.protocol != protocol) throw std::invalid_argument("average_shadows: mixed protocols in batch");
      const ShadowMatrix s = protocol == Protocol::homodyne ? build_homodyne_shadow(rec, A, M, rule, kernel)
                                                            : build_heterodyne_shadow(rec, A, M, w, rule, kernel);
      partial[b].add(s.matrix.data());
    }
  });
  Moments total;
  for (const auto& p : partial) total.merge(p);
  return finish(total, static_cast<int>(A.size()), M, protocol, A);
}

double squeezing_factor(double s, double radius) {
  if (!(s >= 0.0)) throw std::invalid_argument("squeezing_factor: squeezing must be non-negative");
  const double t = 0.5 * radius * radius;
  if (std::isinf(s)) return t == 0.0 ? 1.0 : 0.0;
  // e^{-t cosh 2s} I0(t sinh 2s) = e^{-t e^{-2s}} * (e^{-x} I0(x)) with x = t sinh 2s.
  return std::exp(-t * std::exp(-2.0 * s)) * bessel_i0_scaled(t * std::sinh(2.0 * s));
}

Complex shadow_char_eval(const ShadowRecord& record, const std::vector<int>& A, const PhasePoint& u_A, double s) {
  check_subset(A, record.modes());
  if (mode_count(u_A) != static_cast<int>(A.size()))
    throw std::invalid_argument("shadow_char_eval: u_A does not match |A|");
  double log_mag = 0.0;
  double phase = 0.0;
  if (record.protocol == Protocol::heterodyne) {
    for (std::size_t k = 0; k < A.size(); ++k) {
      const ModePoint u = mode_component(u_A, static_cast<int>(k));
      log_mag += 0.25 * u.squaredNorm();
      phase -= symplectic_product(u, record.heterodyne_point(A[k]));
    }
    return std::polar(std::exp(log_mag), phase);
  }
  if (std::isinf(s))
    throw std::domain_error(
        "shadow_char_eval: the infinitely squeezed homodyne shadow is a distribution; use homodyne_shadow_entry");
  if (!(s > 0.0)) throw std::invalid_argument("shadow_char_eval: squeezing must be positive");
  for (std::size_t k = 0; k < A.size(); ++k) {
    const ModePoint u = mode_component(u_A, static_cast<int>(k));
    const double theta = record.thetas[A[k]];
    const double q = record.outcome[A[k]];
    // Components of u along the measured line and across it.
    const double along = -std::sin(theta) * u[0] + std::cos(theta) * u[1];
    const double across = std::cos(theta) * u[0] + std::sin(theta) * u[1];
    const double t = 0.5 * u.squaredNorm();
    log_mag += t * std::exp(-2.0 * s) - std::log(bessel_i0_scaled(t * std::sinh(2.0 * s))) -
               0.25 * (std::exp(-2.0 * s) * along * along + std::exp(2.0 * s) * across * across);
    phase += q * along;
  }
  return std::polar(std::exp(log_mag), phase);
}

FockMatrix project_PM(const FockMatrix& T, int M) {
  if (M < 0) throw std::invalid_argument("project_PM: negative truncation");
  if (M > T.truncation()) throw std::invalid_argument("project_PM: M exceeds the operator truncation");
  FockMatrix out(T.modes(), M);
  for (int a = 0; a < out.dim(); ++a)
    for (int b = 0; b < out.dim(); ++b) out(a, b) = T(T.flat_index(out.multi_index(a)), T.flat_index(out.multi_index(b)));
  return out;
}

FockMatrix project_PM_tilde(const StateSpec& state, int M, const WindowSpec& w, const QuadratureRule& rule) {
  if (modes_of(state) != 1) throw std::invalid_argument("project_PM_tilde: single-mode states only");
  if (M < 0) throw std::invalid_argument("project_PM_tilde: negative truncation");
  w.validate();
  rule.validate();
  FockMatrix out(1, M);
  std::vector<std::pair<int, int>> pairs;
  for (int a = 0; a <= M; ++a)
    for (int b = a; b <= M; ++b) pairs.emplace_back(a, b);
  auto point_values = [&](const ModePoint& u, std::vector<Complex>& acc, double weight) {
    const double xi = w(u.norm());
    if (xi == 0.0) return;
    const Complex chi_rho = char_of(state, PhasePoint(u));
    for (std::size_t p = 0; p < pairs.size(); ++p)
      acc[p] += std::conj(char_fock_dyad(pairs[p].first, pairs[p].second, u)) * chi_rho * (xi * weight / kTwoPi);
  };
  std::vector<Complex> acc(pairs.size());
  if (rule.kind == QuadratureRule::Kind::adaptive_1d) {
    for (std::size_t p = 0; p < pairs.size(); ++p) {
      const auto [n1, n2] = pairs[p];
      auto radial = [&](double r) -> Complex {
        auto angular = [&](double phi) -> Complex {
          const ModePoint u(r * std::cos(phi), r * std::sin(phi));
          return std::conj(char_fock_dyad(n1, n2, u)) * char_of(state, PhasePoint(u)) * (w(r) / kTwoPi);
        };
        const auto inner =
            integrate_adaptive<Complex>(angular, 0.0, kTwoPi, 1e-3 * rule.tolerance, 1e-3 * rule.tolerance, rule.budget);
        if (!inner.converged) throw std::runtime_error("project_PM_tilde: angular quadrature did not converge");
        return inner.value * r;
      };
      for (const auto& [a, b] : {std::pair{0.0, w.eta}, std::pair{w.eta, w.R}}) {
        const auto res = integrate_adaptive<Complex>(radial, a, b, rule.tolerance, rule.tolerance, rule.budget);
        if (!res.converged) throw std::runtime_error("project_PM_tilde: radial quadrature did not converge");
        acc[p] += res.value;
      }
    }
  } else {
    std::vector<double> r, wr;
    window_radial_nodes(w, r, wr);
    const int nphi = 256;
    for (std::size_t i = 0; i < r.size(); ++i)
      for (int k = 0; k < nphi; ++k) {
        const double phi = kTwoPi * k / nphi;
        point_values(ModePoint(r[i] * std::cos(phi), r[i] * std::sin(phi)), acc, wr[i] * r[i] * kTwoPi / nphi);
      }
  }
  for (std::size_t p = 0; p < pairs.size(); ++p) {
    out(pairs[p].first, pairs[p].second) = acc[p];
    out(pairs[p].second, pairs[p].first) = std::conj(acc[p]);
  }
  return out;
}

}  // namespace cvshadow
