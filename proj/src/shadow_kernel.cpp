#include "cvshadow/shadow_kernel.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "cvshadow/kernels.hpp"
#include "cvshadow/quadrature.hpp"
#include "cvshadow/special.hpp"

namespace cvshadow {

namespace {

constexpr int kPanelOrder = 16;

// J_0..J_dmax at z; upward recurrence where it is stable (z > dmax), library calls otherwise.
void bessel_j_all(int dmax, double z, double* out) {
  if (z > dmax + 1.0) {
    out[0] = std::cyl_bessel_j(0.0, z);
    if (dmax >= 1) out[1] = std::cyl_bessel_j(1.0, z);
    for (int d = 1; d < dmax; ++d) out[d + 1] = 2.0 * d / z * out[d] - out[d - 1];
    return;
  }
  for (int d = 0; d <= dmax; ++d) out[d] = (z == 0.0) ? (d == 0 ? 1.0 : 0.0) : std::cyl_bessel_j(d, z);
}

}  // namespace

int ShadowKernel::function_index(int n1, int d) const {
  // Functions are ordered by n1, then d = 0..M-n1.
  int idx = 0;
  for (int k = 0; k < n1; ++k) idx += M_ + 1 - k;
  return idx + d;
}

ShadowKernel ShadowKernel::homodyne(int M) {
  if (M < 0) throw std::invalid_argument("ShadowKernel: negative truncation");
  ShadowKernel k;
  k.protocol_ = Protocol::homodyne;
  k.M_ = M;
  k.s_max_ = 12.0;
  const double kmax = homodyne_k_max(M);
  composite_gauss_legendre(0.0, kmax, static_cast<int>(std::ceil(kmax / 0.5)), kPanelOrder, k.nodes_, k.node_weights_);
  k.build_table();
  return k;
}

ShadowKernel ShadowKernel::heterodyne(int M, const WindowSpec& w) {
  if (M < 0) throw std::invalid_argument("ShadowKernel: negative truncation");
  w.validate();
  ShadowKernel k;
  k.protocol_ = Protocol::heterodyne;
  k.M_ = M;
  k.window_ = w;
  k.s_max_ = 16.0;
  composite_gauss_legendre(0.0, w.eta, std::max(1, static_cast<int>(std::ceil(w.eta / 0.5))), kPanelOrder, k.nodes_,
                           k.node_weights_);
  composite_gauss_legendre(w.eta, w.R, std::max(1, static_cast<int>(std::ceil((w.R - w.eta) / 0.25))), kPanelOrder,
                           k.nodes_, k.node_weights_);
  k.build_table();
  return k;
}

void ShadowKernel::build_table() {
  for (int n1 = 0; n1 <= M_; ++n1) {
    for (int d = 0; d + n1 <= M_; ++d) {
      f_n1_.push_back(n1);
      f_d_.push_back(d);
      double c = sqrt_factorial_ratio(n1, n1 + d) * std::pow(2.0, -0.5 * d);
      if (protocol_ == Protocol::homodyne && (d / 2) % 2 == 1) c = -c;
      prefactor_.push_back(c);
    }
  }
  nf_ = static_cast<int>(f_n1_.size());
  // Fold the radial polynomial factors into per-function node weights.
  const std::vector<double> base_w = node_weights_;
  node_weights_.assign(nodes_.size() * nf_, 0.0);
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    const double r = nodes_[i];
    double radial = base_w[i];
    if (protocol_ == Protocol::homodyne) {
      radial *= std::exp(-0.25 * r * r);
    } else {
      radial *= window_(r);
    }
    for (int f = 0; f < nf_; ++f) {
      const int n1 = f_n1_[f];
      const int d = f_d_[f];
      node_weights_[i * nf_ + f] = radial * std::pow(r, 1 + d) * laguerre(n1, d, 0.5 * r * r);
    }
  }
  const int pieces = static_cast<int>(std::ceil(s_max_ / piece_width_));
  coeffs_.assign(static_cast<std::size_t>(pieces) * ncoef_ * nf_, 0.0);
  std::vector<double> values(static_cast<std::size_t>(ncoef_) * nf_);
  for (int p = 0; p < pieces; ++p) {
    const double center = (p + 0.5) * piece_width_;
    const double half = 0.5 * piece_width_;
    for (int i = 0; i < ncoef_; ++i) {
      const double x = std::cos(std::numbers::pi * (i + 0.5) / ncoef_);
      radial_values_direct(center + half * x, values.data() + static_cast<std::size_t>(i) * nf_);
    }
    double* out = coeffs_.data() + static_cast<std::size_t>(p) * ncoef_ * nf_;
    for (int c = 0; c < ncoef_; ++c) {
      for (int f = 0; f < nf_; ++f) {
        double acc = 0.0;
        for (int i = 0; i < ncoef_; ++i)
          acc += values[static_cast<std::size_t>(i) * nf_ + f] * std::cos(std::numbers::pi * c * (i + 0.5) / ncoef_);
        out[c * nf_ + f] = (c == 0 ? 1.0 : 2.0) * acc / ncoef_;
      }
    }
  }
}

void ShadowKernel::radial_values_direct(double s, double* out) const {
  for (int f = 0; f < nf_; ++f) out[f] = 0.0;
  std::vector<double> bj(M_ + 1);
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    const double r = nodes_[i];
    const double* w = node_weights_.data() + i * nf_;
    if (protocol_ == Protocol::homodyne) {
      const double c = std::cos(r * s);
      const double sn = std::sin(r * s);
      for (int f = 0; f < nf_; ++f) out[f] += w[f] * ((f_d_[f] % 2 == 0) ? c : sn);
    } else {
      bessel_j_all(M_, r * s, bj.data());
      for (int f = 0; f < nf_; ++f) out[f] += w[f] * bj[f_d_[f]];
    }
  }
}

bool ShadowKernel::radial_values(double s, double* out) const {
  if (!(s >= 0.0) || s > s_max_) return false;
  const int pieces = static_cast<int>(coeffs_.size() / (static_cast<std::size_t>(ncoef_) * nf_));
  const int p = std::min(static_cast<int>(s / piece_width_), pieces - 1);
  const double center = (p + 0.5) * piece_width_;
  const double t = (s - center) / (0.5 * piece_width_);
  kernels::chebyshev_batch(coeffs_.data() + static_cast<std::size_t>(p) * ncoef_ * nf_, ncoef_, nf_, t, out);
  return true;
}

Eigen::MatrixXcd ShadowKernel::assemble(double phi, const double* F, double parity_sign) const {
  Eigen::MatrixXcd out(M_ + 1, M_ + 1);
  for (int f = 0; f < nf_; ++f) {
    const int n1 = f_n1_[f];
    const int d = f_d_[f];
    double value = prefactor_[f] * F[f];
    if (parity_sign < 0.0 && d % 2 == 1) value = -value;
    const Complex entry = value * std::polar(1.0, -d * phi);
    out(n1, n1 + d) = entry;
    out(n1 + d, n1) = std::conj(entry);
  }
  return out;
}

Eigen::MatrixXcd ShadowKernel::homodyne_matrix(double theta, double q) const {
  if (protocol_ != Protocol::homodyne) throw std::logic_error("ShadowKernel: not a homodyne kernel");
  std::vector<double> F(nf_);
  if (radial_values(std::abs(q), F.data())) return assemble(theta, F.data(), q < 0.0 ? -1.0 : 1.0);
  Eigen::MatrixXcd out(M_ + 1, M_ + 1);
  const QuadratureRule rule = QuadratureRule::homodyne_default();
  for (int a = 0; a <= M_; ++a) {
    for (int b = a; b <= M_; ++b) {
      out(a, b) = homodyne_shadow_entry(a, b, theta, q, rule);
      out(b, a) = std::conj(out(a, b));
    }
  }
  return out;
}

Eigen::MatrixXcd ShadowKernel::heterodyne_matrix(const ModePoint& x) const {
  if (protocol_ != Protocol::heterodyne) throw std::logic_error("ShadowKernel: not a heterodyne kernel");
  std::vector<double> F(nf_);
  const double s = x.norm();
  const double psi = std::atan2(x[1], x[0]);
  if (radial_values(s, F.data())) return assemble(psi, F.data(), 1.0);
  Eigen::MatrixXcd out(M_ + 1, M_ + 1);
  const QuadratureRule rule{QuadratureRule::Kind::tensor_grid, 400000, 1e-10};
  for (int a = 0; a <= M_; ++a) {
    for (int b = a; b <= M_; ++b) {
      out(a, b) = heterodyne_shadow_entry({a}, {b}, {x}, window_, rule);
      out(b, a) = std::conj(out(a, b));
    }
  }
  return out;
}

}  // namespace cvshadow
