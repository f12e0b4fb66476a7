#pragma once

#include <vector>

#include "cvshadow/shadow.hpp"

namespace cvshadow {

// Tabulated single-mode shadow kernels.
//
// Both protocols reduce every upper-triangle entry (n1 <= n2, d = n2 - n1) to
//   entry = c_{n1,n2} * e^{-i d phi} * F_{n1,d}(s)
// with a real radial function F of one scalar s:
//   homodyne:   s = q, phi = theta, F = int_0^inf k^{1+d} e^{-k^2/4} L_{n1}^{(d)}(k^2/2) cs_d(k q) dk,
//               cs_d = cos for even d and sin for odd d, c = (-1)^{floor(d/2)} sqrt(n1!/n2!) 2^{-d/2};
//   heterodyne: s = |x|, phi = arg(x),
//               F = int_0^R r^{1+d} L_{n1}^{(d)}(r^2/2) xi(r) J_d(r s) dr, c = sqrt(n1!/n2!) 2^{-d/2}.
// The lower triangle is the complex conjugate, so every shadow is exactly Hermitian.
// F is stored as piecewise Chebyshev series on [0, s_max]; per-sample evaluation is one
// batched Clenshaw sweep over all (n1, d) pairs. Outside the table the direct quadrature is used.
class ShadowKernel {
 public:
  static ShadowKernel homodyne(int M);
  static ShadowKernel heterodyne(int M, const WindowSpec& w);

  Protocol protocol() const { return protocol_; }
  int truncation() const { return M_; }
  double table_limit() const { return s_max_; }
  const WindowSpec& window() const { return window_; }

  int function_count() const { return nf_; }
  int function_index(int n1, int d) const;
  // F_{n1,d}(s) for every tabulated pair; returns false when s is outside the table.
  bool radial_values(double s, double* out) const;
  // Same values by direct quadrature (table construction and tests).
  void radial_values_direct(double s, double* out) const;

  Eigen::MatrixXcd homodyne_matrix(double theta, double q) const;
  Eigen::MatrixXcd heterodyne_matrix(const ModePoint& x) const;

 private:
  ShadowKernel() = default;
  void build_table();
  Eigen::MatrixXcd assemble(double phi, const double* F, double parity_sign) const;

  Protocol protocol_ = Protocol::homodyne;
  int M_ = 0;
  WindowSpec window_;
  int nf_ = 0;
  double s_max_ = 0.0;
  double piece_width_ = 0.25;
  int ncoef_ = 21;
  std::vector<int> f_n1_, f_d_;
  std::vector<double> prefactor_;
  // Quadrature nodes and per-function weights for direct evaluation.
  std::vector<double> nodes_;
  std::vector<double> node_weights_;  // [node * nf + f]
  std::vector<double> coeffs_;        // [piece][coef][f]
};

}  // namespace cvshadow
