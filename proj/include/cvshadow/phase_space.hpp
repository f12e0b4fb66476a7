#pragma once

#include <Eigen/Dense>
#include <complex>
#include <string>
#include <vector>

namespace cvshadow {

using Complex = std::complex<double>;

// Phase-space vector ordered (x_1..x_m, p_1..p_m).
using PhasePoint = Eigen::VectorXd;
using ModePoint = Eigen::Vector2d;

int mode_count(const PhasePoint& x);

// Per-mode view of a phase-space vector: (x_j, p_j).
ModePoint mode_component(const PhasePoint& x, int j);

// Omega * x with Omega = [[0, I], [-I, 0]], applied without forming Omega.
PhasePoint apply_omega(const PhasePoint& x);

// u^T Omega x.
double symplectic_product(const PhasePoint& u, const PhasePoint& x);
double symplectic_product(const ModePoint& u, const ModePoint& x);

// Dense Omega for small m (tests and symplectic spectra).
Eigen::MatrixXd symplectic_form(int m);

struct Rotation2 {
  double theta = 0.0;
  Eigen::Matrix2d matrix() const;
};

// alpha(u) = (u_1 + i u_2) / sqrt(2).
Complex alpha_of(const ModePoint& u);

// chi_{|x><y|}(u) for single-mode coherent states.
Complex char_coherent_dyad(const ModePoint& x, const ModePoint& y, const ModePoint& u);

// chi_{|n1><n2|}(u) = <n2| D(u) |n1>.
Complex char_fock_dyad(int n1, int n2, const ModePoint& u);

// Multi-mode Fock dyad, product over modes; u uses the PhasePoint ordering.
Complex char_fock_dyad(const std::vector<int>& n1, const std::vector<int>& n2, const PhasePoint& u);

// Matrix of D(u) in the Fock basis truncated at M_osc, entry (j, k) = <j|D(u)|k>.
Eigen::MatrixXcd displacement_oracle(const ModePoint& u, int M_osc);

struct GaussianStateSpec {
  Eigen::VectorXd mean;
  Eigen::MatrixXd cov;

  int modes() const { return static_cast<int>(mean.size() / 2); }
  // Throws std::invalid_argument when V is not symmetric or violates V + i Omega >= 0.
  void validate() const;
  // Marginal on the listed modes.
  GaussianStateSpec reduce(const std::vector<int>& modes) const;
};

Complex char_gaussian(const GaussianStateSpec& spec, const PhasePoint& u);

// Symplectic eigenvalues (spectrum of |i Omega V|, each listed once).
Eigen::VectorXd symplectic_eigenvalues(const Eigen::MatrixXd& cov);

// Rectangular grid of characteristic-function values, row-major with the last axis fastest.
struct CharGrid {
  std::vector<double> origin;
  std::vector<double> step;
  std::vector<int> shape;
  std::vector<Complex> values;
  std::string provenance;  // "exact" or "reconstructed"

  std::size_t size() const;
  std::vector<double> point(std::size_t flat_index) const;
  void validate() const;
};

CharGrid make_grid(const std::vector<double>& lo, const std::vector<double>& hi, int points_per_axis,
                   const std::string& provenance);

}  // namespace cvshadow
