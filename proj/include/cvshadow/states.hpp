#pragma once

#include <array>
#include <cstdint>
#include <variant>
#include <vector>

#include "cvshadow/phase_space.hpp"

namespace cvshadow {

// Truncated operator on r modes with Fock indices in {0..M}^r. Multi-indices are
// flattened with the first mode most significant.
class FockMatrix {
 public:
  FockMatrix() = default;
  FockMatrix(int modes, int M);
  FockMatrix(int modes, int M, Eigen::MatrixXcd data);

  int modes() const { return modes_; }
  int truncation() const { return M_; }
  int dim() const { return static_cast<int>(data_.rows()); }

  Eigen::MatrixXcd& data() { return data_; }
  const Eigen::MatrixXcd& data() const { return data_; }
  Complex& operator()(int i, int j) { return data_(i, j); }
  Complex operator()(int i, int j) const { return data_(i, j); }

  std::vector<int> multi_index(int flat) const;
  int flat_index(const std::vector<int>& n) const;
  // Total photon number |n| of a flattened index.
  int photon_number(int flat) const;

 private:
  int modes_ = 0;
  int M_ = 0;
  Eigen::MatrixXcd data_;
};

FockMatrix kron(const FockMatrix& a, const FockMatrix& b);

enum class CatLogical { zero, one, plus, minus };

// Cat qubit built from coherent states |alpha> and |-alpha>, alpha given as a phase-space point.
struct CatStateSpec {
  ModePoint alpha = ModePoint::Zero();
  CatLogical logical = CatLogical::zero;
};

struct ChainSpec {
  int m = 1;
  double kappa = 0.0;
  bool disorder = false;
  std::uint64_t disorder_seed = 0;
};

struct FockNumberSpec {
  int n = 0;
};

using StateSpec = std::variant<GaussianStateSpec, CatStateSpec, FockNumberSpec>;

GaussianStateSpec vacuum_state(int m);
GaussianStateSpec coherent_state(const PhasePoint& x);
GaussianStateSpec thermal_state(double nu);
GaussianStateSpec chain_ground_state(const ChainSpec& spec);

int modes_of(const StateSpec& state);

// Normalization constants N_+ and N_- of the even and odd cats.
double cat_norm_plus(const CatStateSpec& spec);
double cat_norm_minus(const CatStateSpec& spec);

// State vector as a superposition w[0] |alpha> + w[1] |-alpha>.
std::array<double, 2> cat_amplitudes(const CatStateSpec& spec);

Complex cat_char(const CatStateSpec& spec, const ModePoint& u);

// |<x|psi>|^2 for the cat state; the heterodyne density is this divided by 2 pi.
double cat_position_pdf(const CatStateSpec& spec, const ModePoint& x);

// Characteristic function of any supported state; u uses the PhasePoint ordering.
Complex char_of(const StateSpec& state, const PhasePoint& u);

// Fock amplitudes of the coherent state |y>, indices 0..M.
Eigen::VectorXcd coherent_amplitudes(const ModePoint& y, int M);

struct TruncatedState {
  FockMatrix rho;
  double trace_deficit = 0.0;
};

// Exact single-mode density matrix truncated at M.
TruncatedState fock_matrix_of(const StateSpec& state, int M);

// Exact truncation tail tr(rho) - tr(P_M rho) for diagonal thermal states.
double thermal_population(double nu, int n);

}  // namespace cvshadow
