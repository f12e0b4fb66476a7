#pragma once

#include <limits>
#include <vector>

#include "cvshadow/measurement.hpp"
#include "cvshadow/states.hpp"

namespace cvshadow {

// Radial cutoff equal to 1 for |z| <= eta and 0 for |z| >= R, with a smoothstep
// transition of the given order (1, 3 or 5) in between.
struct WindowSpec {
  double eta = 6.0;
  double R = 8.0;
  int profile = 5;

  double operator()(double radius) const;
  void validate() const;
  // (max(6, sqrt(2) M + 1), eta + 2); satisfies eta^2 >= 2 M^2.
  static WindowSpec default_for(int M);
};

struct QuadratureRule {
  enum class Kind { adaptive_1d, qmc, tensor_grid };
  Kind kind = Kind::adaptive_1d;
  int budget = 200000;
  double tolerance = 1e-8;

  void validate() const;
  static QuadratureRule homodyne_default() { return {Kind::adaptive_1d, 200000, 1e-8}; }
  static QuadratureRule heterodyne_default() { return {Kind::tensor_grid, 400000, 1e-7}; }
};

struct ShadowMatrix {
  FockMatrix matrix;
  Protocol protocol = Protocol::heterodyne;
  std::size_t sample_index = 0;
  std::vector<int> modes;  // subset A of measured modes
};

// chi_{|n1><n2|}(u) * prod_j xi(u_j); u uses the PhasePoint ordering over the |n1| modes.
Complex windowed_dyad_char(const std::vector<int>& n1, const std::vector<int>& n2, const PhasePoint& u,
                           const WindowSpec& w);

// Largest photon-number frequency cutoff of the homodyne k-integrals for truncation M.
double homodyne_k_max(int M);

// Entry (n1, n2) of a single-mode homodyne shadow:
//   (1/2) int dk |k| e^{i k q} conj(chi_{|n1><n2|}(k (-sin theta, cos theta))).
// The factor 1/2 and the angle convention make the shadow unbiased for theta ~ U[-pi, pi)
// and q distributed as the quadrature cos(theta) X + sin(theta) P.
Complex homodyne_shadow_entry(int n1, int n2, double theta, double q, const QuadratureRule& rule);

// Entry (n1, n2) of a heterodyne shadow on |A| modes:
//   int conj(chi~_{|n1><n2|}(u)) e^{|u|^2/4 - i u^T Omega x} d^{2r}u / (2 pi)^r.
// Adaptive and tensor-grid rules integrate mode by mode; the QMC rule integrates the
// full 2r-dimensional box.
Complex heterodyne_shadow_entry(const std::vector<int>& n1, const std::vector<int>& n2,
                                const std::vector<ModePoint>& x, const WindowSpec& w, const QuadratureRule& rule);

class ShadowKernel;

// Tensor product over A of per-mode shadows. With a kernel the per-mode matrices come from
// the tabulated fast path, otherwise from direct quadrature with `rule`.
ShadowMatrix build_homodyne_shadow(const ShadowRecord& record, const std::vector<int>& A, int M,
                                   const QuadratureRule& rule, const ShadowKernel* kernel = nullptr);
ShadowMatrix build_heterodyne_shadow(const ShadowRecord& record, const std::vector<int>& A, int M,
                                     const WindowSpec& w, const QuadratureRule& rule,
                                     const ShadowKernel* kernel = nullptr);

struct ShadowAverage {
  FockMatrix mean;
  Eigen::MatrixXd stderr_re;
  Eigen::MatrixXd stderr_im;
  Eigen::MatrixXd stderr_abs;  // sqrt(stderr_re^2 + stderr_im^2)
  std::size_t count = 0;
  Protocol protocol = Protocol::heterodyne;
  std::vector<int> modes;
};

// Mean with entrywise standard errors. Inputs are ordered by sample index and reduced in
// fixed-size blocks merged in order, so the result does not depend on input order or thread count.
ShadowAverage empirical_average(std::vector<ShadowMatrix> shadows);

// Builds shadows for every record on A and averages them (parallel, deterministic).
ShadowAverage average_shadows(const SampleBatch& batch, const std::vector<int>& A, int M, const WindowSpec& w,
                              const ShadowKernel* kernel, const QuadratureRule& rule);

constexpr double kInfiniteSqueezing = std::numeric_limits<double>::infinity();

// Characteristic function of a single shadow at u_A. Heterodyne: prod e^{|u_j|^2/4 - i u_j^T Omega x_j}.
// Homodyne requires finite squeezing s; s = infinity throws std::domain_error.
Complex shadow_char_eval(const ShadowRecord& record, const std::vector<int>& A, const PhasePoint& u_A, double s);

// f(u) = e^{-|u|^2 cosh(2s)/2} I0(|u|^2 sinh(2s)/2), the rotation-averaged finite-squeezing factor.
double squeezing_factor(double s, double radius);

FockMatrix project_PM(const FockMatrix& T, int M);

// Entries int conj(chi~_{|n1><n2|}(u)) chi_rho(u) d^2u / (2 pi) for single-mode states.
FockMatrix project_PM_tilde(const StateSpec& state, int M, const WindowSpec& w, const QuadratureRule& rule);

}  // namespace cvshadow
