#include <doctest.h>

#include <cmath>
#include <numbers>

#include "cvshadow/phase_space.hpp"
#include "cvshadow/states.hpp"

using namespace cvshadow;

TEST_CASE("symplectic form conventions") {
  const Eigen::MatrixXd W = symplectic_form(2);
  CHECK((W * W + Eigen::MatrixXd::Identity(4, 4)).norm() == doctest::Approx(0.0));
  CHECK((W.transpose() + W).norm() == doctest::Approx(0.0));
  const ModePoint u(0.4, -1.1), x(2.0, 0.5);
  CHECK(symplectic_product(u, x) == doctest::Approx(0.4 * 0.5 - (-1.1) * 2.0));
  PhasePoint U(4), X(4);
  U << 1, 2, 3, 4;
  X << -1, 0.5, 2, 1;
  CHECK(symplectic_product(U, X) == doctest::Approx(U.dot(W * X)));
  CHECK(alpha_of(ModePoint(1.0, 1.0)) == std::complex<double>(1.0 / std::sqrt(2.0), 1.0 / std::sqrt(2.0)));
}

TEST_CASE("Fock dyad characteristic functions against the matrix-exponential oracle") {
  const int M_osc = 60;
  for (const ModePoint& u : {ModePoint(0.3, -0.7), ModePoint(-2.0, 1.5), ModePoint(0.0, 0.0)}) {
    const Eigen::MatrixXcd D = displacement_oracle(u, M_osc);
    for (int n1 = 0; n1 <= 6; ++n1)
      for (int n2 = 0; n2 <= 6; ++n2) CHECK(std::abs(char_fock_dyad(n1, n2, u) - D(n2, n1)) < 1e-10);
  }
}

TEST_CASE("vacuum characteristic function is exp(-|u|^2/4)") {
  const ModePoint u(1.2, -0.4);
  CHECK(std::abs(char_fock_dyad(0, 0, u) - std::exp(-0.25 * u.squaredNorm())) < 1e-15);
  PhasePoint U(2);
  U << u[0], u[1];
  CHECK(std::abs(char_gaussian(vacuum_state(1), U) - std::exp(-0.25 * u.squaredNorm())) < 1e-15);
}

TEST_CASE("coherent-state characteristic function carries the displacement phase") {
  PhasePoint mean(2);
  mean << 0.8, -0.3;
  const auto g = coherent_state(mean);
  PhasePoint u(2);
  u << 0.5, 1.0;
  // chi(u) = exp(-|u|^2/4 - i u^T Omega mean)
  const Complex expected = std::exp(Complex(-0.25 * u.squaredNorm(), -symplectic_product(u, mean)));
  CHECK(std::abs(char_gaussian(g, u) - expected) < 1e-14);
  // Coherent dyad of a point with itself reproduces the same function.
  CHECK(std::abs(char_coherent_dyad(ModePoint(0.8, -0.3), ModePoint(0.8, -0.3), ModePoint(0.5, 1.0)) - expected) <
        1e-12);
}

TEST_CASE("symplectic eigenvalues and Gaussian reduction") {
  CHECK(symplectic_eigenvalues(thermal_state(1.5).cov)(0) == doctest::Approx(4.0));
  const auto chain = chain_ground_state({6, 0.8, false, 0});
  const Eigen::VectorXd nu = symplectic_eigenvalues(chain.cov);
  for (int i = 0; i < nu.size(); ++i) CHECK(nu(i) == doctest::Approx(1.0).epsilon(1e-9));
  const auto red = chain.reduce({0, 3});
  CHECK(red.modes() == 2);
  CHECK(red.cov(0, 1) == doctest::Approx(chain.cov(0, 3)));
  CHECK(red.cov(2, 3) == doctest::Approx(chain.cov(6, 9)));
  GaussianStateSpec bad{Eigen::VectorXd::Zero(2), 0.5 * Eigen::MatrixXd::Identity(2, 2)};
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}

TEST_CASE("grid indexing") {
  const CharGrid g = make_grid({-2.0, -1.0}, {2.0, 1.0}, 5, "exact");
  CHECK(g.size() == 25);
  const auto p = g.point(7);  // row 1, column 2
  CHECK(p[0] == doctest::Approx(-1.0));
  CHECK(p[1] == doctest::Approx(0.0));
}
