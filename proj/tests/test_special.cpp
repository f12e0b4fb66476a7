#include <doctest.h>

#include <boost/math/special_functions/bessel.hpp>
#include <boost/math/special_functions/laguerre.hpp>
#include <cmath>
#include <numbers>

#include "cvshadow/quadrature.hpp"
#include "cvshadow/special.hpp"

using namespace cvshadow;

TEST_CASE("associated Laguerre matches boost") {
  for (int j = 0; j <= 6; ++j)
    for (int k = 0; k <= 12; ++k)
      for (double x : {0.0, 0.3, 1.7, 5.0, 18.0}) {
        const double ref = boost::math::laguerre(k, j, x);
        CHECK(laguerre(k, j, x) == doctest::Approx(ref).epsilon(1e-12).scale(1.0));
      }
}

TEST_CASE("Laguerre sequence agrees with single evaluations") {
  double seq[16];
  laguerre_sequence(15, 3, 2.25, seq);
  for (int k = 0; k <= 15; ++k) CHECK(seq[k] == doctest::Approx(laguerre(k, 3, 2.25)).epsilon(1e-13));
}

TEST_CASE("Hermite wavefunctions are orthonormal") {
  std::vector<double> x, w;
  composite_gauss_legendre(-14.0, 14.0, 56, 16, x, w);
  const int nmax = 20;
  std::vector<double> psi(static_cast<std::size_t>(nmax + 1) * x.size());
  for (std::size_t i = 0; i < x.size(); ++i) hermite_wavefunctions(nmax, x[i], psi.data() + i * (nmax + 1));
  for (int a = 0; a <= nmax; a += 3)
    for (int b = 0; b <= nmax; b += 2) {
      double acc = 0.0;
      for (std::size_t i = 0; i < x.size(); ++i) acc += w[i] * psi[i * (nmax + 1) + a] * psi[i * (nmax + 1) + b];
      CHECK(acc == doctest::Approx(a == b ? 1.0 : 0.0).epsilon(1e-12).scale(1.0));
    }
  CHECK(hermite_wavefunction(0, 0.0) == doctest::Approx(std::pow(std::numbers::pi, -0.25)));
}

TEST_CASE("scaled Bessel I0 is accurate and overflow-free") {
  for (double x : {0.0, 1e-3, 0.5, 3.0, 15.0, 40.0, 300.0}) {
    const double ref = boost::math::cyl_bessel_i(0, x) * std::exp(-x);
    CHECK(bessel_i0_scaled(x) == doctest::Approx(ref).epsilon(1e-13));
  }
  const double big = bessel_i0_scaled(1e6);
  CHECK(std::isfinite(big));
  CHECK(big == doctest::Approx(1.0 / std::sqrt(2.0 * std::numbers::pi * 1e6)).epsilon(1e-6));
  const ScaledBessel b = bessel_i0(2.0);
  CHECK(b.value() == doctest::Approx(boost::math::cyl_bessel_i(0, 2.0)).epsilon(1e-14));
}

TEST_CASE("factorial helpers") {
  CHECK(log_factorial(0) == 0.0);
  CHECK(log_factorial(10) == doctest::Approx(std::log(3628800.0)).epsilon(1e-14));
  CHECK(sqrt_factorial_ratio(3, 5) == doctest::Approx(std::sqrt(6.0 / 120.0)).epsilon(1e-14));
  CHECK(sqrt_factorial_ratio(150, 150) == 1.0);
}

TEST_CASE("adaptive and semi-infinite quadrature") {
  auto r = integrate_adaptive<double>([](double t) { return std::sin(t); }, 0.0, std::numbers::pi, 1e-13, 1e-13);
  CHECK(r.converged);
  CHECK(r.value == doctest::Approx(2.0).epsilon(1e-12));
  auto g = integrate_semi_infinite<double>([](double t) { return std::exp(-t * t); }, 0.0, 1e-12, 1e-12);
  CHECK(g.value == doctest::Approx(0.5 * std::sqrt(std::numbers::pi)).epsilon(1e-10));
  const auto& gl = gauss_legendre(16);
  double s = 0.0;
  for (std::size_t i = 0; i < gl.nodes.size(); ++i) s += gl.weights[i] * std::pow(gl.nodes[i], 30);
  CHECK(s == doctest::Approx(2.0 / 31.0).epsilon(1e-13));
}
