#include <doctest.h>

#include <cmath>
#include <numbers>

#include "cvshadow/qmc.hpp"

using namespace cvshadow;

TEST_CASE("Halton radical inverses") {
  HaltonStream h(2);
  CHECK(h.bases() == std::vector<unsigned>{2, 3});
  const double expect2[] = {0.5, 0.25, 0.75, 0.125};
  for (int k = 1; k <= 4; ++k) CHECK(h.point(k)[0] == doctest::Approx(expect2[k - 1]));
  CHECK(h.point(1)[1] == doctest::Approx(1.0 / 3.0));
  CHECK(first_primes(6) == std::vector<unsigned>{2, 3, 5, 7, 11, 13});
}

TEST_CASE("box domain") {
  const auto box = BoxDomain::centered(2, 3.0);
  CHECK(box.volume() == doctest::Approx(36.0));
  double out[2];
  const double unit[2] = {0.5, 1.0};
  box.map(unit, out);
  CHECK(out[0] == doctest::Approx(0.0));
  CHECK(out[1] == doctest::Approx(3.0));
  CHECK_THROWS((BoxDomain{{1.0}, {0.0}}).validate());
}

TEST_CASE("QMC integrates a Gaussian and reports an error estimate") {
  const auto box = BoxDomain::centered(2, 6.0);
  RealIntegrand f = [](const double* x) { return std::exp(-0.5 * (x[0] * x[0] + x[1] * x[1])); };
  const auto r = qmc_integrate(f, box, 1u << 16, 32);
  const double exact = 2.0 * std::numbers::pi * std::pow(std::erf(6.0 / std::sqrt(2.0)), 2);
  CHECK(std::abs(r.value - exact) < 1e-3);
  CHECK(r.error_estimate >= std::abs(r.value - exact));
  CHECK(r.points == (1u << 16));
  CHECK(std::isnan(qmc_integrate(f, box, 1024).error_estimate));
}

TEST_CASE("complex QMC and failure on non-finite values") {
  const auto box = BoxDomain::centered(1, 1.0);
  ComplexIntegrand g = [](const double* x) { return std::polar(1.0, x[0]); };
  const auto r = qmc_integrate(g, box, 1u << 14);
  CHECK(std::abs(r.value - Complex(2.0 * std::sin(1.0), 0.0)) < 1e-3);
  RealIntegrand bad = [](const double* x) { return 1.0 / (x[0] - x[0]); };
  CHECK_THROWS_AS(qmc_integrate(bad, box, 16), std::domain_error);
}

TEST_CASE("QMC results do not depend on the thread count") {
  const auto box = BoxDomain::centered(3, 1.0);
  RealIntegrand f = [](const double* x) { return std::cos(x[0] + 2.0 * x[1] - x[2]); };
  setenv("CVSHADOW_THREADS", "1", 1);
  const double a = qmc_integrate(f, box, 50000).value;
  setenv("CVSHADOW_THREADS", "3", 1);
  const double b = qmc_integrate(f, box, 50000).value;
  unsetenv("CVSHADOW_THREADS");
  CHECK(a == b);
}

TEST_CASE("total variation of a product function") {
  const auto box = BoxDomain::centered(1, 1.0);
  RealIntegrand f = [](const double* x) { return x[0] * x[0]; };
  CHECK(tv_estimate(f, box, 200) == doctest::Approx(2.0).epsilon(1e-3));
}

TEST_CASE("randomized QMC replicates") {
  const auto box = BoxDomain::centered(2, 6.0);
  RealIntegrand f = [](const double* x) { return std::exp(-0.5 * (x[0] * x[0] + x[1] * x[1])); };
  const double exact = 2.0 * std::numbers::pi * std::pow(std::erf(6.0 / std::sqrt(2.0)), 2);
  std::vector<double> est;
  const auto r = qmc_randomized(f, box, 1u << 12, 16, 99, &est);
  CHECK(est.size() == 16);
  CHECK(r.points == 16u << 12);
  CHECK(std::abs(r.value - exact) < 5.0 * r.error_estimate);
  const auto again = qmc_randomized(f, box, 1u << 12, 16, 99);
  CHECK(again.value == r.value);
  CHECK_THROWS(qmc_randomized(f, box, 16, 1, 0));
}
