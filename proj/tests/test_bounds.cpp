#include <doctest.h>

#include <cmath>
#include <json.hpp>
#include <numbers>

#include "cvshadow/bounds.hpp"

using namespace cvshadow;

TEST_CASE("weighted trace norm") {
  const auto vac = fock_matrix_of(vacuum_state(1), 3).rho;
  CHECK(sobolev_norm(vac, 0.0) == doctest::Approx(1.0));
  CHECK(sobolev_norm(vac, 3.0) == doctest::Approx(1.0));
  FockMatrix d(1, 1);
  d(0, 0) = 0.5;
  d(1, 1) = 0.25;
  CHECK(sobolev_norm(d, 2.0) == doctest::Approx(1.5));
  CHECK(sobolev_norm(d, 0.0) == doctest::Approx(0.75));
  CHECK_THROWS(sobolev_norm(d, -1.0));
}

TEST_CASE("double-truncation function") {
  CHECK(delta0(0.0, 0, 0.0, 1) == doctest::Approx(1.0));
  double sum = 0.0, term = 1.0;
  for (int p = 0; p <= 4; ++p) {
    sum += term;
    term *= 50.0 / (p + 1);
  }
  const double expected = std::exp(-25.0) * std::sqrt(sum) * 9.0 * 3.0;
  CHECK(delta0(10.0, 2, 0.0, 1) == doctest::Approx(expected).epsilon(1e-10));
  for (double eta : {3.0, 7.5, 12.0, 20.0})
    for (int M : {0, 1, 3, 8})
      for (double alpha : {0.0, 0.5, 1.0})
        for (int m : {1, 2}) {
          const double a = std::exp(log_delta0(eta, M, alpha, m));
          const double b = delta0_gamma_form(eta, M, alpha, m);
          CHECK(std::abs(a - b) <= 1e-10 * std::max(a, b));
        }
  double prev = delta0(2.0 * std::sqrt(3.0), 3, 0.0, 1);
  for (double eta = 2.0 * std::sqrt(3.0) + 0.25; eta < 25.0; eta += 0.25) {
    const double v = delta0(eta, 3, 0.0, 1);
    CHECK(v <= prev);
    prev = v;
  }
  // At eta = 20 the value is about 1.3e-27; negligible against the 0.25 budget.
  CHECK(delta0(20.0, 8, 0.0, 1) < 1e-26);
}

TEST_CASE("Fock truncation bound") {
  CHECK(truncation_error_bound(1.0, 2, 0.0, 2.0) == doctest::Approx(0.5));
  double prev = truncation_error_bound(1.0, 0, 0.5, 2.0);
  for (int M = 1; M < 50; ++M) {
    const double v = truncation_error_bound(1.0, M, 0.5, 2.0);
    CHECK(v < prev);
    prev = v;
  }
  // Exact thermal tail at M = 4 against the bound with E = tr[rho (I+N)^2] = 6.
  const auto rho = fock_matrix_of(thermal_state(1.0), 120).rho;
  FockMatrix tail = rho;
  for (int a = 0; a <= 4; ++a) tail(a, a) = 0.0;
  CHECK(sobolev_norm(tail, 0.0) <= truncation_error_bound(6.0, 4, 0.0, 2.0));
  CHECK_THROWS(truncation_error_bound(1.0, 3, 2.0, 2.0));
}

TEST_CASE("homodyne variance constant") {
  CHECK(sigma_homodyne(0, 1, 0.0) == doctest::Approx(8.0 * std::pow(std::numbers::pi, 1.5)).epsilon(1e-6));
  double prev = 0.0;
  for (int M = 0; M <= 4; ++M) {
    const double v = sigma_homodyne(M, 1, 0.0);
    CHECK(v >= prev);
    prev = v;
  }
  const double one = sigma_homodyne(2, 1, 0.0);
  CHECK(sigma_homodyne(2, 2, 0.0) == doctest::Approx(one * one).epsilon(1e-10));
  CHECK(sigma_homodyne_consistent(3, 1, 0.0) < sigma_homodyne(3, 1, 0.0));
}

TEST_CASE("heterodyne variance constant") {
  const double eta = 4.0;
  const double s = sigma_heterodyne(0, 1, 0.0, WindowSpec{eta, eta + 0.05, 5});
  CHECK(s == doctest::Approx(eta * eta / 2.0).epsilon(0.03));
  CHECK(sigma_heterodyne(1, 1, 0.0, WindowSpec{4.0, 6.0, 5}) < sigma_heterodyne(1, 1, 0.0, WindowSpec{4.0, 7.0, 5}));
  CHECK(sigma_heterodyne(1, 1, 2.0, WindowSpec{4.0, 6.0, 5}) > sigma_heterodyne(1, 1, 0.0, WindowSpec{4.0, 6.0, 5}));
}

TEST_CASE("homodyne sample complexity") {
  MomentProfile p{2.0, 0.0, 1.0, 1.0};
  // M = ceil((4 E / eps)^(2 / (n - alpha))): (4 / 0.5)^1 = 8 and (4 / 0.5)^(1/2) = 2.83.
  CHECK(required_samples_homodyne(p, 1, 0.5, 0.05, 1).M_chosen == 8);
  CHECK(required_samples_homodyne(MomentProfile{4.0, 0.0, 1.0, 1.0}, 1, 0.5, 0.05, 1).M_chosen == 3);
  CHECK(required_samples_homodyne(MomentProfile{2.0, 1.0, 1.0, 1.0}, 1, 0.5, 0.05, 1).M_chosen == 64);
  const auto r10 = required_samples_homodyne(p, 1, 0.5, 0.05, 10);
  const auto r100 = required_samples_homodyne(p, 1, 0.5, 0.05, 100);
  const double D = std::pow(r10.M_chosen + 1.0, 1);
  const double ratio = std::log(2.0 * 100 * D / 0.05) / std::log(2.0 * 10 * D / 0.05);
  CHECK(r100.N_required / r10.N_required == doctest::Approx(ratio).epsilon(1e-6));
  const auto half = required_samples_homodyne(p, 1, 0.5, 0.025, 10);
  CHECK(half.N_required / r10.N_required ==
        doctest::Approx(std::log(2.0 * 10 * D / 0.025) / std::log(2.0 * 10 * D / 0.05)).epsilon(1e-6));
  const auto withL = required_samples_homodyne(p, 1, 0.5, 0.05, 10, 100);
  CHECK(withL.N_required / r100.N_required == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(required_samples_homodyne(p, 1, 0.3, 0.05, 1).N_required > r10.N_required / 10.0);
}

TEST_CASE("heterodyne truncation and sample complexity") {
  MomentProfile p{2.0, 0.0, 1.0, 1.0};
  CHECK(heterodyne_truncation(p, 1, 0.5, 20.0) == 8);
  double prev = std::numeric_limits<double>::infinity();
  for (double eps : {0.3, 0.4, 0.5, 0.7}) {
    const auto rep = required_samples_heterodyne(p, 1, eps, 0.05, 1, WindowSpec{20.0, 24.0, 5});
    REQUIRE(rep.feasible);
    CHECK(rep.N_required < prev);
    prev = rep.N_required;
  }
  const auto tiny = required_samples_heterodyne(p, 1, 1e-6, 0.05, 1, WindowSpec::default_for(3));
  CHECK_FALSE(tiny.feasible);
  CHECK_FALSE(tiny.message.empty());
}

TEST_CASE("Bernstein tail") {
  CHECK(bernstein_tail(1.0, 1.0, 1.0, 1.0, 1.0) == doctest::Approx(2.0 * std::exp(-3.0 / 8.0)));
  CHECK(bernstein_tail(1e6, 1.0, 1.0, 1.0, 2.0) == doctest::Approx(2.0 * bernstein_tail(1e6, 1.0, 1.0, 1.0, 1.0)));
  CHECK(bernstein_tail(1e9, 0.5, 1.0, 1.0, 1.0) < 1e-100);
  const double N = bernstein_samples(0.1, 0.05, 2.0, 3.0, 10.0);
  CHECK(bernstein_tail(N, 0.1, 2.0, 3.0, 10.0) <= 0.05);
  CHECK(bernstein_tail(N - 1.0, 0.1, 2.0, 3.0, 10.0) > 0.05);
}

TEST_CASE("bound report JSON is stable") {
  MomentProfile p{2.0, 0.0, 1.0, 1.0};
  const auto a = report_to_json(required_samples_homodyne(p, 1, 0.5, 0.05, 1));
  const auto b = report_to_json(required_samples_homodyne(p, 1, 0.5, 0.05, 1));
  CHECK(a == b);
  const auto j = nlohmann::json::parse(a);
  CHECK(j["protocol"] == "homodyne");
  CHECK(j.contains("N_required"));
}
