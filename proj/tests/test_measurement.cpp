#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <numbers>
#include <sstream>

#include "cvshadow/measurement.hpp"
#include "cvshadow/quadrature.hpp"

using namespace cvshadow;

namespace {

struct Stats {
  double mean = 0.0, var = 0.0;
};

Stats stats(const std::vector<double>& v) {
  Stats s;
  for (double x : v) s.mean += x;
  s.mean /= v.size();
  for (double x : v) s.var += (x - s.mean) * (x - s.mean);
  s.var /= (v.size() - 1);
  return s;
}

std::vector<double> homodyne_outcomes(const StateSpec& st, std::size_t N, std::uint64_t seed, int mode = 0) {
  const auto sampler = make_sampler(st, Protocol::homodyne);
  const auto batch = sample_batch(*sampler, N, seed);
  std::vector<double> q;
  for (const auto& r : batch.records) q.push_back(r.outcome[mode]);
  return q;
}

}  // namespace

TEST_CASE("homodyne pdf examples") {
  const auto vac = fock_matrix_of(vacuum_state(1), 4).rho;
  const auto one = fock_matrix_of(FockNumberSpec{1}, 4).rho;
  for (double theta : {0.0, 1.1, -2.5})
    for (double q : {-1.5, 0.0, 0.7}) {
      CHECK(homodyne_pdf(vac, theta, q) == doctest::Approx(std::exp(-q * q) / std::sqrt(std::numbers::pi)));
      CHECK(homodyne_pdf(one, theta, q) ==
            doctest::Approx(2.0 * q * q * std::exp(-q * q) / std::sqrt(std::numbers::pi)).scale(1.0));
    }
  const auto cat = fock_matrix_of(CatStateSpec{ModePoint(1.0, 1.0), CatLogical::zero}, 40).rho;
  for (double theta : {0.0, 0.9}) {
    auto r = integrate_adaptive<double>([&](double q) { return homodyne_pdf(cat, theta, q); }, -12.0, 12.0, 1e-12,
                                        1e-12);
    CHECK(r.value == doctest::Approx(1.0).epsilon(1e-8));
  }
  Eigen::MatrixXcd bad = Eigen::MatrixXcd::Zero(2, 2);
  bad(0, 1) = 1.0;
  CHECK_THROWS_AS(homodyne_pdf(FockMatrix(1, 1, bad), 0.0, 0.0), std::invalid_argument);
}

TEST_CASE("heterodyne pdf examples") {
  PhasePoint x(2);
  x << 0.4, -1.3;
  CHECK(heterodyne_pdf(vacuum_state(1), x) ==
        doctest::Approx(std::exp(-0.5 * x.squaredNorm()) / (2.0 * std::numbers::pi)));
  const CatStateSpec cat{ModePoint(1.0, 1.0), CatLogical::zero};
  CHECK(heterodyne_pdf(cat, x) == doctest::Approx(cat_position_pdf(cat, ModePoint(0.4, -1.3)) / (2 * std::numbers::pi)));
}

TEST_CASE("homodyne sampling variances") {
  CHECK(stats(homodyne_outcomes(vacuum_state(1), 100000, 42)).var == doctest::Approx(0.5).epsilon(0.02));
  CHECK(stats(homodyne_outcomes(thermal_state(1.0), 100000, 43)).var == doctest::Approx(1.5).epsilon(0.0134));
  // Product state: the two modes are uncorrelated.
  const auto sampler = make_sampler(chain_ground_state({2, 0.0, false, 0}), Protocol::homodyne);
  const auto batch = sample_batch(*sampler, 100000, 5);
  double sxy = 0, sxx = 0, syy = 0;
  for (const auto& r : batch.records) {
    sxy += r.outcome[0] * r.outcome[1];
    sxx += r.outcome[0] * r.outcome[0];
    syy += r.outcome[1] * r.outcome[1];
  }
  CHECK(std::abs(sxy / std::sqrt(sxx * syy)) < 0.01);
}

TEST_CASE("homodyne marginal variance of a squeezed Gaussian follows the rotated covariance") {
  GaussianStateSpec sq{Eigen::VectorXd::Zero(2), Eigen::Vector2d(0.25, 4.0).asDiagonal()};
  const auto sampler = make_sampler(sq, Protocol::homodyne);
  const auto batch = sample_batch(*sampler, 200000, 11);
  // Bin by angle and compare the conditional variance with cos^2 V11/2 + sin^2 V22/2.
  for (double center : {0.0, std::numbers::pi / 4, std::numbers::pi / 2}) {
    std::vector<double> q;
    for (const auto& r : batch.records)
      if (std::abs(r.thetas[0] - center) < 0.05) q.push_back(r.outcome[0]);
    const double c = std::cos(center), s = std::sin(center);
    const double expected = 0.5 * (c * c * 0.25 + s * s * 4.0);
    const double sigma = expected * std::sqrt(2.0 / q.size());
    CHECK(std::abs(stats(q).var - expected) < 3.0 * sigma + 0.05 * expected);
  }
}

TEST_CASE("heterodyne sampling moments") {
  const auto sampler = make_sampler(vacuum_state(1), Protocol::heterodyne);
  const auto batch = sample_batch(*sampler, 100000, 1);
  std::vector<double> x, p;
  for (const auto& r : batch.records) {
    x.push_back(r.heterodyne_point(0)[0]);
    p.push_back(r.heterodyne_point(0)[1]);
  }
  const double tol = 4.0 / std::sqrt(100000.0);
  CHECK(std::abs(stats(x).mean) < tol);
  CHECK(std::abs(stats(p).mean) < tol);
  CHECK(stats(x).var == doctest::Approx(1.0).epsilon(0.02));
  CHECK(stats(p).var == doctest::Approx(1.0).epsilon(0.02));
}

TEST_CASE("heterodyne chain covariance matches (I + V)/2") {
  const auto g = chain_ground_state({10, 0.99, false, 0});
  const auto sampler = make_sampler(g, Protocol::heterodyne);
  const auto batch = sample_batch(*sampler, 100000, 9);
  const int n = 20;
  Eigen::MatrixXd emp = Eigen::MatrixXd::Zero(n, n);
  for (const auto& r : batch.records) {
    Eigen::VectorXd v(n);
    for (int j = 0; j < 10; ++j) {
      v(j) = r.heterodyne_point(j)[0];
      v(10 + j) = r.heterodyne_point(j)[1];
    }
    emp += v * v.transpose();
  }
  emp /= static_cast<double>(batch.size());
  const Eigen::MatrixXd expected = 0.5 * (Eigen::MatrixXd::Identity(n, n) + g.cov);
  CHECK((emp - expected).norm() / expected.norm() < 0.05);
}

TEST_CASE("cat heterodyne rejection sampler") {
  const CatStateSpec cat{ModePoint(1.0, 1.0), CatLogical::one};
  const auto sampler = make_sampler(cat, Protocol::heterodyne);
  const std::size_t N = 100000;
  const auto batch = sample_batch(*sampler, N, 3);
  CHECK(sampler->acceptance_rate() >= 0.1);
  // First moments against the Husimi function integrated on a polar grid.
  std::vector<double> x, p;
  for (const auto& r : batch.records) {
    x.push_back(r.heterodyne_point(0)[0]);
    p.push_back(r.heterodyne_point(0)[1]);
  }
  double mx = 0, mp = 0;
  std::vector<double> nodes, weights;
  composite_gauss_legendre(-12.0, 12.0, 48, 16, nodes, weights);
  for (std::size_t i = 0; i < nodes.size(); ++i)
    for (std::size_t k = 0; k < nodes.size(); ++k) {
      PhasePoint v(2);
      v << nodes[i], nodes[k];
      const double w = weights[i] * weights[k] * heterodyne_pdf(cat, v);
      mx += w * nodes[i];
      mp += w * nodes[k];
    }
  CHECK(std::abs(stats(x).mean - mx) < 3.0 * std::sqrt(stats(x).var / N));
  CHECK(std::abs(stats(p).mean - mp) < 3.0 * std::sqrt(stats(p).var / N));
}

TEST_CASE("JSONL round trip is bit-exact") {
  const auto sampler = make_sampler(CatStateSpec{ModePoint(1.0, 1.0), CatLogical::zero}, Protocol::homodyne);
  const auto batch = sample_batch(*sampler, 500, 77, "cat");
  std::stringstream ss;
  write_jsonl(batch, ss);
  const auto back = read_jsonl(ss);
  REQUIRE(back.size() == batch.size());
  for (std::size_t i = 0; i < batch.size(); ++i) CHECK(back.records[i] == batch.records[i]);
  CHECK_THROWS(record_from_json("{\"protocol\":\"homodyne\"}"));
  CHECK_THROWS(record_from_json("not json"));
}

TEST_CASE("sampling is deterministic and independent of the thread count") {
  const auto sampler = make_sampler(thermal_state(0.5), Protocol::heterodyne);
  setenv("CVSHADOW_THREADS", "1", 1);
  const auto a = sample_batch(*sampler, 2000, 123);
  setenv("CVSHADOW_THREADS", "4", 1);
  const auto b = sample_batch(*sampler, 2000, 123);
  unsetenv("CVSHADOW_THREADS");
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(a.records[i] == b.records[i]);
  const auto c = sample_batch(*sampler, 2000, 124);
  CHECK_FALSE(c.records[0] == a.records[0]);
}
