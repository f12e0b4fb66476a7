#include <doctest.h>

#include <random>
#include <vector>

#include "cvshadow/kernels.hpp"

using namespace cvshadow;

namespace {

std::vector<double> random_vector(std::mt19937_64& rng, std::size_t n) {
  std::uniform_real_distribution<double> d(-1.0, 1.0);
  std::vector<double> v(n);
  for (auto& x : v) x = d(rng);
  return v;
}

}  // namespace

TEST_CASE("scalar Chebyshev kernel matches a direct cosine sum") {
  std::mt19937_64 rng(1);
  const int ncoef = 21, nf = 7;
  const auto c = random_vector(rng, ncoef * nf);
  std::vector<double> out(nf);
  for (double t : {-1.0, -0.3, 0.0, 0.55, 1.0}) {
    kernels::scalar::chebyshev_batch(c.data(), ncoef, nf, t, out.data());
    for (int f = 0; f < nf; ++f) {
      double ref = 0.0;
      for (int k = 0; k < ncoef; ++k) ref += c[k * nf + f] * std::cos(k * std::acos(t));
      CHECK(out[f] == doctest::Approx(ref).epsilon(1e-12));
    }
  }
}

TEST_CASE("AVX2 kernels are equivalent to the scalar reference") {
  if (!kernels::isa_available(kernels::Isa::avx2)) {
    MESSAGE("AVX2 not available on this host; equivalence test skipped");
    return;
  }
  std::mt19937_64 rng(2);
  for (int nf : {1, 3, 4, 5, 15, 36}) {
    const int ncoef = 21;
    const auto c = random_vector(rng, ncoef * nf);
    std::vector<double> a(nf), b(nf);
    for (double t : {-0.9, 0.1, 0.77}) {
      kernels::scalar::chebyshev_batch(c.data(), ncoef, nf, t, a.data());
      kernels::avx2::chebyshev_batch(c.data(), ncoef, nf, t, b.data());
      for (int f = 0; f < nf; ++f) CHECK(b[f] == doctest::Approx(a[f]).epsilon(1e-14).scale(1.0));
    }
  }
  for (int na : {1, 5, 8}) {
    for (int nb : {1, 3, 4, 7, 81}) {
      const auto ar = random_vector(rng, na), ai = random_vector(rng, na);
      const auto br = random_vector(rng, nb), bi = random_vector(rng, nb);
      auto r1 = random_vector(rng, na * nb), i1 = random_vector(rng, na * nb);
      auto r2 = r1, i2 = i1;
      kernels::scalar::outer_accumulate(ar.data(), ai.data(), na, br.data(), bi.data(), nb, r1.data(), i1.data());
      kernels::avx2::outer_accumulate(ar.data(), ai.data(), na, br.data(), bi.data(), nb, r2.data(), i2.data());
      for (int k = 0; k < na * nb; ++k) {
        CHECK(r2[k] == doctest::Approx(r1[k]).epsilon(1e-14).scale(1.0));
        CHECK(i2[k] == doctest::Approx(i1[k]).epsilon(1e-14).scale(1.0));
      }
    }
  }
}

TEST_CASE("dispatch can be forced") {
  const auto original = kernels::active_isa();
  kernels::force_isa(kernels::Isa::scalar);
  CHECK(kernels::active_isa() == kernels::Isa::scalar);
  CHECK(std::string(kernels::isa_name(kernels::Isa::scalar)) == "scalar");
  kernels::force_isa(original);
  CHECK(kernels::active_isa() == original);
}
