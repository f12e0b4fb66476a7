#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "cvshadow/phase_space.hpp"

namespace cvshadow {

// Halton low-discrepancy sequence in the first `dim` primes. Point indices start at 1.
class HaltonStream {
 public:
  explicit HaltonStream(int dim);

  int dim() const { return static_cast<int>(bases_.size()); }
  const std::vector<unsigned>& bases() const { return bases_; }
  // Radical inverses of k in every base, written to out[0..dim).
  void point(std::uint64_t k, double* out) const;
  std::vector<double> point(std::uint64_t k) const;

 private:
  std::vector<unsigned> bases_;
};

std::vector<unsigned> first_primes(int count);

// Axis-aligned box [lo_i, hi_i].
struct BoxDomain {
  std::vector<double> lo;
  std::vector<double> hi;

  static BoxDomain centered(int dim, double half_width);
  int dim() const { return static_cast<int>(lo.size()); }
  double volume() const;
  void validate() const;
  void map(const double* unit, double* out) const;
};

template <typename T>
struct QmcResult {
  T value{};
  // Koksma-Hlawka style heuristic vol * TV * log(k)^d / k with the constant set to 1.
  double error_estimate = 0.0;
  double total_variation = 0.0;
  std::uint64_t points = 0;
};

using RealIntegrand = std::function<double(const double*)>;
using ComplexIntegrand = std::function<Complex(const double*)>;

// (vol / k) sum_{i=1..k} f(map(h_i)). The sum is split into fixed blocks evaluated in parallel
// and reduced in block order. tv_grid = 0 skips the variation estimate.
QmcResult<double> qmc_integrate(const RealIntegrand& f, const BoxDomain& box, std::uint64_t k, int tv_grid = 0);
QmcResult<Complex> qmc_integrate(const ComplexIntegrand& f, const BoxDomain& box, std::uint64_t k,
                                 int tv_grid = 0);

// Vitali-type total variation from finite differences on a uniform tensor grid with `grid`
// points per axis (grid^dim evaluations).
// Randomized QMC: `replicates` independent uniform shifts of the Halton points (mod 1). The value is the
// replicate mean and error_estimate its standard error; per-replicate estimates are returned on request.
QmcResult<double> qmc_randomized(const RealIntegrand& f, const BoxDomain& box, std::uint64_t k, int replicates,
                                 std::uint64_t seed, std::vector<double>* estimates = nullptr);

double tv_estimate(const RealIntegrand& f, const BoxDomain& box, int grid);
double tv_estimate(const ComplexIntegrand& f, const BoxDomain& box, int grid);

}  // namespace cvshadow
