#include "cvshadow/qmc.hpp"

#include <cmath>
#include <bit>
#include <limits>
#include <random>
#include <stdexcept>

#include "cvshadow/parallel.hpp"

namespace cvshadow {

std::vector<unsigned> first_primes(int count) {
  std::vector<unsigned> primes;
  for (unsigned n = 2; static_cast<int>(primes.size()) < count; ++n) {
    bool prime = true;
    for (unsigned p : primes) {
      if (p * p > n) break;
      if (n % p == 0) {
        prime = false;
        break;
      }
    }
    if (prime) primes.push_back(n);
  }
  return primes;
}

HaltonStream::HaltonStream(int dim) {
  if (dim < 1) throw std::invalid_argument("HaltonStream: dimension must be positive");
  bases_ = first_primes(dim);
}

void HaltonStream::point(std::uint64_t k, double* out) const {
  if (k == 0) throw std::invalid_argument("HaltonStream: point indices start at 1");
  for (std::size_t i = 0; i < bases_.size(); ++i) {
    const unsigned b = bases_[i];
    double f = 1.0;
    double r = 0.0;
    std::uint64_t n = k;
    while (n > 0) {
      f /= b;
      r += f * static_cast<double>(n % b);
      n /= b;
    }
    out[i] = r;
  }
}

std::vector<double> HaltonStream::point(std::uint64_t k) const {
  std::vector<double> out(bases_.size());
  point(k, out.data());
  return out;
}

BoxDomain BoxDomain::centered(int dim, double half_width) {
  return {std::vector<double>(dim, -half_width), std::vector<double>(dim, half_width)};
}

double BoxDomain::volume() const {
  double v = 1.0;
  for (int i = 0; i < dim(); ++i) v *= hi[i] - lo[i];
  return v;
}

void BoxDomain::validate() const {
  if (lo.empty() || lo.size() != hi.size()) throw std::invalid_argument("BoxDomain: lo/hi size mismatch");
  for (int i = 0; i < dim(); ++i)
    if (!(hi[i] > lo[i]) || !std::isfinite(lo[i]) || !std::isfinite(hi[i]))
      throw std::invalid_argument("BoxDomain: empty or unbounded axis");
}

void BoxDomain::map(const double* unit, double* out) const {
  for (int i = 0; i < dim(); ++i) out[i] = lo[i] + (hi[i] - lo[i]) * unit[i];
}

namespace {

double magnitude(double v) { return std::abs(v); }
double magnitude(const Complex& v) { return std::abs(v); }
bool finite(double v) { return std::isfinite(v); }
bool finite(const Complex& v) { return std::isfinite(v.real()) && std::isfinite(v.imag()); }

constexpr std::uint64_t kBlock = 4096;

template <typename T, typename F>
QmcResult<T> qmc_impl(const F& f, const BoxDomain& box, std::uint64_t k, int tv_grid,
                      const std::vector<double>* shift = nullptr) {
  box.validate();
  if (k == 0) throw std::invalid_argument("qmc_integrate: point budget must be positive");
  const HaltonStream halton(box.dim());
  const std::uint64_t blocks = (k + kBlock - 1) / kBlock;
  std::vector<T> partial(blocks, T{});
  parallel_for(blocks, [&](std::size_t b) {
    std::vector<double> unit(box.dim()), x(box.dim());
    T acc{};
    const std::uint64_t first = b * kBlock + 1;
    const std::uint64_t last = std::min<std::uint64_t>(k, (b + 1) * kBlock);
    for (std::uint64_t i = first; i <= last; ++i) {
      halton.point(i, unit.data());
      if (shift)
        for (int a = 0; a < box.dim(); ++a) {
          unit[a] += (*shift)[a];
          if (unit[a] >= 1.0) unit[a] -= 1.0;
        }
      box.map(unit.data(), x.data());
      const T v = f(x.data());
      if (!finite(v)) throw std::domain_error("qmc_integrate: integrand returned a non-finite value");
      acc += v;
    }
    partial[b] = acc;
  });
  QmcResult<T> out;
  T total{};
  for (const T& p : partial) total += p;
  out.value = total * (box.volume() / static_cast<double>(k));
  out.points = k;
  if (tv_grid > 0) {
    out.total_variation = tv_estimate(f, box, tv_grid);
    out.error_estimate =
        box.volume() * out.total_variation * std::pow(std::log(static_cast<double>(k)), box.dim()) / k;
  } else {
    out.error_estimate = std::numeric_limits<double>::quiet_NaN();
  }
  return out;
}

template <typename T, typename F>
QmcResult<T> randomized_impl(const F& f, const BoxDomain& box, std::uint64_t k, int replicates, std::uint64_t seed,
                             std::vector<T>* estimates) {
  if (replicates < 2) throw std::invalid_argument("qmc_randomized: need at least 2 replicates");
  box.validate();
  Rng rng(seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::vector<T> values;
  for (int r = 0; r < replicates; ++r) {
    std::vector<double> shift(box.dim());
    for (double& c : shift) c = unif(rng);
    values.push_back(qmc_impl<T>(f, box, k, 0, &shift).value);
  }
  T mean{};
  for (const T& v : values) mean += v;
  mean /= static_cast<double>(replicates);
  double ss = 0.0;
  for (const T& v : values) ss += std::norm(v - mean);
  QmcResult<T> out;
  out.value = mean;
  out.error_estimate = std::sqrt(ss / (replicates - 1.0) / replicates);
  out.points = k * static_cast<std::uint64_t>(replicates);
  if (estimates) *estimates = std::move(values);
  return out;
}

// Sum over all grid cells of |mixed finite difference| for every non-empty axis subset,
// which is the Hardy-Krause variation of the grid interpolant.
template <typename T, typename F>
double tv_impl(const F& f, const BoxDomain& box, int grid) {
  box.validate();
  if (grid < 2) throw std::invalid_argument("tv_estimate: grid needs at least 2 points per axis");
  const int d = box.dim();
  std::size_t total = 1;
  for (int i = 0; i < d; ++i) {
    total *= static_cast<std::size_t>(grid);
    if (total > 200'000'000) throw std::invalid_argument("tv_estimate: grid too large for this dimension");
  }
  std::vector<T> values(total);
  parallel_for(total, [&](std::size_t flat) {
    std::vector<double> x(d);
    std::size_t rem = flat;
    for (int i = d - 1; i >= 0; --i) {
      const int idx = static_cast<int>(rem % grid);
      rem /= grid;
      x[i] = box.lo[i] + (box.hi[i] - box.lo[i]) * idx / (grid - 1);
    }
    values[flat] = f(x.data());
  });
  std::vector<std::size_t> stride(d);
  stride[d - 1] = 1;
  for (int i = d - 2; i >= 0; --i) stride[i] = stride[i + 1] * grid;
  double tv = 0.0;
  for (unsigned mask = 1; mask < (1u << d); ++mask) {
    for (std::size_t flat = 0; flat < total; ++flat) {
      bool interior = true;
      for (int i = 0; i < d && interior; ++i)
        if ((mask >> i & 1u) && static_cast<int>(flat / stride[i] % grid) == grid - 1) interior = false;
      if (!interior) continue;
      T diff{};
      for (unsigned sub = mask;; sub = (sub - 1) & mask) {
        std::size_t idx = flat;
        for (int i = 0; i < d; ++i)
          if (sub >> i & 1u) idx += stride[i];
        const int sign = ((std::popcount(mask) - std::popcount(sub)) % 2 == 0) ? 1 : -1;
        diff += values[idx] * static_cast<double>(sign);
        if (sub == 0) break;
      }
      tv += magnitude(diff);
    }
  }
  return tv;
}

}  // namespace

QmcResult<double> qmc_integrate(const RealIntegrand& f, const BoxDomain& box, std::uint64_t k, int tv_grid) {
  return qmc_impl<double>(f, box, k, tv_grid);
}

QmcResult<Complex> qmc_integrate(const ComplexIntegrand& f, const BoxDomain& box, std::uint64_t k, int tv_grid) {
  return qmc_impl<Complex>(f, box, k, tv_grid);
}

QmcResult<double> qmc_randomized(const RealIntegrand& f, const BoxDomain& box, std::uint64_t k, int replicates,
                                 std::uint64_t seed, std::vector<double>* estimates) {
  return randomized_impl<double>(f, box, k, replicates, seed, estimates);
}

double tv_estimate(const RealIntegrand& f, const BoxDomain& box, int grid) { return tv_impl<double>(f, box, grid); }

double tv_estimate(const ComplexIntegrand& f, const BoxDomain& box, int grid) {
  return tv_impl<Complex>(f, box, grid);
}

}  // namespace cvshadow
