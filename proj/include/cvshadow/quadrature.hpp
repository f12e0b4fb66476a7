#pragma once

#include <cmath>
#include <complex>
#include <limits>
#include <queue>
#include <stdexcept>
#include <vector>

namespace cvshadow {

struct GaussLegendre {
  std::vector<double> nodes;    // on [-1, 1]
  std::vector<double> weights;
};

// Cached Gauss-Legendre rule with n points.
const GaussLegendre& gauss_legendre(int n);

// Composite Gauss-Legendre nodes on [a, b] split into `panels` equal panels.
void composite_gauss_legendre(double a, double b, int panels, int order, std::vector<double>& x,
                              std::vector<double>& w);

template <typename T>
struct QuadResult {
  T value{};
  double error = 0.0;
  int evaluations = 0;
  bool converged = false;
};

namespace detail {

extern const double kKronrodNodes[8];
extern const double kKronrodWeights[8];
extern const double kGaussWeights[4];

inline double magnitude(double v) { return std::abs(v); }
inline double magnitude(const std::complex<double>& v) { return std::abs(v); }

template <typename T, typename F>
void gk15(F& f, double a, double b, T& result, double& error) {
  const double c = 0.5 * (a + b);
  const double h = 0.5 * (b - a);
  const T fc = f(c);
  T kronrod = fc * kKronrodWeights[7];
  T gauss = fc * kGaussWeights[3];
  for (int i = 0; i < 7; ++i) {
    const double dx = h * kKronrodNodes[i];
    const T f1 = f(c - dx);
    const T f2 = f(c + dx);
    kronrod += (f1 + f2) * kKronrodWeights[i];
    if (i % 2 == 1) gauss += (f1 + f2) * kGaussWeights[i / 2];
  }
  result = kronrod * h;
  error = magnitude((kronrod - gauss) * h);
}

}  // namespace detail

// Globally adaptive Gauss-Kronrod (7/15) quadrature on a finite interval.
template <typename T, typename F>
QuadResult<T> integrate_adaptive(F&& f, double a, double b, double abs_tol, double rel_tol,
                                 int max_evals = 200000) {
  struct Segment {
    double a, b;
    T value;
    double error;
    bool operator<(const Segment& o) const { return error < o.error; }
  };
  QuadResult<T> out;
  if (a == b) {
    out.converged = true;
    return out;
  }
  std::priority_queue<Segment> heap;
  T total{};
  double total_err = 0.0;
  {
    Segment s{a, b, T{}, 0.0};
    detail::gk15<T>(f, a, b, s.value, s.error);
    out.evaluations += 15;
    total = s.value;
    total_err = s.error;
    heap.push(s);
  }
  while (total_err > std::max(abs_tol, rel_tol * detail::magnitude(total))) {
    if (out.evaluations + 30 > max_evals) break;
    Segment worst = heap.top();
    heap.pop();
    const double mid = 0.5 * (worst.a + worst.b);
    if (mid <= worst.a || mid >= worst.b) {
      heap.push(worst);
      break;
    }
    Segment left{worst.a, mid, T{}, 0.0};
    Segment right{mid, worst.b, T{}, 0.0};
    detail::gk15<T>(f, left.a, left.b, left.value, left.error);
    detail::gk15<T>(f, right.a, right.b, right.value, right.error);
    out.evaluations += 30;
    heap.push(left);
    heap.push(right);
    total += left.value + right.value - worst.value;
    total_err += left.error + right.error - worst.error;
  }
  // Final re-summation removes drift accumulated by the incremental updates.
  total = T{};
  total_err = 0.0;
  while (!heap.empty()) {
    total += heap.top().value;
    total_err += heap.top().error;
    heap.pop();
  }
  out.value = total;
  out.error = total_err;
  out.converged = total_err <= std::max(abs_tol, rel_tol * detail::magnitude(total));
  return out;
}

// Adaptive quadrature on [a, infinity) through t = a + s / (1 - s).
template <typename T, typename F>
QuadResult<T> integrate_semi_infinite(F&& f, double a, double abs_tol, double rel_tol,
                                      int max_evals = 200000) {
  auto g = [&](double s) -> T {
    if (s >= 1.0) return T{};
    const double one_minus = 1.0 - s;
    const double t = a + s / one_minus;
    return f(t) * (1.0 / (one_minus * one_minus));
  };
  return integrate_adaptive<T>(g, 0.0, 1.0, abs_tol, rel_tol, max_evals);
}

}  // namespace cvshadow
