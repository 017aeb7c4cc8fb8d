#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>

#include "viscoflux/errors.hpp"

namespace viscoflux::quad {

struct SimpsonOptions {
  double abs_tol = 1e-10;
  std::size_t max_intervals = 1'000'000;
};

namespace detail {

template <class Fn>
double simpson_recurse(const Fn& f, double a, double b, double fa, double fm, double fb,
                       double whole, double tol, int depth, std::size_t& intervals,
                       std::size_t cap) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m);
  const double rm = 0.5 * (m + b);
  const double flm = f(lm);
  const double frm = f(rm);
  const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  const double diff = left + right - whole;
  ++intervals;
  if (depth <= 0 || intervals >= cap || std::fabs(diff) <= 15.0 * tol) {
    return left + right + diff / 15.0;
  }
  return simpson_recurse(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1, intervals, cap) +
         simpson_recurse(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1, intervals, cap);
}

} // namespace detail

/// Adaptive Simpson with Richardson correction. Integrates from a to b (a > b allowed).
template <class Fn>
double adaptive_simpson(const Fn& f, double a, double b, SimpsonOptions opt = {}) {
  if (a == b) return 0.0;
  if (a > b) return -adaptive_simpson(f, b, a, opt);
  const double fa = f(a);
  const double fb = f(b);
  const double fm = f(0.5 * (a + b));
  const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  std::size_t intervals = 0;
  const double r = detail::simpson_recurse(f, a, b, fa, fm, fb, whole, opt.abs_tol, 60,
                                           intervals, opt.max_intervals);
  if (!std::isfinite(r)) throw IntegrityError("adaptive_simpson: non-finite integral");
  return r;
}

// 5-point Gauss-Legendre on [-1, 1]; exact for polynomials of degree 9.
inline constexpr std::array<double, 5> kGaussNodes5 = {
    -0.9061798459386640, -0.5384693101056831, 0.0, 0.5384693101056831, 0.9061798459386640};
inline constexpr std::array<double, 5> kGaussWeights5 = {
    0.2369268850561891, 0.4786286704993665, 0.5688888888888889, 0.4786286704993665,
    0.2369268850561891};

template <class Fn>
double gauss_legendre5(const Fn& f, double a, double b) {
  const double half = 0.5 * (b - a);
  const double mid = 0.5 * (a + b);
  double s = 0.0;
  for (std::size_t k = 0; k < kGaussNodes5.size(); ++k) {
    s += kGaussWeights5[k] * f(mid + half * kGaussNodes5[k]);
  }
  return s * half;
}

/// Bisection on a bracketing interval. Runs until the bracket stops shrinking.
template <class Fn>
double bisect(const Fn& f, double lo, double hi) {
  double flo = f(lo);
  if (flo == 0.0) return lo;
  for (int it = 0; it < 2000; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    const double fm = f(mid);
    if (fm == 0.0) return mid;
    if ((fm < 0.0) == (flo < 0.0)) {
      lo = mid;
      flo = fm;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

} // namespace viscoflux::quad
