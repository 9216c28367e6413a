#pragma once

#include <algorithm>
#include <cmath>
#include <string>

#include "lassocsi/errors.hpp"

namespace lassocsi {

struct LineSearchResult {
  double x = 0.0;
  double value = 0.0;
  double lo = 0.0;
  double hi = 0.0;
  int iters = 0;
  bool converged = false;
  // Interior probes whose value exceeded both bracket ends. Zero for a
  // unimodal function, up to rounding.
  int bracket_violations = 0;
};

/// Golden-section minimization of f on [lo, hi]. Stops when
/// hi - lo <= rel_tol * max(1, |x|) or after max_iter reductions.
template <class F>
LineSearchResult golden_minimize(F&& f, double lo, double hi, double rel_tol, int max_iter) {
  detail::require(lo < hi, "golden_minimize: empty bracket");
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;

  LineSearchResult r;
  double a = lo, b = hi;
  double fa = f(a), fb = f(b);
  double c = b - inv_phi * (b - a), d = a + inv_phi * (b - a);
  double fc = f(c), fd = f(d);

  auto violated = [&](double fx) {
    const double top = std::max(fa, fb);
    return fx > top + 1e-12 * (1.0 + std::abs(top));
  };
  r.bracket_violations += violated(fc) + violated(fd);

  int it = 0;
  for (; it < max_iter; ++it) {
    const double mid = 0.5 * (a + b);
    if (b - a <= rel_tol * std::max(1.0, std::abs(mid))) {
      r.converged = true;
      break;
    }
    if (fc <= fd) {
      b = d, fb = fd;
      d = c, fd = fc;
      c = b - inv_phi * (b - a);
      fc = f(c);
      r.bracket_violations += violated(fc);
    } else {
      a = c, fa = fc;
      c = d, fc = fd;
      d = a + inv_phi * (b - a);
      fd = f(d);
      r.bracket_violations += violated(fd);
    }
  }
  if (!r.converged && b - a <= rel_tol * std::max(1.0, std::abs(0.5 * (a + b)))) r.converged = true;

  r.iters = it;
  r.lo = a;
  r.hi = b;
  // Best of the four tracked points.
  r.x = c, r.value = fc;
  if (fd < r.value) r.x = d, r.value = fd;
  if (fa < r.value) r.x = a, r.value = fa;
  if (fb < r.value) r.x = b, r.value = fb;
  return r;
}

/// Doubles `hi` until the minimum of a unimodal f lies inside [lo, hi], i.e.
/// until f(hi) is no better than f at the bracket midpoint. Returns the new hi.
template <class F>
double expand_upper_bracket(F&& f, double lo, double hi, double cap) {
  detail::require(lo < hi, "expand_upper_bracket: empty bracket");
  for (;;) {
    const double mid = 0.5 * (lo + hi);
    if (f(hi) >= f(mid)) return hi;
    if (hi >= cap) {
      throw NonConvergenceError("bracket expansion exceeded cap " + std::to_string(cap), hi);
    }
    hi = std::min(2.0 * hi, cap);
  }
}

}  // namespace lassocsi
