#pragma once

/// Scalar kernels: soft thresholding, its optimal value, standard normal
/// functions, and closed-form Gaussian expectations of both thresholding maps.
///
/// Notation for the Gaussian expectations. Let A = mu + tau*H with H ~ N(0,1)
/// and threshold chi > 0. The three regions of A map to regions of H split at
///
///   a = ( chi - mu) / tau      (A > chi   <=>  H > a)
///   b = (-chi - mu) / tau      (A < -chi  <=>  H < b),   b < a.
///
/// Using  E[1{H>a}] = Q(a),  E[H 1{H>a}] = phi(a),  E[H^2 1{H>a}] = Q(a) + a phi(a)
/// (and the mirrored identities for H < b) gives
///
///   E[eta(A;chi)] = (mu - chi) Q(a) + tau phi(a) + (mu + chi) Q(-b) - tau phi(b)
///
///   E[e(A;chi)]   = (chi mu - chi^2/2) Q(a) + chi tau phi(a)
///                 + (-chi mu - chi^2/2) Q(-b) + chi tau phi(b)
///                 + 1/2 [ (mu^2 + tau^2) (Q(b) - Q(a))
///                         + 2 mu tau (phi(b) - phi(a))
///                         + tau^2 (b phi(b) - a phi(a)) ].
///
/// The last bracket is E[A^2 1{b < H <= a}].

#include <cmath>
#include <numbers>

#include "lassocsi/errors.hpp"

namespace lassocsi {

/// Arguments of a Gaussian expectation E_H[f(mean + spread*H; threshold)].
struct GaussMoment {
  double mean = 0.0;
  double spread = 1.0;
  double threshold = 1.0;

  void validate() const {
    detail::require(std::isfinite(mean), "GaussMoment: mean must be finite");
    detail::require(std::isfinite(spread) && spread > 0.0,
                    "GaussMoment: spread must be finite and positive");
    detail::require(std::isfinite(threshold) && threshold > 0.0,
                    "GaussMoment: threshold must be finite and positive");
  }
};

namespace detail {

inline void check_threshold_args(double a, double t) {
  require(std::isfinite(a), "soft threshold: argument must be finite");
  require(std::isfinite(t) && t > 0.0, "soft threshold: level must be finite and positive");
}

}  // namespace detail

/// Proximal map of t|.|. Ties |a| == t go to the dead zone.
inline double soft_threshold(double a, double t) {
  detail::check_threshold_args(a, t);
  if (a > t) return a - t;
  if (a < -t) return a + t;
  return 0.0;
}

/// Optimal value min_x 1/2 (x - a)^2 + t|x|.
inline double soft_threshold_value(double a, double t) {
  detail::check_threshold_args(a, t);
  if (a > t) return t * a - 0.5 * t * t;
  if (a < -t) return -t * a - 0.5 * t * t;
  return 0.5 * a * a;
}

inline double std_normal_pdf(double x) {
  detail::require(std::isfinite(x), "std_normal_pdf: argument must be finite");
  return std::exp(-0.5 * x * x) * (0.5 * std::numbers::inv_sqrtpi * std::numbers::sqrt2);
}

/// Standard normal upper tail P[N(0,1) > x].
inline double q_function(double x) {
  detail::require(std::isfinite(x), "q_function: argument must be finite");
  return 0.5 * std::erfc(x / std::numbers::sqrt2);
}

inline double gauss_expect_eta(const GaussMoment& m) {
  m.validate();
  const double mu = m.mean, tau = m.spread, chi = m.threshold;
  const double a = (chi - mu) / tau;
  const double b = (-chi - mu) / tau;
  return (mu - chi) * q_function(a) + tau * std_normal_pdf(a) +
         (mu + chi) * q_function(-b) - tau * std_normal_pdf(b);
}

inline double gauss_expect_e(const GaussMoment& m) {
  m.validate();
  const double mu = m.mean, tau = m.spread, chi = m.threshold;
  const double a = (chi - mu) / tau;
  const double b = (-chi - mu) / tau;
  const double qa = q_function(a), qmb = q_function(-b);
  const double pa = std_normal_pdf(a), pb = std_normal_pdf(b);

  const double upper = (chi * mu - 0.5 * chi * chi) * qa + chi * tau * pa;
  const double lower = (-chi * mu - 0.5 * chi * chi) * qmb + chi * tau * pb;
  // P[b < H <= a], formed from the tails that keep precision.
  double mass;
  if (a <= 0.0) {
    mass = q_function(-a) - qmb;
  } else if (b >= 0.0) {
    mass = q_function(b) - qa;
  } else {
    mass = 1.0 - qa - qmb;
  }
  const double middle = 0.5 * ((mu * mu + tau * tau) * mass + 2.0 * mu * tau * (pb - pa) +
                               tau * tau * (b * pb - a * pa));
  return upper + lower + middle;
}

}  // namespace lassocsi
