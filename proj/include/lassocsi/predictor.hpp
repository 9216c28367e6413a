#pragma once

/// Asymptotic predictions for the LASSO
///
///   xhat = argmin_x 1/2 ||y - A x||^2 + lambda ||x||_1,
///   y = H x0 + z,   A = gamma H + eps Omega,   gamma^2 + eps^2 = 1,
///
/// with H, Omega iid N(0, 1/n), z iid N(0, sigma_z^2), m/n -> delta and
/// k/n -> kappa. Everything follows from the saddle point (tau*, beta*) of
///
///   D(tau, beta) = beta tau (delta - 1)/2 + beta sigma_z^2 / (2 tau) - beta^2 / 4
///                + beta eps^2 E[X0^2] / (2 tau)
///                + (beta / tau) E[e(gamma X0 + tau H; 2 lambda tau / beta)],
///
/// minimized over tau > 0 and maximized over beta > 0. D is concave in beta
/// (the last term is a minimum of functions affine in beta). The saddle is
/// located by nested golden-section searches.

#include <cmath>
#include <cstdint>
#include <string>

#include "lassocsi/errors.hpp"
#include "lassocsi/golden.hpp"
#include "lassocsi/kernels.hpp"
#include "lassocsi/prior.hpp"

namespace lassocsi {

struct ModelConfig {
  double delta = 1.0;     // m / n
  double kappa = 0.1;     // k / n
  double eps2 = 0.0;      // variance of the matrix uncertainty
  double sigma_z2 = 1.0;  // noise variance
  double lambda = 1.0;    // regularization weight

  double gamma() const { return std::sqrt(1.0 - eps2); }
  double snr() const { return kappa / sigma_z2; }

  ModelConfig with_lambda(double l) const {
    ModelConfig c = *this;
    c.lambda = l;
    return c;
  }

  void validate() const {
    detail::require(std::isfinite(delta) && delta > 0.0, "ModelConfig: delta must be positive");
    detail::require(kappa > 0.0 && kappa < 1.0, "ModelConfig: kappa must lie in (0,1)");
    detail::require(eps2 >= 0.0 && eps2 < 1.0, "ModelConfig: eps2 must lie in [0,1)");
    detail::require(std::isfinite(sigma_z2) && sigma_z2 > 0.0,
                    "ModelConfig: sigma_z2 must be positive");
    detail::require(std::isfinite(lambda) && lambda > 0.0, "ModelConfig: lambda must be positive");
  }
};

/// sigma_z^2 implied by SNR = kappa / sigma_z^2.
inline double sigma_z2_from_snr(double kappa, double snr) {
  detail::require(snr > 0.0 && std::isfinite(snr), "snr must be positive");
  return kappa / snr;
}

struct SaddleOptions {
  double beta_lo = 1e-6;
  double beta_hi = 10.0;
  double beta_cap = 1e6;
  double beta_rel_tol = 1e-10;
  double tau_hi = 10.0;
  double tau_cap = 1e6;
  double tau_rel_tol = 1e-9;
  int outer_max_iter = 200;
  int inner_max_iter = 200;
};

struct ScalarSolution {
  double tau_star = 0.0;
  double beta_star = 0.0;
  double objective = 0.0;  // D(tau*, beta*)
  bool converged = false;
  int outer_iters = 0;
  int inner_iters_total = 0;
  int bracket_violations = 0;
};

struct PredictionReport {
  double mse = 0.0;
  double phi_on = 0.0;
  double phi_off = 0.0;
  double xi = 0.0;
  ScalarSolution solution;
};

inline double objective_d(double tau, double beta, const ModelConfig& cfg, const Prior& p) {
  detail::require(tau > 0.0 && beta > 0.0, "objective_d: tau and beta must be positive");
  const double chi = 2.0 * cfg.lambda * tau / beta;
  const double t1 = 0.5 * beta * tau * (cfg.delta - 1.0);
  const double t2 = beta * cfg.sigma_z2 / (2.0 * tau);
  const double t3 = 0.25 * beta * beta;
  const double t4 = beta * cfg.eps2 * p.second_moment() / (2.0 * tau);
  const double t5 = (beta / tau) * prior_expect_e(p, cfg.gamma(), tau, chi);
  return t1 + t2 - t3 + t4 + t5;
}

struct BetaMax {
  double beta = 0.0;
  double value = 0.0;
  int iters = 0;
  int bracket_violations = 0;
};

/// max over beta in (0, cap] of a concave objective(beta), by golden section
/// on an upward-expanding bracket.
template <class Objective>
BetaMax maximize_concave_beta(Objective&& objective, const SaddleOptions& opt = {}) {
  auto neg = [&](double b) { return -objective(b); };
  const double hi = expand_upper_bracket(neg, opt.beta_lo, opt.beta_hi, opt.beta_cap);
  const auto r = golden_minimize(neg, opt.beta_lo, hi, opt.beta_rel_tol, opt.inner_max_iter);
  if (!r.converged) throw NonConvergenceError("beta search did not converge", r.x);
  return {r.x, -r.value, r.iters, r.bracket_violations};
}

inline BetaMax maximize_over_beta(double tau, const ModelConfig& cfg, const Prior& p,
                                  const SaddleOptions& opt = {}) {
  detail::require(tau > 0.0, "maximize_over_beta: tau must be positive");
  return maximize_concave_beta([&](double b) { return objective_d(tau, b, cfg, p); }, opt);
}

/// min over tau of max over beta of objective(tau, beta). `tau_lo` is the
/// initial lower end of the tau bracket; it is lowered if the minimum
/// sits on it.
template <class Objective>
ScalarSolution solve_saddle(Objective&& objective, double tau_lo, const SaddleOptions& opt = {}) {
  ScalarSolution sol;
  auto outer = [&](double tau) {
    const auto bm = maximize_concave_beta([&](double b) { return objective(tau, b); }, opt);
    sol.inner_iters_total += bm.iters;
    sol.bracket_violations += bm.bracket_violations;
    return bm.value;
  };

  constexpr double kTauFloor = 1e-6;
  tau_lo = std::max(kTauFloor, tau_lo);
  double tau_hi = std::max(opt.tau_hi, 2.0 * tau_lo);
  LineSearchResult r;
  for (;;) {
    tau_hi = expand_upper_bracket(outer, tau_lo, tau_hi, opt.tau_cap);
    r = golden_minimize(outer, tau_lo, tau_hi, opt.tau_rel_tol, opt.outer_max_iter);
    sol.outer_iters += r.iters;
    sol.bracket_violations += r.bracket_violations;
    if (!r.converged) throw NonConvergenceError("tau search did not converge", r.x);
    const bool at_floor = r.lo <= tau_lo && tau_lo > kTauFloor;
    if (!at_floor) break;
    tau_lo = std::max(kTauFloor, 0.25 * tau_lo);
  }

  const auto bm = maximize_concave_beta([&](double b) { return objective(r.x, b); }, opt);
  sol.inner_iters_total += bm.iters;
  sol.tau_star = r.x;
  sol.beta_star = bm.beta;
  sol.objective = bm.value;
  sol.converged = true;
  return sol;
}

inline ScalarSolution solve_scalar(const ModelConfig& cfg, const Prior& p,
                                   const SaddleOptions& opt = {}) {
  cfg.validate();
  const double tau_lo = 0.5 * std::sqrt(cfg.sigma_z2 / cfg.delta);
  return solve_saddle([&](double t, double b) { return objective_d(t, b, cfg, p); }, tau_lo, opt);
}

inline void require_converged(const ScalarSolution& sol) {
  detail::require(sol.converged, "scalar solution is not converged");
  detail::require(sol.tau_star > 0.0 && sol.beta_star > 0.0, "scalar solution must be positive");
}

/// Limit of ||xhat - x0||^2 / n.
inline double predict_mse(const ScalarSolution& sol, const ModelConfig& cfg, const Prior& p) {
  require_converged(sol);
  const double tau = sol.tau_star;
  const double chi = 2.0 * cfg.lambda * tau / sol.beta_star;
  const double gamma = cfg.gamma();
  return cfg.delta * tau * tau - cfg.sigma_z2 +
         2.0 * (gamma - 1.0) * prior_expect_eta_x0(p, gamma, tau, chi);
}

struct SupportPrediction {
  double phi_on = 0.0;
  double phi_off = 0.0;
};

/// Limits of the per-entry on/off-support detection rates at hard threshold xi.
/// With several nonzero atoms, phi_on averages the per-atom probabilities
/// with weights renormalized over the support.
inline SupportPrediction predict_support(const ScalarSolution& sol, const ModelConfig& cfg,
                                         const Prior& p, double xi) {
  require_converged(sol);
  detail::require(std::isfinite(xi) && xi > 0.0, "predict_support: xi must be positive");
  const double tau = sol.tau_star;
  const double shift = 2.0 * cfg.lambda / sol.beta_star;
  const double gamma = cfg.gamma();

  SupportPrediction out;
  out.phi_off = 1.0 - 2.0 * q_function(xi / tau + shift);

  double on = 0.0, mass = 0.0;
  for (const auto& a : p.atoms()) {
    if (a.value == 0.0) continue;
    const double g = gamma * a.value;
    on += a.prob * (q_function((xi + g) / tau + shift) + q_function((xi - g) / tau + shift));
    mass += a.prob;
  }
  detail::require(mass > 0.0, "predict_support: prior has no nonzero atom");
  out.phi_on = std::clamp(on / mass, 0.0, 1.0);
  out.phi_off = std::clamp(out.phi_off, 0.0, 1.0);
  return out;
}

inline PredictionReport predict(const ModelConfig& cfg, const Prior& p, double xi,
                                const SaddleOptions& opt = {}) {
  PredictionReport r;
  r.solution = solve_scalar(cfg, p, opt);
  r.mse = predict_mse(r.solution, cfg, p);
  const auto s = predict_support(r.solution, cfg, p, xi);
  r.phi_on = s.phi_on;
  r.phi_off = s.phi_off;
  r.xi = xi;
  return r;
}

struct OptimalLambda {
  double lambda = 0.0;
  double mse = 0.0;
  int iters = 0;
};

/// Minimizes the predicted MSE over lambda in [lo, hi] to bracket width 1e-4.
/// cfg.lambda is ignored.
inline OptimalLambda optimal_lambda(const ModelConfig& cfg, const Prior& p, double lo, double hi,
                                    const SaddleOptions& opt = {}) {
  detail::require(lo > 0.0 && lo < hi, "optimal_lambda: need 0 < lo < hi");
  auto mse_at = [&](double l) {
    const auto c = cfg.with_lambda(l);
    return predict_mse(solve_scalar(c, p, opt), c, p);
  };
  constexpr double kWidth = 1e-4;
  const auto r = golden_minimize(mse_at, lo, hi, kWidth / std::max(1.0, hi), 200);
  if (!r.converged) throw NonConvergenceError("lambda search did not converge", r.x);
  return {r.x, r.value, r.iters};
}

}  // namespace lassocsi
