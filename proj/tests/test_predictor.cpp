#include <catch_amalgamated.hpp>

#include <cmath>
#include <random>
#include <vector>

#include "lassocsi/predictor.hpp"
#include "oracle.hpp"

using namespace lassocsi;
using Catch::Approx;

namespace {

ModelConfig fig1(double lambda) { return {.delta = 0.8, .kappa = 0.1, .eps2 = 0.1, .sigma_z2 = 0.2, .lambda = lambda}; }
ModelConfig fig2(double lambda, double delta = 0.8) {
  return {.delta = delta, .kappa = 0.1, .eps2 = 0.2, .sigma_z2 = 0.2, .lambda = lambda};
}

// D with the Gaussian expectation replaced by quadrature.
double objective_by_quadrature(double tau, double beta, const ModelConfig& c) {
  const double g = std::sqrt(1.0 - c.eps2);
  const double chi = 2.0 * c.lambda * tau / beta;
  const double ex = c.kappa * oracle::expect_e(g, tau, chi) + (1.0 - c.kappa) * oracle::expect_e(0.0, tau, chi);
  return beta * tau * (c.delta - 1.0) / 2.0 + beta * c.sigma_z2 / (2.0 * tau) - beta * beta / 4.0 +
         beta * c.eps2 * c.kappa / (2.0 * tau) + beta / tau * ex;
}

}  // namespace

TEST_CASE("ModelConfig derived quantities", "[predictor]") {
  const auto c = fig1(1.0);
  CHECK(std::abs(c.gamma() * c.gamma() + c.eps2 - 1.0) <= 1e-15);
  CHECK(c.snr() == Approx(0.5));
  CHECK(sigma_z2_from_snr(0.1, 0.5) == Approx(0.2));
  CHECK_THROWS_AS(fig1(0.0).validate(), DomainError);
  CHECK_THROWS_AS((ModelConfig{.delta = 0.8, .kappa = 0.1, .eps2 = 1.0, .sigma_z2 = 0.2, .lambda = 1.0}.validate()), DomainError);
  CHECK_THROWS_AS((ModelConfig{.delta = -1.0, .kappa = 0.1, .eps2 = 0.1, .sigma_z2 = 0.2, .lambda = 1.0}.validate()), DomainError);
}

TEST_CASE("objective_D", "[predictor]") {
  const auto p = sparse_bernoulli(0.1);

  SECTION("frozen value from the mpmath script") {
    CHECK(objective_d(1.0, 1.0, fig1(1.0), p) == Approx(0.29143603117524365782).margin(1e-12));
  }
  SECTION("agrees with quadrature substitution") {
    for (double tau : {0.3, 0.6, 1.4})
      for (double beta : {0.05, 0.7, 2.5})
        for (const auto& c : {fig1(0.3), fig1(1.2), fig2(2.8)})
          CHECK(std::abs(objective_d(tau, beta, c, p) - objective_by_quadrature(tau, beta, c)) <= 1e-9);
  }
  SECTION("uncertainty term vanishes at eps2 = 0") {
    ModelConfig c = fig1(0.7);
    c.eps2 = 0.0;
    const double tau = 0.55, beta = 0.8;
    const double chi = 2.0 * c.lambda * tau / beta;
    const double perfect = beta * tau * (c.delta - 1.0) / 2.0 + beta * c.sigma_z2 / (2.0 * tau) -
                           beta * beta / 4.0 + beta / tau * prior_expect_e(p, 1.0, tau, chi);
    CHECK(objective_d(tau, beta, c, p) == Approx(perfect).epsilon(1e-15));
  }
  SECTION("domain errors") {
    CHECK_THROWS_AS(objective_d(0.0, 1.0, fig1(1.0), p), DomainError);
    CHECK_THROWS_AS(objective_d(1.0, -1.0, fig1(1.0), p), DomainError);
  }
}

TEST_CASE("maximize_over_beta", "[predictor]") {
  const auto p = sparse_bernoulli(0.1);
  for (const auto& c : {fig1(0.301), fig1(1.201), fig2(0.01), fig2(2.81, 1.2)}) {
    for (double tau : {0.4, 0.6059673773, 1.1}) {
      const auto bm = maximize_over_beta(tau, c, p);
      INFO("lambda=" << c.lambda << " tau=" << tau);
      CHECK(bm.bracket_violations == 0);
      CHECK(bm.value == Approx(objective_d(tau, bm.beta, c, p)).margin(1e-15));
      // local-max certificate
      CHECK(bm.value >= objective_d(tau, bm.beta + 1e-4, c, p));
      CHECK(bm.value >= objective_d(tau, bm.beta - 1e-4, c, p));

      // brute-force grid of 10^4 points
      const double top = std::max(4.0, 2.0 * bm.beta);
      const int N = 10000;
      int best = 0;
      double best_v = -1e300;
      for (int i = 1; i <= N; ++i) {
        const double v = objective_d(tau, top * i / N, c, p);
        if (v > best_v) best_v = v, best = i;
      }
      CHECK(bm.beta >= top * (best - 1) / N);
      CHECK(bm.beta <= top * (best + 1) / N);
    }
  }
  CHECK_THROWS_AS(maximize_over_beta(0.0, fig1(1.0), p), DomainError);
}

TEST_CASE("maximize_over_beta reports an exhausted bracket", "[predictor]") {
  SaddleOptions opt;
  opt.beta_hi = 1e-4;
  opt.beta_cap = 1e-3;  // far below the maximizer
  CHECK_THROWS_AS(maximize_over_beta(0.6, fig1(1.0), sparse_bernoulli(0.1), opt), NonConvergenceError);
}

TEST_CASE("solve_scalar matches the scipy reference", "[predictor]") {
  const auto p = sparse_bernoulli(0.1);
  // tests/oracles/saddle_reference.py
  struct Ref {
    ModelConfig cfg;
    double tau, beta, mse;
  };
  const std::vector<Ref> refs = {
      {fig1(1.201), 0.6059673773, 0.9386705481, 0.0932324606},
      {fig1(0.301), 0.6173782435, 0.5746587436, 0.1005608016},
      {fig2(1.01), 0.6044586807, 0.9104723488, 0.0905901965},
      {fig2(0.01, 1.2), 0.9029882182, 0.4261741379, 0.7601863888},
  };
  for (const auto& r : refs) {
    const auto sol = solve_scalar(r.cfg, p);
    INFO("lambda=" << r.cfg.lambda << " delta=" << r.cfg.delta);
    CHECK(sol.converged);
    CHECK(sol.bracket_violations == 0);
    CHECK(sol.tau_star == Approx(r.tau).margin(1e-6));
    CHECK(sol.beta_star == Approx(r.beta).margin(1e-6));
    CHECK(predict_mse(sol, r.cfg, p) == Approx(r.mse).margin(1e-7));
  }
}

TEST_CASE("solve_scalar against a 200x200 grid saddle search", "[predictor][oracle]") {
  const auto p = sparse_bernoulli(0.1);
  for (const auto& c : {fig1(0.301), fig1(1.201), fig2(1.01)}) {
    const auto sol = solve_scalar(c, p);
    const int N = 200;
    const double t0 = 0.3, t1 = 1.5, b0 = 0.01, b1 = 3.0;
    int best = 0;
    double best_v = 1e300;
    for (int i = 0; i < N; ++i) {
      const double tau = t0 + (t1 - t0) * i / (N - 1);
      double mx = -1e300;
      for (int j = 0; j < N; ++j) mx = std::max(mx, objective_d(tau, b0 + (b1 - b0) * j / (N - 1), c, p));
      if (mx < best_v) best_v = mx, best = i;
    }
    const double h = (t1 - t0) / (N - 1);
    INFO("lambda=" << c.lambda);
    CHECK(sol.tau_star >= t0 + h * (best - 1));
    CHECK(sol.tau_star <= t0 + h * (best + 1));
  }
}

TEST_CASE("saddle certificate", "[predictor][property]") {
  const auto p = sparse_bernoulli(0.1);
  std::vector<ModelConfig> cfgs;
  for (double l : {0.101, 0.301, 0.601, 1.001, 1.201, 2.001, 3.001, 4.001, 5.901}) cfgs.push_back(fig1(l));
  for (double l : {0.01, 1.01, 2.81}) cfgs.push_back(fig2(l));
  cfgs.push_back(fig2(0.01, 1.2));
  for (const auto& c : cfgs) {
    const auto s = solve_scalar(c, p);
    INFO("lambda=" << c.lambda << " delta=" << c.delta);
    const double d = objective_d(s.tau_star, s.beta_star, c, p);
    for (double f : {1.0 - 1e-3, 1.0 + 1e-3}) {
      CHECK(objective_d(s.tau_star, s.beta_star * f, c, p) <= d + 1e-8);
      CHECK(maximize_over_beta(s.tau_star * f, c, p).value >= d - 1e-8);
    }
    CHECK(s.bracket_violations == 0);
    CHECK(predict_mse(s, c, p) >= -1e-9);
  }
}

TEST_CASE("perfect-CSI reduction is exact", "[predictor][property]") {
  const auto p = sparse_bernoulli(0.1);
  for (double lam : {0.2, 1.0, 3.0}) {
    ModelConfig c = fig1(lam);
    c.eps2 = 0.0;
    // Independently written perfect-CSI objective, same term order.
    auto perfect = [&](double tau, double beta) {
      const double chi = 2.0 * lam * tau / beta;
      double ex = 0.0;
      for (const auto& a : p.atoms())
        ex += a.prob * gauss_expect_e({.mean = a.value, .spread = tau, .threshold = chi});
      return 0.5 * beta * tau * (c.delta - 1.0) + beta * c.sigma_z2 / (2.0 * tau) - 0.25 * beta * beta +
             (beta / tau) * ex;
    };
    const auto ref = solve_saddle(perfect, 0.5 * std::sqrt(c.sigma_z2 / c.delta));
    const auto sol = solve_scalar(c, p);
    CHECK(sol.tau_star == ref.tau_star);
    CHECK(sol.beta_star == ref.beta_star);
    CHECK(predict_mse(sol, c, p) == c.delta * ref.tau_star * ref.tau_star - c.sigma_z2);
  }
}

TEST_CASE("large lambda collapses to the zero estimate", "[predictor]") {
  const auto p = sparse_bernoulli(0.1);
  const auto c = fig1(50.0);
  const double mse = predict_mse(solve_scalar(c, p), c, p);
  CHECK(mse >= 0.1 - 1e-3);
  CHECK(mse <= 0.1 + 1e-3);
}

TEST_CASE("predict_support", "[predictor]") {
  const auto p = sparse_bernoulli(0.1);
  const double xi = 1e-3;

  SECTION("matches the scipy reference") {
    const auto c = fig2(1.01);
    const auto s = predict_support(solve_scalar(c, p), c, p, xi);
    CHECK(s.phi_on == Approx(0.2295858225).margin(1e-6));
    CHECK(s.phi_off == Approx(0.9736004355).margin(1e-6));
    const auto c2 = fig2(0.01, 1.2);
    CHECK(predict_support(solve_scalar(c2, p), c2, p, xi).phi_on == Approx(0.9765328748).margin(1e-6));
  }

  SECTION("off-support formula agrees with Monte Carlo") {
    const auto c = fig2(0.61);
    const auto sol = solve_scalar(c, p);
    const auto s = predict_support(sol, c, p, xi);
    const double chi = 2.0 * c.lambda * sol.tau_star / sol.beta_star;
    std::mt19937_64 rng(123);
    std::normal_distribution<double> h;
    const int N = 1000000;
    int hits = 0;
    for (int i = 0; i < N; ++i) hits += std::abs(soft_threshold(sol.tau_star * h(rng), chi)) <= xi;
    const double mc = double(hits) / N;
    const double se = std::sqrt(mc * (1.0 - mc) / N);
    CHECK(std::abs(mc - s.phi_off) <= 4.0 * se);
  }

  SECTION("multi-atom on-support rate agrees with Monte Carlo") {
    const Prior q({{-1.5, 0.04}, {0.0, 0.9}, {0.5, 0.02}, {1.0, 0.04}});
    const auto c = fig2(0.4);
    const auto sol = solve_scalar(c, q);
    const auto s = predict_support(sol, c, q, 0.05);
    const double chi = 2.0 * c.lambda * sol.tau_star / sol.beta_star;
    std::mt19937_64 rng(9);
    std::normal_distribution<double> h;
    const int N = 400000;
    const auto x0 = sample_on_support(q, rng, N);
    int hits = 0;
    for (int i = 0; i < N; ++i)
      hits += std::abs(soft_threshold(c.gamma() * x0[i] + sol.tau_star * h(rng), chi)) >= 0.05;
    const double mc = double(hits) / N;
    CHECK(std::abs(mc - s.phi_on) <= 4.0 * std::sqrt(mc * (1.0 - mc) / N));
  }

  SECTION("errors") {
    const auto c = fig2(1.01);
    const auto sol = solve_scalar(c, p);
    CHECK_THROWS_AS(predict_support(sol, c, p, 0.0), DomainError);
    ScalarSolution bad = sol;
    bad.converged = false;
    CHECK_THROWS_AS(predict_support(bad, c, p, xi), DomainError);
    CHECK_THROWS_AS(predict_mse(bad, c, p), DomainError);
  }
}

TEST_CASE("predict_mse with exact channel has no correction", "[predictor]") {
  const auto p = sparse_bernoulli(0.1);
  ModelConfig c = fig1(0.9);
  c.eps2 = 0.0;
  const auto sol = solve_scalar(c, p);
  CHECK(predict_mse(sol, c, p) == c.delta * sol.tau_star * sol.tau_star - c.sigma_z2);
}

TEST_CASE("solve_scalar surfaces non-convergence", "[predictor]") {
  SaddleOptions opt;
  opt.outer_max_iter = 3;
  CHECK_THROWS_AS(solve_scalar(fig1(1.0), sparse_bernoulli(0.1), opt), NonConvergenceError);
  opt = {};
  opt.inner_max_iter = 3;
  CHECK_THROWS_AS(solve_scalar(fig1(1.0), sparse_bernoulli(0.1), opt), NonConvergenceError);
}

TEST_CASE("optimal_lambda", "[predictor]") {
  const auto p = sparse_bernoulli(0.1);
  const auto c = fig1(1.0);
  const auto best = optimal_lambda(c, p, 0.5, 3.0);
  auto mse_at = [&](double l) { return predict_mse(solve_scalar(c.with_lambda(l), p), c.with_lambda(l), p); };
  CHECK(best.mse <= mse_at(0.5));
  CHECK(best.mse <= mse_at(3.0));

  // grid scan with step 1e-3
  double arg = 0.5, val = 1e300;
  for (int i = 0; i <= 2500; ++i) {
    const double l = 0.5 + 1e-3 * i;
    const double v = mse_at(l);
    if (v < val) val = v, arg = l;
  }
  CHECK(std::abs(best.lambda - arg) <= 2e-3);
  CHECK(best.mse <= val + 1e-9);
  CHECK_THROWS_AS(optimal_lambda(c, p, 2.0, 1.0), DomainError);
}
