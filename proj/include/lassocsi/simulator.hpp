#pragma once

/// Finite-n Monte Carlo of the mismatched LASSO: instance generation, an
/// accelerated proximal-gradient solver, and the empirical metrics.

#include <Eigen/Dense>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <numeric>
#include <random>
#include <thread>
#include <tuple>
#include <vector>

#include "lassocsi/errors.hpp"
#include "lassocsi/kernels.hpp"
#include "lassocsi/predictor.hpp"
#include "lassocsi/prior.hpp"
#include "lassocsi/rng.hpp"

namespace lassocsi {

struct Dimensions {
  std::size_t n = 0;
  std::size_t m = 0;
  std::size_t k = 0;
};

/// m = round(delta n), k = round(kappa n).
inline Dimensions dimensions_for(const ModelConfig& cfg, std::size_t n) {
  Dimensions d;
  d.n = n;
  d.m = static_cast<std::size_t>(std::llround(cfg.delta * static_cast<double>(n)));
  d.k = static_cast<std::size_t>(std::llround(cfg.kappa * static_cast<double>(n)));
  return d;
}

struct Instance {
  Eigen::VectorXd x0;
  Eigen::MatrixXd H;
  Eigen::MatrixXd omega;
  Eigen::MatrixXd A;
  Eigen::VectorXd z;
  Eigen::VectorXd y;
  std::vector<std::size_t> support;  // sorted
  double gamma = 1.0;
  double eps = 0.0;

  std::size_t n() const { return static_cast<std::size_t>(x0.size()); }
  std::size_t m() const { return static_cast<std::size_t>(y.size()); }
  std::size_t k() const { return support.size(); }
};

/// Largest deviation from A = gamma H + eps Omega and y = H x0 + z.
inline double instance_defect(const Instance& inst) {
  const double a = (inst.A - (inst.gamma * inst.H + inst.eps * inst.omega)).cwiseAbs().maxCoeff();
  const double y = (inst.y - (inst.H * inst.x0 + inst.z)).cwiseAbs().maxCoeff();
  return std::max(a, y);
}

template <class Rng>
Instance generate_instance(const ModelConfig& cfg, const Prior& p, std::size_t n, Rng& rng) {
  cfg.validate();
  detail::require(n >= 8, "generate_instance: n must be at least 8");
  const auto dim = dimensions_for(cfg, n);
  detail::require(dim.k >= 1 && dim.k < n, "generate_instance: need 0 < round(kappa n) < n");
  detail::require(dim.m >= 1, "generate_instance: round(delta n) must be positive");

  Instance inst;
  inst.gamma = cfg.gamma();
  inst.eps = std::sqrt(cfg.eps2);

  // Uniform k-subset by partial Fisher-Yates.
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  for (std::size_t i = 0; i < dim.k; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, n - 1);
    std::swap(idx[i], idx[pick(rng)]);
  }
  inst.support.assign(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(dim.k));
  std::sort(inst.support.begin(), inst.support.end());

  const auto values = sample_on_support(p, rng, dim.k);
  inst.x0 = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < dim.k; ++i)
    inst.x0(static_cast<Eigen::Index>(inst.support[i])) = values[i];

  const auto rows = static_cast<Eigen::Index>(dim.m), cols = static_cast<Eigen::Index>(n);
  auto gaussian_matrix = [&](double sd) {
    std::normal_distribution<double> g(0.0, sd);
    Eigen::MatrixXd M(rows, cols);
    for (Eigen::Index j = 0; j < cols; ++j)
      for (Eigen::Index i = 0; i < rows; ++i) M(i, j) = g(rng);
    return M;
  };
  const double sd = 1.0 / std::sqrt(static_cast<double>(n));
  inst.H = gaussian_matrix(sd);
  inst.omega = gaussian_matrix(sd);

  std::normal_distribution<double> noise(0.0, std::sqrt(cfg.sigma_z2));
  inst.z.resize(rows);
  for (Eigen::Index i = 0; i < rows; ++i) inst.z(i) = noise(rng);

  inst.A = inst.gamma * inst.H + inst.eps * inst.omega;
  inst.y = inst.H * inst.x0 + inst.z;
  return inst;
}

struct LassoOptions {
  double tol = 1e-10;
  int max_iter = 20000;
  int power_iters = 30;
  // Multiplies the power-iteration estimate of ||A||^2, which is never an
  // overestimate.
  double lipschitz_margin = 1.05;
  // An objective stall only ends the run once the KKT residual is below
  // kkt_tol * lambda.
  double kkt_tol = 1e-6;
};

struct LassoResult {
  Eigen::VectorXd x;
  int iters = 0;
  double kkt_residual = 0.0;
  double objective = 0.0;
  bool converged = false;
};

inline double lasso_objective(const Eigen::MatrixXd& A, const Eigen::VectorXd& y,
                              const Eigen::VectorXd& x, double lambda) {
  return 0.5 * (y - A * x).squaredNorm() + lambda * x.lpNorm<1>();
}

/// Violation of the LASSO optimality conditions at x, with g = A^T(Ax - y):
/// max(|g_i| - lambda, 0) where x_i = 0 and |g_i + lambda sign(x_i)| elsewhere.
inline double kkt_residual(const Eigen::MatrixXd& A, const Eigen::VectorXd& y,
                           const Eigen::VectorXd& x, double lambda) {
  const Eigen::VectorXd g = A.transpose() * (A * x - y);
  double r = 0.0;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double v = x(i) == 0.0 ? std::max(std::abs(g(i)) - lambda, 0.0)
                                 : std::abs(g(i) + (x(i) > 0.0 ? lambda : -lambda));
    r = std::max(r, v);
  }
  return r;
}

/// Squared spectral norm of A by power iteration on A^T A.
inline double spectral_norm_sq(const Eigen::MatrixXd& A, int max_iter) {
  Eigen::VectorXd v = Eigen::VectorXd::Constant(A.cols(), 1.0 / std::sqrt(double(A.cols())));
  double est = 0.0;
  for (int i = 0; i < max_iter; ++i) {
    Eigen::VectorXd w = A.transpose() * (A * v);
    const double nw = w.norm();
    if (nw == 0.0) return 0.0;
    v = w / nw;
    const bool settled = std::abs(nw - est) < 1e-10 * nw;
    est = nw;
    if (settled) break;
  }
  return est;
}

/// min_x 1/2 ||y - A x||^2 + lambda ||x||_1 by FISTA with gradient-based
/// momentum restart. Step 1/L, L from power iteration. Stops when the relative
/// objective change drops below tol. A run that exhausts max_iter with KKT
/// residual above 10 tol lambda is flagged as not converged.
inline LassoResult solve_lasso(const Eigen::MatrixXd& A, const Eigen::VectorXd& y, double lambda,
                               const LassoOptions& opt = {}) {
  detail::require(A.rows() == y.size(), "solve_lasso: dimension mismatch");
  detail::require(std::isfinite(lambda) && lambda > 0.0, "solve_lasso: lambda must be positive");
  detail::require(opt.tol > 0.0 && opt.max_iter > 0 && opt.kkt_tol > 0.0, "solve_lasso: bad options");

  const Eigen::Index n = A.cols();
  LassoResult res;
  res.x = Eigen::VectorXd::Zero(n);

  const double L = opt.lipschitz_margin * spectral_norm_sq(A, opt.power_iters);
  if (L == 0.0) {
    res.converged = true;
    res.objective = 0.5 * y.squaredNorm();
    return res;
  }
  const double step = 1.0 / L;
  const double level = lambda * step;

  Eigen::VectorXd x = res.x, x_prev = x, v = x;
  Eigen::VectorXd Ax = Eigen::VectorXd::Zero(A.rows()), Ax_prev = Ax, Av = Ax;
  Eigen::VectorXd grad(n), diff(n);
  double t = 1.0;
  double f_prev = 0.5 * y.squaredNorm();

  bool stopped = false;
  int it = 0;
  while (it < opt.max_iter) {
    ++it;
    grad.noalias() = A.transpose() * (Av - y);
    x_prev.swap(x);
    Ax_prev.swap(Ax);
    for (Eigen::Index i = 0; i < n; ++i) {
      const double u = v(i) - step * grad(i);
      x(i) = u > level ? u - level : (u < -level ? u + level : 0.0);
    }
    Ax.noalias() = A * x;
    const double f = 0.5 * (y - Ax).squaredNorm() + lambda * x.lpNorm<1>();

    diff = x - x_prev;
    // Restart momentum when the step points against the last displacement.
    if ((v - x).dot(diff) > 0.0) t = 1.0;
    const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
    const double mom = (t - 1.0) / t_next;
    v = x + mom * diff;
    Av = Ax + mom * (Ax - Ax_prev);
    t = t_next;

    const bool small = std::abs(f - f_prev) <= opt.tol * std::max(std::abs(f_prev), 1e-300);
    f_prev = f;
    if (small && it > 1 && kkt_residual(A, y, x, lambda) <= opt.kkt_tol * lambda) {
      stopped = true;
      break;
    }
  }

  res.x = x;
  res.iters = it;
  res.objective = lasso_objective(A, y, x, lambda);
  res.kkt_residual = kkt_residual(A, y, x, lambda);
  res.converged = stopped || res.kkt_residual <= 10.0 * opt.tol * lambda;
  return res;
}

struct TrialResult {
  double mse = 0.0;
  double phi_on = 0.0;
  double phi_off = 0.0;
  int solver_iters = 0;
  double kkt_residual = 0.0;
  bool converged = true;
};

inline TrialResult empirical_metrics(const Eigen::VectorXd& x_hat, const Instance& inst, double xi) {
  detail::require(std::isfinite(xi) && xi > 0.0, "empirical_metrics: xi must be positive");
  detail::require(x_hat.size() == inst.x0.size(), "empirical_metrics: dimension mismatch");
  const std::size_t n = inst.n(), k = inst.k();

  TrialResult r;
  r.mse = (x_hat - inst.x0).squaredNorm() / static_cast<double>(n);

  std::vector<bool> on(n, false);
  for (auto i : inst.support) on[i] = true;
  std::size_t hit_on = 0, hit_off = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double a = std::abs(x_hat(static_cast<Eigen::Index>(i)));
    if (on[i]) {
      hit_on += a >= xi;
    } else {
      hit_off += a <= xi;
    }
  }
  r.phi_on = k > 0 ? double(hit_on) / double(k) : 0.0;
  r.phi_off = n > k ? double(hit_off) / double(n - k) : 0.0;
  return r;
}

struct EmpiricalReport {
  std::vector<TrialResult> trials;
  double mean_mse = 0.0, se_mse = 0.0;
  double mean_phi_on = 0.0, se_phi_on = 0.0;
  double mean_phi_off = 0.0, se_phi_off = 0.0;
  std::size_t n = 0;
  std::size_t m = 0;
  std::size_t k = 0;
  std::uint64_t seed = 0;
  std::size_t nonconverged = 0;
};

struct TrialOptions {
  LassoOptions lasso;
  unsigned threads = 1;
};

namespace detail {

// Mean and standard error (sample std / sqrt(count)); se is 0 for one sample.
template <class Get>
std::pair<double, double> mean_se(const std::vector<TrialResult>& t, Get get) {
  const double cnt = static_cast<double>(t.size());
  double s = 0.0;
  for (const auto& r : t) s += get(r);
  const double mean = s / cnt;
  if (t.size() < 2) return {mean, 0.0};
  double ss = 0.0;
  for (const auto& r : t) ss += (get(r) - mean) * (get(r) - mean);
  return {mean, std::sqrt(ss / (cnt - 1.0)) / std::sqrt(cnt)};
}

}  // namespace detail

/// Runs independent trials; trial i draws from substream(seed, i), so the
/// report does not depend on the thread count.
inline EmpiricalReport run_trials(const ModelConfig& cfg, const Prior& p, std::size_t n,
                                  std::size_t trials, double xi, std::uint64_t seed,
                                  const TrialOptions& opt = {}) {
  cfg.validate();
  detail::require(trials >= 1, "run_trials: need at least one trial");
  detail::require(std::isfinite(xi) && xi > 0.0, "run_trials: xi must be positive");

  std::vector<TrialResult> results(trials);
  std::vector<std::exception_ptr> errors(trials);
  auto one = [&](std::size_t i) {
    try {
      auto rng = substream(seed, i);
      const auto inst = generate_instance(cfg, p, n, rng);
      const auto sol = solve_lasso(inst.A, inst.y, cfg.lambda, opt.lasso);
      auto r = empirical_metrics(sol.x, inst, xi);
      r.solver_iters = sol.iters;
      r.kkt_residual = sol.kkt_residual;
      r.converged = sol.converged;
      results[i] = r;
    } catch (...) {
      errors[i] = std::current_exception();
    }
  };

  const unsigned workers = std::max(1u, std::min<unsigned>(opt.threads, unsigned(trials)));
  if (workers == 1) {
    for (std::size_t i = 0; i < trials; ++i) one(i);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::jthread> pool;
    for (unsigned w = 0; w < workers; ++w)
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < trials; i = next++) one(i);
      });
  }
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);

  EmpiricalReport rep;
  const auto dim = dimensions_for(cfg, n);
  rep.n = n;
  rep.m = dim.m;
  rep.k = dim.k;
  rep.seed = seed;
  rep.trials = std::move(results);
  std::tie(rep.mean_mse, rep.se_mse) = detail::mean_se(rep.trials, [](auto& r) { return r.mse; });
  std::tie(rep.mean_phi_on, rep.se_phi_on) =
      detail::mean_se(rep.trials, [](auto& r) { return r.phi_on; });
  std::tie(rep.mean_phi_off, rep.se_phi_off) =
      detail::mean_se(rep.trials, [](auto& r) { return r.phi_off; });
  for (const auto& r : rep.trials) rep.nonconverged += !r.converged;
  return rep;
}

}  // namespace lassocsi
