#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <random>
#include <span>
#include <vector>

#include "lassocsi/errors.hpp"
#include "lassocsi/kernels.hpp"

namespace lassocsi {

struct Atom {
  double value = 0.0;
  double prob = 0.0;
};

/// Finite discrete marginal law of one signal entry, including the zero atom.
/// Immutable after construction.
class Prior {
 public:
  explicit Prior(std::vector<Atom> atoms) : atoms_(std::move(atoms)) {
    detail::require(!atoms_.empty(), "Prior: at least one atom required");
    std::sort(atoms_.begin(), atoms_.end(),
              [](const Atom& l, const Atom& r) { return l.value < r.value; });
    double total = 0.0;
    for (std::size_t i = 0; i < atoms_.size(); ++i) {
      const auto& a = atoms_[i];
      detail::require(std::isfinite(a.value), "Prior: atom values must be finite");
      detail::require(a.prob > 0.0 && a.prob <= 1.0, "Prior: probabilities must lie in (0,1]");
      if (i > 0) detail::require(atoms_[i - 1].value != a.value, "Prior: atom values must be distinct");
      total += a.prob;
    }
    detail::require(std::abs(total - 1.0) <= 1e-12, "Prior: probabilities must sum to 1");
  }

  std::span<const Atom> atoms() const noexcept { return atoms_; }

  /// Mass sitting on nonzero atoms.
  double support_mass() const noexcept {
    double s = 0.0;
    for (const auto& a : atoms_)
      if (a.value != 0.0) s += a.prob;
    return s;
  }

  /// E[X0^2].
  double second_moment() const noexcept {
    double s = 0.0;
    for (const auto& a : atoms_) s += a.prob * a.value * a.value;
    return s;
  }

 private:
  std::vector<Atom> atoms_;
};

inline Prior sparse_bernoulli(double kappa) {
  detail::require(kappa > 0.0 && kappa < 1.0, "sparse_bernoulli: kappa must lie in (0,1)");
  return Prior({{0.0, 1.0 - kappa}, {1.0, kappa}});
}

namespace detail {

inline void check_expect_args(double gamma, double tau, double chi) {
  require(gamma > 0.0 && gamma <= 1.0, "prior expectation: gamma must lie in (0,1]");
  require(std::isfinite(tau) && tau > 0.0, "prior expectation: tau must be positive");
  require(std::isfinite(chi) && chi > 0.0, "prior expectation: chi must be positive");
}

}  // namespace detail

/// E_{X0,H}[e(gamma X0 + tau H; chi)].
inline double prior_expect_e(const Prior& p, double gamma, double tau, double chi) {
  detail::check_expect_args(gamma, tau, chi);
  double s = 0.0;
  for (const auto& a : p.atoms())
    s += a.prob * gauss_expect_e({.mean = gamma * a.value, .spread = tau, .threshold = chi});
  return s;
}

/// E_{X0,H}[eta(gamma X0 + tau H; chi) X0]. The zero atom contributes nothing.
inline double prior_expect_eta_x0(const Prior& p, double gamma, double tau, double chi) {
  detail::check_expect_args(gamma, tau, chi);
  double s = 0.0;
  for (const auto& a : p.atoms()) {
    if (a.value == 0.0) continue;
    s += a.prob * a.value *
         gauss_expect_eta({.mean = gamma * a.value, .spread = tau, .threshold = chi});
  }
  return s;
}

/// Draws `count` values from the prior conditioned on X0 != 0.
template <class Rng>
std::vector<double> sample_on_support(const Prior& p, Rng& rng, std::size_t count) {
  std::vector<double> values;
  std::vector<double> weights;
  for (const auto& a : p.atoms()) {
    if (a.value == 0.0) continue;
    values.push_back(a.value);
    weights.push_back(a.prob);
  }
  detail::require(!values.empty(), "sample_on_support: prior has no nonzero atom");

  std::vector<double> out(count, values.front());
  if (values.size() == 1) return out;

  double total = 0.0;
  for (double w : weights) total += w;
  std::vector<double> cdf(weights.size());
  double run = 0.0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    run += weights[i] / total;
    cdf[i] = run;
  }
  cdf.back() = 1.0;

  std::uniform_real_distribution<double> unif(0.0, 1.0);
  for (auto& v : out) {
    const double u = unif(rng);
    const auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
    v = values[std::min<std::size_t>(static_cast<std::size_t>(it - cdf.begin()), values.size() - 1)];
  }
  return out;
}

}  // namespace lassocsi
