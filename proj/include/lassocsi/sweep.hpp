#pragma once

/// Lambda sweeps over theory and/or simulation, argument parsing and CSV output
/// for the `lasso-csi` command-line tool.

#include <CLI11.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <system_error>
#include <vector>

#include "lassocsi/errors.hpp"
#include "lassocsi/predictor.hpp"
#include "lassocsi/prior.hpp"
#include "lassocsi/simulator.hpp"

namespace lassocsi {

enum class SweepMode { theory, simulate, both };

struct SweepSpec {
  ModelConfig base;  // lambda unused
  std::vector<double> lambda_grid;
  double xi = 1e-3;
  std::optional<std::size_t> n;
  std::optional<std::size_t> trials;
  std::uint64_t seed = 0;
  SweepMode mode = SweepMode::theory;
  std::string out;  // empty: standard output
  unsigned threads = 1;

  bool wants_theory() const { return mode != SweepMode::simulate; }
  bool wants_simulation() const { return mode != SweepMode::theory; }
};

/// Bad command line. `what()` holds the diagnostic, `help` the usage text.
class UsageError : public std::runtime_error {
 public:
  UsageError(const std::string& what, std::string help)
      : std::runtime_error(what), help(std::move(help)) {}
  std::string help;
};

/// A sweep cell failed; names the lambda.
class SweepError : public std::runtime_error {
 public:
  SweepError(double lambda, const std::string& what)
      : std::runtime_error("lambda=" + std::to_string(lambda) + ": " + what), lambda(lambda) {}
  double lambda;
};

class CsvIoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Lambda grids of the two reference figures: 0.001..5.901 step 0.1 and
/// 0.01..2.81 step 0.2.
inline std::vector<double> figure_lambda_grid(int figure) {
  std::vector<double> g;
  if (figure == 1) {
    for (int i = 0; i < 60; ++i) g.push_back(0.001 + 0.1 * i);
  } else if (figure == 2) {
    for (int i = 0; i < 15; ++i) g.push_back(0.01 + 0.2 * i);
  } else {
    throw DomainError("figure must be 1 or 2");
  }
  return g;
}

inline void validate(const SweepSpec& s) {
  auto bad = [](const std::string& m) { throw UsageError(m, ""); };
  if (s.lambda_grid.empty()) bad("lambda grid is empty");
  for (std::size_t i = 0; i < s.lambda_grid.size(); ++i) {
    if (!(s.lambda_grid[i] > 0.0) || !std::isfinite(s.lambda_grid[i])) bad("lambda values must be positive");
    if (i > 0 && !(s.lambda_grid[i] > s.lambda_grid[i - 1])) bad("lambda grid must be strictly increasing");
  }
  if (!(s.xi > 0.0)) bad("--xi must be positive");
  if (s.wants_simulation() && (!s.n || !s.trials)) bad("--n and --trials are required for simulate/both");
  if (s.trials && *s.trials == 0) bad("--trials must be at least 1");
  try {
    s.base.with_lambda(1.0).validate();
  } catch (const DomainError& e) {
    bad(e.what());
  }
}

inline SweepSpec parse_args(std::vector<std::string> argv) {
  CLI::App app{"Asymptotic and Monte Carlo performance of the LASSO with a noisy measurement matrix",
               "lasso-csi"};
  std::optional<double> delta, kappa, eps2, sigma_z2, snr, lmin, lmax;
  std::optional<int> lsteps, figure;
  std::vector<double> llist;
  SweepSpec spec;
  std::string mode = "theory";

  app.add_option("--delta", delta, "m/n ratio");
  app.add_option("--kappa", kappa, "k/n ratio");
  app.add_option("--eps2", eps2, "variance of the matrix uncertainty, in [0,1)");
  auto* o_sz = app.add_option("--sigma-z2", sigma_z2, "noise variance");
  auto* o_snr = app.add_option("--snr", snr, "signal-to-noise ratio kappa/sigma_z^2");
  o_sz->excludes(o_snr);
  auto* o_lmin = app.add_option("--lambda-min", lmin, "first lambda of a uniform grid");
  auto* o_lmax = app.add_option("--lambda-max", lmax, "last lambda of a uniform grid");
  auto* o_lsteps = app.add_option("--lambda-steps", lsteps, "number of grid points")->check(CLI::PositiveNumber);
  auto* o_llist = app.add_option("--lambda-list", llist, "explicit lambda values")->delimiter(',');
  o_llist->excludes(o_lmin)->excludes(o_lmax)->excludes(o_lsteps);
  app.add_option("--xi", spec.xi, "hard threshold for support detection")->default_val(1e-3);
  app.add_option("--n", spec.n, "signal dimension for simulation");
  app.add_option("--trials", spec.trials, "Monte Carlo trials per lambda");
  app.add_option("--seed", spec.seed, "master random seed")->default_val(0);
  app.add_option("--mode", mode, "theory, simulate or both")
      ->check(CLI::IsMember({"theory", "simulate", "both"}))
      ->default_val("theory");
  app.add_option("--out", spec.out, "CSV output path (default: standard output)");
  app.add_option("--threads", spec.threads, "worker threads for simulation")->default_val(1);
  app.add_option("--reproduce-fig", figure, "preset configuration of reference figure 1 or 2")
      ->check(CLI::IsMember({1, 2}));

  if (argv.empty()) throw UsageError("no arguments given", app.help());
  std::reverse(argv.begin(), argv.end());
  try {
    app.parse(std::move(argv));
  } catch (const CLI::CallForHelp&) {
    throw UsageError("", app.help());
  } catch (const CLI::ParseError& e) {
    throw UsageError(e.what(), app.help());
  }

  if (figure) {
    const bool fig1 = *figure == 1;
    delta = delta.value_or(0.8);
    kappa = kappa.value_or(0.1);
    eps2 = eps2.value_or(fig1 ? 0.1 : 0.2);
    if (!sigma_z2 && !snr) snr = 0.5;
    if (llist.empty() && !lmin && !lmax && !lsteps) llist = figure_lambda_grid(*figure);
    if (!spec.n) spec.n = 256;
    if (!spec.trials) spec.trials = 50;
  }

  std::vector<std::string> missing;
  if (!delta) missing.push_back("--delta");
  if (!kappa) missing.push_back("--kappa");
  if (!eps2) missing.push_back("--eps2");
  if (!sigma_z2 && !snr) missing.push_back("--sigma-z2|--snr");
  const bool grid = lmin || lmax || lsteps;
  if (grid && !(lmin && lmax && lsteps)) missing.push_back("--lambda-min/--lambda-max/--lambda-steps");
  if (!grid && llist.empty()) missing.push_back("--lambda-list|--lambda-min/--lambda-max/--lambda-steps");
  spec.mode = mode == "both" ? SweepMode::both : mode == "simulate" ? SweepMode::simulate : SweepMode::theory;
  if (spec.wants_simulation()) {
    if (!spec.n) missing.push_back("--n");
    if (!spec.trials) missing.push_back("--trials");
  }
  if (!missing.empty()) {
    std::string m = "missing required flags:";
    for (const auto& f : missing) m += " " + f;
    throw UsageError(m, app.help());
  }

  spec.base.delta = *delta;
  spec.base.kappa = *kappa;
  spec.base.eps2 = *eps2;
  if (snr) {
    if (!(*snr > 0.0)) throw UsageError("--snr must be positive", app.help());
    spec.base.sigma_z2 = sigma_z2_from_snr(*kappa, *snr);
  } else {
    spec.base.sigma_z2 = *sigma_z2;
  }
  spec.base.lambda = 1.0;

  if (grid) {
    if (*lsteps == 1) {
      spec.lambda_grid = {*lmin};
    } else {
      for (int i = 0; i < *lsteps; ++i)
        spec.lambda_grid.push_back(*lmin + (*lmax - *lmin) * i / (*lsteps - 1));
    }
  } else {
    spec.lambda_grid = llist;
  }

  try {
    validate(spec);
  } catch (UsageError& e) {
    throw UsageError(e.what(), app.help());
  }
  return spec;
}

struct TheoryCells {
  double tau_star, beta_star, mse, phi_on, phi_off;
};

struct EmpiricalCells {
  double mse_mean, mse_se, phi_on_mean, phi_on_se, phi_off_mean, phi_off_se;
  std::size_t nonconverged;
};

struct SweepRow {
  double lambda = 0.0;
  std::optional<TheoryCells> theory;
  std::optional<EmpiricalCells> empirical;
};

/// Rows in grid order; a pure function of the spec.
inline std::vector<SweepRow> run_sweep(const SweepSpec& spec) {
  validate(spec);
  const Prior prior = sparse_bernoulli(spec.base.kappa);
  std::vector<SweepRow> rows;
  rows.reserve(spec.lambda_grid.size());
  for (double lam : spec.lambda_grid) {
    const auto cfg = spec.base.with_lambda(lam);
    SweepRow row;
    row.lambda = lam;
    try {
      if (spec.wants_theory()) {
        const auto rep = predict(cfg, prior, spec.xi);
        row.theory = TheoryCells{rep.solution.tau_star, rep.solution.beta_star, rep.mse,
                                 rep.phi_on, rep.phi_off};
      }
      if (spec.wants_simulation()) {
        TrialOptions opt;
        opt.threads = spec.threads;
        const auto rep = run_trials(cfg, prior, *spec.n, *spec.trials, spec.xi, spec.seed, opt);
        row.empirical = EmpiricalCells{rep.mean_mse,     rep.se_mse,       rep.mean_phi_on,
                                       rep.se_phi_on,    rep.mean_phi_off, rep.se_phi_off,
                                       rep.nonconverged};
      }
    } catch (const std::exception& e) {
      throw SweepError(lam, e.what());
    }
    rows.push_back(row);
  }
  return rows;
}

inline constexpr const char* kCsvHeader =
    "lambda,tau_star,beta_star,mse_theory,phi_on_theory,phi_off_theory,"
    "mse_emp_mean,mse_emp_se,phi_on_emp_mean,phi_on_emp_se,phi_off_emp_mean,phi_off_emp_se,"
    "nonconverged_trials";

/// 12 significant digits, independent of the global locale.
inline std::string format_number(double v) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 12);
  return std::string(buf, r.ptr);
}

inline void emit_csv(const std::vector<SweepRow>& rows, std::ostream& out,
                     const std::string& path = "<stdout>") {
  std::string doc = kCsvHeader;
  doc += '\n';
  for (const auto& r : rows) {
    doc += format_number(r.lambda);
    auto cell = [&](std::optional<double> v) {
      doc += ',';
      if (v) doc += format_number(*v);
    };
    const auto& t = r.theory;
    cell(t ? std::optional(t->tau_star) : std::nullopt);
    cell(t ? std::optional(t->beta_star) : std::nullopt);
    cell(t ? std::optional(t->mse) : std::nullopt);
    cell(t ? std::optional(t->phi_on) : std::nullopt);
    cell(t ? std::optional(t->phi_off) : std::nullopt);
    const auto& e = r.empirical;
    cell(e ? std::optional(e->mse_mean) : std::nullopt);
    cell(e ? std::optional(e->mse_se) : std::nullopt);
    cell(e ? std::optional(e->phi_on_mean) : std::nullopt);
    cell(e ? std::optional(e->phi_on_se) : std::nullopt);
    cell(e ? std::optional(e->phi_off_mean) : std::nullopt);
    cell(e ? std::optional(e->phi_off_se) : std::nullopt);
    doc += ',';
    if (e) doc += std::to_string(e->nonconverged);
    doc += '\n';
  }
  out << doc;
  out.flush();
  if (!out) throw CsvIoError("failed to write CSV to " + path);
}

inline std::string sweep_csv(const SweepSpec& spec) {
  std::ostringstream os;
  emit_csv(run_sweep(spec), os);
  return os.str();
}

}  // namespace lassocsi
