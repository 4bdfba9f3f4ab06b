#pragma once

// Rate-verification sweeps: for each n, seeded trials generate data, solve the
// constrained estimator, measure the error and evaluate the bounds; trials are
// aggregated per n and log-log slopes are fitted.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <limits>
#include <numeric>
#include <optional>
#include <ostream>
#include <span>
#include <tuple>
#include <string>
#include <vector>

#include <boost/math/distributions/students_t.hpp>

#include "bounds.hpp"
#include "errors.hpp"
#include "geometry.hpp"
#include "glm.hpp"
#include "parallel.hpp"
#include "random.hpp"
#include "solver.hpp"

namespace conewidth {

enum class MuMode { empirical, theoretical };

inline std::string_view to_string(MuMode m) {
  return m == MuMode::empirical ? "empirical" : "theoretical";
}

inline std::string_view to_string(ConstraintClass c) {
  return c == ConstraintClass::matched ? "matched" : "mismatched";
}

/// 32 log-spaced radii in [0.01, 10].
inline std::vector<double> default_t_grid() {
  std::vector<double> g(32);
  for (std::size_t k = 0; k < g.size(); ++k)
    g[k] = 0.01 * std::pow(1000.0, static_cast<double>(k) / static_cast<double>(g.size() - 1));
  return g;
}

struct ExperimentConfig {
  FamilyTag family = FamilyTag::gaussian;
  double noise_scale = 1.0;
  double poisson_eta_cap = kDefaultPoissonEtaCap;
  Ensemble ensemble = Ensemble::gaussian;
  Index p = 50;
  Index s = 3;
  double theta_magnitude = 1.0;
  ConstraintClass constraint_mode = ConstraintClass::matched;
  double slack = 0.0;  // c = ||theta||_1 + slack
  std::vector<Index> n_grid{40, 80, 160};
  std::size_t trials = 20;
  std::size_t mc_samples = 2000;
  std::uint64_t master_seed = 1;
  double rsc_epsilon = 0.5;
  std::size_t rsc_directions = 2000;
  double alpha = 1.0;
  double c1 = 1.0;
  MuMode mu_mode = MuMode::empirical;
  SolverSettings solver;
  std::vector<double> t_grid = default_t_grid();
  double width_t = 1.0;  // radius used by the `width` command in mismatched mode

  GlmFamily glm_family() const {
    GlmFamily f;
    f.tag = family;
    f.noise_scale = noise_scale;
    f.poisson_eta_cap = poisson_eta_cap;
    return f;
  }

  /// Throws ConfigError naming the offending key.
  void validate() const {
    auto fail = [](const char* key, const std::string& msg) { throw ConfigError(key, std::string(key) + ": " + msg); };
    if (p < 1) fail("p", "must be >= 1");
    if (s < 0 || s > p) fail("s", "must satisfy 0 <= s <= p");
    if (!(theta_magnitude > 0.0)) fail("theta_magnitude", "must be positive");
    if (family == FamilyTag::gaussian && !(noise_scale >= 0.0)) fail("noise_scale", "must be >= 0");
    if (constraint_mode == ConstraintClass::matched) {
      if (slack != 0.0) fail("slack", "must be 0 when constraint_mode = matched");
      if (s == 0) fail("s", "matched mode needs s >= 1 (theta = 0 has no descent cone)");
    } else if (!(slack > 0.0)) {
      fail("slack", "must be > 0 when constraint_mode = mismatched");
    }
    if (n_grid.empty()) fail("n_grid", "must be nonempty");
    for (std::size_t k = 0; k < n_grid.size(); ++k) {
      if (n_grid[k] < 1) fail("n_grid", "entries must be >= 1");
      if (k > 0 && n_grid[k] <= n_grid[k - 1]) fail("n_grid", "must be strictly increasing");
    }
    if (trials < 1) fail("trials", "must be >= 1");
    if (mc_samples < 2) fail("mc_samples", "must be >= 2");
    if (!(rsc_epsilon > 0.0 && rsc_epsilon < 1.0)) fail("rsc_epsilon", "must be in (0,1)");
    if (rsc_directions < 100) fail("rsc_directions", "must be >= 100");
    if (!(alpha >= 1.0)) fail("alpha", "must be >= 1");
    if (!(c1 > 0.0)) fail("c1", "must be positive");
    if (solver.max_iter < 1) fail("max_iter", "must be >= 1");
    if (t_grid.empty()) fail("t_grid", "must be nonempty");
    for (double t : t_grid)
      if (!(t > 0.0)) fail("t_grid", "entries must be positive");
    if (!(width_t > 0.0)) fail("width_t", "must be positive");
    if (!(poisson_eta_cap > 0.0)) fail("poisson_eta_cap", "must be positive");
  }
};

/// s coordinates chosen uniformly without replacement set to +-magnitude.
inline Vector make_truth(Index p, Index s, double magnitude, Rng& rng) {
  if (s < 0 || s > p) throw DomainError("make_truth: need 0 <= s <= p");
  std::vector<Index> idx(static_cast<std::size_t>(p));
  std::iota(idx.begin(), idx.end(), Index{0});
  // Partial Fisher-Yates with an explicit uniform draw keeps the result
  // independent of the standard library's shuffle implementation.
  for (Index k = 0; k < s; ++k) {
    std::uniform_int_distribution<Index> pick(k, p - 1);
    std::swap(idx[static_cast<std::size_t>(k)], idx[static_cast<std::size_t>(pick(rng))]);
  }
  std::bernoulli_distribution coin(0.5);
  Vector theta = Vector::Zero(p);
  for (Index k = 0; k < s; ++k) theta[idx[static_cast<std::size_t>(k)]] = coin(rng) ? magnitude : -magnitude;
  return theta;
}

/// Everything a sweep shares across trials: the truth, the constraint, and
/// the widths (which depend on the truth only, not on n or the design).
struct SweepContext {
  ExperimentConfig config;
  Vector theta_true;
  double radius = 0.0;
  FeasibleSet fset;
  std::optional<ConeModel> cone;
  WidthEstimate cone_width;                // matched: omega_1 of the descent cone
  WidthEstimate global_width;              // mismatched: global width of F
  std::vector<WidthEstimate> t_widths;     // mismatched: omega_t(F) / t per t_grid entry
  double nu = 1.0;                         // min of b'' over |eta| <= c
  double mu_theoretical = 1.0;             // nu (1 - epsilon)

  const WidthEstimate& width_at(double t) const {
    const auto& g = config.t_grid;
    const auto it = std::find(g.begin(), g.end(), t);
    if (it == g.end()) throw DomainError("width_at: t is not on the grid");
    return t_widths[static_cast<std::size_t>(it - g.begin())];
  }
};

inline Vector sweep_truth(const ExperimentConfig& cfg) {
  Rng rng = make_stream(cfg.master_seed, 0, StreamRole::truth);
  return make_truth(cfg.p, cfg.s, cfg.theta_magnitude, rng);
}

inline double sweep_radius(const ExperimentConfig& cfg, const Vector& theta) {
  const double c = l1_norm(theta) + (cfg.constraint_mode == ConstraintClass::mismatched ? cfg.slack : 0.0);
  return c;
}

inline SweepContext prepare_sweep(const ExperimentConfig& cfg) {
  cfg.validate();
  Vector theta = sweep_truth(cfg);
  const double c = sweep_radius(cfg, theta);
  SweepContext ctx{cfg, theta, c, FeasibleSet(theta, c), std::nullopt, {}, {}, {}, 1.0, 1.0};
  ctx.nu = hessian_weight_lower_bound(cfg.glm_family(), c);
  ctx.mu_theoretical = ctx.nu * (1.0 - cfg.rsc_epsilon);
  const std::uint64_t width_seed = derive_seed(cfg.master_seed, 0, StreamRole::width);
  if (cfg.constraint_mode == ConstraintClass::matched) {
    ctx.cone = descent_cone(theta);
    ctx.cone_width = gaussian_width_cone(*ctx.cone, cfg.mc_samples, width_seed);
  } else {
    ctx.global_width = global_width_l1(ctx.fset, cfg.mc_samples, width_seed);
    ctx.t_widths.reserve(cfg.t_grid.size());
    for (double t : cfg.t_grid) ctx.t_widths.push_back(localized_width(ctx.fset, t, cfg.mc_samples, width_seed));
  }
  return ctx;
}

struct TrialRecord {
  Index n = 0;
  std::size_t trial = 0;
  std::uint64_t seed = 0;
  bool failed = false;
  std::string failure;
  double error_l2 = std::numeric_limits<double>::quiet_NaN();
  double error_l1 = std::numeric_limits<double>::quiet_NaN();
  double bound_matched = std::numeric_limits<double>::quiet_NaN();
  double bound_mismatched = std::numeric_limits<double>::quiet_NaN();
  double t_star = 0.0;
  WidthEstimate width;
  double mu_hat = 0.0;
  double mu_quantile = 0.0;
  double mu_theoretical = 0.0;
  double sigma_max = 0.0;
  long solver_iters = 0;
  double final_gap = 0.0;
  bool discarded = false;
  // Realization-level quantities.
  double grad_norm = 0.0;                 // ||grad f_n(theta_true)||
  double projected_grad_norm = 0.0;       // ||Pi_K(-grad f_n(theta_true))|| (= grad_norm when mismatched)
  double realized_curvature = 0.0;        // <grad f(theta_hat) - grad f(theta_true), e> / ||e||^2
};

inline std::uint64_t trial_seed(std::uint64_t master, Index n, std::size_t trial) {
  return derive_seed(master, static_cast<std::uint64_t>(n), trial, StreamRole::generic);
}

namespace detail {

inline double mu_for_mode(MuMode mode, double mu_hat, double mu_theoretical) {
  return mode == MuMode::empirical ? mu_hat : mu_theoretical;
}

}  // namespace detail

/// One seeded trial; deterministic in (master_seed, n, trial_index).
inline TrialRecord run_trial(const SweepContext& ctx, Index n, std::size_t trial_index) {
  const ExperimentConfig& cfg = ctx.config;
  TrialRecord rec;
  rec.n = n;
  rec.trial = trial_index;
  rec.seed = trial_seed(cfg.master_seed, n, trial_index);
  rec.mu_theoretical = ctx.mu_theoretical;

  Rng design_rng = make_stream(rec.seed, 0, StreamRole::design);
  Rng noise_rng = make_stream(rec.seed, 0, StreamRole::noise);
  const ProblemInstance inst =
      make_instance(n, ctx.theta_true, cfg.glm_family(), cfg.ensemble, design_rng, noise_rng);

  const SolveReport sol = solve(inst, ctx.radius, cfg.solver);
  const Vector err = sol.theta_hat - ctx.theta_true;
  rec.error_l2 = err.norm();
  rec.error_l1 = l1_norm(err);
  rec.solver_iters = sol.iterations;
  rec.final_gap = sol.final_gap;
  rec.sigma_max = sigma_max(inst);

  const Vector grad_true = gradient(inst, ctx.theta_true);
  rec.grad_norm = grad_true.norm();
  if (rec.error_l2 > 0.0) {
    rec.realized_curvature = (gradient(inst, sol.theta_hat) - grad_true).dot(err) /
                             (rec.error_l2 * rec.error_l2);
  }
  const std::uint64_t rsc_seed = derive_seed(rec.seed, 0, StreamRole::rsc);

  if (ctx.cone) {
    rec.projected_grad_norm = ctx.cone->project(-grad_true).norm;
    const RscEstimate rsc = rsc_estimate(inst, ConeDirectionSampler(*ctx.cone, ctx.fset),
                                         cfg.rsc_directions, true, rsc_seed, cfg.rsc_epsilon, cfg.alpha);
    rec.mu_hat = rsc.mu_hat;
    rec.mu_quantile = rsc.quantile_mu;
    rec.width = ctx.cone_width;
    const double mu = detail::mu_for_mode(cfg.mu_mode, rec.mu_hat, rec.mu_theoretical);
    if (mu > 0.0) {
      rec.bound_matched = matched_bound(rec.sigma_max, ctx.cone_width.mean, mu, n);
      rec.bound_mismatched = rec.bound_matched;
    } else {
      rec.bound_matched = rec.bound_mismatched = std::numeric_limits<double>::infinity();
    }
    rec.t_star = 0.0;
  } else {
    // The feasible cone of a mismatched constraint is the whole space.
    rec.projected_grad_norm = rec.grad_norm;
    auto width_of_t = [&](double t) { return ctx.width_at(t); };
    const OptimizedBound theo = optimize_t(width_of_t, ctx.global_width.mean, rec.sigma_max,
                                           rec.mu_theoretical, n, cfg.t_grid);
    // Past the farthest feasible point F \ tB is empty; keep the localized
    // sampler inside the set.
    const double t_rsc = std::min(theo.t_star, 0.5 * ctx.fset.diameter_from_truth());
    const RscEstimate rsc = rsc_estimate(inst, LocalizedSetSampler(ctx.fset, t_rsc),
                                         cfg.rsc_directions, false, rsc_seed, cfg.rsc_epsilon, cfg.alpha);
    rec.mu_hat = rsc.mu_hat;
    rec.mu_quantile = rsc.quantile_mu;
    const double mu = detail::mu_for_mode(cfg.mu_mode, rec.mu_hat, rec.mu_theoretical);
    if (mu > 0.0) {
      const OptimizedBound ob = optimize_t(width_of_t, ctx.global_width.mean, rec.sigma_max, mu, n, cfg.t_grid);
      rec.bound_mismatched = ob.bound_star;
      rec.t_star = ob.t_star;
      rec.width = ob.width_at_t_star;
    } else {
      rec.bound_mismatched = std::numeric_limits<double>::infinity();
      rec.t_star = theo.t_star;
      rec.width = theo.width_at_t_star;
    }
  }
  rec.discarded = rec.mu_hat < 0.5 * rec.mu_theoretical;
  return rec;
}

inline TrialRecord run_trial(const ExperimentConfig& cfg, Index n, std::size_t trial_index) {
  return run_trial(prepare_sweep(cfg), n, trial_index);
}

struct SlopeFit {
  double slope = 0.0;
  double intercept = 0.0;
  double half_width = 0.0;  // 95% t-interval half-width of the slope
};

/// OLS of log(value) on log(n).
inline SlopeFit fit_loglog_slope(std::span<const std::pair<double, double>> points) {
  if (points.size() < 3) throw DomainError("fit_loglog_slope: needs at least 3 points");
  const double k = static_cast<double>(points.size());
  double mx = 0.0, my = 0.0;
  for (const auto& [n, v] : points) {
    if (!(n > 0.0) || !(v > 0.0)) throw DomainError("fit_loglog_slope: values must be positive");
    mx += std::log(n);
    my += std::log(v);
  }
  mx /= k;
  my /= k;
  double sxx = 0.0, sxy = 0.0;
  for (const auto& [n, v] : points) {
    const double dx = std::log(n) - mx;
    sxx += dx * dx;
    sxy += dx * (std::log(v) - my);
  }
  if (!(sxx > 0.0)) throw DomainError("fit_loglog_slope: n values must not all coincide");
  SlopeFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  double rss = 0.0;
  for (const auto& [n, v] : points) {
    const double r = std::log(v) - (fit.intercept + fit.slope * std::log(n));
    rss += r * r;
  }
  const double dof = k - 2.0;
  const double se = std::sqrt(rss / dof / sxx);
  const boost::math::students_t dist(dof);
  fit.half_width = boost::math::quantile(boost::math::complement(dist, 0.025)) * se;
  return fit;
}

inline SlopeFit fit_loglog_slope(const std::vector<std::pair<double, double>>& points) {
  return fit_loglog_slope(std::span<const std::pair<double, double>>(points));
}

struct SweepRow {
  Index n = 0;
  std::size_t kept = 0;
  std::size_t failed = 0;
  double mean_error = 0.0;      // over non-discarded trials
  double stderr_error = 0.0;
  double mean_error_all = 0.0;  // over all completed trials
  double stderr_error_all = 0.0;
  double bound = 0.0;           // per mu_mode
  double bound_empirical = 0.0;
  double bound_theoretical = 0.0;
  double bound_closed_form = std::numeric_limits<double>::quiet_NaN();  // mismatched only
  double t_star = 0.0;
  WidthEstimate width;
  double mu_used = 0.0;
  double mu_empirical = 0.0;    // min mu_hat over kept trials
  double sigma_max = 0.0;       // max over kept trials
  double discard_rate = 0.0;
  double mean_gap = 0.0;
  double naive_bound = 0.0;     // mean ||grad f(theta_true)|| / mu_used
  double lemma_bound = 0.0;     // mean ||Pi_K(-grad f(theta_true))|| / mu_used
};

struct SweepResult {
  std::vector<TrialRecord> trials;
  std::vector<SweepRow> rows;
  SlopeFit error_slope;
  SlopeFit bound_slope;
  std::optional<SlopeFit> closed_form_slope;
  ConstraintClass mode = ConstraintClass::matched;
};

inline constexpr double kMaxFailedFraction = 0.2;

namespace detail {

inline std::pair<double, double> mean_stderr(const std::vector<double>& v) {
  if (v.empty()) return {std::numeric_limits<double>::quiet_NaN(), std::numeric_limits<double>::quiet_NaN()};
  RunningMoments m;
  for (double x : v) m.push(x);
  const WidthEstimate w = to_estimate(m);
  return {w.mean, w.std_error};
}

inline SweepRow aggregate_row(const SweepContext& ctx, Index n, const std::vector<TrialRecord>& recs) {
  const ExperimentConfig& cfg = ctx.config;
  SweepRow row;
  row.n = n;
  std::vector<double> kept_err, all_err;
  double gap_sum = 0.0, grad_sum = 0.0, proj_sum = 0.0;
  std::size_t discarded = 0;
  row.mu_empirical = std::numeric_limits<double>::infinity();
  for (const auto& r : recs) {
    if (r.failed) {
      ++row.failed;
      continue;
    }
    all_err.push_back(r.error_l2);
    if (r.discarded) {
      ++discarded;
      continue;
    }
    kept_err.push_back(r.error_l2);
    gap_sum += r.final_gap;
    grad_sum += r.grad_norm;
    proj_sum += r.projected_grad_norm;
    row.mu_empirical = std::min(row.mu_empirical, r.mu_hat);
    row.sigma_max = std::max(row.sigma_max, r.sigma_max);
  }
  row.kept = kept_err.size();
  const std::size_t completed = all_err.size();
  row.discard_rate = completed ? static_cast<double>(discarded) / static_cast<double>(completed) : 0.0;
  std::tie(row.mean_error, row.stderr_error) = mean_stderr(kept_err);
  std::tie(row.mean_error_all, row.stderr_error_all) = mean_stderr(all_err);
  if (row.kept == 0) {
    row.mu_empirical = 0.0;
    row.bound = row.bound_empirical = row.bound_theoretical = std::numeric_limits<double>::quiet_NaN();
    return row;
  }
  const double kept = static_cast<double>(row.kept);
  row.mean_gap = gap_sum / kept;
  row.mu_used = mu_for_mode(cfg.mu_mode, row.mu_empirical, ctx.mu_theoretical);

  auto bound_with = [&](double mu, double* t_star, WidthEstimate* width) {
    if (!(mu > 0.0)) return std::numeric_limits<double>::infinity();
    if (ctx.cone) {
      if (width) *width = ctx.cone_width;
      return matched_bound(row.sigma_max, ctx.cone_width.mean, mu, n);
    }
    const OptimizedBound ob = optimize_t([&](double t) { return ctx.width_at(t); }, ctx.global_width.mean,
                                         row.sigma_max, mu, n, cfg.t_grid);
    if (t_star) *t_star = ob.t_star;
    if (width) *width = ob.width_at_t_star;
    return ob.bound_star;
  };
  row.bound_empirical = bound_with(row.mu_empirical, nullptr, nullptr);
  row.bound_theoretical = bound_with(ctx.mu_theoretical, nullptr, nullptr);
  row.bound = bound_with(row.mu_used, &row.t_star, &row.width);
  if (!ctx.cone) {
    const double scale = kWidthBoundConstant * row.sigma_max / ctx.mu_theoretical * ctx.global_width.mean;
    row.bound_closed_form = closed_form_optimal_t(scale, n).bound;
  }
  if (row.mu_used > 0.0) {
    row.naive_bound = grad_sum / kept / row.mu_used;
    row.lemma_bound = proj_sum / kept / row.mu_used;
  } else {
    row.naive_bound = row.lemma_bound = std::numeric_limits<double>::infinity();
  }
  return row;
}

inline SlopeFit slope_of(const std::vector<SweepRow>& rows, double SweepRow::*field) {
  std::vector<std::pair<double, double>> pts;
  for (const auto& r : rows) pts.emplace_back(static_cast<double>(r.n), r.*field);
  return fit_loglog_slope(pts);
}

}  // namespace detail

/// Runs every (n, trial) pair of the config. Trial failures are recorded and
/// skipped; more than 20% failures at any n aborts the sweep.
inline SweepResult run_sweep(const SweepContext& ctx) {
  const ExperimentConfig& cfg = ctx.config;
  SweepResult res;
  res.mode = cfg.constraint_mode;
  const std::size_t per_n = cfg.trials;
  const std::size_t total = per_n * cfg.n_grid.size();
  res.trials.resize(total);
  parallel_for(total, [&](std::size_t k) {
    const Index n = cfg.n_grid[k / per_n];
    const std::size_t trial = k % per_n;
    try {
      res.trials[k] = run_trial(ctx, n, trial);
    } catch (const std::exception& e) {
      TrialRecord rec;
      rec.n = n;
      rec.trial = trial;
      rec.seed = trial_seed(cfg.master_seed, n, trial);
      rec.mu_theoretical = ctx.mu_theoretical;
      rec.failed = true;
      rec.failure = e.what();
      res.trials[k] = std::move(rec);
    }
  });
  for (std::size_t j = 0; j < cfg.n_grid.size(); ++j) {
    const std::vector<TrialRecord> recs(res.trials.begin() + static_cast<std::ptrdiff_t>(j * per_n),
                                        res.trials.begin() + static_cast<std::ptrdiff_t>((j + 1) * per_n));
    SweepRow row = detail::aggregate_row(ctx, cfg.n_grid[j], recs);
    if (static_cast<double>(row.failed) > kMaxFailedFraction * static_cast<double>(per_n)) {
      std::string first;
      for (const auto& r : recs)
        if (r.failed) {
          first = r.failure;
          break;
        }
      throw Error("run_sweep: " + std::to_string(row.failed) + " of " + std::to_string(per_n) +
                  " trials failed at n = " + std::to_string(cfg.n_grid[j]) + " (first failure: " + first + ")");
    }
    res.rows.push_back(std::move(row));
  }
  if (res.rows.size() >= 3) {
    auto positive = [&](double SweepRow::*f) {
      return std::all_of(res.rows.begin(), res.rows.end(),
                         [&](const SweepRow& r) { return r.*f > 0.0 && std::isfinite(r.*f); });
    };
    if (positive(&SweepRow::mean_error)) res.error_slope = detail::slope_of(res.rows, &SweepRow::mean_error);
    if (positive(&SweepRow::bound)) res.bound_slope = detail::slope_of(res.rows, &SweepRow::bound);
    if (!ctx.cone && positive(&SweepRow::bound_closed_form))
      res.closed_form_slope = detail::slope_of(res.rows, &SweepRow::bound_closed_form);
  }
  return res;
}

inline SweepResult run_sweep(const ExperimentConfig& cfg) { return run_sweep(prepare_sweep(cfg)); }

// ---------------------------------------------------------------------------
// CSV output. Floats use 17 significant digits ("%.17g"); non-finite values
// print as nan / inf / -inf.

inline std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline constexpr const char* kTrialCsvHeader =
    "n,trial,seed,error_l2,error_l1,bound_matched,bound_mismatched,t_star,width_mean,width_stderr,"
    "mu_hat,mu_theoretical,sigma_max,solver_iters,final_gap,discarded";

inline void write_trial_row(std::ostream& os, const TrialRecord& r) {
  const auto d = format_double;
  os << r.n << ',' << r.trial << ',' << r.seed << ',' << d(r.error_l2) << ',' << d(r.error_l1) << ','
     << d(r.bound_matched) << ',' << d(r.bound_mismatched) << ',' << d(r.t_star) << ','
     << d(r.width.mean) << ',' << d(r.width.std_error) << ',' << d(r.mu_hat) << ','
     << d(r.mu_theoretical) << ',' << d(r.sigma_max) << ',' << r.solver_iters << ','
     << d(r.final_gap) << ',' << (r.failed ? 2 : (r.discarded ? 1 : 0)) << '\n';
}

inline constexpr const char* kAggregateHeader =
    "n,mean_error,stderr,bound,mean_error_all,stderr_all,bound_empirical,bound_theoretical,"
    "bound_closed_form,t_star,width_mean,width_stderr,mu_used,sigma_max,discard_rate,failed,"
    "mean_gap,naive_bound,lemma_bound";

/// Per-trial rows, then an aggregate block and the fitted slopes as '#' lines.
/// A failed trial has discarded = 2.
inline void write_sweep_csv(std::ostream& os, const SweepResult& res) {
  const auto d = format_double;
  os << kTrialCsvHeader << '\n';
  for (const auto& r : res.trials) write_trial_row(os, r);
  os << "# " << kAggregateHeader << '\n';
  for (const auto& r : res.rows) {
    os << "# " << r.n << ',' << d(r.mean_error) << ',' << d(r.stderr_error) << ',' << d(r.bound) << ','
       << d(r.mean_error_all) << ',' << d(r.stderr_error_all) << ',' << d(r.bound_empirical) << ','
       << d(r.bound_theoretical) << ',' << d(r.bound_closed_form) << ',' << d(r.t_star) << ','
       << d(r.width.mean) << ',' << d(r.width.std_error) << ',' << d(r.mu_used) << ','
       << d(r.sigma_max) << ',' << d(r.discard_rate) << ',' << r.failed << ',' << d(r.mean_gap) << ','
       << d(r.naive_bound) << ',' << d(r.lemma_bound) << '\n';
  }
  os << "# slope_error," << d(res.error_slope.slope) << ',' << d(res.error_slope.half_width) << '\n';
  os << "# slope_bound," << d(res.bound_slope.slope) << ',' << d(res.bound_slope.half_width) << '\n';
  if (res.closed_form_slope)
    os << "# slope_bound_closed_form," << d(res.closed_form_slope->slope) << ','
       << d(res.closed_form_slope->half_width) << '\n';
}

}  // namespace conewidth
