#pragma once

// Estimation-error bounds and the conditions they rest on: restricted strong
// convexity probes, the sample-size threshold, and the naive, matched and
// mismatched (localized) bounds with the optimal-radius tuning.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "errors.hpp"
#include "geometry.hpp"
#include "glm.hpp"
#include "parallel.hpp"
#include "random.hpp"

namespace conewidth {

/// 2 sqrt(2 pi), the constant in front of sigma_max omega / (mu sqrt n).
inline constexpr double kWidthBoundConstant = 2.0 * 2.5066282746310002;

struct RscEstimate {
  double mu_hat = 0.0;       // min of the sampled quadratic forms
  std::size_t directions_tested = 0;
  double quantile_mu = 0.0;  // 1% quantile of the sampled quadratic forms
  double epsilon = 0.5;
  double alpha = 1.0;
};

enum class BoundKind { naive, matched, mismatched, optimized_t };

struct BoundReport {
  double t = 0.0;
  WidthEstimate width;
  double mu = 0.0;
  double sigma_max = 0.0;
  Index n = 0;
  double bound_value = 0.0;
  BoundKind kind = BoundKind::matched;
};

/// A feasible error vector along a random direction of the descent cone.
/// Gaussian h is projected onto the cone and normalized (zero projections are
/// discarded); the direction is then scaled to the longest step that stays in
/// G, or left at unit length when no feasible set is given.
class ConeDirectionSampler {
 public:
  explicit ConeDirectionSampler(ConeModel cone, std::optional<FeasibleSet> fset = std::nullopt)
      : cone_(std::move(cone)), fset_(std::move(fset)) {}

  std::optional<Vector> operator()(Rng& rng) const {
    std::normal_distribution<double> normal;
    Vector h(cone_.ambient_dim());
    for (Index i = 0; i < h.size(); ++i) h[i] = normal(rng);
    const ConeProjection pr = cone_.project(h);
    if (!(pr.norm > 1e-12)) return std::nullopt;
    Vector d = pr.proj / pr.norm;
    if (!fset_) return d;
    const double r = fset_->max_step(d);
    if (!(r > 0.0)) return std::nullopt;
    return Vector(r * d);
  }

  Index dim() const { return cone_.ambient_dim(); }

 private:
  ConeModel cone_;
  std::optional<FeasibleSet> fset_;
};

/// Points of F \ tB: walks the projection curve v(s) = P_G(theta + s h) - theta
/// until ||v|| >= t; directions whose curve never leaves tB are discarded.
class LocalizedSetSampler {
 public:
  LocalizedSetSampler(FeasibleSet fset, double t) : fset_(std::move(fset)), t_(t) {
    if (!(t_ > 0.0)) throw DomainError("LocalizedSetSampler: t must be positive");
  }

  std::optional<Vector> operator()(Rng& rng) const {
    std::normal_distribution<double> normal;
    Vector h(fset_.dim());
    for (Index i = 0; i < h.size(); ++i) h[i] = normal(rng);
    double s = t_ / h.norm();
    for (int k = 0; k < 60; ++k, s *= 2.0) {
      Vector v = fset_.project(s * h);
      if (v.norm() >= t_) return v;
    }
    return std::nullopt;
  }

  Index dim() const { return fset_.dim(); }

 private:
  FeasibleSet fset_;
  double t_;
};

inline constexpr double kSegmentGrid[] = {0.0, 0.25, 0.5, 0.75, 1.0};

/// Empirical RSC constant. For each sampled feasible error e = r d (unit d):
///   segment mode: min over lambda in {0, 1/4, 1/2, 3/4, 1} of
///                 d^T Hess f_n(theta_true + lambda r d) d
///   secant mode:  <grad f_n(theta_true + e) - grad f_n(theta_true), e> / ||e||^2
/// Returns the minimum and the 1% quantile over the samples.
template <class Sampler>
RscEstimate rsc_estimate(const ProblemInstance& inst, const Sampler& sampler,
                         std::size_t num_directions, bool at_truth_segment, std::uint64_t seed,
                         double epsilon = 0.5, double alpha = 1.0) {
  if (num_directions < 100) throw DomainError("rsc_estimate: needs at least 100 directions");
  Rng rng(seed);
  const Index p = inst.p();
  Matrix dirs(p, static_cast<Index>(num_directions));
  std::vector<double> lengths;
  lengths.reserve(num_directions);
  const std::size_t max_attempts = 50 * num_directions;
  for (std::size_t attempt = 0; attempt < max_attempts && lengths.size() < num_directions;
       ++attempt) {
    std::optional<Vector> e = sampler(rng);
    if (!e) continue;
    const double r = e->norm();
    if (!(r > 0.0)) continue;
    dirs.col(static_cast<Index>(lengths.size())) = *e / r;
    lengths.push_back(r);
  }
  if (lengths.empty()) throw DomainError("rsc_estimate: direction sampler produced no directions");
  const Index m = static_cast<Index>(lengths.size());
  const Matrix ad = inst.design() * dirs.leftCols(m);
  const Vector eta0 = inst.design() * inst.theta_true();
  const double n = static_cast<double>(inst.n());
  const GlmFamily& fam = inst.family();

  std::vector<double> q(static_cast<std::size_t>(m));
  for (Index j = 0; j < m; ++j) {
    const double r = lengths[static_cast<std::size_t>(j)];
    double value = 0.0;
    if (fam.tag == FamilyTag::gaussian) {
      value = ad.col(j).squaredNorm() / n;
    } else if (at_truth_segment) {
      value = std::numeric_limits<double>::infinity();
      for (double lambda : kSegmentGrid) {
        double acc = 0.0;
        for (Index i = 0; i < ad.rows(); ++i) {
          const double u = ad(i, j);
          acc += cumulant_eval(fam, eta0[i] + lambda * r * u).b2 * u * u;
        }
        value = std::min(value, acc / n);
      }
    } else {
      double acc = 0.0;
      for (Index i = 0; i < ad.rows(); ++i) {
        const double u = ad(i, j);
        acc += (cumulant_eval(fam, eta0[i] + r * u).b1 - cumulant_eval(fam, eta0[i]).b1) * u;
      }
      value = acc / (n * r);
    }
    q[static_cast<std::size_t>(j)] = std::max(value, 0.0);
  }
  std::sort(q.begin(), q.end());
  RscEstimate out;
  out.directions_tested = q.size();
  out.mu_hat = q.front();
  // Nearest-rank 1% quantile.
  const std::size_t rank =
      std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(0.01 * static_cast<double>(q.size()))));
  out.quantile_mu = q[rank - 1];
  out.epsilon = epsilon;
  out.alpha = alpha;
  return out;
}

/// ceil((c1 alpha^2 width / epsilon)^2), floored at 1.
inline Index sample_size_threshold(double width1, double epsilon, double alpha, double c1) {
  if (!(epsilon > 0.0 && epsilon < 1.0)) throw DomainError("sample_size_threshold: epsilon must be in (0,1)");
  if (!(alpha >= 1.0)) throw DomainError("sample_size_threshold: alpha must be >= 1");
  if (!(c1 > 0.0)) throw DomainError("sample_size_threshold: c1 must be positive");
  const double root = c1 * alpha * alpha * std::max(width1, 0.0) / epsilon;
  return std::max<Index>(1, static_cast<Index>(std::ceil(root * root)));
}

struct CalibrationResult {
  double c1 = 1.0;
  Index n = 0;
  double success_rate = 0.0;
  int rounds = 0;
};

/// Grows c1 geometrically until, at n = sample_size_threshold(width1, ...),
/// rsc_estimate reaches mu_target on at least `target` of the seeds.
/// make_instance(n, seed_index) must return a fresh instance per seed and
/// make_sampler(instance) the direction sampler for it.
template <class InstanceFactory, class SamplerFactory>
CalibrationResult calibrate_c1(double width1, double epsilon, double alpha, double mu_target,
                               const InstanceFactory& make_instance,
                               const SamplerFactory& make_sampler, std::uint64_t master_seed,
                               std::size_t seeds = 100, std::size_t directions = 2000,
                               double target = 0.95, double c1_start = 1.0, double growth = 1.1,
                               int max_rounds = 80) {
  CalibrationResult res;
  res.c1 = c1_start;
  for (res.rounds = 1; res.rounds <= max_rounds; ++res.rounds, res.c1 *= growth) {
    res.n = sample_size_threshold(width1, epsilon, alpha, res.c1);
    std::vector<char> ok(seeds, 0);
    parallel_for(seeds, [&](std::size_t k) {
      const ProblemInstance inst = make_instance(res.n, k);
      const auto rsc = rsc_estimate(inst, make_sampler(inst), directions, true,
                                    derive_seed(master_seed, k, StreamRole::calibration),
                                    epsilon, alpha);
      ok[k] = rsc.mu_hat >= mu_target;
    });
    const auto hits = std::count(ok.begin(), ok.end(), 1);
    res.success_rate = static_cast<double>(hits) / static_cast<double>(seeds);
    if (res.success_rate >= target) return res;
  }
  throw ConvergenceError("calibrate_c1: target success rate not reached after " +
                         std::to_string(max_rounds) + " rounds");
}

/// ||grad f_n(theta_true)|| / mu.
inline double naive_bound(double mu, double grad_norm) {
  if (!(mu > 0.0)) throw DomainError("naive_bound: mu must be positive");
  return grad_norm / mu;
}

/// ||Pi_K(-grad f_n(theta_true))||_2 for the descent cone K.
inline double projected_gradient_norm_at_truth(const ProblemInstance& inst, const ConeModel& cone) {
  return cone.project(-gradient(inst, inst.theta_true())).norm;
}

/// 2 sqrt(2 pi) sigma_max omega_1 / (mu sqrt(n)).
inline double matched_bound(double sigma_max, double width1, double mu, Index n) {
  if (!(mu > 0.0)) throw DomainError("matched_bound: mu must be positive");
  if (n < 1) throw DomainError("matched_bound: n must be >= 1");
  return kWidthBoundConstant * sigma_max * width1 / (mu * std::sqrt(static_cast<double>(n)));
}

/// t + 2 sqrt(2 pi) sigma_max omega_1(cone(F \ tB)) / (mu sqrt(n)).
inline double mismatched_bound(double t, double sigma_max, double localized_width1, double mu,
                               Index n) {
  if (!(t >= 0.0)) throw DomainError("mismatched_bound: t must be nonnegative");
  return t + matched_bound(sigma_max, localized_width1, mu, n);
}

struct ClosedFormT {
  double t_star = 0.0;
  double bound = 0.0;
};

/// Minimizer of t + scale / (t sqrt(n)) over t > 0: t* = sqrt(scale / sqrt(n)),
/// bound 2 sqrt(scale) n^{-1/4}.
inline ClosedFormT closed_form_optimal_t(double scale, Index n) {
  const double root_n = std::sqrt(static_cast<double>(n));
  const double t = std::sqrt(std::max(scale, 0.0) / root_n);
  return {t, 2.0 * t};
}

struct OptimizedBound {
  double t_star = 0.0;
  double bound_star = 0.0;
  WidthEstimate width_at_t_star;
  double t_star_global = 0.0;      // closed form with the global width
  double bound_star_global = 0.0;  // 2 sqrt(C omega) n^{-1/4}, C = 2 sqrt(2 pi) sigma / mu
};

/// Grid minimization of mismatched_bound over t, with width_of_t(t) giving
/// omega_1(cone(F \ tB)) = omega_t(F) / t; also reports the closed-form
/// relaxation that replaces omega_t(F) by the global width.
template <class WidthOfT>
OptimizedBound optimize_t(const WidthOfT& width_of_t, double global_width, double sigma_max,
                          double mu, Index n, std::span<const double> t_grid) {
  if (t_grid.empty()) throw DomainError("optimize_t: empty t grid");
  if (!(mu > 0.0)) throw DomainError("optimize_t: mu must be positive");
  OptimizedBound out;
  out.bound_star = std::numeric_limits<double>::infinity();
  for (double t : t_grid) {
    if (!(t > 0.0)) throw DomainError("optimize_t: t grid must be positive");
    const WidthEstimate w = width_of_t(t);
    const double b = mismatched_bound(t, sigma_max, w.mean, mu, n);
    if (b < out.bound_star) {
      out.bound_star = b;
      out.t_star = t;
      out.width_at_t_star = w;
    }
  }
  const double scale = kWidthBoundConstant * sigma_max / mu * global_width;
  const ClosedFormT cf = closed_form_optimal_t(scale, n);
  out.t_star_global = cf.t_star;
  out.bound_star_global = cf.bound;
  return out;
}

}  // namespace conewidth
