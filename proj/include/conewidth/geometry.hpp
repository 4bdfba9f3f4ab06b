#pragma once

// l1-ball projections, descent cones of the l1 norm, and Monte-Carlo
// Gaussian-width estimators.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "errors.hpp"
#include "glm.hpp"
#include "parallel.hpp"
#include "random.hpp"

namespace conewidth {

inline double l1_norm(const Vector& x) { return x.lpNorm<1>(); }

/// Euclidean projection onto {v : ||v||_1 <= c}. Soft-thresholds at the
/// unique lambda with sum_i max(|x_i| - lambda, 0) = c when x is outside.
inline Vector project_l1_ball(const Vector& x, double c) {
  if (!(c > 0.0)) throw DomainError("project_l1_ball: radius must be positive");
  if (l1_norm(x) <= c) return x;
  std::vector<double> mag(static_cast<std::size_t>(x.size()));
  for (Index i = 0; i < x.size(); ++i) mag[static_cast<std::size_t>(i)] = std::abs(x[i]);
  std::sort(mag.begin(), mag.end(), std::greater<>());
  double cumulative = 0.0;
  double lambda = 0.0;
  for (std::size_t k = 0; k < mag.size(); ++k) {
    cumulative += mag[k];
    const double candidate = (cumulative - c) / static_cast<double>(k + 1);
    if (k + 1 == mag.size() || mag[k + 1] <= candidate) {
      lambda = candidate;
      break;
    }
  }
  Vector out(x.size());
  for (Index i = 0; i < x.size(); ++i) {
    const double m = std::max(std::abs(x[i]) - lambda, 0.0);
    out[i] = x[i] < 0.0 ? -m : m;
  }
  return out;
}

/// Vertex -c sign(g_i) e_i with i = argmax |g_i| (lowest index on ties;
/// sign(0) counts as +1, so a zero gradient yields -c e_0).
inline Vector lmo_l1_ball(const Vector& grad, double c) {
  if (grad.size() == 0) throw DimensionError("lmo_l1_ball: empty gradient");
  Index best = 0;
  double best_mag = std::abs(grad[0]);
  for (Index i = 1; i < grad.size(); ++i) {
    if (std::abs(grad[i]) > best_mag) {
      best_mag = std::abs(grad[i]);
      best = i;
    }
  }
  Vector s = Vector::Zero(grad.size());
  s[best] = grad[best] < 0.0 ? c : -c;
  return s;
}

struct ConeProjection {
  Vector proj;   // Pi_K(h)
  Vector polar;  // Pi_{K polar}(h) = h - Pi_K(h)
  double norm = 0.0;
  double tau = 0.0;  // scale of the optimal polar point
};

/// Descent cone of the l1 norm at a point with the given support and signs:
/// v in K iff sum_{i in S} sign_i v_i + sum_{i not in S} |v_i| <= 0.
class ConeModel {
 public:
  ConeModel(std::vector<Index> support, std::vector<int> signs, Index ambient_dim)
      : support_(std::move(support)), signs_(std::move(signs)), dim_(ambient_dim) {
    if (support_.size() != signs_.size())
      throw DimensionError("ConeModel: support and signs differ in length");
    if (support_.empty()) throw DomainError("ConeModel: empty support (cone is the whole space)");
    sign_vec_ = Vector::Zero(dim_);
    for (std::size_t k = 0; k < support_.size(); ++k) {
      const Index i = support_[k];
      if (i < 0 || i >= dim_) throw DomainError("ConeModel: support index out of range");
      if (signs_[k] != 1 && signs_[k] != -1) throw DomainError("ConeModel: signs must be +-1");
      if (sign_vec_[i] != 0.0) throw DomainError("ConeModel: duplicate support index");
      sign_vec_[i] = signs_[k];
    }
  }

  const std::vector<Index>& support() const noexcept { return support_; }
  const std::vector<int>& signs() const noexcept { return signs_; }
  Index ambient_dim() const noexcept { return dim_; }
  const Vector& sign_vector() const noexcept { return sign_vec_; }

  /// Value of the membership functional; v is in the cone iff it is <= 0.
  double membership_value(const Vector& v) const {
    double acc = 0.0;
    for (Index i = 0; i < dim_; ++i) acc += sign_vec_[i] != 0.0 ? sign_vec_[i] * v[i] : std::abs(v[i]);
    return acc;
  }

  bool contains(const Vector& v, double tol = 0.0) const { return membership_value(v) <= tol; }

  /// Polar cone: {(tau * signs on S, z off S) : tau >= 0, |z_i| <= tau}.
  bool polar_contains(const Vector& u, double tol = 0.0) const {
    double tau = -1.0;
    for (std::size_t k = 0; k < support_.size(); ++k) {
      const double t = u[support_[k]] * signs_[k];
      if (tau < 0.0) tau = t;
      if (std::abs(t - tau) > tol) return false;
    }
    if (tau < -tol) return false;
    for (Index i = 0; i < dim_; ++i)
      if (sign_vec_[i] == 0.0 && std::abs(u[i]) > tau + tol) return false;
    return true;
  }

  /// Projection via the Moreau decomposition h = Pi_K(h) + Pi_{K polar}(h).
  /// dist(h, K polar)^2 = min_{tau >= 0} sum_S (h_i - tau s_i)^2
  ///                      + sum_{not S} max(|h_i| - tau, 0)^2
  /// is convex and piecewise quadratic in tau; its minimizer is found exactly
  /// from the sorted off-support magnitudes.
  ConeProjection project(const Vector& h) const {
    if (h.size() != dim_) throw DimensionError("ConeModel::project: dimension mismatch");
    double aligned = 0.0;
    std::vector<double> off;
    off.reserve(static_cast<std::size_t>(dim_) - support_.size());
    for (Index i = 0; i < dim_; ++i) {
      if (sign_vec_[i] != 0.0)
        aligned += sign_vec_[i] * h[i];
      else
        off.push_back(std::abs(h[i]));
    }
    std::sort(off.begin(), off.end(), std::greater<>());
    const double s_count = static_cast<double>(support_.size());

    // Derivative / 2 of the objective: s_count tau - aligned - sum (off_j - tau)_+.
    double tau = 0.0;
    const double off_total = std::accumulate(off.begin(), off.end(), 0.0);
    if (-aligned - off_total < 0.0) {
      double partial = 0.0;
      tau = -1.0;
      for (std::size_t k = 0; k <= off.size(); ++k) {
        const double candidate = (aligned + partial) / (s_count + static_cast<double>(k));
        const double lower = k < off.size() ? off[k] : 0.0;
        if (candidate >= lower) {
          tau = candidate;
          break;
        }
        partial += off[k];
      }
      tau = std::max(tau, 0.0);
    }

    ConeProjection out;
    out.tau = tau;
    out.polar.resize(dim_);
    for (Index i = 0; i < dim_; ++i)
      out.polar[i] = sign_vec_[i] != 0.0 ? tau * sign_vec_[i] : std::clamp(h[i], -tau, tau);
    out.proj = h - out.polar;
    out.norm = out.proj.norm();
    return out;
  }

 private:
  std::vector<Index> support_;
  std::vector<int> signs_;
  Index dim_;
  Vector sign_vec_;
};

/// Descent (tangent) cone of ||.||_1 at theta_true.
inline ConeModel descent_cone(const Vector& theta_true) {
  std::vector<Index> support;
  std::vector<int> signs;
  for (Index i = 0; i < theta_true.size(); ++i) {
    if (theta_true[i] != 0.0) {
      support.push_back(i);
      signs.push_back(theta_true[i] > 0.0 ? 1 : -1);
    }
  }
  if (support.empty())
    throw DomainError("descent_cone: theta_true = 0, the descent cone is the whole space");
  return ConeModel(std::move(support), std::move(signs), theta_true.size());
}

enum class ConstraintClass { matched, mismatched };

inline constexpr double kMatchedTolerance = 1e-12;

/// G - theta_true for G the l1 ball of radius c.
class FeasibleSet {
 public:
  FeasibleSet(Vector theta_true, double radius_c)
      : theta_(std::move(theta_true)), c_(radius_c) {
    if (!(c_ > 0.0)) throw DomainError("FeasibleSet: radius must be positive");
    const double g = l1_norm(theta_);
    const double tol = kMatchedTolerance * std::max(1.0, c_);
    if (g > c_ + tol)
      throw DomainError("FeasibleSet: ||theta_true||_1 = " + std::to_string(g) +
                        " exceeds radius " + std::to_string(c_));
    cls_ = std::abs(g - c_) <= tol ? ConstraintClass::matched : ConstraintClass::mismatched;
  }

  const Vector& theta_true() const noexcept { return theta_; }
  double radius() const noexcept { return c_; }
  ConstraintClass classification() const noexcept { return cls_; }
  bool matched() const noexcept { return cls_ == ConstraintClass::matched; }
  Index dim() const noexcept { return theta_.size(); }

  bool contains(const Vector& v, double tol = 0.0) const { return l1_norm(theta_ + v) <= c_ + tol; }

  /// Projection onto G - theta_true.
  Vector project(const Vector& v) const { return project_l1_ball(theta_ + v, c_) - theta_; }

  /// Largest r >= 0 with theta_true + r d in G. ||theta + r d||_1 is convex in
  /// r and exceeds c once r > (c + ||theta||_1) / ||d||_1.
  double max_step(const Vector& d) const {
    const double dn = l1_norm(d);
    if (dn == 0.0) return 0.0;
    double lo = 0.0;
    double hi = (c_ + l1_norm(theta_)) / dn;
    for (int it = 0; it < 200 && hi - lo > 1e-15 * hi; ++it) {
      const double mid = 0.5 * (lo + hi);
      if (l1_norm(theta_ + mid * d) <= c_)
        lo = mid;
      else
        hi = mid;
    }
    return lo;
  }

  /// max ||v|| over G - theta_true, attained at the vertex c sign(theta_i) e_i
  /// with the largest |theta_i|.
  double diameter_from_truth() const {
    const double inf = theta_.size() ? theta_.cwiseAbs().maxCoeff() : 0.0;
    return std::sqrt(theta_.squaredNorm() + c_ * c_ + 2.0 * c_ * inf);
  }

 private:
  Vector theta_;
  double c_;
  ConstraintClass cls_;
};

struct WidthEstimate {
  double mean = 0.0;
  double std_error = 0.0;  // sample std / sqrt(samples)
  std::size_t samples = 0;
};

namespace detail {

inline constexpr std::size_t kMonteCarloChunk = 128;

struct RunningMoments {
  std::size_t count = 0;
  double mean = 0.0;
  double m2 = 0.0;

  void push(double x) {
    ++count;
    const double delta = x - mean;
    mean += delta / static_cast<double>(count);
    m2 += delta * (x - mean);
  }

  // Chan et al. pairwise merge.
  void merge(const RunningMoments& other) {
    if (other.count == 0) return;
    if (count == 0) {
      *this = other;
      return;
    }
    const double total = static_cast<double>(count + other.count);
    const double delta = other.mean - mean;
    mean += delta * static_cast<double>(other.count) / total;
    m2 += other.m2 + delta * delta * static_cast<double>(count) *
                         static_cast<double>(other.count) / total;
    count += other.count;
  }
};

inline WidthEstimate to_estimate(const RunningMoments& m) {
  WidthEstimate w;
  w.samples = m.count;
  w.mean = m.mean;
  if (m.count > 1) {
    const double var = m.m2 / static_cast<double>(m.count - 1);
    w.std_error = std::sqrt(std::max(var, 0.0) / static_cast<double>(m.count));
  }
  return w;
}

}  // namespace detail

/// The standard Gaussian vector used as sample `index` of a Monte-Carlo run
/// with the given seed. Every estimator below draws its h through this, so
/// estimators sharing a seed see identical samples.
inline Vector gaussian_sample(Index dim, std::uint64_t seed, std::size_t index) {
  Rng rng(derive_seed(seed, index, StreamRole::width));
  std::normal_distribution<double> normal;
  Vector h(dim);
  for (Index i = 0; i < dim; ++i) h[i] = normal(rng);
  return h;
}

/// Mean and standard error of statistic(h) over i.i.d. standard Gaussian h.
/// Samples are grouped in fixed-size chunks evaluated in parallel and merged
/// in chunk order, so the result does not depend on the worker count.
template <class Statistic>
WidthEstimate gaussian_mean_estimate(Index dim, std::size_t samples, std::uint64_t seed,
                                     const Statistic& statistic) {
  if (samples < 2) throw DomainError("Monte-Carlo estimate needs at least 2 samples");
  const std::size_t chunks = (samples + detail::kMonteCarloChunk - 1) / detail::kMonteCarloChunk;
  std::vector<detail::RunningMoments> partial(chunks);
  parallel_for(chunks, [&](std::size_t chunk) {
    const std::size_t begin = chunk * detail::kMonteCarloChunk;
    const std::size_t end = std::min(samples, begin + detail::kMonteCarloChunk);
    detail::RunningMoments m;
    for (std::size_t k = begin; k < end; ++k) m.push(statistic(gaussian_sample(dim, seed, k)));
    partial[chunk] = m;
  });
  detail::RunningMoments total;
  for (const auto& m : partial) total.merge(m);
  return detail::to_estimate(total);
}

/// omega_1 of a closed convex cone given its projection, with the per-sample
/// statistic ||Pi_K(h)|| (the sup over the unit ball intersected with K).
template <class Projector>
WidthEstimate gaussian_width_cone(const Projector& project, Index dim, std::size_t samples,
                                  std::uint64_t seed) {
  return gaussian_mean_estimate(dim, samples, seed,
                                [&](const Vector& h) { return Vector(project(h)).norm(); });
}

inline WidthEstimate gaussian_width_cone(const ConeModel& cone, std::size_t samples,
                                         std::uint64_t seed) {
  return gaussian_mean_estimate(cone.ambient_dim(), samples, seed,
                                [&](const Vector& h) { return cone.project(h).norm; });
}

enum class LocalizedMaxMethod {
  // Lagrangian dual in the l2 multiplier: v(s) = P_G(theta + s h) - theta has
  // nondecreasing norm in s, so the maximizer is v(s*) with ||v(s*)|| = t.
  dual_bisection,
  // Projected gradient ascent with Dykstra projections onto (G - theta) cap tB.
  projected_ascent,
};

struct LocalizedMaxOptions {
  LocalizedMaxMethod method = LocalizedMaxMethod::dual_bisection;
  int max_iter = 500;
  double dykstra_tol = 1e-8;
  int dykstra_max_iter = 20000;
  std::vector<double>* trace = nullptr;  // ascent objective per iteration
};

namespace detail {

inline Vector project_l2_ball(const Vector& v, double t) {
  const double nv = v.norm();
  return nv <= t ? v : Vector(v * (t / nv));
}

/// Dykstra's alternating projections onto (G - theta) cap tB.
inline Vector dykstra_project(const Vector& z, const FeasibleSet& fset, double t, double tol,
                              int max_iter) {
  Vector x = z;
  Vector p = Vector::Zero(z.size());
  Vector q = Vector::Zero(z.size());
  double residual = 0.0;
  for (int it = 0; it < max_iter; ++it) {
    const Vector y = fset.project(x + p);
    p = x + p - y;
    const Vector x_next = project_l2_ball(y + q, t);
    q = y + q - x_next;
    const double step = (x_next - x).norm();
    residual = (y - x_next).norm();
    x = x_next;
    if (step <= tol && residual <= tol) return x;
  }
  throw ConvergenceError("Dykstra projection did not converge in " + std::to_string(max_iter) +
                         " iterations (residual " + std::to_string(residual) + ")");
}

inline double localized_sup_dual(const Vector& h, const FeasibleSet& fset, double t) {
  const double hn = h.norm();
  if (hn == 0.0) return 0.0;
  const Vector& theta = fset.theta_true();
  const double c = fset.radius();

  // Unconstrained (global) maximizer: the l1-ball vertex aligned with h.
  Index i_star = 0;
  h.cwiseAbs().maxCoeff(&i_star);
  Vector vertex = -theta;
  vertex[i_star] += h[i_star] < 0.0 ? -c : c;
  if (vertex.norm() <= t) return c * h.cwiseAbs().maxCoeff() - h.dot(theta);

  auto curve = [&](double s) { return Vector(project_l1_ball(theta + s * h, c) - theta); };
  double lo = 0.0;
  double hi = t / hn;
  Vector v_hi = curve(hi);
  int doublings = 0;
  while (v_hi.norm() < t) {
    lo = hi;
    hi *= 2.0;
    v_hi = curve(hi);
    if (++doublings > 200) return h.dot(v_hi);
  }
  Vector v_lo = curve(lo);
  for (int it = 0; it < 200 && hi - lo > 1e-15 * hi; ++it) {
    const double mid = 0.5 * (lo + hi);
    Vector v_mid = curve(mid);
    if (v_mid.norm() <= t) {
      lo = mid;
      v_lo = std::move(v_mid);
    } else {
      hi = mid;
    }
  }
  return h.dot(v_lo);
}

inline double localized_sup_ascent(const Vector& h, const FeasibleSet& fset, double t,
                                   const LocalizedMaxOptions& opt) {
  const double hn = h.norm();
  if (hn == 0.0) return 0.0;
  const double step = t / hn;
  Vector v = Vector::Zero(h.size());
  double value = 0.0;
  if (opt.trace) opt.trace->assign(1, value);
  for (int it = 0; it < opt.max_iter; ++it) {
    Vector next = dykstra_project(v + step * h, fset, t, opt.dykstra_tol, opt.dykstra_max_iter);
    const double moved = (next - v).norm();
    v = std::move(next);
    value = h.dot(v);
    if (opt.trace) opt.trace->push_back(value);
    if (moved <= 1e-12 * t) break;
  }
  return value;
}

}  // namespace detail

/// max <h, v> over v in (G - theta_true) cap tB.
inline double sup_linear_over_localized_set(const Vector& h, const FeasibleSet& fset, double t,
                                            const LocalizedMaxOptions& opt = {}) {
  if (!(t > 0.0)) throw DomainError("sup_linear_over_localized_set: t must be positive");
  if (h.size() != fset.dim()) throw DimensionError("sup_linear_over_localized_set: size mismatch");
  if (opt.method == LocalizedMaxMethod::projected_ascent)
    return detail::localized_sup_ascent(h, fset, t, opt);
  return detail::localized_sup_dual(h, fset, t);
}

/// omega_1 of the cone over F \ tB, via omega_t(F) / t with the tB-ball
/// relaxation of the sphere.
inline WidthEstimate localized_width(const FeasibleSet& fset, double t, std::size_t samples,
                                     std::uint64_t seed, const LocalizedMaxOptions& opt = {}) {
  if (!(t > 0.0)) throw DomainError("localized_width: t must be positive");
  LocalizedMaxOptions inner = opt;
  inner.trace = nullptr;
  return gaussian_mean_estimate(fset.dim(), samples, seed, [&](const Vector& h) {
    return sup_linear_over_localized_set(h, fset, t, inner) / t;
  });
}

/// E sup_{v in G - theta} <h, v> = c E||h||_inf - E<h, theta>.
inline WidthEstimate global_width_l1(const FeasibleSet& fset, std::size_t samples,
                                     std::uint64_t seed) {
  const double c = fset.radius();
  const Vector& theta = fset.theta_true();
  return gaussian_mean_estimate(fset.dim(), samples, seed, [&](const Vector& h) {
    return c * h.cwiseAbs().maxCoeff() - h.dot(theta);
  });
}

/// Upper bound on the squared width of the l1 descent cone at an s-sparse
/// point: 2 s log(p/s) + 3s/2.
inline double l1_descent_cone_width_bound_sq(Index p, Index s) {
  const double sd = static_cast<double>(s);
  return 2.0 * sd * std::log(static_cast<double>(p) / sd) + 1.5 * sd;
}

}  // namespace conewidth
