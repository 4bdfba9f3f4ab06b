#pragma once

// Constrained M-estimation over the l1 ball {theta : ||theta||_1 <= c}.

#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <string_view>

#include "errors.hpp"
#include "geometry.hpp"
#include "glm.hpp"

namespace conewidth {

enum class SolverMethod { frank_wolfe, projected_gradient };

inline std::string_view to_string(SolverMethod m) {
  return m == SolverMethod::frank_wolfe ? "frank_wolfe" : "projected_gradient";
}

struct SolveReport {
  Vector theta_hat;
  long iterations = 0;
  double final_gap = 0.0;
  double final_objective = 0.0;
  SolverMethod method = SolverMethod::frank_wolfe;
  bool converged = false;
};

inline constexpr long kDefaultMaxIter = 50000;

struct FrankWolfeOptions {
  long max_iter = kDefaultMaxIter;
  // <= 0 selects 1e-6 * max(1, f_n(0)).
  double gap_tol = 0.0;
  // Exact line search for the gaussian family; 2/(k+2) otherwise.
  bool line_search = true;
};

enum class StepRule {
  backtracking,  // plain projected gradient
  accelerated,   // monotone FISTA (Beck-Teboulle), same backtracking
};

struct ProjectedGradientOptions {
  long max_iter = kDefaultMaxIter;
  // Stop once ||theta_{k+1} - theta_k|| <= tol * max(1, ||theta_k||) ...
  double tol = 1e-10;
  // ... or once the duality gap drops below gap_tol (<= 0: 1e-9 * max(1, |f_n(0)|)).
  double gap_tol = 0.0;
  StepRule step_rule = StepRule::backtracking;
  double initial_step = 1.0;
  double backtrack = 0.5;
  double min_step = 1e-20;
};

/// f_n and its gradient. The gaussian family with n > p goes through the
/// Gram matrix A^T A / n, making each evaluation O(p^2) instead of O(np).
class LossOracle {
 public:
  explicit LossOracle(const ProblemInstance& inst) : inst_(inst) {
    const double n = static_cast<double>(inst.n());
    if (inst.family().tag == FamilyTag::gaussian && inst.p() < inst.n()) {
      gram_ = Matrix(inst.design().transpose() * inst.design() / n);
      cross_ = inst.design().transpose() * inst.responses() / n;
    }
  }

  const ProblemInstance& instance() const noexcept { return inst_; }
  bool uses_gram() const noexcept { return gram_.has_value(); }

  double value(const Vector& theta) const {
    if (gram_) return 0.5 * theta.dot(*gram_ * theta) - cross_.dot(theta);
    return loss_from_predictor(inst_, inst_.design() * theta);
  }

  double value_gradient(const Vector& theta, Vector& grad) const {
    if (gram_) {
      const Vector q = *gram_ * theta;
      grad = q - cross_;
      return 0.5 * theta.dot(q) - cross_.dot(theta);
    }
    const Vector eta = inst_.design() * theta;
    grad = gradient_from_predictor(inst_, eta);
    return loss_from_predictor(inst_, eta);
  }

  const Matrix& gram() const { return *gram_; }
  const Vector& cross() const { return cross_; }

 private:
  const ProblemInstance& inst_;
  std::optional<Matrix> gram_;
  Vector cross_;
};

namespace detail {

inline void check_finite(double value, long iteration, const char* what) {
  if (!std::isfinite(value))
    throw ConvergenceError(std::string(what) + " is not finite at iteration " +
                           std::to_string(iteration));
}

inline double fw_gap(const Vector& grad, const Vector& theta, double c) {
  // <g, theta - s> with s = -c sign(g_i*) e_i* equals <g, theta> + c ||g||_inf.
  return grad.dot(theta) + c * grad.cwiseAbs().maxCoeff();
}

}  // namespace detail

/// FW certificate <grad f_n(theta), theta - s>, s = LMO(grad). Upper-bounds
/// f_n(theta) - min_G f_n for feasible theta.
inline double duality_gap(const ProblemInstance& inst, const Vector& theta, double c) {
  if (theta.size() != inst.p()) throw DimensionError("duality_gap: theta has wrong length");
  const double norm1 = l1_norm(theta);
  if (norm1 > c + 1e-9 * std::max(1.0, c))
    throw DomainError("duality_gap: theta is infeasible (||theta||_1 = " + std::to_string(norm1) +
                      " > c = " + std::to_string(c) + ")");
  return detail::fw_gap(gradient(inst, theta), theta, c);
}

inline SolveReport frank_wolfe(const ProblemInstance& inst, double c,
                               const FrankWolfeOptions& opt = {}) {
  if (!(c > 0.0)) throw DomainError("frank_wolfe: radius must be positive");
  const LossOracle oracle(inst);
  const Matrix& a = inst.design();
  const double n = static_cast<double>(inst.n());
  const double f0 = oracle.value(Vector::Zero(inst.p()));
  const double gap_tol = opt.gap_tol > 0.0 ? opt.gap_tol : 1e-6 * std::max(1.0, f0);
  const bool gaussian = inst.family().tag == FamilyTag::gaussian;
  const bool exact_step = opt.line_search && gaussian;

  // Incrementally maintained: Q theta when the Gram matrix is used,
  // eta = A theta otherwise.
  Vector theta = Vector::Zero(inst.p());
  Vector q_theta = Vector::Zero(inst.p());
  Vector eta = Vector::Zero(inst.n());
  Vector grad;
  double gap = std::numeric_limits<double>::infinity();
  long k = 0;
  for (;; ++k) {
    if (oracle.uses_gram())
      grad = q_theta - oracle.cross();
    else
      grad = gradient_from_predictor(inst, eta);
    Index i_star = 0;
    const double gmax = grad.cwiseAbs().maxCoeff(&i_star);
    gap = grad.dot(theta) + c * gmax;
    detail::check_finite(gap, k, "Frank-Wolfe gap");
    if (gap <= gap_tol || k >= opt.max_iter) break;

    const double vertex = grad[i_star] < 0.0 ? c : -c;
    double gamma = 2.0 / (static_cast<double>(k) + 2.0);
    if (oracle.uses_gram()) {
      // d = s - theta; d^T Q d = vertex^2 Q_ii - 2 vertex (Q theta)_i + theta^T Q theta
      if (exact_step) {
        const double curvature = vertex * vertex * oracle.gram()(i_star, i_star) -
                                 2.0 * vertex * q_theta[i_star] + theta.dot(q_theta);
        gamma = curvature > 0.0 ? std::clamp(gap / curvature, 0.0, 1.0) : 1.0;
      }
      q_theta = (1.0 - gamma) * q_theta + (gamma * vertex) * oracle.gram().col(i_star);
    } else {
      const Vector a_dir = vertex * a.col(i_star) - eta;
      if (exact_step) {
        const double curvature = a_dir.squaredNorm() / n;
        gamma = curvature > 0.0 ? std::clamp(gap / curvature, 0.0, 1.0) : 1.0;
      }
      eta += gamma * a_dir;
    }
    theta *= (1.0 - gamma);
    theta[i_star] += gamma * vertex;
  }
  SolveReport rep;
  rep.method = SolverMethod::frank_wolfe;
  rep.theta_hat = std::move(theta);
  rep.iterations = k;
  rep.final_gap = std::max(gap, 0.0);
  rep.final_objective = oracle.value(rep.theta_hat);
  detail::check_finite(rep.final_objective, k, "objective");
  rep.converged = gap <= gap_tol;
  return rep;
}

/// theta_{k+1} = P_G(x_k - step_k grad f_n(x_k)) with backtracking on the
/// quadratic upper model. x_k = theta_k for the plain rule and the FISTA
/// extrapolation for the accelerated rule; both keep f_n(theta_k) nonincreasing.
inline SolveReport projected_gradient(const ProblemInstance& inst, double c,
                                      const ProjectedGradientOptions& opt = {}) {
  if (!(c > 0.0)) throw DomainError("projected_gradient: radius must be positive");
  const LossOracle oracle(inst);
  const bool accelerated = opt.step_rule == StepRule::accelerated;

  Vector theta = Vector::Zero(inst.p());
  Vector grad_theta;
  double f = oracle.value_gradient(theta, grad_theta);
  const double gap_tol = opt.gap_tol > 0.0 ? opt.gap_tol : 1e-9 * std::max(1.0, std::abs(f));

  Vector x = theta;  // extrapolated point
  Vector grad_x = grad_theta;
  double f_x = f;
  double momentum = 1.0;
  double step = opt.initial_step;
  long k = 0;
  bool converged = detail::fw_gap(grad_theta, theta, c) <= gap_tol;
  for (; !converged && k < opt.max_iter; ++k) {
    detail::check_finite(f, k, "objective");
    Vector z;
    double f_z = 0.0;
    Vector grad_z;
    for (;;) {
      z = project_l1_ball(x - step * grad_x, c);
      const Vector diff = z - x;
      try {
        f_z = oracle.value_gradient(z, grad_z);
      } catch (const DomainError&) {
        f_z = std::numeric_limits<double>::infinity();
      }
      const double model = f_x + grad_x.dot(diff) + 0.5 * diff.squaredNorm() / step;
      if (std::isfinite(f_z) && f_z <= model + 1e-14 * std::max(1.0, std::abs(f_x))) break;
      step *= opt.backtrack;
      if (step < opt.min_step)
        throw ConvergenceError("projected_gradient: step underflow at iteration " +
                               std::to_string(k));
    }

    const Vector previous = theta;
    const bool accepted = f_z <= f;
    if (accepted) {
      theta = z;
      f = f_z;
      grad_theta = grad_z;
    }
    const double moved = (theta - previous).norm();

    if (accelerated) {
      const double next_momentum = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * momentum * momentum));
      // Monotone FISTA: extrapolate from both the trial point z and theta.
      x = theta + (momentum / next_momentum) * (z - theta) +
          ((momentum - 1.0) / next_momentum) * (theta - previous);
      momentum = next_momentum;
      f_x = oracle.value_gradient(x, grad_x);
      // Restart when the trial step failed to descend.
      if (f_z > f || !std::isfinite(f_x)) {
        x = theta;
        grad_x = grad_theta;
        f_x = f;
        momentum = 1.0;
      }
    } else {
      x = theta;
      grad_x = grad_theta;
      f_x = f;
      step /= opt.backtrack;
    }

    // A rejected trial point restarts the momentum; only the plain rule
    // treats it as a stall.
    const bool stalled = accepted ? moved <= opt.tol * std::max(1.0, theta.norm()) : !accelerated;
    if (detail::fw_gap(grad_theta, theta, c) <= gap_tol || stalled) {
      converged = true;
      ++k;
    }
  }
  SolveReport rep;
  rep.method = SolverMethod::projected_gradient;
  rep.theta_hat = std::move(theta);
  rep.iterations = k;
  rep.final_objective = f;
  rep.final_gap = std::max(0.0, detail::fw_gap(grad_theta, rep.theta_hat, c));
  rep.converged = converged;
  return rep;
}

struct SolverSettings {
  SolverMethod method = SolverMethod::projected_gradient;
  long max_iter = kDefaultMaxIter;
  double gap_tol = 0.0;  // <= 0 selects the per-method default
  double step_tol = 1e-10;
};

inline SolveReport solve(const ProblemInstance& inst, double c, const SolverSettings& s) {
  if (s.method == SolverMethod::frank_wolfe) {
    FrankWolfeOptions o;
    o.max_iter = s.max_iter;
    o.gap_tol = s.gap_tol;
    return frank_wolfe(inst, c, o);
  }
  ProjectedGradientOptions o;
  o.max_iter = s.max_iter;
  o.tol = s.step_tol;
  o.gap_tol = s.gap_tol;
  return projected_gradient(inst, c, o);
}

}  // namespace conewidth
