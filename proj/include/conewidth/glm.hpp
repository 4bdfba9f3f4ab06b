#pragma once

// Canonical generalized linear models: cumulants, synthetic data, and the
// empirical loss f_n(theta) = (1/n) sum_i [b(<a_i, theta>) - y_i <a_i, theta>]
// together with its gradient and Hessian quadratic form.

#include <cmath>
#include <cstddef>
#include <random>
#include <string>
#include <string_view>

#include <Eigen/Dense>

#include "errors.hpp"
#include "random.hpp"

namespace conewidth {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using Index = Eigen::Index;

enum class FamilyTag { gaussian, logistic, poisson };
enum class Ensemble { gaussian, rademacher };

inline constexpr double kDefaultPoissonEtaCap = 30.0;

struct GlmFamily {
  FamilyTag tag = FamilyTag::gaussian;
  // sigma in y = <a, theta> + sigma w; ignored by logistic and poisson.
  double noise_scale = 1.0;
  double poisson_eta_cap = kDefaultPoissonEtaCap;

  static GlmFamily gaussian(double sigma) { return {FamilyTag::gaussian, sigma}; }
  static GlmFamily logistic() { return {FamilyTag::logistic, 0.0}; }
  static GlmFamily poisson(double cap = kDefaultPoissonEtaCap) {
    return {FamilyTag::poisson, 0.0, cap};
  }
};

inline std::string_view to_string(FamilyTag tag) {
  switch (tag) {
    case FamilyTag::gaussian: return "gaussian";
    case FamilyTag::logistic: return "logistic";
    case FamilyTag::poisson: return "poisson";
  }
  return "?";
}

inline std::string_view to_string(Ensemble e) {
  return e == Ensemble::gaussian ? "gaussian" : "rademacher";
}

struct CumulantValues {
  double b = 0.0;
  double b1 = 0.0;  // b'(eta), the mean response
  double b2 = 0.0;  // b''(eta), the response variance
};

namespace detail {

inline double logistic_sigmoid(double eta) {
  if (eta >= 0.0) return 1.0 / (1.0 + std::exp(-eta));
  const double e = std::exp(eta);
  return e / (1.0 + e);
}

inline void check_poisson_eta(const GlmFamily& family, double eta, Index index = -1) {
  if (eta > family.poisson_eta_cap) {
    std::string msg = "poisson linear predictor " + std::to_string(eta) +
                      " exceeds cap " + std::to_string(family.poisson_eta_cap);
    if (index >= 0) msg += " at index " + std::to_string(index);
    throw DomainError(msg);
  }
}

}  // namespace detail

/// b, b', b'' at eta. Gaussian b = eta^2/2, logistic b = log(1 + e^eta),
/// poisson b = e^eta.
inline CumulantValues cumulant_eval(const GlmFamily& family, double eta) {
  if (!std::isfinite(eta)) throw DomainError("linear predictor is not finite");
  switch (family.tag) {
    case FamilyTag::gaussian:
      return {0.5 * eta * eta, eta, 1.0};
    case FamilyTag::logistic: {
      // log(1 + e^eta) = max(eta, 0) + log1p(e^{-|eta|})
      const double b = std::max(eta, 0.0) + std::log1p(std::exp(-std::abs(eta)));
      const double s = detail::logistic_sigmoid(eta);
      return {b, s, s * (1.0 - s)};
    }
    case FamilyTag::poisson: {
      detail::check_poisson_eta(family, eta);
      const double e = std::exp(eta);
      return {e, e, e};
    }
  }
  return {};
}

/// Immutable regression problem: design A (n x p), responses y, truth.
class ProblemInstance {
 public:
  ProblemInstance(Matrix design, Vector responses, Vector theta_true, GlmFamily family,
                  Ensemble ensemble)
      : design_(std::move(design)),
        responses_(std::move(responses)),
        theta_true_(std::move(theta_true)),
        family_(family),
        ensemble_(ensemble) {
    if (design_.rows() != responses_.size())
      throw DimensionError("design has " + std::to_string(design_.rows()) +
                           " rows but there are " + std::to_string(responses_.size()) +
                           " responses");
    if (design_.cols() != theta_true_.size())
      throw DimensionError("design has " + std::to_string(design_.cols()) +
                           " columns but theta_true has length " +
                           std::to_string(theta_true_.size()));
    if (design_.rows() < 1 || design_.cols() < 1)
      throw DimensionError("design must be at least 1 x 1");
  }

  const Matrix& design() const noexcept { return design_; }
  const Vector& responses() const noexcept { return responses_; }
  const Vector& theta_true() const noexcept { return theta_true_; }
  const GlmFamily& family() const noexcept { return family_; }
  Ensemble ensemble() const noexcept { return ensemble_; }
  Index n() const noexcept { return design_.rows(); }
  Index p() const noexcept { return design_.cols(); }

 private:
  Matrix design_;
  Vector responses_;
  Vector theta_true_;
  GlmFamily family_;
  Ensemble ensemble_;
};

inline Matrix sample_design(Index n, Index p, Ensemble ensemble, Rng& rng) {
  if (n < 1 || p < 1) throw DimensionError("sample_design needs n, p >= 1");
  Matrix a(n, p);
  // Column-major fill order is part of the determinism contract.
  if (ensemble == Ensemble::gaussian) {
    std::normal_distribution<double> normal;
    for (Index j = 0; j < p; ++j)
      for (Index i = 0; i < n; ++i) a(i, j) = normal(rng);
  } else {
    std::bernoulli_distribution coin(0.5);
    for (Index j = 0; j < p; ++j)
      for (Index i = 0; i < n; ++i) a(i, j) = coin(rng) ? 1.0 : -1.0;
  }
  return a;
}

/// Draws y_i given eta_i = <a_i, theta_true> from the family's response law.
inline Vector sample_responses(const Matrix& design, const Vector& theta_true,
                               const GlmFamily& family, Rng& rng) {
  if (design.cols() != theta_true.size())
    throw DimensionError("sample_responses: design/theta_true size mismatch");
  const Vector eta = design * theta_true;
  Vector y(eta.size());
  switch (family.tag) {
    case FamilyTag::gaussian: {
      std::normal_distribution<double> normal;
      for (Index i = 0; i < eta.size(); ++i) y[i] = eta[i] + family.noise_scale * normal(rng);
      break;
    }
    case FamilyTag::logistic: {
      for (Index i = 0; i < eta.size(); ++i) {
        std::bernoulli_distribution coin(detail::logistic_sigmoid(eta[i]));
        y[i] = coin(rng) ? 1.0 : 0.0;
      }
      break;
    }
    case FamilyTag::poisson: {
      for (Index i = 0; i < eta.size(); ++i) detail::check_poisson_eta(family, eta[i], i);
      for (Index i = 0; i < eta.size(); ++i) {
        std::poisson_distribution<long long> pois(std::exp(eta[i]));
        y[i] = static_cast<double>(pois(rng));
      }
      break;
    }
  }
  return y;
}

/// Samples a design and responses for the given truth.
inline ProblemInstance make_instance(Index n, const Vector& theta_true, const GlmFamily& family,
                                     Ensemble ensemble, Rng& design_rng, Rng& noise_rng) {
  Matrix a = sample_design(n, theta_true.size(), ensemble, design_rng);
  Vector y = sample_responses(a, theta_true, family, noise_rng);
  return ProblemInstance(std::move(a), std::move(y), theta_true, family, ensemble);
}

namespace detail {

inline void check_theta(const ProblemInstance& inst, const Vector& theta, const char* what) {
  if (theta.size() != inst.p())
    throw DimensionError(std::string(what) + ": theta has length " +
                         std::to_string(theta.size()) + ", expected " +
                         std::to_string(inst.p()));
}

}  // namespace detail

/// Loss from precomputed linear predictors eta = A theta.
inline double loss_from_predictor(const ProblemInstance& inst, const Vector& eta) {
  const Vector& y = inst.responses();
  double acc = 0.0;
  for (Index i = 0; i < eta.size(); ++i) acc += cumulant_eval(inst.family(), eta[i]).b - y[i] * eta[i];
  return acc / static_cast<double>(inst.n());
}

/// Residual b'(eta) - y; the gradient is A^T residual / n.
inline Vector residual_from_predictor(const ProblemInstance& inst, const Vector& eta) {
  Vector r(eta.size());
  for (Index i = 0; i < eta.size(); ++i)
    r[i] = cumulant_eval(inst.family(), eta[i]).b1 - inst.responses()[i];
  return r;
}

inline Vector gradient_from_predictor(const ProblemInstance& inst, const Vector& eta) {
  return inst.design().transpose() * residual_from_predictor(inst, eta) /
         static_cast<double>(inst.n());
}

inline double loss(const ProblemInstance& inst, const Vector& theta) {
  detail::check_theta(inst, theta, "loss");
  return loss_from_predictor(inst, inst.design() * theta);
}

/// (1/2n) ||y - A theta||^2. For the gaussian family this differs from loss()
/// by the theta-independent constant (1/2n) ||y||^2.
inline double least_squares_objective(const ProblemInstance& inst, const Vector& theta) {
  detail::check_theta(inst, theta, "least_squares_objective");
  return 0.5 * (inst.responses() - inst.design() * theta).squaredNorm() /
         static_cast<double>(inst.n());
}

inline Vector gradient(const ProblemInstance& inst, const Vector& theta) {
  detail::check_theta(inst, theta, "gradient");
  return gradient_from_predictor(inst, inst.design() * theta);
}

/// v^T (1/n) A^T D(theta) A v with D_ii = b''(eta_i).
inline double hessian_quadratic_form(const ProblemInstance& inst, const Vector& theta,
                                     const Vector& v) {
  detail::check_theta(inst, theta, "hessian_quadratic_form");
  detail::check_theta(inst, v, "hessian_quadratic_form");
  const Vector eta = inst.design() * theta;
  const Vector av = inst.design() * v;
  double acc = 0.0;
  for (Index i = 0; i < eta.size(); ++i) acc += cumulant_eval(inst.family(), eta[i]).b2 * av[i] * av[i];
  return acc / static_cast<double>(inst.n());
}

/// max_i sqrt(var y_i) from the model, not from the sample.
inline double sigma_max(const ProblemInstance& inst) {
  if (inst.family().tag == FamilyTag::gaussian) return inst.family().noise_scale;
  const Vector eta = inst.design() * inst.theta_true();
  double best = 0.0;
  for (Index i = 0; i < eta.size(); ++i)
    best = std::max(best, std::sqrt(cumulant_eval(inst.family(), eta[i]).b2));
  return best;
}

/// nu = min_{|eta| <= c} b''(eta). With Rademacher rows and ||theta||_1 <= c
/// every linear predictor lies in [-c, c].
inline double hessian_weight_lower_bound(const GlmFamily& family, double c) {
  if (c < 0.0) throw DomainError("hessian_weight_lower_bound: c must be nonnegative");
  switch (family.tag) {
    case FamilyTag::gaussian: return 1.0;
    case FamilyTag::logistic: {
      const double s = detail::logistic_sigmoid(c);
      return s * (1.0 - s);
    }
    case FamilyTag::poisson: return std::exp(-c);
  }
  return 0.0;
}

}  // namespace conewidth
