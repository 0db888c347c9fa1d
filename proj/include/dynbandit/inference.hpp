#pragma once

#include <algorithm>
#include <cstdint>
#include <utility>

#include "dynbandit/core_model.hpp"
#include "dynbandit/decay.hpp"

namespace dynbandit {

/// Prior for step t given data through t-1: N(u_{t|t-1}, Sigma_{t|t-1}).
struct PriorSnapshot {
  Vector mean;
  Matrix cov;
};

/// Clamp floor for the Bernoulli variance term; keeps the rank-one
/// coefficient finite when the link saturates in floating point.
inline constexpr double kThetaClamp = 1e-12;

inline double clamp_theta(double theta) {
  return std::clamp(theta, kThetaClamp, 1.0 - kThetaClamp);
}

inline void require_binary(int y, const char* where) {
  require(y == 0 || y == 1, std::string(where) + ": reward must be 0 or 1");
}

/**
 * Random-walk propagation: the parameter picks up process noise Q_t, so the
 * mean carries over and the covariance widens to Sigma_{t-1} + Q_t.
 */
inline PriorSnapshot propagate_prior(const GaussianBelief& belief, const Matrix& q_t) {
  require(q_t.rows() == belief.cov.rows() && q_t.cols() == belief.cov.cols(),
          "propagate_prior: Q_t dimension mismatch");
  require(is_positive_semidefinite(q_t), "propagate_prior: Q_t not positive semidefinite");
  return PriorSnapshot{belief.mean, symmetrized(belief.cov + q_t)};
}

/**
 * One Laplace-approximate conditioning step on a single Bernoulli
 * observation. The predicted reward is linearized at the prior mean,
 * the mean takes one Newton-style step
 *
 *     u_t = u_{t|t-1} + Sigma_{t|t-1} (y - theta_hat) x,
 *
 * and the covariance absorbs the rank-one information via the
 * Sherman-Morrison downdate
 *
 *     Sigma_t = Sigma_{t|t-1}
 *             - w / (1 + w s^2) (Sigma_{t|t-1} x)(Sigma_{t|t-1} x)^T,
 *
 * with w = theta_hat (1 - theta_hat) and s^2 = x^T Sigma_{t|t-1} x. This is
 * algebraically the inverse of the precision Sigma_{t|t-1}^{-1} + w x x^T
 * but costs O(d^2).
 *
 * `newton_iterations > 1` re-evaluates theta_hat at the refreshed mean and
 * repeats the mean step from the same prior (fixed linearization of the
 * covariance); 1 gives the plain single-step update.
 */
inline GaussianBelief laplace_update(const PriorSnapshot& prior, const Vector& x, int y,
                                     const LogisticLink& link = {}, int newton_iterations = 1) {
  require(prior.mean.size() == x.size(), "laplace_update: context dimension mismatch");
  require(is_positive_definite(prior.cov), "laplace_update: prior covariance not PD");
  require_binary(y, "laplace_update");
  require(newton_iterations >= 1, "laplace_update: iteration count must be >= 1");

  double theta_hat = clamp_theta(link(x.dot(prior.mean)));
  Vector mean = prior.mean;
  for (int k = 0; k < newton_iterations; ++k) {
    mean = prior.mean + prior.cov * ((static_cast<double>(y) - theta_hat) * x);
    if (k + 1 < newton_iterations) theta_hat = clamp_theta(link(x.dot(mean)));
  }

  const Vector sigma_x = prior.cov * x;
  const double s2 = x.dot(sigma_x);
  const double w = theta_hat * (1.0 - theta_hat);
  const double coef = w / (1.0 + w * s2);
  const Matrix cov = prior.cov - coef * (sigma_x * sigma_x.transpose());
  return GaussianBelief(std::move(mean), cov);
}

/**
 * One arm's state: current posterior, link, drift assumption, and how many
 * observations it has absorbed. The drift schedule is indexed by the arm's
 * own update count, so an arm's forgetting advances only when it learns.
 */
struct ArmModel {
  GaussianBelief belief;
  LogisticLink link;
  DriftSchedule drift;
  std::int64_t step_index = 0;
  int newton_iterations = 1;
};

/// Pure transition: propagate through the drift, condition on (x, y).
inline ArmModel step(const ArmModel& model, const Vector& x, int y) {
  const std::int64_t t = model.step_index + 1;
  const Matrix q_t = Q_matrix(model.drift, t, model.belief.cov);
  const PriorSnapshot prior = propagate_prior(model.belief, q_t);
  GaussianBelief posterior = laplace_update(prior, x, y, model.link, model.newton_iterations);
  return ArmModel{std::move(posterior), model.link, model.drift, t, model.newton_iterations};
}

/// log g(a) without overflow; log(1 - g(a)) = log_logistic(-a).
inline double log_logistic(double a) {
  if (a >= 0.0) return -std::log1p(std::exp(-a));
  return a - std::log1p(std::exp(a));
}

/**
 * L_t(beta) = log prior + log likelihood (constants dropped): the objective
 * whose Newton step yields the mean update. Exposed for gradient and mode
 * diagnostics.
 */
inline double log_posterior_unnormalized(const PriorSnapshot& prior, const Vector& x, int y,
                                         const Vector& beta) {
  require(prior.mean.size() == x.size() && beta.size() == x.size(),
          "log_posterior_unnormalized: dimension mismatch");
  require(is_positive_definite(prior.cov), "log_posterior_unnormalized: prior not PD");
  require_binary(y, "log_posterior_unnormalized");
  const Vector centered = beta - prior.mean;
  const double quad = centered.dot(Eigen::LLT<Matrix>(prior.cov).solve(centered));
  const double a = x.dot(beta);
  const double loglik = (y == 1) ? log_logistic(a) : log_logistic(-a);
  return -0.5 * quad + loglik;
}

}  // namespace dynbandit
