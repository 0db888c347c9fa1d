#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <stdexcept>
#include <string>

namespace dynbandit {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Relative eigenvalue floor below which a covariance is treated as having
/// lost positive definiteness.
inline constexpr double kPdTolerance = 1e-12;

inline void require(bool cond, const std::string& what) {
  if (!cond) throw std::invalid_argument(what);
}

inline void require_same_dim(const Vector& a, const Vector& b, const char* where) {
  require(a.size() == b.size(), std::string(where) + ": dimension mismatch");
}

/**
 * Logistic link: activation -> success probability 1 / (1 + exp(-a)).
 * Evaluated branch-wise so large |a| never overflows.
 */
struct LogisticLink {
  double operator()(double activation) const {
    if (activation >= 0.0) {
      return 1.0 / (1.0 + std::exp(-activation));
    }
    const double e = std::exp(activation);
    return e / (1.0 + e);
  }
};

inline bool is_finite(const Vector& v) { return v.allFinite(); }
inline bool is_finite(const Matrix& m) { return m.allFinite(); }

/// Symmetric part of m; covariance updates re-enforce symmetry with this.
inline Matrix symmetrized(const Matrix& m) { return 0.5 * (m + m.transpose()); }

/// Positive definiteness test: smallest eigenvalue must exceed
/// kPdTolerance times the largest.
inline bool is_positive_definite(const Matrix& m) {
  if (m.rows() != m.cols() || !m.allFinite()) return false;
  if (!m.isApprox(m.transpose(), 1e-10)) return false;
  Eigen::SelfAdjointEigenSolver<Matrix> es(m, Eigen::EigenvaluesOnly);
  const double lo = es.eigenvalues().minCoeff();
  const double hi = es.eigenvalues().maxCoeff();
  return hi > 0.0 && lo > kPdTolerance * hi;
}

/// PSD test for process-noise matrices (allows a zero matrix).
inline bool is_positive_semidefinite(const Matrix& m) {
  if (m.rows() != m.cols() || !m.allFinite()) return false;
  if (!m.isApprox(m.transpose(), 1e-10)) return false;
  Eigen::SelfAdjointEigenSolver<Matrix> es(m, Eigen::EigenvaluesOnly);
  const double hi = es.eigenvalues().cwiseAbs().maxCoeff();
  return es.eigenvalues().minCoeff() >= -kPdTolerance * std::max(hi, 1.0);
}

/**
 * Gaussian posterior over one arm's regression parameter: mean vector and
 * dense symmetric positive definite covariance. Construction validates and
 * symmetrizes, so a held GaussianBelief is always usable for sampling and
 * rank-one downdates.
 */
struct GaussianBelief {
  Vector mean;
  Matrix cov;

  GaussianBelief(Vector mean_in, Matrix cov_in)
      : mean(std::move(mean_in)), cov(symmetrized(cov_in)) {
    require(cov.rows() == cov.cols(), "GaussianBelief: covariance not square");
    require(mean.size() == cov.rows(), "GaussianBelief: mean/covariance dimension mismatch");
    require(is_finite(mean), "GaussianBelief: non-finite mean");
    require(is_positive_definite(cov), "GaussianBelief: covariance not positive definite");
  }

  Eigen::Index dim() const { return mean.size(); }
};

/// g(x . u): plug-in expected reward at a parameter value.
inline double expected_reward(const Vector& belief_mean, const Vector& x,
                              const LogisticLink& link = {}) {
  require_same_dim(belief_mean, x, "expected_reward");
  return link(x.dot(belief_mean));
}

/// x^T Sigma x, the variance of the activation x . beta.
inline double activation_variance(const Vector& x, const Matrix& sigma) {
  require(sigma.rows() == sigma.cols(), "activation_variance: covariance not square");
  require(x.size() == sigma.rows(), "activation_variance: dimension mismatch");
  return x.dot(sigma * x);
}

}  // namespace dynbandit
