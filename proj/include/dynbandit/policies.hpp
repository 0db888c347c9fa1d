#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "dynbandit/core_model.hpp"
#include "dynbandit/inference.hpp"
#include "dynbandit/rng.hpp"

namespace dynbandit {

struct PolicyConfig {
  enum class Kind { Thompson, EpsilonGreedy, Ucb1 };

  /// What UCB1 adds its confidence bonus to: the model's plug-in estimate
  /// g(x . u_a), or the classical empirical mean reward of the arm.
  enum class UcbScore { PluginMean, EmpiricalMean };

  Kind kind = Kind::Thompson;
  double epsilon = 0.1;    // epsilon-greedy exploration probability
  double ucb_weight = 1.0; // c in the UCB1 confidence term
  UcbScore ucb_score = UcbScore::PluginMean;

  void validate() const {
    require(epsilon >= 0.0 && epsilon <= 1.0, "PolicyConfig: epsilon must be in [0,1]");
    require(ucb_weight > 0.0, "PolicyConfig: ucb weight must be > 0");
  }
};

inline const char* to_string(PolicyConfig::Kind kind) {
  switch (kind) {
    case PolicyConfig::Kind::Thompson: return "thompson";
    case PolicyConfig::Kind::EpsilonGreedy: return "epsilon_greedy";
    case PolicyConfig::Kind::Ucb1: return "ucb1";
  }
  return "?";
}

/// One arm choice. chosen_arm is the argmax of per_arm_scores (lowest index
/// on ties) except on epsilon-greedy exploration steps, where the choice is
/// uniform and the scores record the plug-in estimates that were bypassed.
struct Decision {
  int chosen_arm = 0;
  Vector per_arm_scores;
  std::optional<std::vector<Vector>> sampled_parameters;
};

/// Pull counts and running empirical mean rewards, as UCB1 bookkeeping.
struct ArmStats {
  std::vector<std::int64_t> pulls;
  std::vector<double> mean_reward;

  explicit ArmStats(std::size_t n_arms) : pulls(n_arms, 0), mean_reward(n_arms, 0.0) {}

  void record(int arm, double reward) {
    ++pulls[static_cast<std::size_t>(arm)];
    auto& m = mean_reward[static_cast<std::size_t>(arm)];
    m += (reward - m) / static_cast<double>(pulls[static_cast<std::size_t>(arm)]);
  }

  std::int64_t total_pulls() const {
    std::int64_t s = 0;
    for (auto p : pulls) s += p;
    return s;
  }
};

inline int argmax_lowest_index(const Vector& scores) {
  int best = 0;
  for (int i = 1; i < scores.size(); ++i) {
    if (scores[i] > scores[best]) best = i;
  }
  return best;
}

/// Symmetric square root of a covariance via its eigendecomposition.
inline Matrix symmetric_sqrt(const Matrix& cov) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(cov);
  require(es.info() == Eigen::Success && es.eigenvalues().minCoeff() > 0.0,
          "symmetric_sqrt: covariance square-root failure (not PD)");
  return es.eigenvectors() * es.eigenvalues().cwiseSqrt().asDiagonal() *
         es.eigenvectors().transpose();
}

inline Vector sample_gaussian(const GaussianBelief& belief, Rng& rng, double sd_scale = 1.0) {
  const Matrix root = symmetric_sqrt(belief.cov);
  Vector z(belief.dim());
  for (Eigen::Index i = 0; i < z.size(); ++i) z[i] = standard_normal(rng);
  return belief.mean + sd_scale * (root * z);
}

/**
 * Thompson Sampling: draw each arm's parameter from its posterior, score
 * by the sampled expected reward, play the argmax. The sampled parameters
 * are kept on the Decision for diagnostics. `cov_scale`, when non-empty,
 * multiplies each arm's covariance before sampling; the simulator uses it
 * to sample from the drift-propagated time-t prior without touching the
 * stored beliefs.
 */
inline Decision thompson_select(const std::vector<ArmModel>& models, const Vector& x, Rng& rng,
                                const std::vector<double>& cov_scale) {
  require(!models.empty(), "thompson_select: need at least one arm");
  require(cov_scale.empty() || cov_scale.size() == models.size(),
          "thompson_select: cov_scale size mismatch");
  Decision d;
  d.per_arm_scores.resize(static_cast<Eigen::Index>(models.size()));
  std::vector<Vector> draws;
  draws.reserve(models.size());
  for (std::size_t a = 0; a < models.size(); ++a) {
    const double scale = cov_scale.empty() ? 1.0 : cov_scale[a];
    require(scale >= 1.0, "thompson_select: covariance scale must be >= 1");
    Vector beta = sample_gaussian(models[a].belief, rng, std::sqrt(scale));
    d.per_arm_scores[static_cast<Eigen::Index>(a)] = expected_reward(beta, x, models[a].link);
    draws.push_back(std::move(beta));
  }
  d.chosen_arm = argmax_lowest_index(d.per_arm_scores);
  d.sampled_parameters = std::move(draws);
  return d;
}

inline Decision thompson_select(const std::vector<ArmModel>& models, const Vector& x, Rng& rng) {
  return thompson_select(models, x, rng, {});
}

/**
 * Monte-Carlo estimate of each arm's probability of being optimal: the
 * frequency with which it wins across repeated posterior draws. Entries
 * are nonnegative and sum to one by construction.
 */
inline Vector probability_optimal(const std::vector<ArmModel>& models, const Vector& x,
                                  std::int64_t n_samples, Rng& rng) {
  require(!models.empty(), "probability_optimal: need at least one arm");
  require(n_samples >= 1, "probability_optimal: need at least one sample");
  std::vector<std::int64_t> wins(models.size(), 0);
  Vector scores(static_cast<Eigen::Index>(models.size()));
  for (std::int64_t s = 0; s < n_samples; ++s) {
    for (std::size_t a = 0; a < models.size(); ++a) {
      const Vector beta = sample_gaussian(models[a].belief, rng);
      scores[static_cast<Eigen::Index>(a)] = expected_reward(beta, x, models[a].link);
    }
    ++wins[static_cast<std::size_t>(argmax_lowest_index(scores))];
  }
  Vector omega(static_cast<Eigen::Index>(models.size()));
  for (std::size_t a = 0; a < models.size(); ++a) {
    omega[static_cast<Eigen::Index>(a)] =
        static_cast<double>(wins[a]) / static_cast<double>(n_samples);
  }
  return omega;
}

/// Plug-in scores g(x . u_a) for all arms.
inline Vector plugin_scores(const std::vector<ArmModel>& models, const Vector& x) {
  Vector scores(static_cast<Eigen::Index>(models.size()));
  for (std::size_t a = 0; a < models.size(); ++a) {
    scores[static_cast<Eigen::Index>(a)] =
        expected_reward(models[a].belief.mean, x, models[a].link);
  }
  return scores;
}

/// With probability epsilon pick uniformly, otherwise play the plug-in argmax.
inline Decision epsilon_greedy_select(const std::vector<ArmModel>& models, const Vector& x,
                                      double epsilon, Rng& rng) {
  require(!models.empty(), "epsilon_greedy_select: need at least one arm");
  require(epsilon >= 0.0 && epsilon <= 1.0, "epsilon_greedy_select: epsilon must be in [0,1]");
  Decision d;
  d.per_arm_scores = plugin_scores(models, x);
  if (epsilon > 0.0 && uniform01(rng) < epsilon) {
    d.chosen_arm = static_cast<int>(uniform01(rng) * static_cast<double>(models.size()));
    d.chosen_arm = std::min<int>(d.chosen_arm, static_cast<int>(models.size()) - 1);
  } else {
    d.chosen_arm = argmax_lowest_index(d.per_arm_scores);
  }
  return d;
}

/// Adds the c sqrt(2 ln t / n_a) confidence bonus to per-arm base scores;
/// arms never pulled score infinity, so they are taken first in index order.
inline Decision ucb1_from_scores(Vector base_scores, const ArmStats& stats, double c,
                                 std::int64_t t) {
  require(base_scores.size() > 0, "ucb1: need at least one arm");
  require(stats.pulls.size() == static_cast<std::size_t>(base_scores.size()),
          "ucb1: stats size mismatch");
  require(c > 0.0, "ucb1: exploration weight must be > 0");
  require(t >= 1, "ucb1: t must be >= 1");
  Decision d;
  d.per_arm_scores = std::move(base_scores);
  const double log_t = std::log(static_cast<double>(t));
  for (Eigen::Index a = 0; a < d.per_arm_scores.size(); ++a) {
    const auto pulls = stats.pulls[static_cast<std::size_t>(a)];
    if (pulls == 0) {
      d.per_arm_scores[a] = std::numeric_limits<double>::infinity();
    } else {
      d.per_arm_scores[a] += c * std::sqrt(2.0 * log_t / static_cast<double>(pulls));
    }
  }
  d.chosen_arm = argmax_lowest_index(d.per_arm_scores);
  return d;
}

/// UCB1 on the inferred mean reward: plug-in estimate plus the bonus.
inline Decision ucb1_select(const std::vector<ArmModel>& models, const Vector& x,
                            const ArmStats& stats, double c, std::int64_t t) {
  require(!models.empty(), "ucb1_select: need at least one arm");
  return ucb1_from_scores(plugin_scores(models, x), stats, c, t);
}

/// Classical UCB1: empirical mean reward per arm plus the bonus.
inline Decision ucb1_select_empirical(const ArmStats& stats, double c, std::int64_t t) {
  Vector base(static_cast<Eigen::Index>(stats.mean_reward.size()));
  for (std::size_t a = 0; a < stats.mean_reward.size(); ++a) {
    base[static_cast<Eigen::Index>(a)] = stats.mean_reward[a];
  }
  return ucb1_from_scores(std::move(base), stats, c, t);
}

}  // namespace dynbandit
