#pragma once

#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include "dynbandit/core_model.hpp"
#include "dynbandit/decay.hpp"
#include "dynbandit/inference.hpp"
#include "dynbandit/parallel.hpp"
#include "dynbandit/policies.hpp"
#include "dynbandit/rng.hpp"

namespace dynbandit {

// Substream tags under one environment seed.
inline constexpr std::uint64_t kFeatureStream = 0;
inline constexpr std::uint64_t kTrajectoryStream = 1;
inline constexpr std::uint64_t kRewardStream = 2;

/// Ground-truth generator settings; defaults match the simulation study
/// scale (10 arms, 10 features, horizon 5000, Sigma_0 = 0.001 I).
struct EnvironmentSpec {
  int n_arms = 10;
  int dim = 10;
  std::int64_t horizon = 5000;
  DriftSchedule generation_drift = DriftSchedule::power(0.1, 2.0);
  double sigma0_scale = 0.001;  // walk covariance start, Sigma_0 = sigma0_scale I
  double beta0_scale = 1.0;     // arm heterogeneity, beta_{0,a} ~ N(0, beta0_scale I)
  double feature_low = -1.0;
  double feature_high = 0.5;
  std::uint64_t seed = 1;

  void validate() const {
    require(n_arms >= 1, "EnvironmentSpec: need at least one arm");
    require(dim >= 1, "EnvironmentSpec: dimension must be >= 1");
    require(horizon >= 1, "EnvironmentSpec: horizon must be >= 1");
    require(sigma0_scale > 0.0, "EnvironmentSpec: sigma0_scale must be > 0");
    require(beta0_scale >= 0.0, "EnvironmentSpec: beta0_scale must be >= 0");
    require(feature_low < feature_high, "EnvironmentSpec: feature_low must be < feature_high");
  }
};

/**
 * One sampled environment: contexts, per-arm parameter trajectories, true
 * expected rewards, and the pre-drawn binary rewards for every (step, arm).
 * Everything is a pure function of the spec's seed.
 */
struct GeneratedDataset {
  EnvironmentSpec spec;
  std::vector<Vector> contexts;             // [T], each dim d
  std::vector<std::vector<Vector>> beta;    // [T][A] true parameters
  Matrix theta;                             // T x A true expected rewards
  Eigen::Matrix<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic> rewards;  // T x A draws
  std::vector<double> gen_cov_scale;        // s_0..s_T with Sigma_t = s_t I

  std::int64_t horizon() const { return spec.horizon; }
  int n_arms() const { return spec.n_arms; }
  int dim() const { return spec.dim; }
};

/**
 * Samples an environment: x_t uniform on [low, high]^d, per-arm random-walk
 * parameters with Q_t = delta_t Sigma_{t-1} and Sigma_t = (1 + delta_t)
 * Sigma_{t-1} from Sigma_0 = sigma0_scale I, rewards Bernoulli(g(x.beta)).
 * Binary draws take one counter-based substream per (arm, step) so they are
 * independent of traversal order.
 */
inline GeneratedDataset generate(const EnvironmentSpec& spec) {
  spec.validate();
  const auto T = spec.horizon;
  const int A = spec.n_arms;
  const int d = spec.dim;
  const LogisticLink link{};

  GeneratedDataset ds;
  ds.spec = spec;
  ds.contexts.reserve(static_cast<std::size_t>(T));
  ds.beta.assign(static_cast<std::size_t>(T), std::vector<Vector>());
  ds.theta.resize(T, A);
  ds.rewards.resize(T, A);
  ds.gen_cov_scale.reserve(static_cast<std::size_t>(T) + 1);

  Rng feature_rng = make_rng(split_seed(spec.seed, kFeatureStream, 0));
  std::vector<Rng> arm_rng;
  arm_rng.reserve(static_cast<std::size_t>(A));
  for (int a = 0; a < A; ++a) {
    arm_rng.push_back(make_rng(split_seed(spec.seed, kTrajectoryStream, static_cast<std::uint64_t>(a))));
  }
  const std::uint64_t reward_seed = split_seed(spec.seed, kRewardStream, 0);

  // beta_{0,a} ~ N(0, beta0_scale I)
  std::vector<Vector> current(static_cast<std::size_t>(A));
  for (int a = 0; a < A; ++a) {
    Vector b(d);
    for (int i = 0; i < d; ++i) {
      b[i] = std::sqrt(spec.beta0_scale) * standard_normal(arm_rng[static_cast<std::size_t>(a)]);
    }
    current[static_cast<std::size_t>(a)] = std::move(b);
  }

  double scale = spec.sigma0_scale;
  ds.gen_cov_scale.push_back(scale);
  for (std::int64_t t = 1; t <= T; ++t) {
    Vector x(d);
    for (int i = 0; i < d; ++i) x[i] = uniform(feature_rng, spec.feature_low, spec.feature_high);

    const double delta = spec.generation_drift.q_at(t);
    const double noise_sd = std::sqrt(delta * scale);
    const auto row = static_cast<Eigen::Index>(t - 1);
    ds.beta[static_cast<std::size_t>(t - 1)].resize(static_cast<std::size_t>(A));
    for (int a = 0; a < A; ++a) {
      auto& b = current[static_cast<std::size_t>(a)];
      if (noise_sd > 0.0) {
        for (int i = 0; i < d; ++i) b[i] += noise_sd * standard_normal(arm_rng[static_cast<std::size_t>(a)]);
      }
      const double th = link(x.dot(b));
      ds.theta(row, a) = th;
      ds.rewards(row, a) =
          uniform01_at(reward_seed, static_cast<std::uint64_t>(a), static_cast<std::uint64_t>(t)) < th
              ? 1
              : 0;
      ds.beta[static_cast<std::size_t>(t - 1)][static_cast<std::size_t>(a)] = b;
    }
    scale *= 1.0 + delta;
    ds.gen_cov_scale.push_back(scale);
    ds.contexts.push_back(std::move(x));
  }
  return ds;
}

/// Reward-ratio / average-regret bookkeeping over one run. Both metrics are
/// read off the same two accumulators.
class MetricsAccumulator {
 public:
  void add(double theta_hat, double theta_star) {
    sum_hat_ += theta_hat;
    sum_star_ += theta_star;
    ++count_;
  }

  double reward_ratio() const {
    require(count_ > 0, "MetricsAccumulator: no observations");
    return sum_hat_ / sum_star_;
  }

  double average_regret() const {
    require(count_ > 0, "MetricsAccumulator: no observations");
    return (sum_star_ - sum_hat_) / static_cast<double>(count_);
  }

  std::int64_t count() const { return count_; }
  double sum_estimated() const { return sum_hat_; }
  double sum_oracle() const { return sum_star_; }

 private:
  double sum_hat_ = 0.0;
  double sum_star_ = 0.0;
  std::int64_t count_ = 0;
};

struct StepRecord {
  std::int64_t t;
  int arm;
  double theta_hat;
  double theta_star;
  double reward_ratio;
  double avg_regret;
};

struct ExperimentRecord {
  std::vector<StepRecord> steps;
  double final_reward_ratio = 0.0;
  double final_avg_regret = 0.0;
  // Present when RunOptions::sampled_metrics is on: the unreduced ratio of
  // sampled click signals instead of expected rewards.
  std::optional<double> sampled_reward_ratio;

  std::int64_t horizon() const { return static_cast<std::int64_t>(steps.size()); }
};

struct RunOptions {
  /// How the inference drift schedule advances for an arm:
  ///   PerUpdate  one q step per update, indexed by the arm's own count
  ///   GlobalGap  q indexed by global time; an arm's belief picks up the
  ///              accumulated prod(1+q_tau) over its staleness window,
  ///              applied lazily so unchosen arms' stored beliefs never
  ///              change
  enum class DriftTiming { PerUpdate, GlobalGap };

  double prior_scale = 1.0;   // inference prior Sigma_0 = prior_scale * I
  int newton_iterations = 1;
  bool sampled_metrics = false;
  DriftTiming drift_timing = DriftTiming::GlobalGap;
};

inline std::vector<ArmModel> make_arm_models(int n_arms, int dim,
                                             const DriftSchedule& inference_drift,
                                             const RunOptions& options = {}) {
  require(options.prior_scale > 0.0, "make_arm_models: prior scale must be > 0");
  std::vector<ArmModel> models;
  models.reserve(static_cast<std::size_t>(n_arms));
  for (int a = 0; a < n_arms; ++a) {
    models.push_back(ArmModel{GaussianBelief(Vector::Zero(dim),
                                             options.prior_scale * Matrix::Identity(dim, dim)),
                              LogisticLink{}, inference_drift, 0, options.newton_iterations});
  }
  return models;
}

/**
 * Closed-loop bandit run over a generated dataset. Per step: score arms
 * under the policy, play one, log the chosen arm's plug-in estimate against
 * the hindsight-oracle reward, then update only the played arm's posterior
 * with its revealed binary reward.
 */
inline ExperimentRecord run_experiment(const GeneratedDataset& dataset,
                                       const PolicyConfig& policy,
                                       const DriftSchedule& inference_drift, std::uint64_t seed,
                                       const RunOptions& options = {}) {
  policy.validate();
  const auto T = dataset.horizon();
  const int A = dataset.n_arms();
  require(A >= 1 && T >= 1, "run_experiment: empty dataset");

  std::vector<ArmModel> models = make_arm_models(A, dataset.dim(), inference_drift, options);
  ArmStats stats(static_cast<std::size_t>(A));
  Rng policy_rng = make_rng(split_seed(seed, 0, 0));
  Rng sampled_rng = make_rng(split_seed(seed, 1, 0));

  const bool gap_mode = options.drift_timing == RunOptions::DriftTiming::GlobalGap;
  // prefix sums of log(1+q_tau) over global time, for the staleness factors
  std::vector<double> log_growth;
  std::vector<std::int64_t> last_update;
  if (gap_mode) {
    log_growth.resize(static_cast<std::size_t>(T) + 1, 0.0);
    for (std::int64_t t = 1; t <= T; ++t) {
      log_growth[static_cast<std::size_t>(t)] =
          log_growth[static_cast<std::size_t>(t - 1)] + inference_drift.log_one_plus_q(t);
    }
    last_update.assign(static_cast<std::size_t>(A), 0);
  }
  auto staleness_factor = [&](int arm, std::int64_t t) {
    return std::exp(log_growth[static_cast<std::size_t>(t)] -
                    log_growth[static_cast<std::size_t>(last_update[static_cast<std::size_t>(arm)])]);
  };

  MetricsAccumulator metrics;
  double sum_sampled_hat = 0.0;
  double sum_sampled_star = 0.0;
  ExperimentRecord record;
  record.steps.reserve(static_cast<std::size_t>(T));

  for (std::int64_t t = 1; t <= T; ++t) {
    const Vector& x = dataset.contexts[static_cast<std::size_t>(t - 1)];
    Decision decision;
    switch (policy.kind) {
      case PolicyConfig::Kind::Thompson:
        if (gap_mode) {
          std::vector<double> scale(static_cast<std::size_t>(A));
          for (int a = 0; a < A; ++a) scale[static_cast<std::size_t>(a)] = staleness_factor(a, t);
          decision = thompson_select(models, x, policy_rng, scale);
        } else {
          decision = thompson_select(models, x, policy_rng);
        }
        break;
      case PolicyConfig::Kind::EpsilonGreedy:
        decision = epsilon_greedy_select(models, x, policy.epsilon, policy_rng);
        break;
      case PolicyConfig::Kind::Ucb1:
        decision = policy.ucb_score == PolicyConfig::UcbScore::EmpiricalMean
                       ? ucb1_select_empirical(stats, policy.ucb_weight, t)
                       : ucb1_select(models, x, stats, policy.ucb_weight, t);
        break;
    }
    const int a = decision.chosen_arm;
    auto& chosen = models[static_cast<std::size_t>(a)];
    const auto row = static_cast<Eigen::Index>(t - 1);
    const double theta_hat = expected_reward(chosen.belief.mean, x, chosen.link);
    const double theta_star = dataset.theta.row(row).maxCoeff();
    metrics.add(theta_hat, theta_star);

    if (options.sampled_metrics) {
      sum_sampled_hat += uniform01(sampled_rng) < theta_hat ? 1.0 : 0.0;
      sum_sampled_star += uniform01(sampled_rng) < theta_star ? 1.0 : 0.0;
    }

    const int y = dataset.rewards(row, a);
    if (gap_mode) {
      // propagate over the arm's whole staleness window, then condition
      const double factor = staleness_factor(a, t);
      const Matrix q_gap = (factor - 1.0) * chosen.belief.cov;
      const PriorSnapshot prior = propagate_prior(chosen.belief, q_gap);
      GaussianBelief posterior =
          laplace_update(prior, x, y, chosen.link, chosen.newton_iterations);
      chosen = ArmModel{std::move(posterior), chosen.link, chosen.drift,
                        chosen.step_index + 1, chosen.newton_iterations};
      last_update[static_cast<std::size_t>(a)] = t;
    } else {
      chosen = step(chosen, x, y);
    }
    stats.record(a, static_cast<double>(y));

    record.steps.push_back(StepRecord{t, a, theta_hat, theta_star, metrics.reward_ratio(),
                                      metrics.average_regret()});
  }
  record.final_reward_ratio = metrics.reward_ratio();
  record.final_avg_regret = metrics.average_regret();
  if (options.sampled_metrics) {
    record.sampled_reward_ratio =
        sum_sampled_star > 0.0 ? sum_sampled_hat / sum_sampled_star : 1.0;
  }
  return record;
}

/// Hindsight oracle: plays argmax of the true expected rewards and logs the
/// true reward as its estimate; yields Reward(T) = 1 and Regret(T) = 0.
inline ExperimentRecord run_oracle(const GeneratedDataset& dataset) {
  MetricsAccumulator metrics;
  ExperimentRecord record;
  record.steps.reserve(static_cast<std::size_t>(dataset.horizon()));
  for (std::int64_t t = 1; t <= dataset.horizon(); ++t) {
    const auto row = static_cast<Eigen::Index>(t - 1);
    Eigen::Index best = 0;
    dataset.theta.row(row).maxCoeff(&best);
    const double theta_star = dataset.theta(row, best);
    metrics.add(theta_star, theta_star);
    record.steps.push_back(StepRecord{t, static_cast<int>(best), theta_star, theta_star,
                                      metrics.reward_ratio(), metrics.average_regret()});
  }
  record.final_reward_ratio = metrics.reward_ratio();
  record.final_avg_regret = metrics.average_regret();
  return record;
}

struct SummaryStat {
  double mean = 0.0;
  double stderr_mean = 0.0;
  std::vector<double> per_seed;
};

inline SummaryStat summarize(std::vector<double> values) {
  require(!values.empty(), "summarize: empty sample");
  SummaryStat s;
  double sum = 0.0;
  for (double v : values) sum += v;
  s.mean = sum / static_cast<double>(values.size());
  if (values.size() > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - s.mean) * (v - s.mean);
    const double var = ss / static_cast<double>(values.size() - 1);
    s.stderr_mean = std::sqrt(var / static_cast<double>(values.size()));
  }
  s.per_seed = std::move(values);
  return s;
}

/// Across-seed aggregation: per-step mean and standard error of both
/// metrics, plus final-horizon summaries.
struct AggregateSummary {
  std::int64_t horizon = 0;
  std::vector<double> mean_reward_ratio;  // per step
  std::vector<double> se_reward_ratio;
  std::vector<double> mean_avg_regret;
  std::vector<double> se_avg_regret;
  SummaryStat final_reward;
  SummaryStat final_regret;
};

inline AggregateSummary aggregate(const std::vector<ExperimentRecord>& records) {
  require(!records.empty(), "aggregate: no records");
  const std::int64_t T = records.front().horizon();
  for (const auto& r : records) require(r.horizon() == T, "aggregate: horizons differ");

  AggregateSummary out;
  out.horizon = T;
  out.mean_reward_ratio.resize(static_cast<std::size_t>(T));
  out.se_reward_ratio.resize(static_cast<std::size_t>(T));
  out.mean_avg_regret.resize(static_cast<std::size_t>(T));
  out.se_avg_regret.resize(static_cast<std::size_t>(T));

  const double n = static_cast<double>(records.size());
  for (std::int64_t t = 0; t < T; ++t) {
    double mr = 0.0, mg = 0.0;
    for (const auto& r : records) {
      mr += r.steps[static_cast<std::size_t>(t)].reward_ratio;
      mg += r.steps[static_cast<std::size_t>(t)].avg_regret;
    }
    mr /= n;
    mg /= n;
    double vr = 0.0, vg = 0.0;
    if (records.size() > 1) {
      for (const auto& r : records) {
        const auto& s = r.steps[static_cast<std::size_t>(t)];
        vr += (s.reward_ratio - mr) * (s.reward_ratio - mr);
        vg += (s.avg_regret - mg) * (s.avg_regret - mg);
      }
      vr /= n - 1.0;
      vg /= n - 1.0;
    }
    out.mean_reward_ratio[static_cast<std::size_t>(t)] = mr;
    out.mean_avg_regret[static_cast<std::size_t>(t)] = mg;
    out.se_reward_ratio[static_cast<std::size_t>(t)] = std::sqrt(vr / n);
    out.se_avg_regret[static_cast<std::size_t>(t)] = std::sqrt(vg / n);
  }

  std::vector<double> finals_r, finals_g;
  finals_r.reserve(records.size());
  finals_g.reserve(records.size());
  for (const auto& r : records) {
    finals_r.push_back(r.final_reward_ratio);
    finals_g.push_back(r.final_avg_regret);
  }
  out.final_reward = summarize(std::move(finals_r));
  out.final_regret = summarize(std::move(finals_g));
  return out;
}

/// Model-selection protocol: several datasets from one spec, grid search on
/// the training ones, held-out evaluation on the last.
struct ModelSelectionPlan {
  int n_datasets = 6;
  int n_train = 5;
  std::vector<DriftSchedule> grid;

  void validate() const {
    require(n_train >= 1, "ModelSelectionPlan: need at least one training set");
    require(n_train < n_datasets, "ModelSelectionPlan: need a held-out dataset");
    require(!grid.empty(), "ModelSelectionPlan: empty grid");
  }
};

struct GridPointResult {
  DriftSchedule schedule;
  double avg_train_reward = 0.0;
  double heldout_reward = 0.0;
};

struct ModelSelectionResult {
  std::vector<GridPointResult> table;
  std::size_t selected_index = 0;

  const DriftSchedule& selected() const { return table[selected_index].schedule; }
};

/**
 * Generates plan.n_datasets environments from the spec (seeds split off
 * spec.seed), averages each grid point's final reward over the first
 * n_train, and picks the argmax. Every grid point is also evaluated on the
 * held-out (last) dataset so selection quality is visible.
 */
inline ModelSelectionResult model_select(const ModelSelectionPlan& plan,
                                         const EnvironmentSpec& spec, const PolicyConfig& policy,
                                         int threads = 1) {
  plan.validate();
  spec.validate();
  policy.validate();

  std::vector<GeneratedDataset> datasets(static_cast<std::size_t>(plan.n_datasets));
  parallel_for_index(static_cast<std::size_t>(plan.n_datasets), threads, [&](std::size_t i) {
    EnvironmentSpec s = spec;
    s.seed = split_seed(spec.seed, 10, static_cast<std::uint64_t>(i));
    datasets[i] = generate(s);
  });

  const std::size_t G = plan.grid.size();
  const std::size_t runs_per_grid = static_cast<std::size_t>(plan.n_train) + 1;
  // results[g * runs_per_grid + k]: k < n_train are training runs, last is held-out.
  std::vector<double> finals(G * runs_per_grid, 0.0);
  const std::size_t heldout = static_cast<std::size_t>(plan.n_datasets) - 1;

  parallel_for_index(G * runs_per_grid, threads, [&](std::size_t j) {
    const std::size_t g = j / runs_per_grid;
    const std::size_t k = j % runs_per_grid;
    const std::size_t ds = (k < static_cast<std::size_t>(plan.n_train)) ? k : heldout;
    const std::uint64_t run_seed = split_seed(spec.seed, 20 + g, ds);
    finals[j] =
        run_experiment(datasets[ds], policy, plan.grid[g], run_seed).final_reward_ratio;
  });

  ModelSelectionResult out;
  out.table.reserve(G);
  for (std::size_t g = 0; g < G; ++g) {
    GridPointResult r{plan.grid[g], 0.0, finals[g * runs_per_grid + runs_per_grid - 1]};
    for (std::size_t k = 0; k < static_cast<std::size_t>(plan.n_train); ++k) {
      r.avg_train_reward += finals[g * runs_per_grid + k];
    }
    r.avg_train_reward /= static_cast<double>(plan.n_train);
    out.table.push_back(r);
  }
  for (std::size_t g = 1; g < G; ++g) {
    if (out.table[g].avg_train_reward > out.table[out.selected_index].avg_train_reward) {
      out.selected_index = g;
    }
  }
  return out;
}

}  // namespace dynbandit
