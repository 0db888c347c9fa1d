#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "dynbandit/decay.hpp"
#include "dynbandit/policies.hpp"
#include "dynbandit/simulator.hpp"

namespace dynbandit {

using Json = nlohmann::ordered_json;

/// 17 significant digits: enough for exact double round-trips in the CSVs.
inline std::string format_g17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return std::string(buf);
}

inline void write_text_file(const std::filesystem::path& path, const std::string& content) {
  std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for writing: " + path.string());
  out << content;
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

// --- DriftSchedule <-> JSON ------------------------------------------------

inline const char* family_name(DriftSchedule::Family f) {
  switch (f) {
    case DriftSchedule::Family::Static: return "static";
    case DriftSchedule::Family::Constant: return "constant";
    case DriftSchedule::Family::Power: return "power";
    case DriftSchedule::Family::Exponential: return "exponential";
  }
  return "?";
}

inline Json schedule_to_json(const DriftSchedule& s) {
  Json j;
  j["family"] = family_name(s.family());
  switch (s.family()) {
    case DriftSchedule::Family::Static:
      break;
    case DriftSchedule::Family::Constant:
      j["eta"] = s.eta();
      break;
    case DriftSchedule::Family::Power:
      j["eta"] = s.eta();
      j["p"] = s.p();
      break;
    case DriftSchedule::Family::Exponential:
      j["eta"] = s.eta();
      j["gamma"] = s.gamma();
      break;
  }
  return j;
}

inline DriftSchedule schedule_from_json(const Json& j) {
  const std::string family = j.at("family").get<std::string>();
  if (family == "static") return DriftSchedule::statical();
  if (family == "constant") return DriftSchedule::constant(j.at("eta").get<double>());
  if (family == "power") {
    return DriftSchedule::power(j.at("eta").get<double>(), j.at("p").get<double>());
  }
  if (family == "exponential") {
    return DriftSchedule::exponential(j.at("eta").get<double>(), j.at("gamma").get<double>());
  }
  throw std::invalid_argument("unknown drift family: " + family);
}

// --- PolicyConfig <-> JSON -------------------------------------------------

inline Json policy_to_json(const PolicyConfig& p) {
  Json j;
  j["kind"] = to_string(p.kind);
  j["epsilon"] = p.epsilon;
  j["ucb_weight"] = p.ucb_weight;
  j["ucb_score"] = p.ucb_score == PolicyConfig::UcbScore::PluginMean ? "plugin" : "empirical";
  return j;
}

inline PolicyConfig::Kind policy_kind_from_string(const std::string& kind) {
  if (kind == "thompson") return PolicyConfig::Kind::Thompson;
  if (kind == "epsilon_greedy") return PolicyConfig::Kind::EpsilonGreedy;
  if (kind == "ucb1") return PolicyConfig::Kind::Ucb1;
  throw std::invalid_argument("unknown policy kind: " + kind);
}

inline PolicyConfig policy_from_json(const Json& j) {
  PolicyConfig p;
  if (j.contains("kind")) p.kind = policy_kind_from_string(j.at("kind").get<std::string>());
  if (j.contains("epsilon")) p.epsilon = j.at("epsilon").get<double>();
  if (j.contains("ucb_weight")) p.ucb_weight = j.at("ucb_weight").get<double>();
  if (j.contains("ucb_score")) {
    const std::string s = j.at("ucb_score").get<std::string>();
    if (s == "empirical") {
      p.ucb_score = PolicyConfig::UcbScore::EmpiricalMean;
    } else if (s == "plugin") {
      p.ucb_score = PolicyConfig::UcbScore::PluginMean;
    } else {
      throw std::invalid_argument("unknown ucb_score: " + s);
    }
  }
  p.validate();
  return p;
}

// --- EnvironmentSpec <-> JSON ----------------------------------------------

inline Json environment_to_json(const EnvironmentSpec& e) {
  Json j;
  j["n_arms"] = e.n_arms;
  j["dim"] = e.dim;
  j["horizon"] = e.horizon;
  j["drift"] = schedule_to_json(e.generation_drift);
  j["sigma0_scale"] = e.sigma0_scale;
  j["beta0_scale"] = e.beta0_scale;
  j["feature_low"] = e.feature_low;
  j["feature_high"] = e.feature_high;
  j["seed"] = e.seed;
  return j;
}

inline EnvironmentSpec environment_from_json(const Json& j) {
  EnvironmentSpec e;
  if (j.contains("n_arms")) e.n_arms = j.at("n_arms").get<int>();
  if (j.contains("dim")) e.dim = j.at("dim").get<int>();
  if (j.contains("horizon")) e.horizon = j.at("horizon").get<std::int64_t>();
  if (j.contains("drift")) e.generation_drift = schedule_from_json(j.at("drift"));
  if (j.contains("sigma0_scale")) e.sigma0_scale = j.at("sigma0_scale").get<double>();
  if (j.contains("beta0_scale")) e.beta0_scale = j.at("beta0_scale").get<double>();
  if (j.contains("feature_low")) e.feature_low = j.at("feature_low").get<double>();
  if (j.contains("feature_high")) e.feature_high = j.at("feature_high").get<double>();
  if (j.contains("seed")) e.seed = j.at("seed").get<std::uint64_t>();
  e.validate();
  return e;
}

// --- Experiment configuration ----------------------------------------------

inline std::vector<double> default_grid_etas() {
  return {0.001, 0.003, 0.01, 0.03, 0.1, 0.3, 1.0};
}

inline std::vector<double> default_grid_ps() { return {1.0, 2.0}; }

/// Grid of power-family schedules: etas x ps.
struct GridSpec {
  std::vector<double> etas = default_grid_etas();
  std::vector<double> ps = default_grid_ps();

  std::vector<DriftSchedule> schedules() const {
    std::vector<DriftSchedule> out;
    out.reserve(etas.size() * ps.size());
    for (double p : ps) {
      for (double eta : etas) out.push_back(DriftSchedule::power(eta, p));
    }
    return out;
  }
};

struct ExperimentConfig {
  EnvironmentSpec environment;
  PolicyConfig policy;
  DriftSchedule inference_drift = DriftSchedule::power(0.01, 1.0);
  RunOptions options;
  int n_seeds = 20;
  int n_datasets = 6;  // model selection
  int n_train = 5;
  GridSpec grid;

  void validate() const {
    environment.validate();
    policy.validate();
    require(n_seeds >= 1, "ExperimentConfig: n_seeds must be >= 1");
  }
};

inline Json config_to_json(const ExperimentConfig& c) {
  Json j;
  j["environment"] = environment_to_json(c.environment);
  j["policy"] = policy_to_json(c.policy);
  j["inference_drift"] = schedule_to_json(c.inference_drift);
  Json inf;
  inf["prior_scale"] = c.options.prior_scale;
  inf["newton_iterations"] = c.options.newton_iterations;
  inf["sampled_metrics"] = c.options.sampled_metrics;
  inf["drift_timing"] =
      c.options.drift_timing == RunOptions::DriftTiming::GlobalGap ? "global_gap" : "per_update";
  j["inference"] = inf;
  j["n_seeds"] = c.n_seeds;
  Json ms;
  ms["n_datasets"] = c.n_datasets;
  ms["n_train"] = c.n_train;
  ms["etas"] = c.grid.etas;
  ms["ps"] = c.grid.ps;
  j["model_selection"] = ms;
  return j;
}

inline ExperimentConfig config_from_json(const Json& j) {
  ExperimentConfig c;
  if (j.contains("environment")) c.environment = environment_from_json(j.at("environment"));
  if (j.contains("policy")) c.policy = policy_from_json(j.at("policy"));
  if (j.contains("inference_drift")) c.inference_drift = schedule_from_json(j.at("inference_drift"));
  if (j.contains("inference")) {
    const Json& inf = j.at("inference");
    if (inf.contains("prior_scale")) c.options.prior_scale = inf.at("prior_scale").get<double>();
    if (inf.contains("newton_iterations")) {
      c.options.newton_iterations = inf.at("newton_iterations").get<int>();
    }
    if (inf.contains("sampled_metrics")) {
      c.options.sampled_metrics = inf.at("sampled_metrics").get<bool>();
    }
    if (inf.contains("drift_timing")) {
      const std::string mode = inf.at("drift_timing").get<std::string>();
      if (mode == "global_gap") {
        c.options.drift_timing = RunOptions::DriftTiming::GlobalGap;
      } else if (mode == "per_update") {
        c.options.drift_timing = RunOptions::DriftTiming::PerUpdate;
      } else {
        throw std::invalid_argument("unknown drift_timing: " + mode);
      }
    }
  }
  if (j.contains("n_seeds")) c.n_seeds = j.at("n_seeds").get<int>();
  if (j.contains("model_selection")) {
    const Json& ms = j.at("model_selection");
    if (ms.contains("n_datasets")) c.n_datasets = ms.at("n_datasets").get<int>();
    if (ms.contains("n_train")) c.n_train = ms.at("n_train").get<int>();
    if (ms.contains("etas")) c.grid.etas = ms.at("etas").get<std::vector<double>>();
    if (ms.contains("ps")) c.grid.ps = ms.at("ps").get<std::vector<double>>();
  }
  c.validate();
  return c;
}

inline ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config: " + path.string());
  Json j = Json::parse(in);
  return config_from_json(j);
}

// --- CSV emission ------------------------------------------------------------

/// Per-step experiment CSV, schema: t,arm,theta_hat,theta_star,reward_ratio,avg_regret
inline std::string steps_csv(const ExperimentRecord& record) {
  std::string out = "t,arm,theta_hat,theta_star,reward_ratio,avg_regret\n";
  for (const auto& s : record.steps) {
    out += std::to_string(s.t);
    out += ',';
    out += std::to_string(s.arm);
    out += ',';
    out += format_g17(s.theta_hat);
    out += ',';
    out += format_g17(s.theta_star);
    out += ',';
    out += format_g17(s.reward_ratio);
    out += ',';
    out += format_g17(s.avg_regret);
    out += '\n';
  }
  return out;
}

/// Aggregated per-step curve, plot-ready.
inline std::string aggregate_csv(const AggregateSummary& agg) {
  std::string out = "t,mean_reward_ratio,se_reward_ratio,mean_avg_regret,se_avg_regret\n";
  for (std::int64_t t = 0; t < agg.horizon; ++t) {
    const auto i = static_cast<std::size_t>(t);
    out += std::to_string(t + 1);
    out += ',';
    out += format_g17(agg.mean_reward_ratio[i]);
    out += ',';
    out += format_g17(agg.se_reward_ratio[i]);
    out += ',';
    out += format_g17(agg.mean_avg_regret[i]);
    out += ',';
    out += format_g17(agg.se_avg_regret[i]);
    out += '\n';
  }
  return out;
}

inline Json summary_stat_to_json(const SummaryStat& s) {
  Json j;
  j["mean"] = s.mean;
  j["stderr"] = s.stderr_mean;
  j["per_seed"] = s.per_seed;
  return j;
}

}  // namespace dynbandit
