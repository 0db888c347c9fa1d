#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "dynbandit/io.hpp"

namespace dynbandit {

/// Flags shared by all subcommands; every cmd below throws on invalid input
/// or failed writes, and the binary maps exceptions onto a nonzero exit.
struct CliCommon {
  std::filesystem::path out_dir = ".";
  std::optional<std::uint64_t> seed;
  std::optional<int> seeds;
  int threads = 1;
};

/// Log-spaced integer horizons in [1, t_max], deduplicated, endpoints kept.
inline std::vector<std::int64_t> log_spaced_horizons(std::int64_t t_max, int points) {
  require(t_max >= 1, "log_spaced_horizons: t_max must be >= 1");
  require(points >= 1, "log_spaced_horizons: points must be >= 1");
  std::vector<std::int64_t> out;
  if (t_max == 1 || points == 1) {
    out.push_back(t_max);
    return out;
  }
  const double span = std::log10(static_cast<double>(t_max));
  for (int k = 0; k < points; ++k) {
    const double e = span * static_cast<double>(k) / static_cast<double>(points - 1);
    auto v = static_cast<std::int64_t>(std::llround(std::pow(10.0, e)));
    v = std::clamp<std::int64_t>(v, 1, t_max);
    if (out.empty() || v > out.back()) out.push_back(v);
  }
  if (out.back() != t_max) out.push_back(t_max);
  return out;
}

inline Json rate_to_json(const RateClass& rate) {
  Json j;
  j["tag"] = to_string(rate.tag());
  j["descriptor"] = rate.descriptor();
  if (rate.lower_bound()) {
    j["lower_bound"] = *rate.lower_bound();
  } else {
    j["lower_bound"] = nullptr;
  }
  return j;
}

/**
 * Decay table for one schedule: a JSON header line describing the rate
 * class, then CSV columns T,lambda,asymptote,ratio,lower_bound at
 * log-spaced horizons. Lambda is the exact log-domain product; asymptote
 * and ratio start at T = 2.
 */
inline std::filesystem::path cmd_decay(const DriftSchedule& schedule, std::int64_t t_max,
                                       int points, const CliCommon& common,
                                       const std::string& filename = "decay.csv") {
  const RateClass rate = classify_rate(schedule);  // throws for static schedules

  Json header;
  header["schedule"] = schedule_to_json(schedule);
  header["rate"] = rate_to_json(rate);

  std::string out = header.dump();
  out += "\nT,lambda,asymptote,ratio,lower_bound\n";

  const std::string bound_cell = rate.lower_bound() ? format_g17(*rate.lower_bound()) : "";
  CumulativeDiscount cumulative(schedule);
  for (std::int64_t T : log_spaced_horizons(t_max, points)) {
    cumulative.advance_to(T);
    const double log_lambda = cumulative.log_value();
    out += std::to_string(T);
    out += ',';
    out += format_g17(std::exp(log_lambda));
    out += ',';
    if (T >= 2) {
      const double log_asym = rate.log_asymptote(T);
      out += format_g17(std::exp(log_asym));
      out += ',';
      out += format_g17(std::exp(log_lambda - log_asym));
    } else {
      out += ',';
    }
    out += ',';
    out += bound_cell;
    out += '\n';
  }
  const auto path = common.out_dir / filename;
  write_text_file(path, out);
  return path;
}

inline ExperimentConfig apply_overrides(ExperimentConfig config, const CliCommon& common) {
  if (common.seed) config.environment.seed = *common.seed;
  if (common.seeds) config.n_seeds = *common.seeds;
  config.validate();
  return config;
}

struct ReplicateSeeds {
  std::vector<std::uint64_t> environment;
  std::vector<std::uint64_t> policy;
};

inline ReplicateSeeds replicate_seeds(std::uint64_t master, int n) {
  ReplicateSeeds s;
  for (int i = 0; i < n; ++i) {
    s.environment.push_back(split_seed(master, 100, static_cast<std::uint64_t>(i)));
    s.policy.push_back(split_seed(master, 200, static_cast<std::uint64_t>(i)));
  }
  return s;
}

/// n_seeds replicate runs of one policy configuration.
inline std::vector<ExperimentRecord> run_replicates(const ExperimentConfig& config,
                                                    const PolicyConfig& policy,
                                                    const DriftSchedule& inference_drift,
                                                    int threads) {
  const ReplicateSeeds seeds = replicate_seeds(config.environment.seed, config.n_seeds);
  std::vector<ExperimentRecord> records(static_cast<std::size_t>(config.n_seeds));
  parallel_for_index(static_cast<std::size_t>(config.n_seeds), threads, [&](std::size_t i) {
    EnvironmentSpec spec = config.environment;
    spec.seed = seeds.environment[i];
    const GeneratedDataset dataset = generate(spec);
    records[i] =
        run_experiment(dataset, policy, inference_drift, seeds.policy[i], config.options);
  });
  return records;
}

inline Json results_entry(const AggregateSummary& agg,
                          const std::vector<ExperimentRecord>& records) {
  Json r;
  r["horizon"] = agg.horizon;
  r["final_reward_ratio"] = summary_stat_to_json(agg.final_reward);
  r["final_avg_regret"] = summary_stat_to_json(agg.final_regret);
  if (!records.empty() && records.front().sampled_reward_ratio) {
    std::vector<double> sampled;
    for (const auto& rec : records) sampled.push_back(*rec.sampled_reward_ratio);
    r["sampled_reward_ratio"] = sampled;
  }
  return r;
}

/**
 * `run`: n_seeds replicates of the configured policy; per-seed step CSVs
 * plus one summary JSON echoing the full effective config and all seeds.
 */
inline void cmd_run(const ExperimentConfig& raw_config, const CliCommon& common) {
  const ExperimentConfig config = apply_overrides(raw_config, common);
  const auto records =
      run_replicates(config, config.policy, config.inference_drift, common.threads);

  char name[32];
  for (std::size_t i = 0; i < records.size(); ++i) {
    std::snprintf(name, sizeof(name), "steps_seed%03zu.csv", i);
    write_text_file(common.out_dir / name, steps_csv(records[i]));
  }

  const AggregateSummary agg = aggregate(records);
  const ReplicateSeeds seeds = replicate_seeds(config.environment.seed, config.n_seeds);
  Json summary;
  summary["command"] = "run";
  summary["config"] = config_to_json(config);
  Json seeds_json;
  seeds_json["master"] = config.environment.seed;
  seeds_json["environment"] = seeds.environment;
  seeds_json["policy"] = seeds.policy;
  summary["seeds"] = seeds_json;
  summary["results"][to_string(config.policy.kind)] = results_entry(agg, records);
  write_text_file(common.out_dir / "summary.json", summary.dump(2) + "\n");
}

inline Json grid_point_to_json(const GridPointResult& r, bool selected) {
  Json j;
  j["schedule"] = schedule_to_json(r.schedule);
  j["avg_train_reward"] = r.avg_train_reward;
  j["heldout_reward"] = r.heldout_reward;
  j["selected"] = selected;
  return j;
}

/**
 * `model-select`: grid search over inference drift schedules; one CSV row
 * per grid point (the model-selection reward curves as data) and a JSON
 * record of the selected schedule and its held-out evaluation.
 */
inline ModelSelectionResult cmd_model_select(const ExperimentConfig& raw_config,
                                             const CliCommon& common) {
  const ExperimentConfig config = apply_overrides(raw_config, common);
  ModelSelectionPlan plan;
  plan.n_datasets = config.n_datasets;
  plan.n_train = config.n_train;
  plan.grid = config.grid.schedules();
  const ModelSelectionResult result =
      model_select(plan, config.environment, config.policy, common.threads);

  std::string csv = "family,eta,p,gamma,avg_train_reward,heldout_reward,selected\n";
  for (std::size_t g = 0; g < result.table.size(); ++g) {
    const auto& row = result.table[g];
    const auto& s = row.schedule;
    csv += family_name(s.family());
    csv += ',';
    csv += s.is_static() ? "" : format_g17(s.eta());
    csv += ',';
    csv += s.family() == DriftSchedule::Family::Power ? format_g17(s.p()) : "";
    csv += ',';
    csv += s.family() == DriftSchedule::Family::Exponential ? format_g17(s.gamma()) : "";
    csv += ',';
    csv += format_g17(row.avg_train_reward);
    csv += ',';
    csv += format_g17(row.heldout_reward);
    csv += ',';
    csv += g == result.selected_index ? '1' : '0';
    csv += '\n';
  }
  write_text_file(common.out_dir / "model_selection.csv", csv);

  Json summary;
  summary["command"] = "model-select";
  summary["config"] = config_to_json(config);
  summary["seeds"]["master"] = config.environment.seed;
  summary["selected"] = schedule_to_json(result.selected());
  summary["selected_heldout_reward"] = result.table[result.selected_index].heldout_reward;
  Json table = Json::array();
  for (std::size_t g = 0; g < result.table.size(); ++g) {
    table.push_back(grid_point_to_json(result.table[g], g == result.selected_index));
  }
  summary["table"] = table;
  write_text_file(common.out_dir / "selection.json", summary.dump(2) + "\n");
  return result;
}

/// Canned experiment scale shared by the reproduction figures: the paper's
/// horizon/arm/dimension counts with unit arm heterogeneity and walk scale.
inline EnvironmentSpec reproduce_environment(bool stationary, std::uint64_t seed) {
  EnvironmentSpec spec;
  spec.n_arms = 10;
  spec.dim = 10;
  spec.horizon = 5000;
  spec.generation_drift =
      stationary ? DriftSchedule::power(0.1, 2.0) : DriftSchedule::power(0.1, 1.0);
  spec.sigma0_scale = 1.0;
  spec.beta0_scale = 1.0;
  spec.seed = seed;
  return spec;
}

inline constexpr std::uint64_t kReproduceSeed = 42;

/**
 * `reproduce`: canned configurations for the paper-style figure data.
 *   decay_rates     one decay CSV per (family, parameter) curve, eta = 1
 *   stationary      three policy reward/regret curves on stationary data
 *   nonstationary   the same plus the dynamic-vs-static inference pair,
 *                   with the inference schedule chosen by model selection
 */
inline void cmd_reproduce(const std::string& figure, const CliCommon& common) {
  const std::uint64_t master = common.seed.value_or(kReproduceSeed);
  const int n_seeds = common.seeds.value_or(20);

  if (figure == "decay_rates") {
    const double eta = 1.0;
    char name[48];
    for (double p : {-1.0, 0.0, 0.5, 1.0, 2.0}) {
      std::snprintf(name, sizeof(name), "power_p_%g.csv", p);
      cmd_decay(DriftSchedule::power(eta, p), 5000, 60, common, name);
    }
    for (double gamma : {0.5, 1.0, 2.0}) {
      std::snprintf(name, sizeof(name), "exponential_gamma_%g.csv", gamma);
      cmd_decay(DriftSchedule::exponential(eta, gamma), 5000, 60, common, name);
    }
    return;
  }

  const bool stationary = figure == "stationary";
  if (!stationary && figure != "nonstationary") {
    throw std::invalid_argument("unknown figure id: " + figure);
  }

  ExperimentConfig config;
  config.environment = reproduce_environment(stationary, master);
  config.n_seeds = n_seeds;

  Json summary;
  summary["command"] = "reproduce";
  summary["figure"] = figure;
  summary["seeds"]["master"] = master;

  DriftSchedule inference = DriftSchedule::power(0.01, 1.0);
  if (!stationary) {
    ModelSelectionPlan plan;
    plan.grid = config.grid.schedules();
    PolicyConfig ts;
    const ModelSelectionResult sel =
        model_select(plan, config.environment, ts, common.threads);
    inference = sel.selected();
    Json table = Json::array();
    for (std::size_t g = 0; g < sel.table.size(); ++g) {
      table.push_back(grid_point_to_json(sel.table[g], g == sel.selected_index));
    }
    summary["model_selection"] = table;
  }
  summary["inference_drift"] = schedule_to_json(inference);
  summary["config"] = config_to_json(config);

  const std::vector<PolicyConfig::Kind> kinds = {PolicyConfig::Kind::Thompson,
                                                 PolicyConfig::Kind::EpsilonGreedy,
                                                 PolicyConfig::Kind::Ucb1};
  for (auto kind : kinds) {
    PolicyConfig policy;
    policy.kind = kind;
    const auto records = run_replicates(config, policy, inference, common.threads);
    const AggregateSummary agg = aggregate(records);
    write_text_file(common.out_dir / (std::string(to_string(kind)) + ".csv"),
                    aggregate_csv(agg));
    summary["results"][to_string(kind)] = results_entry(agg, records);
  }

  if (!stationary) {
    PolicyConfig ts;
    const auto records = run_replicates(config, ts, DriftSchedule::statical(), common.threads);
    const AggregateSummary agg = aggregate(records);
    write_text_file(common.out_dir / "static_thompson.csv", aggregate_csv(agg));
    summary["results"]["static_thompson"] = results_entry(agg, records);
  }

  write_text_file(common.out_dir / "summary.json", summary.dump(2) + "\n");
}

}  // namespace dynbandit
