// Copyright 2026 The Ecoroute Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "ecoroute/bandit/policy.hpp"
#include "ecoroute/features/context.hpp"
#include "ecoroute/pool/model_pool.hpp"
#include "ecoroute/reward/reward.hpp"
#include "ecoroute/sim/oracle.hpp"
#include "ecoroute/sim/stream.hpp"

namespace ecoroute::sim {

enum class BaselineKind { kRandom, kLargest, kSmallest, kHighestAccuracy };

std::string_view to_string(BaselineKind kind);
BaselineKind parse_baseline_kind(std::string_view name);

struct ExperimentConfig {
  std::vector<std::string> policies = {"linucb"};
  std::vector<std::string> baselines = {"random"};
  bandit::PolicyConfig policy;  // hyperparameters; kind is set per run
  std::string features = "full";
  double lambda = 0.4;
  std::size_t steps = 2500;
  std::size_t reps = 50;
  std::uint64_t seed = 1;
  std::size_t clusters = 3;
  std::size_t bins = 3;
  std::string oracle = "default";  // built-in name or a JSON path
  std::string pool;                // JSON path; empty selects the default pool
  std::optional<double> l_max_ms;
  double overhead_ms = 0.0;
  std::size_t window = 50;
  std::vector<double> task_mix;

  std::vector<double> lambda_grid = {0.0, 0.1, 0.2, 0.3, 0.4, 0.5,
                                     0.6, 0.7, 0.8, 0.9, 1.0};
  std::vector<std::string> ablation_configs = {
      "none",         "task",           "cluster",           "complexity",
      "task+cluster", "task+complexity", "cluster+complexity", "full"};

  std::size_t add_at = 1000;
  std::string new_model = "google/gemma-3-12b-it";
  std::size_t adoption_window = 25;

  std::size_t overhead_queries = 1000;
  std::size_t classifier_samples_per_task = 120;

  void validate() const;
  nlohmann::json to_json() const;
  // Missing keys keep their defaults.
  static ExperimentConfig from_json(const nlohmann::json& j);
  static ExperimentConfig load(const std::filesystem::path& path);
};

// Read-only state shared by every repetition of an experiment.
struct SimEnvironment {
  OracleSpec oracle;
  pool::ModelPool pool;
  std::shared_ptr<const features::EmbeddingProvider> provider;
  std::optional<features::TaskClassifier> classifier;
  features::TrainingReport classifier_report;
  std::optional<QueryGenerator> generator;
  std::size_t clusters = 3;
  std::size_t bins = 3;
};

// Trains the task classifier on a stream drawn with a seed disjoint from the
// experiment streams.
SimEnvironment make_environment(const ExperimentConfig& config, OracleSpec oracle,
                                pool::ModelPool pool);
// Resolves the oracle and pool named by the config.
SimEnvironment make_environment(const ExperimentConfig& config);

struct DecisionRecord {
  std::size_t step = 0;  // 1-based
  Cell cell;
  std::size_t predicted_task = 0;
  std::size_t cluster = 0;
  std::size_t bin = 0;
  std::size_t arm = 0;  // index into ExperimentResult::arms
  bool exploration = false;
  std::size_t feasible_count = 0;
  double accuracy_norm = 0.0;
  double energy_wh = 0.0;
  double energy_norm = 0.0;
  double latency_ms = 0.0;
  double reward = 0.0;           // realized
  double expected_reward = 0.0;  // oracle expectation for the chosen arm
  std::size_t optimal_arm = 0;
  double optimal_reward = 0.0;
  double regret = 0.0;           // optimal_reward - expected_reward
  double realized_regret = 0.0;  // optimal_reward - reward
};

struct ExperimentResult {
  std::string name;
  std::uint64_t seed = 0;
  std::vector<std::string> arms;  // every arm ever registered, in order
  std::vector<DecisionRecord> records;
  reward::RegretLedger ledger;

  double mean_accuracy() const;
  double total_energy_wh() const;
  double cumulative_regret() const { return ledger.cumulative(); }
  double realized_regret() const;
  // Cumulative pseudo-regret after the first `t` steps.
  double cumulative_regret_at(std::size_t t) const;
  // Consecutive non-overlapping windows; each row has one entry per arm.
  std::vector<std::vector<double>> selection_frequencies(std::size_t window) const;
  // Share of the trailing `window` decisions (fewer at the start) that chose
  // `arm`, at every step.
  std::vector<double> trailing_frequency(std::string_view arm,
                                         std::size_t window) const;
  // Most frequent arm over the last `last_n` steps; ties go to the earlier arm.
  std::string modal_arm(std::size_t last_n) const;
  nlohmann::json summary() const;
  nlohmann::json record_json(const DecisionRecord& r) const;
};

struct ModelAddition {
  std::size_t at = 0;  // number of queries served before the model joins
  pool::ModelEntry entry;
};

struct RunOptions {
  reward::RewardParams params;
  features::FeatureSet features = features::FeatureSet::full();
  std::optional<double> l_max_ms;
  double overhead_ms = 0.0;
  std::size_t window = reward::RegretLedger::kDefaultWindow;
  std::optional<ModelAddition> addition;
};

RunOptions run_options(const ExperimentConfig& config);

// Per-repetition seeds derived from the experiment seed. `run` seeds the
// outcome sampler and the policy's own generator.
struct RepSeeds {
  std::uint64_t stream;
  std::uint64_t run;
};
RepSeeds rep_seeds(std::uint64_t experiment_seed, std::size_t rep);

std::vector<Query> make_stream(const SimEnvironment& env, std::size_t length,
                               const std::vector<double>& task_mix,
                               std::uint64_t seed);

ExperimentResult run_baseline(BaselineKind kind, const SimEnvironment& env,
                              const std::vector<Query>& stream,
                              const RunOptions& options, std::uint64_t seed);

// The full routing loop: context, feasibility, selection, outcome, reward,
// update, and regret against the oracle's optimum over the same feasible set.
ExperimentResult run_policy(const bandit::PolicyConfig& policy,
                            const SimEnvironment& env,
                            const std::vector<Query>& stream,
                            const RunOptions& options, std::uint64_t seed);

struct SummaryStats {
  std::size_t n = 0;
  double mean = 0.0;
  double stddev = 0.0;
  double ci95 = 0.0;  // normal-approximation half-width of the mean
  double median = 0.0;
  double q1 = 0.0;
  double q3 = 0.0;
  double min = 0.0;
  double max = 0.0;

  static SummaryStats of(std::vector<double> values);
  nlohmann::json to_json() const;
};

// Compact per-repetition outcome, cheap enough to keep for every rep.
struct RunSummary {
  std::string name;
  std::size_t rep = 0;
  std::uint64_t seed = 0;
  double mean_accuracy = 0.0;
  double total_energy_wh = 0.0;
  double final_regret = 0.0;
  double half_regret = 0.0;  // cumulative regret at T / 2
  std::string modal_arm;     // over the last min(500, T) steps
  std::vector<double> cumulative;
  std::vector<double> moving_average;
  std::vector<std::vector<double>> frequencies;
  std::vector<std::string> arms;

  static RunSummary of(const ExperimentResult& r, std::size_t rep,
                       std::size_t frequency_window);
};

struct ComparisonResult {
  std::vector<std::string> names;  // policies then baselines
  std::vector<std::vector<RunSummary>> runs;  // [name][rep]
  std::vector<ExperimentResult> first_rep;    // one full result per name
};

// `sim run`: every configured policy and baseline on the same streams.
ComparisonResult run_comparison(const ExperimentConfig& config,
                                const SimEnvironment& env);

struct SweepRow {
  double lambda = 0.0;
  std::string policy;
  SummaryStats accuracy;
  SummaryStats energy_wh;
  SummaryStats regret;
};

struct SweepResult {
  std::vector<SweepRow> rows;
  std::vector<ParetoPoint> static_points;
  std::vector<ParetoPoint> front;
};

SweepResult run_lambda_sweep(const ExperimentConfig& config,
                             const SimEnvironment& env);

struct AblationRow {
  std::string features;
  std::vector<double> final_regret;
  SummaryStats stats;
};

// Duplicated configuration names are dropped with a warning.
std::vector<AblationRow> run_feature_ablation(const ExperimentConfig& config,
                                              const SimEnvironment& env);

struct AdditionResult {
  std::string new_model;
  std::size_t add_at = 0;
  std::size_t window = 0;
  std::vector<std::vector<double>> adoption;  // [rep][step] trailing frequency
  std::vector<RunSummary> runs;
  std::vector<double> mean_adoption() const;
};

// The new model is withheld from the initial pool and registered with both
// pool and policy once `config.add_at` queries have been served.
AdditionResult run_model_addition(const ExperimentConfig& config,
                                  const SimEnvironment& env);

struct OverheadReport {
  std::size_t queries = 0;
  double task_ms = 0.0;
  double cluster_ms = 0.0;
  double complexity_ms = 0.0;
  double context_ms = 0.0;
  std::vector<std::pair<std::string, double>> decision_ms;  // per policy kind

  double features_ms() const {
    return task_ms + cluster_ms + complexity_ms + context_ms;
  }
  double decision(std::string_view kind) const;
  nlohmann::json to_json() const;
};

// Mean per-query wall-clock cost of each pre-inference stage over `n`
// generated queries, plus each policy's selection at the full context
// dimension and the environment's pool size.
OverheadReport measure_overhead(const SimEnvironment& env, std::size_t n,
                                std::uint64_t seed);

}  // namespace ecoroute::sim
