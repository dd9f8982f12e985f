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

#include "ecoroute/sim/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <set>
#include <unordered_map>

#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include "ecoroute/error.hpp"

namespace ecoroute::sim {
namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

std::uint64_t mix(std::uint64_t a, std::uint64_t b) {
  return splitmix64(splitmix64(a) ^ (b * 0xD1B54A32D192ED03ULL));
}

constexpr std::uint64_t kClassifierSalt = 0xC1A551F1ULL;
constexpr std::uint64_t kOverheadSalt = 0x0E4EADULL;
constexpr std::size_t kModalTail = 500;

class ArmIndex {
 public:
  explicit ArmIndex(std::vector<std::string>& arms) : arms_(arms) {
    for (std::size_t i = 0; i < arms_.size(); ++i) index_.emplace(arms_[i], i);
  }
  std::size_t operator()(const std::string& id) {
    const auto it = index_.find(id);
    if (it != index_.end()) return it->second;
    index_.emplace(id, arms_.size());
    arms_.push_back(id);
    return arms_.size() - 1;
  }

 private:
  std::vector<std::string>& arms_;
  std::unordered_map<std::string, std::size_t> index_;
};

pool::ModelPool without(const pool::ModelPool& pool, std::string_view id) {
  std::vector<pool::ModelEntry> kept;
  for (const auto& e : pool.entries()) {
    if (e.id != id) kept.push_back(e);
  }
  return pool::ModelPool(std::move(kept));
}

// Appends one decision to the result; shared by policies and baselines.
void record_decision(ExperimentResult& result, ArmIndex& arm_index,
                     const OracleSpec& oracle, const reward::RewardParams& params,
                     const Query& q, const std::vector<std::string>& feasible,
                     const std::string& chosen, const reward::Observation& obs,
                     DecisionRecord rec) {
  const auto opt = optimal_arm(oracle, q.cell, feasible, params);
  rec.step = result.records.size() + 1;
  rec.cell = q.cell;
  rec.arm = arm_index(chosen);
  rec.feasible_count = feasible.size();
  rec.accuracy_norm = obs.accuracy_norm;
  rec.energy_wh = obs.energy_wh;
  rec.energy_norm = obs.energy_norm;
  rec.latency_ms = obs.latency_ms;
  rec.reward = reward::reward(params, obs);
  rec.expected_reward = oracle.expected_reward(params, chosen, q.cell);
  rec.optimal_arm = arm_index(opt.arm_id);
  rec.optimal_reward = opt.expected_reward;
  rec.regret = rec.optimal_reward - rec.expected_reward;
  rec.realized_regret = rec.optimal_reward - rec.reward;
  result.ledger.append(chosen, rec.expected_reward, rec.optimal_reward);
  result.records.push_back(rec);
}

pool::FeasibilityQuery feasibility(const std::string& task, const RunOptions& o) {
  return {task, o.l_max_ms.value_or(std::numeric_limits<double>::infinity())};
}

double percentile(const std::vector<double>& sorted, double p) {
  if (sorted.empty()) return 0.0;
  const double pos = p * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = static_cast<std::size_t>(std::ceil(pos));
  return sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - static_cast<double>(lo));
}

}  // namespace

std::string_view to_string(BaselineKind kind) {
  switch (kind) {
    case BaselineKind::kRandom:
      return "random";
    case BaselineKind::kLargest:
      return "largest";
    case BaselineKind::kSmallest:
      return "smallest";
    case BaselineKind::kHighestAccuracy:
      return "highest_accuracy";
  }
  return "random";
}

BaselineKind parse_baseline_kind(std::string_view name) {
  if (name == "random") return BaselineKind::kRandom;
  if (name == "largest") return BaselineKind::kLargest;
  if (name == "smallest") return BaselineKind::kSmallest;
  if (name == "highest_accuracy") return BaselineKind::kHighestAccuracy;
  throw_invalid("unknown baseline '" + std::string(name) + "'");
}

void ExperimentConfig::validate() const {
  for (const auto& p : policies) bandit::parse_policy_kind(p);
  for (const auto& b : baselines) parse_baseline_kind(b);
  policy.validate();
  features::FeatureSet::parse(features);
  reward::RewardParams{lambda};
  if (steps == 0) throw_invalid("experiment: steps must be positive");
  if (reps == 0) throw_invalid("experiment: reps must be positive");
  if (clusters == 0 || bins == 0) {
    throw_invalid("experiment: clusters and bins must be positive");
  }
  if (l_max_ms && !(*l_max_ms > 0)) throw_invalid("experiment: l_max_ms must be positive");
  if (!(overhead_ms >= 0)) throw_invalid("experiment: overhead_ms must be >= 0");
  if (window == 0 || adoption_window == 0) {
    throw_invalid("experiment: windows must be positive");
  }
  for (double l : lambda_grid) reward::RewardParams{l};
  for (const auto& c : ablation_configs) features::FeatureSet::parse(c);
  if (classifier_samples_per_task < 2) {
    throw_invalid("experiment: classifier_samples_per_task must be >= 2");
  }
}

nlohmann::json ExperimentConfig::to_json() const {
  nlohmann::json j = {{"policies", policies},
                      {"baselines", baselines},
                      {"policy", policy.to_json()},
                      {"features", features},
                      {"lambda", lambda},
                      {"steps", steps},
                      {"reps", reps},
                      {"seed", seed},
                      {"clusters", clusters},
                      {"bins", bins},
                      {"oracle", oracle},
                      {"pool", pool},
                      {"overhead_ms", overhead_ms},
                      {"window", window},
                      {"task_mix", task_mix},
                      {"lambda_grid", lambda_grid},
                      {"ablation_configs", ablation_configs},
                      {"add_at", add_at},
                      {"new_model", new_model},
                      {"adoption_window", adoption_window},
                      {"overhead_queries", overhead_queries},
                      {"classifier_samples_per_task", classifier_samples_per_task}};
  j["l_max_ms"] = l_max_ms ? nlohmann::json(*l_max_ms) : nlohmann::json(nullptr);
  return j;
}

ExperimentConfig ExperimentConfig::from_json(const nlohmann::json& j) {
  ExperimentConfig c;
  if (!j.is_object()) throw_invalid("experiment config: expected a JSON object");
  try {
    c.policies = j.value("policies", c.policies);
    c.baselines = j.value("baselines", c.baselines);
    if (j.contains("policy")) c.policy = bandit::PolicyConfig::from_json(j.at("policy"));
    c.features = j.value("features", c.features);
    c.lambda = j.value("lambda", c.lambda);
    c.steps = j.value("steps", c.steps);
    c.reps = j.value("reps", c.reps);
    c.seed = j.value("seed", c.seed);
    c.clusters = j.value("clusters", c.clusters);
    c.bins = j.value("bins", c.bins);
    c.oracle = j.value("oracle", c.oracle);
    c.pool = j.value("pool", c.pool);
    if (j.contains("l_max_ms") && !j.at("l_max_ms").is_null()) {
      c.l_max_ms = j.at("l_max_ms").get<double>();
    }
    c.overhead_ms = j.value("overhead_ms", c.overhead_ms);
    c.window = j.value("window", c.window);
    c.task_mix = j.value("task_mix", c.task_mix);
    c.lambda_grid = j.value("lambda_grid", c.lambda_grid);
    c.ablation_configs = j.value("ablation_configs", c.ablation_configs);
    c.add_at = j.value("add_at", c.add_at);
    c.new_model = j.value("new_model", c.new_model);
    c.adoption_window = j.value("adoption_window", c.adoption_window);
    c.overhead_queries = j.value("overhead_queries", c.overhead_queries);
    c.classifier_samples_per_task =
        j.value("classifier_samples_per_task", c.classifier_samples_per_task);
  } catch (const nlohmann::json::exception& e) {
    throw_invalid(std::string("experiment config: ") + e.what());
  }
  c.validate();
  return c;
}

ExperimentConfig ExperimentConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw_invalid("cannot open experiment config " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw_invalid("experiment config " + path.string() + ": " + e.what());
  }
  return from_json(j);
}

SimEnvironment make_environment(const ExperimentConfig& config, OracleSpec oracle,
                                pool::ModelPool pool) {
  oracle.validate();
  for (const auto& id : pool.active_ids()) {
    if (!oracle.has_model(id)) {
      throw_invalid("oracle has no profile for pool model '" + id + "'");
    }
  }
  SimEnvironment env;
  env.clusters = config.clusters;
  env.bins = config.bins;
  env.provider = std::make_shared<features::HashingEmbedder>();
  env.generator.emplace(oracle.tasks, oracle.topics,
                        features::ComplexityBinner(config.bins));
  if (oracle.levels() != config.bins) {
    throw_invalid("oracle levels must equal the number of complexity bins");
  }
  features::TrainingConfig tc;
  tc.seed = mix(config.seed, kClassifierSalt);
  tc.labels = oracle.tasks;
  const auto pairs = classifier_training_set(*env.generator, *env.provider,
                                             config.classifier_samples_per_task,
                                             mix(config.seed, kClassifierSalt + 1));
  auto trained = features::train_task_classifier(pairs, tc);
  env.classifier.emplace(std::move(trained.classifier));
  env.classifier_report = trained.report;
  // Pin the energy scale; deriving it scans every profile.
  oracle.e_max_wh = oracle.energy_scale_wh();
  env.oracle = std::move(oracle);
  env.pool = std::move(pool);
  return env;
}

SimEnvironment make_environment(const ExperimentConfig& config) {
  OracleSpec oracle;
  if (config.oracle.ends_with(".json")) {
    oracle = OracleSpec::load(config.oracle);
  } else {
    oracle = oracle_by_name(config.oracle);
  }
  pool::ModelPool pool = config.pool.empty()
                             ? pool::ModelPool(pool::default_pool_entries())
                             : pool::ModelPool::load(config.pool);
  return make_environment(config, std::move(oracle), std::move(pool));
}

double ExperimentResult::mean_accuracy() const {
  if (records.empty()) return 0.0;
  double sum = 0.0;
  for (const auto& r : records) sum += r.accuracy_norm;
  return sum / static_cast<double>(records.size());
}

double ExperimentResult::total_energy_wh() const {
  double sum = 0.0;
  for (const auto& r : records) sum += r.energy_wh;
  return sum;
}

double ExperimentResult::realized_regret() const {
  double sum = 0.0;
  for (const auto& r : records) sum += r.realized_regret;
  return sum;
}

double ExperimentResult::cumulative_regret_at(std::size_t t) const {
  t = std::min(t, records.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < t; ++i) sum += ledger.entries()[i].regret;
  return sum;
}

std::vector<std::vector<double>> ExperimentResult::selection_frequencies(
    std::size_t window) const {
  if (window == 0) throw_invalid("selection_frequencies: window must be positive");
  std::vector<std::vector<double>> out;
  for (std::size_t start = 0; start < records.size(); start += window) {
    const std::size_t end = std::min(records.size(), start + window);
    std::vector<double> row(arms.size(), 0.0);
    for (std::size_t i = start; i < end; ++i) row[records[i].arm] += 1.0;
    for (double& v : row) v /= static_cast<double>(end - start);
    out.push_back(std::move(row));
  }
  return out;
}

std::vector<double> ExperimentResult::trailing_frequency(std::string_view arm,
                                                         std::size_t window) const {
  if (window == 0) throw_invalid("trailing_frequency: window must be positive");
  const auto it = std::find(arms.begin(), arms.end(), arm);
  const std::size_t idx =
      it == arms.end() ? arms.size() : static_cast<std::size_t>(it - arms.begin());
  std::vector<double> out;
  out.reserve(records.size());
  std::size_t hits = 0;
  for (std::size_t t = 0; t < records.size(); ++t) {
    if (records[t].arm == idx) ++hits;
    if (t >= window && records[t - window].arm == idx) --hits;
    const std::size_t n = std::min(window, t + 1);
    out.push_back(static_cast<double>(hits) / static_cast<double>(n));
  }
  return out;
}

std::string ExperimentResult::modal_arm(std::size_t last_n) const {
  if (records.empty()) throw_invalid("modal_arm: no decisions");
  std::vector<std::size_t> counts(arms.size(), 0);
  const std::size_t start = records.size() > last_n ? records.size() - last_n : 0;
  for (std::size_t i = start; i < records.size(); ++i) ++counts[records[i].arm];
  const auto best = std::max_element(counts.begin(), counts.end());
  return arms[static_cast<std::size_t>(best - counts.begin())];
}

nlohmann::json ExperimentResult::summary() const {
  std::vector<std::size_t> counts(arms.size(), 0);
  for (const auto& r : records) ++counts[r.arm];
  nlohmann::json sel = nlohmann::json::object();
  for (std::size_t i = 0; i < arms.size(); ++i) sel[arms[i]] = counts[i];
  return {{"name", name},
          {"seed", seed},
          {"steps", records.size()},
          {"mean_accuracy", mean_accuracy()},
          {"total_energy_wh", total_energy_wh()},
          {"cumulative_regret", cumulative_regret()},
          {"realized_regret", realized_regret()},
          {"selections", sel}};
}

nlohmann::json ExperimentResult::record_json(const DecisionRecord& r) const {
  return {{"step", r.step},
          {"cell", {{"task", r.cell.task}, {"topic", r.cell.topic}, {"level", r.cell.level}}},
          {"context", {{"task", r.predicted_task}, {"cluster", r.cluster}, {"bin", r.bin}}},
          {"arm_id", arms[r.arm]},
          {"exploration", r.exploration},
          {"feasible_count", r.feasible_count},
          {"accuracy_norm", r.accuracy_norm},
          {"energy_wh", r.energy_wh},
          {"energy_norm", r.energy_norm},
          {"latency_ms", r.latency_ms},
          {"reward", r.reward},
          {"expected_reward", r.expected_reward},
          {"optimal_arm", arms[r.optimal_arm]},
          {"optimal_reward", r.optimal_reward},
          {"regret", r.regret},
          {"realized_regret", r.realized_regret}};
}

RunOptions run_options(const ExperimentConfig& config) {
  RunOptions o;
  o.params = reward::RewardParams(config.lambda);
  o.features = features::FeatureSet::parse(config.features);
  o.l_max_ms = config.l_max_ms;
  o.overhead_ms = config.overhead_ms;
  o.window = config.window;
  return o;
}

RepSeeds rep_seeds(std::uint64_t experiment_seed, std::size_t rep) {
  const std::uint64_t base = mix(experiment_seed, rep);
  return {mix(base, 1), mix(base, 2)};
}

std::vector<Query> make_stream(const SimEnvironment& env, std::size_t length,
                               const std::vector<double>& task_mix,
                               std::uint64_t seed) {
  StreamConfig sc;
  sc.length = length;
  sc.task_mix = task_mix;
  sc.seed = seed;
  return generate_stream(*env.generator, sc);
}

ExperimentResult run_baseline(BaselineKind kind, const SimEnvironment& env,
                              const std::vector<Query>& stream,
                              const RunOptions& options, std::uint64_t seed) {
  const auto& pool = env.pool;
  const auto active = pool.active_ids();
  if (active.empty()) throw Error(ErrorCode::kNoFeasibleArm, "baseline: empty pool");

  std::string designated;
  if (kind == BaselineKind::kLargest || kind == BaselineKind::kSmallest) {
    const bool largest = kind == BaselineKind::kLargest;
    double best = largest ? -1.0 : std::numeric_limits<double>::infinity();
    for (const auto& id : active) {
      const double p = pool.get(id).params_b;
      if (largest ? p > best : p < best) {
        best = p;
        designated = id;
      }
    }
  } else if (kind == BaselineKind::kHighestAccuracy) {
    const auto points = single_model_points(env.oracle, active);
    double best = -1.0;
    for (const auto& p : points) {
      if (p.accuracy > best) {
        best = p.accuracy;
        designated = p.label;
      }
    }
  }

  ExperimentResult result;
  result.name = std::string(to_string(kind));
  result.seed = seed;
  result.arms = active;
  result.ledger = reward::RegretLedger(options.window);
  ArmIndex arm_index(result.arms);
  std::mt19937_64 outcome_rng(mix(seed, 1));
  std::mt19937_64 choice_rng(mix(seed, 3));

  for (std::size_t t = 0; t < stream.size(); ++t) {
    const Query& q = stream[t];
    try {
      const auto feasible = pool.feasible_set(
          feasibility(env.oracle.tasks[q.cell.task], options), options.overhead_ms);
      std::string chosen;
      if (kind == BaselineKind::kRandom) {
        std::uniform_int_distribution<std::size_t> pick(0, feasible.size() - 1);
        chosen = feasible[pick(choice_rng)];
      } else if (std::find(feasible.begin(), feasible.end(), designated) !=
                 feasible.end()) {
        chosen = designated;
      } else {
        chosen = feasible.front();
      }
      const auto obs = sample_outcome(env.oracle, pool.get(chosen), q.cell, outcome_rng);
      DecisionRecord rec;
      rec.predicted_task = q.cell.task;
      rec.bin = q.cell.level;
      rec.cluster = q.cell.topic;
      record_decision(result, arm_index, env.oracle, options.params, q, feasible,
                      chosen, obs, rec);
    } catch (const Error& e) {
      throw e.with_context("step " + std::to_string(t + 1));
    }
  }
  return result;
}

ExperimentResult run_policy(const bandit::PolicyConfig& policy_config,
                            const SimEnvironment& env,
                            const std::vector<Query>& stream,
                            const RunOptions& options, std::uint64_t seed) {
  pool::ModelPool pool = env.pool;
  if (options.addition) {
    if (options.addition->at >= stream.size()) {
      throw_invalid("model addition step must be below the stream length");
    }
    if (pool.contains(options.addition->entry.id)) {
      throw_invalid("model '" + options.addition->entry.id +
                    "' is already in the initial pool");
    }
    if (!env.oracle.has_model(options.addition->entry.id)) {
      throw_invalid("oracle has no profile for added model '" +
                    options.addition->entry.id + "'");
    }
  }

  features::ContextPipeline pipeline(env.provider, *env.classifier, env.clusters,
                                     features::ComplexityBinner(env.bins),
                                     options.features);
  bandit::PolicyConfig pc = policy_config;
  pc.seed = mix(seed, 2);
  bandit::Policy policy(pc, pool.active_ids(), pipeline.layout().dimension());

  ExperimentResult result;
  result.name = std::string(bandit::to_string(pc.kind));
  result.seed = seed;
  result.arms = pool.active_ids();
  result.ledger = reward::RegretLedger(options.window);
  ArmIndex arm_index(result.arms);
  std::mt19937_64 outcome_rng(mix(seed, 1));

  for (std::size_t t = 0; t < stream.size(); ++t) {
    const Query& q = stream[t];
    try {
      if (options.addition && t == options.addition->at) {
        const auto event = pool.add_model(options.addition->entry);
        pool::apply_event(event, policy);
        arm_index(event.model_id);
      }
      const auto ctx = pipeline.generate(q.text, true);
      const auto feasible = pool.feasible_set(
          feasibility(ctx.features.task_label, options), options.overhead_ms);
      const auto sel = policy.select(ctx.x.values(), feasible);
      const auto obs =
          sample_outcome(env.oracle, pool.get(sel.arm_id), q.cell, outcome_rng);
      policy.update(sel.arm_id, ctx.x.values(), reward::reward(options.params, obs));

      DecisionRecord rec;
      rec.predicted_task = ctx.features.task;
      rec.cluster = ctx.features.cluster;
      rec.bin = ctx.features.complexity_bin;
      rec.exploration = sel.exploration;
      record_decision(result, arm_index, env.oracle, options.params, q, feasible,
                      sel.arm_id, obs, rec);
    } catch (const Error& e) {
      throw e.with_context("step " + std::to_string(t + 1));
    }
  }
  return result;
}

SummaryStats SummaryStats::of(std::vector<double> values) {
  SummaryStats s;
  s.n = values.size();
  if (values.empty()) return s;
  std::sort(values.begin(), values.end());
  s.min = values.front();
  s.max = values.back();
  s.median = percentile(values, 0.5);
  s.q1 = percentile(values, 0.25);
  s.q3 = percentile(values, 0.75);
  s.mean = std::accumulate(values.begin(), values.end(), 0.0) /
           static_cast<double>(values.size());
  if (values.size() > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - s.mean) * (v - s.mean);
    s.stddev = std::sqrt(ss / static_cast<double>(values.size() - 1));
    s.ci95 = 1.96 * s.stddev / std::sqrt(static_cast<double>(values.size()));
  }
  return s;
}

nlohmann::json SummaryStats::to_json() const {
  return {{"n", n},           {"mean", mean}, {"stddev", stddev},
          {"ci95", ci95},     {"median", median}, {"q1", q1},
          {"q3", q3},         {"min", min},   {"max", max}};
}

RunSummary RunSummary::of(const ExperimentResult& r, std::size_t rep,
                          std::size_t frequency_window) {
  RunSummary s;
  s.name = r.name;
  s.rep = rep;
  s.seed = r.seed;
  s.mean_accuracy = r.mean_accuracy();
  s.total_energy_wh = r.total_energy_wh();
  s.final_regret = r.cumulative_regret();
  s.half_regret = r.cumulative_regret_at(r.records.size() / 2);
  s.modal_arm = r.records.empty() ? std::string() : r.modal_arm(kModalTail);
  s.cumulative = r.ledger.cumulative_series();
  s.moving_average = r.ledger.moving_average();
  s.frequencies = r.selection_frequencies(frequency_window);
  s.arms = r.arms;
  return s;
}

ComparisonResult run_comparison(const ExperimentConfig& config,
                                const SimEnvironment& env) {
  config.validate();
  ComparisonResult out;
  for (const auto& p : config.policies) out.names.push_back(p);
  for (const auto& b : config.baselines) out.names.push_back(b);
  out.runs.resize(out.names.size());
  const RunOptions options = run_options(config);

  for (std::size_t rep = 0; rep < config.reps; ++rep) {
    const RepSeeds seeds = rep_seeds(config.seed, rep);
    const auto stream = make_stream(env, config.steps, config.task_mix, seeds.stream);
    std::size_t slot = 0;
    auto keep = [&](ExperimentResult r) {
      out.runs[slot].push_back(RunSummary::of(r, rep, config.window));
      if (rep == 0) out.first_rep.push_back(std::move(r));
      ++slot;
    };
    for (const auto& p : config.policies) {
      bandit::PolicyConfig pc = config.policy;
      pc.kind = bandit::parse_policy_kind(p);
      keep(run_policy(pc, env, stream, options, seeds.run));
    }
    for (const auto& b : config.baselines) {
      keep(run_baseline(parse_baseline_kind(b), env, stream, options, seeds.run));
    }
    spdlog::debug("comparison rep {}/{} done", rep + 1, config.reps);
  }
  return out;
}

SweepResult run_lambda_sweep(const ExperimentConfig& config,
                             const SimEnvironment& env) {
  config.validate();
  if (config.lambda_grid.empty()) throw_invalid("lambda sweep: empty grid");
  struct Acc {
    std::vector<double> accuracy, energy, regret;
  };
  const std::size_t n_policies = config.policies.size();
  std::vector<Acc> acc(config.lambda_grid.size() * n_policies);

  for (std::size_t rep = 0; rep < config.reps; ++rep) {
    const RepSeeds seeds = rep_seeds(config.seed, rep);
    const auto stream = make_stream(env, config.steps, config.task_mix, seeds.stream);
    for (std::size_t li = 0; li < config.lambda_grid.size(); ++li) {
      RunOptions options = run_options(config);
      options.params = reward::RewardParams(config.lambda_grid[li]);
      for (std::size_t pi = 0; pi < n_policies; ++pi) {
        bandit::PolicyConfig pc = config.policy;
        pc.kind = bandit::parse_policy_kind(config.policies[pi]);
        const auto r = run_policy(pc, env, stream, options, seeds.run);
        auto& a = acc[li * n_policies + pi];
        a.accuracy.push_back(r.mean_accuracy());
        a.energy.push_back(r.total_energy_wh());
        a.regret.push_back(r.cumulative_regret());
      }
    }
  }

  SweepResult out;
  for (std::size_t li = 0; li < config.lambda_grid.size(); ++li) {
    for (std::size_t pi = 0; pi < n_policies; ++pi) {
      const auto& a = acc[li * n_policies + pi];
      out.rows.push_back({config.lambda_grid[li], config.policies[pi],
                          SummaryStats::of(a.accuracy), SummaryStats::of(a.energy),
                          SummaryStats::of(a.regret)});
    }
  }
  // Static points are per-query expectations; scale energy to a whole run so
  // they share units with the sweep rows.
  out.static_points = single_model_points(env.oracle, env.pool.active_ids());
  for (auto& p : out.static_points) p.energy *= static_cast<double>(config.steps);
  out.front = pareto_front(out.static_points);
  return out;
}

std::vector<AblationRow> run_feature_ablation(const ExperimentConfig& config,
                                              const SimEnvironment& env) {
  config.validate();
  std::vector<features::FeatureSet> sets;
  std::set<std::string> seen;
  for (const auto& name : config.ablation_configs) {
    const auto fs = features::FeatureSet::parse(name);
    if (!seen.insert(fs.name()).second) {
      spdlog::warn("feature ablation: dropping duplicate configuration '{}'", name);
      continue;
    }
    sets.push_back(fs);
  }
  std::vector<AblationRow> rows(sets.size());
  for (std::size_t i = 0; i < sets.size(); ++i) rows[i].features = sets[i].name();

  bandit::PolicyConfig pc = config.policy;
  pc.kind = bandit::parse_policy_kind(config.policies.front());
  for (std::size_t rep = 0; rep < config.reps; ++rep) {
    const RepSeeds seeds = rep_seeds(config.seed, rep);
    const auto stream = make_stream(env, config.steps, config.task_mix, seeds.stream);
    for (std::size_t i = 0; i < sets.size(); ++i) {
      RunOptions options = run_options(config);
      options.features = sets[i];
      rows[i].final_regret.push_back(
          run_policy(pc, env, stream, options, seeds.run).cumulative_regret());
    }
  }
  for (auto& row : rows) row.stats = SummaryStats::of(row.final_regret);
  return rows;
}

std::vector<double> AdditionResult::mean_adoption() const {
  if (adoption.empty()) return {};
  std::vector<double> out(adoption.front().size(), 0.0);
  for (const auto& run : adoption) {
    for (std::size_t t = 0; t < out.size(); ++t) out[t] += run[t];
  }
  for (double& v : out) v /= static_cast<double>(adoption.size());
  return out;
}

AdditionResult run_model_addition(const ExperimentConfig& config,
                                  const SimEnvironment& env) {
  config.validate();
  if (config.add_at >= config.steps) {
    throw_invalid("model addition: add_at must be below steps");
  }
  const pool::ModelEntry entry = env.pool.get(config.new_model);
  SimEnvironment initial = env;
  initial.pool = without(env.pool, config.new_model);

  RunOptions options = run_options(config);
  options.addition = ModelAddition{config.add_at, entry};
  bandit::PolicyConfig pc = config.policy;
  pc.kind = bandit::parse_policy_kind(config.policies.front());

  AdditionResult out;
  out.new_model = config.new_model;
  out.add_at = config.add_at;
  out.window = config.adoption_window;
  for (std::size_t rep = 0; rep < config.reps; ++rep) {
    const RepSeeds seeds = rep_seeds(config.seed, rep);
    const auto stream = make_stream(env, config.steps, config.task_mix, seeds.stream);
    const auto r = run_policy(pc, initial, stream, options, seeds.run);
    out.adoption.push_back(r.trailing_frequency(config.new_model, config.adoption_window));
    out.runs.push_back(RunSummary::of(r, rep, config.adoption_window));
  }
  return out;
}

double OverheadReport::decision(std::string_view kind) const {
  for (const auto& [k, ms] : decision_ms) {
    if (k == kind) return ms;
  }
  throw_invalid("overhead report: no timing for policy '" + std::string(kind) + "'");
}

nlohmann::json OverheadReport::to_json() const {
  nlohmann::json d = nlohmann::json::object();
  nlohmann::json total = nlohmann::json::object();
  for (const auto& [k, ms] : decision_ms) {
    d[k] = ms;
    total[k] = features_ms() + ms;
  }
  return {{"queries", queries},
          {"task_classification_ms", task_ms},
          {"cluster_ms", cluster_ms},
          {"complexity_ms", complexity_ms},
          {"context_ms", context_ms},
          {"features_ms", features_ms()},
          {"decision_ms", d},
          {"total_pre_inference_ms", total}};
}

OverheadReport measure_overhead(const SimEnvironment& env, std::size_t n,
                                std::uint64_t seed) {
  using Clock = std::chrono::steady_clock;
  if (n < 100) throw_invalid("measure_overhead: n must be at least 100");
  const auto queries = make_stream(env, n, {}, mix(seed, kOverheadSalt));
  features::ContextPipeline pipeline(env.provider, *env.classifier, env.clusters,
                                     features::ComplexityBinner(env.bins));
  OverheadReport report;
  report.queries = n;
  std::vector<Eigen::VectorXd> contexts;
  contexts.reserve(n);
  for (const auto& q : queries) {
    const auto ctx = pipeline.generate(q.text, true);
    report.task_ms += ctx.timings.task_ms;
    report.cluster_ms += ctx.timings.cluster_ms;
    report.complexity_ms += ctx.timings.complexity_ms;
    report.context_ms += ctx.timings.build_ms;
    contexts.push_back(ctx.x.values());
  }
  const double dn = static_cast<double>(n);
  report.task_ms /= dn;
  report.cluster_ms /= dn;
  report.complexity_ms /= dn;
  report.context_ms /= dn;

  const auto arms = env.pool.active_ids();
  const std::size_t d = pipeline.layout().dimension();
  for (auto kind : {bandit::PolicyKind::kEpsGreedy, bandit::PolicyKind::kEpsGreedyContextual,
                    bandit::PolicyKind::kLinUcb, bandit::PolicyKind::kThompson}) {
    bandit::PolicyConfig pc;
    pc.kind = kind;
    pc.seed = mix(seed, static_cast<std::uint64_t>(kind));
    bandit::Policy policy(pc, arms, d);
    std::mt19937_64 rng(pc.seed);
    std::uniform_real_distribution<double> r(-0.2, 0.8);
    for (std::size_t i = 0; i < std::min<std::size_t>(n, 400); ++i) {
      policy.update(arms[i % arms.size()], contexts[i], r(rng));
    }
    // Repeat the pass until the clock has something substantial to measure.
    std::size_t calls = 0;
    double elapsed_ms = 0.0;
    volatile double sink = 0.0;
    while (elapsed_ms < 20.0) {
      const auto start = Clock::now();
      for (const auto& x : contexts) sink = sink + policy.select(x, arms).score;
      elapsed_ms +=
          std::chrono::duration<double, std::milli>(Clock::now() - start).count();
      calls += contexts.size();
    }
    report.decision_ms.emplace_back(std::string(bandit::to_string(kind)),
                                    elapsed_ms / static_cast<double>(calls));
  }
  return report;
}

}  // namespace ecoroute::sim
