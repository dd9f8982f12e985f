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

#include "ecoroute/sim/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>

#include <nlohmann/json.hpp>

#include "ecoroute/error.hpp"

namespace ecoroute::sim {
namespace {

// Equivalent number of generated tokens spent on prompt processing.
constexpr double kPrefillTokens = 24.0;

struct AccuracyRow {
  const char* id;
  double qa, completion, commonsense, math, summarization;
};

// Hand-calibrated expected accuracies per task.
constexpr AccuracyRow kAccuracy[] = {
    {"Qwen/Qwen2.5-0.5B-Instruct", 0.38, 0.42, 0.40, 0.22, 0.40},
    {"Qwen/Qwen2.5-1.5B-Instruct", 0.48, 0.50, 0.50, 0.38, 0.48},
    {"Qwen/Qwen2.5-3B-Instruct", 0.56, 0.58, 0.58, 0.52, 0.55},
    {"Qwen/Qwen2.5-7B", 0.66, 0.66, 0.66, 0.66, 0.62},
    {"Qwen/Qwen2.5-14B-Instruct", 0.72, 0.70, 0.72, 0.74, 0.66},
    {"mistralai/Mistral-7B-Instruct-v0.3", 0.62, 0.68, 0.64, 0.44, 0.64},
    {"google/gemma-3-1b-it", 0.40, 0.46, 0.44, 0.26, 0.44},
    {"google/gemma-3-4b-it", 0.58, 0.62, 0.60, 0.50, 0.60},
    {"google/gemma-3-12b-it", 0.70, 0.72, 0.72, 0.66, 0.70},
    {"google/gemma-3-27b-it", 0.80, 0.78, 0.80, 0.80, 0.76},
    {"meta-llama/Llama-3.1-1B-Instruct", 0.42, 0.46, 0.42, 0.24, 0.42},
    {"meta-llama/Llama-3.2-3B-Instruct", 0.54, 0.58, 0.56, 0.44, 0.54},
    {"meta-llama/Llama-3.1-8B-Instruct", 0.66, 0.70, 0.68, 0.58, 0.66},
    {"microsoft/Phi-4-mini-instruct", 0.60, 0.60, 0.64, 0.62, 0.56},
    {"microsoft/Phi-4-14B", 0.72, 0.70, 0.74, 0.75, 0.68},
    {"01-ai/Yi-34B", 0.70, 0.72, 0.70, 0.60, 0.70},
};

struct TopicRow {
  const char* id;
  double t0, t1, t2;
};

constexpr TopicRow kTopicEffects[] = {
    {"meta-llama/Llama-3.1-8B-Instruct", 0.03, 0.0, -0.01},
    {"mistralai/Mistral-7B-Instruct-v0.3", 0.0, 0.03, 0.0},
    {"Qwen/Qwen2.5-7B", -0.01, 0.0, 0.03},
    {"microsoft/Phi-4-mini-instruct", 0.0, -0.02, 0.02},
};

OracleSpec base_spec() {
  OracleSpec o;
  o.tasks = pool::default_task_labels();
  o.topics = 3;
  // Hard, medium, easy text. Small models lose more on hard text.
  o.level_effect = {-0.10, 0.0, 0.04};
  o.output_tokens = {12, 28, 8, 150, 90};
  o.accuracy_bounds.assign(o.tasks.size(), reward::AccuracyBounds{});
  o.accuracy_noise_std = 0.05;
  o.energy_noise_rel = 0.05;
  return o;
}

ModelProfile profile_from(const pool::ModelEntry& m, std::size_t topics) {
  ModelProfile p;
  p.id = m.id;
  p.topic_effect.assign(topics, 0.0);
  p.fragility = 1.0 / (1.0 + m.params_b / 3.0);
  p.energy_per_token_wh = m.energy_per_token_wh;
  p.energy_base_wh = kPrefillTokens * m.energy_per_token_wh;
  return p;
}

std::size_t task_index(const OracleSpec& o, std::string_view task) {
  const auto it = std::find(o.tasks.begin(), o.tasks.end(), task);
  if (it == o.tasks.end()) {
    throw_invalid("oracle: unknown task '" + std::string(task) + "'");
  }
  return static_cast<std::size_t>(it - o.tasks.begin());
}

ModelProfile& mutable_model(OracleSpec& o, std::string_view id) {
  for (auto& m : o.models) {
    if (m.id == id) return m;
  }
  throw_invalid("oracle: unknown model '" + std::string(id) + "'");
}

}  // namespace

Cell OracleSpec::cell_at(std::size_t index) const {
  if (index >= num_cells()) throw_invalid("oracle: cell index out of range");
  Cell c;
  c.level = index % levels();
  index /= levels();
  c.topic = index % topics;
  c.task = index / topics;
  return c;
}

void OracleSpec::validate() const {
  if (tasks.empty()) throw_invalid("oracle: no tasks");
  if (topics == 0) throw_invalid("oracle: topics must be positive");
  if (level_effect.empty()) throw_invalid("oracle: no levels");
  if (output_tokens.size() != tasks.size() ||
      accuracy_bounds.size() != tasks.size()) {
    throw_invalid("oracle: per-task tables must have one entry per task");
  }
  if (!(accuracy_noise_std >= 0) || !(energy_noise_rel >= 0) ||
      energy_noise_rel * kEnergyNoiseClamp >= 1.0) {
    throw_invalid("oracle: noise parameters out of range");
  }
  if (e_max_wh < 0) throw_invalid("oracle: e_max_wh must be nonnegative");
  if (models.empty()) throw_invalid("oracle: no models");
  for (const auto& m : models) {
    if (m.task_accuracy.size() != tasks.size() ||
        m.topic_effect.size() != topics) {
      throw_invalid("oracle: model '" + m.id + "' has mis-sized tables");
    }
    if (!(m.energy_base_wh >= 0) || !(m.energy_per_token_wh > 0) ||
        !(m.fragility >= 0)) {
      throw_invalid("oracle: model '" + m.id + "' has an invalid profile");
    }
  }
}

bool OracleSpec::has_model(std::string_view id) const {
  return std::any_of(models.begin(), models.end(),
                     [&](const ModelProfile& m) { return m.id == id; });
}

const ModelProfile& OracleSpec::model(std::string_view id) const {
  for (const auto& m : models) {
    if (m.id == id) return m;
  }
  throw_invalid("oracle: no profile for model '" + std::string(id) + "'");
}

double OracleSpec::mean_accuracy(std::string_view model_id, const Cell& cell) const {
  if (cell.task >= tasks.size() || cell.topic >= topics || cell.level >= levels()) {
    throw_invalid("oracle: cell outside the oracle's grid");
  }
  const auto& m = model(model_id);
  const double mu = m.task_accuracy[cell.task] +
                    m.fragility * level_effect[cell.level] +
                    m.topic_effect[cell.topic];
  return std::clamp(mu, kMinAccuracy, kMaxAccuracy);
}

double OracleSpec::expected_energy_wh(std::string_view model_id,
                                      std::size_t task) const {
  if (task >= tasks.size()) throw_invalid("oracle: task index out of range");
  const auto& m = model(model_id);
  return m.energy_base_wh + m.energy_per_token_wh * output_tokens[task];
}

double OracleSpec::energy_scale_wh() const {
  if (e_max_wh > 0) return e_max_wh;
  double best = 0.0;
  for (const auto& m : models) {
    for (std::size_t t = 0; t < tasks.size(); ++t) {
      best = std::max(best, expected_energy_wh(m.id, t));
    }
  }
  return best * (1.0 + kEnergyNoiseClamp * energy_noise_rel);
}

double OracleSpec::expected_energy_norm(std::string_view model_id,
                                        std::size_t task) const {
  return reward::normalize_energy(expected_energy_wh(model_id, task),
                                  energy_scale_wh());
}

double OracleSpec::expected_reward(const reward::RewardParams& params,
                                   std::string_view model_id,
                                   const Cell& cell) const {
  const double acc = reward::normalize_accuracy(mean_accuracy(model_id, cell),
                                                accuracy_bounds[cell.task]);
  return reward::reward(params, acc, expected_energy_norm(model_id, cell.task));
}

nlohmann::json OracleSpec::to_json() const {
  nlohmann::json models_j = nlohmann::json::array();
  for (const auto& m : models) {
    models_j.push_back({{"id", m.id},
                        {"task_accuracy", m.task_accuracy},
                        {"topic_effect", m.topic_effect},
                        {"fragility", m.fragility},
                        {"energy_base_wh", m.energy_base_wh},
                        {"energy_per_token_wh", m.energy_per_token_wh}});
  }
  nlohmann::json bounds = nlohmann::json::array();
  for (const auto& b : accuracy_bounds) bounds.push_back({b.min, b.max});
  return {{"tasks", tasks},
          {"topics", topics},
          {"level_effect", level_effect},
          {"output_tokens", output_tokens},
          {"accuracy_bounds", bounds},
          {"accuracy_noise_std", accuracy_noise_std},
          {"energy_noise_rel", energy_noise_rel},
          {"e_max_wh", e_max_wh},
          {"models", models_j}};
}

OracleSpec OracleSpec::from_json(const nlohmann::json& j) {
  OracleSpec o;
  try {
    o.tasks = j.at("tasks").get<std::vector<std::string>>();
    o.topics = j.at("topics").get<std::size_t>();
    o.level_effect = j.at("level_effect").get<std::vector<double>>();
    o.output_tokens = j.at("output_tokens").get<std::vector<double>>();
    if (j.contains("accuracy_bounds")) {
      for (const auto& b : j.at("accuracy_bounds")) {
        o.accuracy_bounds.push_back({b.at(0).get<double>(), b.at(1).get<double>()});
      }
    } else {
      o.accuracy_bounds.assign(o.tasks.size(), reward::AccuracyBounds{});
    }
    o.accuracy_noise_std = j.value("accuracy_noise_std", o.accuracy_noise_std);
    o.energy_noise_rel = j.value("energy_noise_rel", o.energy_noise_rel);
    o.e_max_wh = j.value("e_max_wh", 0.0);
    for (const auto& m : j.at("models")) {
      ModelProfile p;
      p.id = m.at("id").get<std::string>();
      p.task_accuracy = m.at("task_accuracy").get<std::vector<double>>();
      p.topic_effect = m.value("topic_effect", std::vector<double>(o.topics, 0.0));
      p.fragility = m.value("fragility", 0.0);
      p.energy_base_wh = m.value("energy_base_wh", 0.0);
      p.energy_per_token_wh = m.at("energy_per_token_wh").get<double>();
      o.models.push_back(std::move(p));
    }
  } catch (const nlohmann::json::exception& e) {
    throw_invalid(std::string("oracle spec: ") + e.what());
  }
  o.validate();
  return o;
}

OracleSpec OracleSpec::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw_invalid("cannot open oracle spec " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw_invalid("oracle spec " + path.string() + ": " + e.what());
  }
  return from_json(j);
}

void OracleSpec::save(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw_invalid("cannot write oracle spec " + path.string());
  out << to_json().dump(2) << '\n';
}

OracleSpec default_oracle() {
  OracleSpec o = base_spec();
  const auto entries = pool::default_pool_entries();
  for (const auto& e : entries) {
    auto p = profile_from(e, o.topics);
    for (const auto& row : kAccuracy) {
      if (e.id == row.id) {
        p.task_accuracy = {row.qa, row.completion, row.commonsense, row.math,
                           row.summarization};
      }
    }
    for (const auto& row : kTopicEffects) {
      if (e.id == row.id) p.topic_effect = {row.t0, row.t1, row.t2};
    }
    o.models.push_back(std::move(p));
  }
  o.validate();
  return o;
}

OracleSpec task_separable_oracle() {
  OracleSpec o = default_oracle();
  std::fill(o.level_effect.begin(), o.level_effect.end(), 0.0);
  for (auto& m : o.models) {
    std::fill(m.topic_effect.begin(), m.topic_effect.end(), 0.0);
  }
  const std::map<std::string, std::string> specialists = {
      {"qa", "meta-llama/Llama-3.1-8B-Instruct"},
      {"completion", "mistralai/Mistral-7B-Instruct-v0.3"},
      {"commonsense", "microsoft/Phi-4-mini-instruct"},
      {"math", "Qwen/Qwen2.5-7B"},
      {"summarization", "google/gemma-3-12b-it"},
  };
  for (const auto& [task, id] : specialists) {
    mutable_model(o, id).task_accuracy[task_index(o, task)] = 0.92;
  }
  return o;
}

OracleSpec context_free_oracle() {
  OracleSpec o = default_oracle();
  std::fill(o.level_effect.begin(), o.level_effect.end(), 0.0);
  std::fill(o.output_tokens.begin(), o.output_tokens.end(), 40.0);
  for (auto& m : o.models) {
    std::fill(m.topic_effect.begin(), m.topic_effect.end(), 0.0);
    double mean = 0.0;
    for (double a : m.task_accuracy) mean += a;
    mean /= static_cast<double>(m.task_accuracy.size());
    std::fill(m.task_accuracy.begin(), m.task_accuracy.end(), mean);
  }
  return o;
}

OracleSpec dominance_oracle(const std::string& dominant_id) {
  OracleSpec o = default_oracle();
  constexpr double kAccuracyMargin = 0.08;
  constexpr double kEnergyFactor = 0.9;

  ModelProfile best;
  best.id = dominant_id;
  best.task_accuracy.assign(o.tasks.size(), 0.0);
  best.topic_effect.assign(o.topics, -1.0);
  best.fragility = std::numeric_limits<double>::infinity();
  best.energy_base_wh = std::numeric_limits<double>::infinity();
  best.energy_per_token_wh = std::numeric_limits<double>::infinity();
  for (const auto& m : o.models) {
    if (m.id == dominant_id) continue;
    for (std::size_t t = 0; t < o.tasks.size(); ++t) {
      best.task_accuracy[t] = std::max(best.task_accuracy[t], m.task_accuracy[t]);
    }
    for (std::size_t k = 0; k < o.topics; ++k) {
      best.topic_effect[k] = std::max(best.topic_effect[k], m.topic_effect[k]);
    }
    best.fragility = std::min(best.fragility, m.fragility);
    best.energy_base_wh = std::min(best.energy_base_wh, m.energy_base_wh);
    best.energy_per_token_wh =
        std::min(best.energy_per_token_wh, m.energy_per_token_wh);
  }
  for (double& a : best.task_accuracy) a += kAccuracyMargin;
  best.energy_base_wh *= kEnergyFactor;
  best.energy_per_token_wh *= kEnergyFactor;

  // Freeze the normalization so adding the dominant profile does not move it.
  o.e_max_wh = o.energy_scale_wh();
  bool replaced = false;
  for (auto& m : o.models) {
    if (m.id == dominant_id) {
      m = best;
      replaced = true;
    }
  }
  if (!replaced) o.models.push_back(best);
  o.validate();
  return o;
}

OracleSpec oracle_by_name(std::string_view name) {
  if (name == "default") return default_oracle();
  if (name == "task_separable") return task_separable_oracle();
  if (name == "context_free") return context_free_oracle();
  if (name.starts_with("dominance:")) {
    return dominance_oracle(std::string(name.substr(10)));
  }
  throw_invalid("unknown oracle '" + std::string(name) + "'");
}

reward::Observation sample_outcome(const OracleSpec& oracle,
                                   const pool::ModelEntry& model,
                                   const Cell& cell, std::mt19937_64& rng) {
  const double mu = oracle.mean_accuracy(model.id, cell);
  std::normal_distribution<double> normal(0.0, 1.0);
  reward::Observation obs;
  obs.accuracy_raw =
      std::clamp(mu + oracle.accuracy_noise_std * normal(rng), 0.0, 1.0);
  obs.accuracy_norm = reward::normalize_accuracy(
      obs.accuracy_raw, oracle.accuracy_bounds[cell.task]);
  const double z = std::clamp(normal(rng), -OracleSpec::kEnergyNoiseClamp,
                              OracleSpec::kEnergyNoiseClamp);
  obs.energy_wh = oracle.expected_energy_wh(model.id, cell.task) *
                  (1.0 + oracle.energy_noise_rel * z);
  obs.energy_norm = reward::normalize_energy(obs.energy_wh, oracle.energy_scale_wh());
  obs.latency_ms = pool::estimate_latency_ms(model, oracle.tasks[cell.task]);
  return obs;
}

OptimalArm optimal_arm(const OracleSpec& oracle, const Cell& cell,
                       std::span<const std::string> feasible,
                       const reward::RewardParams& params) {
  if (feasible.empty()) {
    throw Error(ErrorCode::kNoFeasibleArm, "optimal_arm: empty feasible set");
  }
  OptimalArm best{feasible.front(), -std::numeric_limits<double>::infinity()};
  for (const auto& id : feasible) {
    const double r = oracle.expected_reward(params, id, cell);
    if (r > best.expected_reward) best = {id, r};
  }
  return best;
}

std::vector<ParetoPoint> pareto_front(const std::vector<ParetoPoint>& points) {
  std::vector<ParetoPoint> front;
  for (const auto& p : points) {
    bool dominated = false;
    for (const auto& q : points) {
      if (q.accuracy >= p.accuracy && q.energy <= p.energy &&
          (q.accuracy > p.accuracy || q.energy < p.energy)) {
        dominated = true;
        break;
      }
    }
    if (!dominated) front.push_back(p);
  }
  return front;
}

std::vector<ParetoPoint> single_model_points(const OracleSpec& oracle,
                                             const std::vector<std::string>& ids) {
  std::vector<ParetoPoint> out;
  const double n = static_cast<double>(oracle.num_cells());
  for (const auto& id : ids) {
    ParetoPoint p{id, 0.0, 0.0};
    for (std::size_t i = 0; i < oracle.num_cells(); ++i) {
      const Cell c = oracle.cell_at(i);
      p.accuracy += reward::normalize_accuracy(oracle.mean_accuracy(id, c),
                                               oracle.accuracy_bounds[c.task]) / n;
      p.energy += oracle.expected_energy_wh(id, c.task) / n;
    }
    out.push_back(std::move(p));
  }
  return out;
}

}  // namespace ecoroute::sim
