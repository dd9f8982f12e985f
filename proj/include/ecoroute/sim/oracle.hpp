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

#include <cstddef>
#include <filesystem>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "ecoroute/pool/model_pool.hpp"
#include "ecoroute/reward/reward.hpp"

namespace ecoroute::sim {

// Latent description of a query. The simulator knows it; the router only
// sees the text.
struct Cell {
  std::size_t task = 0;
  std::size_t topic = 0;
  std::size_t level = 0;  // equals the intended complexity bin

  friend bool operator==(const Cell&, const Cell&) = default;
};

// Ground truth for one model. Expected accuracy is additive:
// task_accuracy[task] + fragility * level_effect[level] + topic_effect[topic],
// clamped to [kMinAccuracy, kMaxAccuracy].
struct ModelProfile {
  std::string id;
  std::vector<double> task_accuracy;
  std::vector<double> topic_effect;
  double fragility = 0.0;
  double energy_base_wh = 0.0;
  double energy_per_token_wh = 0.0;
};

struct OracleSpec {
  static constexpr double kMinAccuracy = 0.05;
  static constexpr double kMaxAccuracy = 0.95;
  // Energy noise is a symmetric clamped normal; e_max leaves this many
  // relative standard deviations of headroom above the largest mean.
  static constexpr double kEnergyNoiseClamp = 3.0;

  std::vector<std::string> tasks;
  std::size_t topics = 3;
  std::vector<double> level_effect;  // one entry per level
  std::vector<double> output_tokens;  // mean generated tokens, per task
  std::vector<reward::AccuracyBounds> accuracy_bounds;  // per task
  double accuracy_noise_std = 0.05;
  double energy_noise_rel = 0.05;
  double e_max_wh = 0.0;  // 0 means derive from the profiles
  std::vector<ModelProfile> models;

  std::size_t levels() const noexcept { return level_effect.size(); }
  std::size_t num_cells() const noexcept {
    return tasks.size() * topics * levels();
  }
  Cell cell_at(std::size_t index) const;

  void validate() const;
  bool has_model(std::string_view id) const;
  const ModelProfile& model(std::string_view id) const;

  double mean_accuracy(std::string_view model_id, const Cell& cell) const;
  double expected_energy_wh(std::string_view model_id, std::size_t task) const;
  // The normalization constant used for every energy reading.
  double energy_scale_wh() const;
  double expected_energy_norm(std::string_view model_id, std::size_t task) const;
  double expected_reward(const reward::RewardParams& params,
                         std::string_view model_id, const Cell& cell) const;

  nlohmann::json to_json() const;
  static OracleSpec from_json(const nlohmann::json& j);
  static OracleSpec load(const std::filesystem::path& path);
  void save(const std::filesystem::path& path) const;
};

// Default regime: the sixteen default pool models over five tasks,
// three topics and three complexity levels. Gemma-3-27B has the highest
// accuracy in every cell and Qwen2.5-0.5B the lowest energy.
OracleSpec default_oracle();

// Optimum depends on the task only: no topic or level effects, and each
// task has a distinct specialist model.
OracleSpec task_separable_oracle();

// Optimum is the same arm in every cell and under every feature set.
OracleSpec context_free_oracle();

// Default oracle where `dominant_id` is more accurate than every other model
// in every cell and cheaper than every other model on every task, so it has
// the strictly best expected reward at any lambda.
OracleSpec dominance_oracle(const std::string& dominant_id);

OracleSpec oracle_by_name(std::string_view name);

reward::Observation sample_outcome(const OracleSpec& oracle,
                                   const pool::ModelEntry& model,
                                   const Cell& cell, std::mt19937_64& rng);

struct OptimalArm {
  std::string arm_id;
  double expected_reward = 0.0;
};

// Brute-force argmax of expected reward over `feasible`; ties go to the
// earliest id in the list.
OptimalArm optimal_arm(const OracleSpec& oracle, const Cell& cell,
                       std::span<const std::string> feasible,
                       const reward::RewardParams& params);

struct ParetoPoint {
  std::string label;
  double accuracy = 0.0;
  double energy = 0.0;
};

// Points not dominated by any other point (higher-or-equal accuracy and
// lower-or-equal energy, strictly better in one). Input order is kept.
std::vector<ParetoPoint> pareto_front(const std::vector<ParetoPoint>& points);

// Expected (accuracy, energy Wh) of always routing to each model, averaged
// uniformly over the oracle's cells.
std::vector<ParetoPoint> single_model_points(const OracleSpec& oracle,
                                             const std::vector<std::string>& ids);

}  // namespace ecoroute::sim
