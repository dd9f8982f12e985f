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
#include <ostream>
#include <string>
#include <utility>
#include <vector>

namespace ecoroute::reward {

// Weighted-sum scalarization weights: accuracy gets 1 - lambda, energy gets
// lambda.
class RewardParams {
 public:
  explicit RewardParams(double lambda = 0.4);

  double lambda() const noexcept { return lambda_; }
  double alpha_weight() const noexcept { return 1.0 - lambda_; }
  double beta_weight() const noexcept { return lambda_; }

 private:
  double lambda_;
};

struct AccuracyBounds {
  double min = 0.0;
  double max = 1.0;
};

struct Observation {
  double accuracy_raw = 0.0;
  double accuracy_norm = 0.0;  // [0, 1]
  double energy_wh = 0.0;
  double energy_norm = 0.0;  // [0, 1]
  double latency_ms = 0.0;
};

// (raw - min) / (max - min), clamped to [0, 1].
double normalize_accuracy(double raw, AccuracyBounds bounds);

// min(wh / e_max, 1). e_max is the pool's profiled maximum per-query energy.
double normalize_energy(double wh, double e_max);

// (1 - lambda) * accuracy_norm - lambda * energy_norm, in [-1, 1].
double reward(const RewardParams& params, double accuracy_norm,
              double energy_norm);
double reward(const RewardParams& params, const Observation& obs);

// max over the feasible rewards minus the chosen reward. The chosen arm must
// appear in `feasible_rewards`.
double instantaneous_regret(const std::string& chosen_arm,
                            const std::vector<std::pair<std::string, double>>&
                                feasible_rewards);

struct LedgerEntry {
  std::size_t step = 0;
  std::string arm_id;
  double reward = 0.0;
  double optimal_reward = 0.0;
  double regret = 0.0;
};

// Append-only per-step regret record. Single writer; copy for a snapshot.
class RegretLedger {
 public:
  static constexpr std::size_t kDefaultWindow = 50;

  explicit RegretLedger(std::size_t window = kDefaultWindow);

  // Regret is optimal_reward - reward; both refer to the same feasible set.
  void append(std::string arm_id, double reward, double optimal_reward);

  std::size_t size() const noexcept { return entries_.size(); }
  bool empty() const noexcept { return entries_.empty(); }
  std::size_t window() const noexcept { return window_; }
  const std::vector<LedgerEntry>& entries() const noexcept { return entries_; }
  double cumulative() const noexcept { return cumulative_; }

  // Prefix sums of regret.
  std::vector<double> cumulative_series() const;
  // Mean of the trailing min(window, t) regrets at each step t.
  std::vector<double> moving_average() const;

  // step,arm_id,reward,optimal_reward,regret,cumulative_regret,moving_avg
  void write_csv(std::ostream& out) const;

 private:
  std::size_t window_;
  std::vector<LedgerEntry> entries_;
  double cumulative_ = 0.0;
};

}  // namespace ecoroute::reward
