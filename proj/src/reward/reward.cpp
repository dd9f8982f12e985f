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

#include "ecoroute/reward/reward.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>

#include "ecoroute/error.hpp"

namespace ecoroute::reward {

RewardParams::RewardParams(double lambda) : lambda_(lambda) {
  if (!(lambda >= 0.0 && lambda <= 1.0)) {
    throw_invalid("lambda must lie in [0, 1]");
  }
}

double normalize_accuracy(double raw, AccuracyBounds bounds) {
  if (!(bounds.min < bounds.max)) {
    throw_invalid("normalize_accuracy: acc_min must be below acc_max");
  }
  if (std::isnan(raw)) throw_invalid("normalize_accuracy: NaN accuracy");
  return std::clamp((raw - bounds.min) / (bounds.max - bounds.min), 0.0, 1.0);
}

double normalize_energy(double wh, double e_max) {
  if (!(e_max > 0.0)) throw_invalid("normalize_energy: e_max must be positive");
  if (std::isnan(wh) || wh < 0.0) {
    throw_invalid("normalize_energy: energy must be a nonnegative number");
  }
  return std::min(wh / e_max, 1.0);
}

double reward(const RewardParams& params, double accuracy_norm,
              double energy_norm) {
  return params.alpha_weight() * accuracy_norm -
         params.beta_weight() * energy_norm;
}

double reward(const RewardParams& params, const Observation& obs) {
  return reward(params, obs.accuracy_norm, obs.energy_norm);
}

double instantaneous_regret(
    const std::string& chosen_arm,
    const std::vector<std::pair<std::string, double>>& feasible_rewards) {
  if (feasible_rewards.empty()) {
    throw_invalid("instantaneous_regret: no feasible rewards");
  }
  double best = -std::numeric_limits<double>::infinity();
  const double* chosen = nullptr;
  for (const auto& [arm, r] : feasible_rewards) {
    best = std::max(best, r);
    if (arm == chosen_arm) chosen = &r;
  }
  if (chosen == nullptr) {
    throw_invalid("instantaneous_regret: chosen arm '" + chosen_arm +
                  "' is not in the feasible set");
  }
  return best - *chosen;
}

RegretLedger::RegretLedger(std::size_t window) : window_(window) {
  if (window_ == 0) throw_invalid("RegretLedger: window must be positive");
}

void RegretLedger::append(std::string arm_id, double reward,
                          double optimal_reward) {
  LedgerEntry e;
  e.step = entries_.size() + 1;
  e.arm_id = std::move(arm_id);
  e.reward = reward;
  e.optimal_reward = optimal_reward;
  e.regret = optimal_reward - reward;
  cumulative_ += e.regret;
  entries_.push_back(std::move(e));
}

std::vector<double> RegretLedger::cumulative_series() const {
  std::vector<double> out;
  out.reserve(entries_.size());
  double sum = 0.0;
  for (const auto& e : entries_) {
    sum += e.regret;
    out.push_back(sum);
  }
  return out;
}

std::vector<double> RegretLedger::moving_average() const {
  std::vector<double> out;
  out.reserve(entries_.size());
  for (std::size_t t = 0; t < entries_.size(); ++t) {
    const std::size_t first = t + 1 >= window_ ? t + 1 - window_ : 0;
    double sum = 0.0;
    for (std::size_t i = first; i <= t; ++i) sum += entries_[i].regret;
    out.push_back(sum / static_cast<double>(t + 1 - first));
  }
  return out;
}

void RegretLedger::write_csv(std::ostream& out) const {
  const auto cum = cumulative_series();
  const auto ma = moving_average();
  out << "step,arm_id,reward,optimal_reward,regret,cumulative_regret,moving_avg\n";
  out << std::setprecision(17);
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    const auto& e = entries_[i];
    out << e.step << ',' << e.arm_id << ',' << e.reward << ','
        << e.optimal_reward << ',' << e.regret << ',' << cum[i] << ',' << ma[i]
        << '\n';
  }
}

}  // namespace ecoroute::reward
