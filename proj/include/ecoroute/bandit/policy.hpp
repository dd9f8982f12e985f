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
#include <optional>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <Eigen/Core>
#include <nlohmann/json_fwd.hpp>

namespace ecoroute::bandit {

enum class PolicyKind {
  kLinUcb,
  kEpsGreedy,            // context-free: ranks arms by running mean reward
  kEpsGreedyContextual,  // ranks arms by the ridge estimate theta^T x
  kThompson,
};

std::string_view to_string(PolicyKind kind);
PolicyKind parse_policy_kind(std::string_view name);

struct PolicyConfig {
  PolicyKind kind = PolicyKind::kLinUcb;
  double alpha_ucb = 0.1;
  double lambda_reg = 0.05;
  double eps0 = 1.0;
  double eps_decay = 0.98;
  double eps_min = 0.01;
  double sigma = 0.01;
  std::uint64_t seed = 0;
  // Sherman-Morrison updates between exact re-inversions of A, per arm.
  std::uint64_t refresh_interval = 1000;

  void validate() const;
  nlohmann::json to_json() const;
  static PolicyConfig from_json(const nlohmann::json& j);
};

// Per-arm ridge statistics. A = lambda_reg * I + sum x x^T, b = sum r x.
struct ArmState {
  std::string id;
  // Bumped every time an id is (re-)registered so that late feedback can be
  // matched to the statistics it was routed against.
  std::uint64_t generation = 0;
  Eigen::MatrixXd A;
  Eigen::VectorXd b;
  Eigen::MatrixXd A_inv;
  Eigen::VectorXd theta;
  std::uint64_t pulls = 0;
  double reward_sum = 0.0;
  std::uint64_t updates_since_refresh = 0;

  double mean_reward() const noexcept {
    return pulls == 0 ? 0.0 : reward_sum / static_cast<double>(pulls);
  }
};

struct ArmScore {
  std::string arm_id;
  double score = 0.0;
};

struct Selection {
  std::string arm_id;
  double score = 0.0;
  bool exploration = false;
  std::vector<ArmScore> scores;  // feasible arms, in registration order
};

// One contextual bandit over a mutable set of arms.
//
// Not internally synchronized: select() and update() must be serialized by
// the owner. Ties always resolve to the arm registered first.
class Policy {
 public:
  Policy(PolicyConfig config, const std::vector<std::string>& arms,
         std::size_t dimension);

  const PolicyConfig& config() const noexcept { return config_; }
  PolicyKind kind() const noexcept { return config_.kind; }
  std::size_t dimension() const noexcept { return dimension_; }
  std::uint64_t select_calls() const noexcept { return select_calls_; }

  const std::vector<ArmState>& arms() const noexcept { return arms_; }
  const std::vector<ArmState>& archived() const noexcept { return archived_; }
  std::vector<std::string> arm_ids() const;
  bool has_arm(std::string_view id) const;
  const ArmState& arm(std::string_view id) const;

  // Dispatches on config().kind. `feasible` must be a non-empty subset of the
  // registered arms.
  Selection select(const Eigen::VectorXd& x, std::span<const std::string> feasible);

  // argmax theta^T x + alpha * sqrt(x^T A^-1 x).
  Selection select_linucb(const Eigen::VectorXd& x,
                          std::span<const std::string> feasible) const;
  // Decaying epsilon-greedy; `x` is ignored by the context-free kind.
  Selection select_eps_greedy(const Eigen::VectorXd* x,
                              std::span<const std::string> feasible);
  // Samples theta ~ N(theta_hat, sigma^2 A^-1) per arm, argmax theta^T x.
  Selection select_thompson(const Eigen::VectorXd& x,
                            std::span<const std::string> feasible);

  // max(eps_min, eps0 * decay^t) with t = number of earlier select calls.
  double epsilon() const;
  static double epsilon_at(const PolicyConfig& config, std::uint64_t t);

  void update(std::string_view arm_id, const Eigen::VectorXd& x, double reward);
  // Applies a reward to the archived statistics of a removed arm generation.
  void update_archived(std::string_view arm_id, std::uint64_t generation,
                       const Eigen::VectorXd& x, double reward);

  void add_arm(const std::string& arm_id);
  // Moves the arm's statistics to the archive; it is never selected again.
  void remove_arm(std::string_view arm_id);

  // Checkpoint: {"kind", "config", "d", "arms": [{"id", "generation", "A",
  // "b", "pulls", "reward_sum"}], "archived": [...], "t", "rng_state"}.
  // A is row-major. Doubles round-trip bit-exactly.
  nlohmann::json checkpoint() const;
  static Policy restore(const nlohmann::json& j);

 private:
  Policy() = default;

  std::vector<std::size_t> resolve(std::span<const std::string> feasible) const;
  ArmState fresh_arm(const std::string& id);
  void apply_update(ArmState& arm, const Eigen::VectorXd& x, double reward);
  void check_dimension(const Eigen::VectorXd& x, std::string_view op) const;
  static Selection finish(const std::vector<ArmState>& arms,
                          const std::vector<std::size_t>& feasible,
                          const std::vector<double>& scores);

  PolicyConfig config_;
  std::size_t dimension_ = 0;
  std::vector<ArmState> arms_;
  std::vector<ArmState> archived_;
  std::unordered_map<std::string, std::size_t> index_;
  std::unordered_map<std::string, std::uint64_t> generations_;
  std::uint64_t select_calls_ = 0;
  std::mt19937_64 rng_;
};

}  // namespace ecoroute::bandit
