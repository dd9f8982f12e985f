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

#include "ecoroute/bandit/policy.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <Eigen/Cholesky>
#include <nlohmann/json.hpp>

#include "ecoroute/error.hpp"

namespace ecoroute::bandit {
namespace {

Eigen::MatrixXd exact_inverse(const Eigen::MatrixXd& A) {
  const auto n = A.rows();
  return A.llt().solve(Eigen::MatrixXd::Identity(n, n));
}

nlohmann::json arm_to_json(const ArmState& arm) {
  std::vector<double> a(static_cast<std::size_t>(arm.A.size()));
  for (Eigen::Index r = 0; r < arm.A.rows(); ++r) {
    for (Eigen::Index c = 0; c < arm.A.cols(); ++c) {
      a[static_cast<std::size_t>(r * arm.A.cols() + c)] = arm.A(r, c);
    }
  }
  std::vector<double> b(arm.b.data(), arm.b.data() + arm.b.size());
  return {{"id", arm.id},   {"generation", arm.generation},
          {"A", a},         {"b", b},
          {"pulls", arm.pulls}, {"reward_sum", arm.reward_sum}};
}

ArmState arm_from_json(const nlohmann::json& j, std::size_t d) {
  ArmState arm;
  arm.id = j.at("id").get<std::string>();
  arm.generation = j.value("generation", std::uint64_t{1});
  const auto a = j.at("A").get<std::vector<double>>();
  const auto b = j.at("b").get<std::vector<double>>();
  if (a.size() != d * d || b.size() != d) {
    throw_invalid("policy checkpoint: arm '" + arm.id + "' has wrong shape");
  }
  const auto n = static_cast<Eigen::Index>(d);
  arm.A.resize(n, n);
  for (Eigen::Index r = 0; r < n; ++r) {
    for (Eigen::Index c = 0; c < n; ++c) {
      arm.A(r, c) = a[static_cast<std::size_t>(r * n + c)];
    }
  }
  arm.b = Eigen::Map<const Eigen::VectorXd>(b.data(), n);
  arm.pulls = j.at("pulls").get<std::uint64_t>();
  arm.reward_sum = j.value("reward_sum", 0.0);
  arm.A_inv = exact_inverse(arm.A);
  arm.theta = arm.A_inv * arm.b;
  return arm;
}

}  // namespace

std::string_view to_string(PolicyKind kind) {
  switch (kind) {
    case PolicyKind::kLinUcb: return "linucb";
    case PolicyKind::kEpsGreedy: return "eps_greedy";
    case PolicyKind::kEpsGreedyContextual: return "eps_greedy_contextual";
    case PolicyKind::kThompson: return "thompson";
  }
  return "unknown";
}

PolicyKind parse_policy_kind(std::string_view name) {
  if (name == "linucb") return PolicyKind::kLinUcb;
  if (name == "eps_greedy") return PolicyKind::kEpsGreedy;
  if (name == "eps_greedy_contextual") return PolicyKind::kEpsGreedyContextual;
  if (name == "thompson") return PolicyKind::kThompson;
  throw_invalid("unknown policy kind '" + std::string(name) + "'");
}

void PolicyConfig::validate() const {
  if (!(alpha_ucb >= 0) || !std::isfinite(alpha_ucb)) {
    throw_invalid("policy config: alpha_ucb must be a nonnegative real");
  }
  if (!(lambda_reg > 0) || !std::isfinite(lambda_reg)) {
    throw_invalid("policy config: lambda_reg must be positive");
  }
  auto unit = [](double v) { return v > 0 && v <= 1; };
  if (!unit(eps0) || !unit(eps_decay) || !unit(eps_min)) {
    throw_invalid("policy config: eps0, decay and eps_min must lie in (0, 1]");
  }
  if (eps_min > eps0) throw_invalid("policy config: eps_min must not exceed eps0");
  if (!(sigma > 0) || !std::isfinite(sigma)) {
    throw_invalid("policy config: sigma must be positive");
  }
  if (refresh_interval == 0) {
    throw_invalid("policy config: refresh_interval must be positive");
  }
}

nlohmann::json PolicyConfig::to_json() const {
  return {{"kind", to_string(kind)},     {"alpha_ucb", alpha_ucb},
          {"lambda_reg", lambda_reg},    {"eps0", eps0},
          {"eps_decay", eps_decay},      {"eps_min", eps_min},
          {"sigma", sigma},              {"seed", seed},
          {"refresh_interval", refresh_interval}};
}

PolicyConfig PolicyConfig::from_json(const nlohmann::json& j) {
  PolicyConfig c;
  try {
    if (j.contains("kind")) c.kind = parse_policy_kind(j.at("kind").get<std::string>());
    c.alpha_ucb = j.value("alpha_ucb", c.alpha_ucb);
    c.lambda_reg = j.value("lambda_reg", c.lambda_reg);
    c.eps0 = j.value("eps0", c.eps0);
    c.eps_decay = j.value("eps_decay", c.eps_decay);
    c.eps_min = j.value("eps_min", c.eps_min);
    c.sigma = j.value("sigma", c.sigma);
    c.seed = j.value("seed", c.seed);
    c.refresh_interval = j.value("refresh_interval", c.refresh_interval);
  } catch (const nlohmann::json::exception& e) {
    throw_invalid(std::string("policy config: ") + e.what());
  }
  c.validate();
  return c;
}

Policy::Policy(PolicyConfig config, const std::vector<std::string>& arms,
               std::size_t dimension)
    : config_(std::move(config)), dimension_(dimension), rng_(config_.seed) {
  config_.validate();
  if (dimension_ == 0) throw_invalid("init_policy: dimension must be >= 1");
  if (arms.empty()) throw_invalid("init_policy: arm list is empty");
  for (const auto& id : arms) add_arm(id);
}

ArmState Policy::fresh_arm(const std::string& id) {
  const auto n = static_cast<Eigen::Index>(dimension_);
  ArmState arm;
  arm.id = id;
  arm.generation = ++generations_[id];
  arm.A = config_.lambda_reg * Eigen::MatrixXd::Identity(n, n);
  arm.b = Eigen::VectorXd::Zero(n);
  arm.A_inv = (1.0 / config_.lambda_reg) * Eigen::MatrixXd::Identity(n, n);
  arm.theta = Eigen::VectorXd::Zero(n);
  return arm;
}

std::vector<std::string> Policy::arm_ids() const {
  std::vector<std::string> ids;
  ids.reserve(arms_.size());
  for (const auto& a : arms_) ids.push_back(a.id);
  return ids;
}

bool Policy::has_arm(std::string_view id) const {
  return index_.contains(std::string(id));
}

const ArmState& Policy::arm(std::string_view id) const {
  const auto it = index_.find(std::string(id));
  if (it == index_.end()) throw_invalid("unknown arm '" + std::string(id) + "'");
  return arms_[it->second];
}

void Policy::check_dimension(const Eigen::VectorXd& x, std::string_view op) const {
  if (static_cast<std::size_t>(x.size()) != dimension_) {
    throw_invalid(std::string(op) + ": context dimension " +
                  std::to_string(x.size()) + " != " + std::to_string(dimension_));
  }
}

std::vector<std::size_t> Policy::resolve(std::span<const std::string> feasible) const {
  if (feasible.empty()) {
    throw Error(ErrorCode::kNoFeasibleArm, "select: feasible set is empty");
  }
  std::vector<std::size_t> idx;
  idx.reserve(feasible.size());
  for (const auto& id : feasible) {
    const auto it = index_.find(id);
    if (it == index_.end()) {
      throw_invalid("select: feasible arm '" + id + "' is not registered");
    }
    idx.push_back(it->second);
  }
  std::sort(idx.begin(), idx.end());
  idx.erase(std::unique(idx.begin(), idx.end()), idx.end());
  return idx;
}

Selection Policy::finish(const std::vector<ArmState>& arms,
                         const std::vector<std::size_t>& feasible,
                         const std::vector<double>& scores) {
  Selection sel;
  sel.scores.reserve(feasible.size());
  std::size_t best = 0;
  for (std::size_t i = 0; i < feasible.size(); ++i) {
    sel.scores.push_back({arms[feasible[i]].id, scores[i]});
    if (scores[i] > scores[best]) best = i;
  }
  sel.arm_id = arms[feasible[best]].id;
  sel.score = scores[best];
  return sel;
}

Selection Policy::select(const Eigen::VectorXd& x,
                         std::span<const std::string> feasible) {
  switch (config_.kind) {
    case PolicyKind::kLinUcb: {
      auto sel = select_linucb(x, feasible);
      ++select_calls_;
      return sel;
    }
    case PolicyKind::kEpsGreedy:
    case PolicyKind::kEpsGreedyContextual:
      return select_eps_greedy(&x, feasible);
    case PolicyKind::kThompson:
      return select_thompson(x, feasible);
  }
  throw Error(ErrorCode::kInternal, "select: unknown policy kind");
}

Selection Policy::select_linucb(const Eigen::VectorXd& x,
                                std::span<const std::string> feasible) const {
  const auto idx = resolve(feasible);
  check_dimension(x, "select_linucb");
  std::vector<double> scores(idx.size());
  for (std::size_t i = 0; i < idx.size(); ++i) {
    const auto& arm = arms_[idx[i]];
    const double variance = std::max(0.0, x.dot(arm.A_inv * x));
    scores[i] = arm.theta.dot(x) + config_.alpha_ucb * std::sqrt(variance);
  }
  return finish(arms_, idx, scores);
}

double Policy::epsilon_at(const PolicyConfig& config, std::uint64_t t) {
  return std::max(config.eps_min,
                  config.eps0 * std::pow(config.eps_decay, static_cast<double>(t)));
}

double Policy::epsilon() const { return epsilon_at(config_, select_calls_); }

Selection Policy::select_eps_greedy(const Eigen::VectorXd* x,
                                    std::span<const std::string> feasible) {
  const auto idx = resolve(feasible);
  const bool contextual = config_.kind != PolicyKind::kEpsGreedy;
  if (contextual) {
    if (x == nullptr) throw_invalid("select_eps_greedy: contextual variant needs x");
    check_dimension(*x, "select_eps_greedy");
  }
  const double eps = epsilon();
  ++select_calls_;

  std::vector<double> scores(idx.size());
  for (std::size_t i = 0; i < idx.size(); ++i) {
    const auto& arm = arms_[idx[i]];
    scores[i] = contextual ? arm.theta.dot(*x) : arm.mean_reward();
  }
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  if (coin(rng_) < eps) {
    std::uniform_int_distribution<std::size_t> pick(0, idx.size() - 1);
    const std::size_t chosen = pick(rng_);
    Selection sel = finish(arms_, idx, scores);
    sel.arm_id = arms_[idx[chosen]].id;
    sel.score = scores[chosen];
    sel.exploration = true;
    return sel;
  }
  return finish(arms_, idx, scores);
}

Selection Policy::select_thompson(const Eigen::VectorXd& x,
                                  std::span<const std::string> feasible) {
  const auto idx = resolve(feasible);
  check_dimension(x, "select_thompson");
  ++select_calls_;
  std::normal_distribution<double> normal(0.0, 1.0);
  const auto n = static_cast<Eigen::Index>(dimension_);
  Eigen::VectorXd z(n);
  std::vector<double> scores(idx.size());
  for (std::size_t i = 0; i < idx.size(); ++i) {
    const auto& arm = arms_[idx[i]];
    for (Eigen::Index k = 0; k < n; ++k) z[k] = normal(rng_);
    // A^-1 = L L^T, so theta_hat + sigma * L z ~ N(theta_hat, sigma^2 A^-1).
    const Eigen::LLT<Eigen::MatrixXd> chol(arm.A_inv);
    const Eigen::VectorXd lz = chol.matrixL() * z;
    const Eigen::VectorXd sample = arm.theta + config_.sigma * lz;
    scores[i] = sample.dot(x);
  }
  return finish(arms_, idx, scores);
}

void Policy::apply_update(ArmState& arm, const Eigen::VectorXd& x, double reward) {
  arm.A.noalias() += x * x.transpose();
  arm.b += reward * x;
  ++arm.pulls;
  arm.reward_sum += reward;
  if (++arm.updates_since_refresh >= config_.refresh_interval) {
    arm.A_inv = exact_inverse(arm.A);
    arm.updates_since_refresh = 0;
  } else {
    // Sherman-Morrison: (A + x x^T)^-1 = A^-1 - (A^-1 x)(A^-1 x)^T / (1 + x^T A^-1 x).
    const Eigen::VectorXd u = arm.A_inv * x;
    arm.A_inv.noalias() -= (u * u.transpose()) / (1.0 + x.dot(u));
  }
  arm.theta.noalias() = arm.A_inv * arm.b;
}

void Policy::update(std::string_view arm_id, const Eigen::VectorXd& x,
                    double reward) {
  const auto it = index_.find(std::string(arm_id));
  if (it == index_.end()) {
    throw_invalid("update: unknown arm '" + std::string(arm_id) + "'");
  }
  check_dimension(x, "update");
  if (!std::isfinite(reward)) throw_invalid("update: reward is not finite");
  if (!x.allFinite()) throw_invalid("update: context is not finite");
  apply_update(arms_[it->second], x, reward);
}

void Policy::update_archived(std::string_view arm_id, std::uint64_t generation,
                             const Eigen::VectorXd& x, double reward) {
  check_dimension(x, "update");
  if (!std::isfinite(reward)) throw_invalid("update: reward is not finite");
  for (auto& arm : archived_) {
    if (arm.id == arm_id && arm.generation == generation) {
      apply_update(arm, x, reward);
      return;
    }
  }
  throw_invalid("update: no archived statistics for arm '" +
                std::string(arm_id) + "' generation " + std::to_string(generation));
}

void Policy::add_arm(const std::string& arm_id) {
  if (arm_id.empty()) throw_invalid("add_arm: empty arm id");
  if (index_.contains(arm_id)) {
    throw_invalid("add_arm: arm '" + arm_id + "' is already registered");
  }
  index_.emplace(arm_id, arms_.size());
  arms_.push_back(fresh_arm(arm_id));
}

void Policy::remove_arm(std::string_view arm_id) {
  const auto it = index_.find(std::string(arm_id));
  if (it == index_.end()) {
    throw_invalid("remove_arm: unknown arm '" + std::string(arm_id) + "'");
  }
  const std::size_t pos = it->second;
  archived_.push_back(std::move(arms_[pos]));
  arms_.erase(arms_.begin() + static_cast<std::ptrdiff_t>(pos));
  index_.erase(it);
  for (auto& [id, i] : index_) {
    if (i > pos) --i;
  }
}

nlohmann::json Policy::checkpoint() const {
  nlohmann::json arms = nlohmann::json::array();
  for (const auto& a : arms_) arms.push_back(arm_to_json(a));
  nlohmann::json archived = nlohmann::json::array();
  for (const auto& a : archived_) archived.push_back(arm_to_json(a));
  std::ostringstream rng;
  rng << rng_;
  return {{"kind", to_string(config_.kind)},
          {"config", config_.to_json()},
          {"d", dimension_},
          {"arms", std::move(arms)},
          {"archived", std::move(archived)},
          {"t", select_calls_},
          {"rng_state", rng.str()}};
}

Policy Policy::restore(const nlohmann::json& j) {
  Policy p;
  try {
    p.config_ = PolicyConfig::from_json(j.at("config"));
    p.config_.kind = parse_policy_kind(j.at("kind").get<std::string>());
    p.dimension_ = j.at("d").get<std::size_t>();
    if (p.dimension_ == 0) throw_invalid("policy checkpoint: d must be >= 1");
    for (const auto& a : j.at("arms")) {
      auto arm = arm_from_json(a, p.dimension_);
      if (p.index_.contains(arm.id)) {
        throw_invalid("policy checkpoint: duplicate arm '" + arm.id + "'");
      }
      p.index_.emplace(arm.id, p.arms_.size());
      p.arms_.push_back(std::move(arm));
    }
    if (j.contains("archived")) {
      for (const auto& a : j.at("archived")) {
        p.archived_.push_back(arm_from_json(a, p.dimension_));
      }
    }
    for (const auto* group : {&p.arms_, &p.archived_}) {
      for (const auto& a : *group) {
        auto& g = p.generations_[a.id];
        g = std::max(g, a.generation);
      }
    }
    p.select_calls_ = j.at("t").get<std::uint64_t>();
    std::istringstream rng(j.at("rng_state").get<std::string>());
    rng >> p.rng_;
    if (rng.fail()) throw_invalid("policy checkpoint: unreadable rng_state");
  } catch (const nlohmann::json::exception& e) {
    throw_invalid(std::string("policy checkpoint: ") + e.what());
  }
  return p;
}

}  // namespace ecoroute::bandit
