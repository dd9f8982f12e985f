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

#include "ecoroute/pool/model_pool.hpp"

#include <cmath>
#include <fstream>

#include <nlohmann/json.hpp>

#include "ecoroute/bandit/policy.hpp"
#include "ecoroute/error.hpp"

namespace ecoroute::pool {

void ModelEntry::validate() const {
  if (id.empty()) throw_invalid("model entry: empty id");
  const std::string who = "model '" + id + "': ";
  if (!(params_b > 0) || !std::isfinite(params_b)) {
    throw_invalid(who + "params_b must be positive");
  }
  if (!(tokens_per_sec > 0) || !std::isfinite(tokens_per_sec)) {
    throw_invalid(who + "tokens_per_sec must be positive");
  }
  if (!(energy_per_token_wh > 0) || !std::isfinite(energy_per_token_wh)) {
    throw_invalid(who + "energy_per_token_wh must be positive");
  }
  if (max_new_tokens.empty()) throw_invalid(who + "max_new_tokens is empty");
  for (const auto& [task, n] : max_new_tokens) {
    if (n <= 0) {
      throw_invalid(who + "max_new_tokens for task '" + task +
                    "' must be positive");
    }
  }
}

nlohmann::json ModelEntry::to_json() const {
  return {{"id", id},
          {"family", family},
          {"params_b", params_b},
          {"tokens_per_sec", tokens_per_sec},
          {"max_new_tokens", max_new_tokens},
          {"energy_per_token_wh", energy_per_token_wh},
          {"active", active}};
}

ModelEntry ModelEntry::from_json(const nlohmann::json& j) {
  ModelEntry m;
  try {
    m.id = j.at("id").get<std::string>();
    m.family = j.value("family", std::string());
    m.params_b = j.at("params_b").get<double>();
    m.tokens_per_sec = j.at("tokens_per_sec").get<double>();
    m.max_new_tokens = j.at("max_new_tokens").get<std::map<std::string, int>>();
    m.energy_per_token_wh = j.at("energy_per_token_wh").get<double>();
    m.active = j.value("active", true);
  } catch (const nlohmann::json::exception& e) {
    throw_invalid(std::string("model entry: ") + e.what());
  }
  m.validate();
  return m;
}

double estimate_latency_ms(const ModelEntry& m, std::string_view task) {
  const auto it = m.max_new_tokens.find(std::string(task));
  if (it == m.max_new_tokens.end()) {
    throw_invalid("model '" + m.id + "' has no max_new_tokens for task '" +
                  std::string(task) + "'");
  }
  if (it->second <= 0 || !(m.tokens_per_sec > 0)) {
    throw_invalid("model '" + m.id + "' has a non-positive latency profile");
  }
  return static_cast<double>(it->second) / m.tokens_per_sec * 1000.0;
}

ModelPool::ModelPool(std::vector<ModelEntry> entries) {
  for (auto& e : entries) {
    const bool active = e.active;
    add_model(std::move(e));
    entries_.back().active = active;
  }
}

ModelPool ModelPool::from_json(const nlohmann::json& j) {
  if (!j.is_array()) throw_invalid("pool config: expected a JSON array");
  std::vector<ModelEntry> entries;
  for (const auto& item : j) entries.push_back(ModelEntry::from_json(item));
  return ModelPool(std::move(entries));
}

ModelPool ModelPool::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw_invalid("cannot open pool config " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw_invalid("pool config " + path.string() + ": " + e.what());
  }
  return from_json(j);
}

nlohmann::json ModelPool::to_json() const {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& e : entries_) out.push_back(e.to_json());
  return out;
}

void ModelPool::save(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw_invalid("cannot write pool config " + path.string());
  out << to_json().dump(2) << '\n';
}

std::vector<std::string> ModelPool::active_ids() const {
  std::vector<std::string> out;
  for (const auto& e : entries_) {
    if (e.active) out.push_back(e.id);
  }
  return out;
}

std::size_t ModelPool::active_count() const {
  std::size_t n = 0;
  for (const auto& e : entries_) n += e.active ? 1 : 0;
  return n;
}

bool ModelPool::contains(std::string_view id) const {
  return index_.contains(std::string(id));
}

const ModelEntry& ModelPool::get(std::string_view id) const {
  const auto it = index_.find(std::string(id));
  if (it == index_.end()) {
    throw_invalid("unknown model '" + std::string(id) + "'");
  }
  return entries_[it->second];
}

std::vector<std::string> ModelPool::feasible_set(const FeasibilityQuery& query,
                                                 double overhead_ms) const {
  if (!(query.l_max_ms > 0)) throw_invalid("feasible_set: l_max must be positive");
  std::vector<std::string> out;
  const ModelEntry* fastest = nullptr;
  double fastest_ms = 0.0;
  for (const auto& e : entries_) {
    if (!e.active) continue;
    const double ms = estimate_latency_ms(e, query.task);
    if (overhead_ms + ms <= query.l_max_ms) out.push_back(e.id);
    if (fastest == nullptr || ms < fastest_ms) {
      fastest = &e;
      fastest_ms = ms;
    }
  }
  if (fastest == nullptr) {
    throw Error(ErrorCode::kNoFeasibleArm, "feasible_set: no active models");
  }
  if (out.empty()) out.push_back(fastest->id);
  return out;
}

PoolEvent ModelPool::add_model(ModelEntry entry) {
  entry.validate();
  if (index_.contains(entry.id)) {
    throw_invalid("add_model: model '" + entry.id + "' is already registered");
  }
  entry.active = true;
  index_.emplace(entry.id, entries_.size());
  entries_.push_back(std::move(entry));
  return {PoolEventKind::kAdded, entries_.back().id};
}

PoolEvent ModelPool::deactivate_model(std::string_view id) {
  const auto it = index_.find(std::string(id));
  if (it == index_.end()) {
    throw_invalid("deactivate_model: unknown model '" + std::string(id) + "'");
  }
  auto& e = entries_[it->second];
  if (!e.active) {
    throw_invalid("deactivate_model: model '" + e.id + "' is not active");
  }
  e.active = false;
  return {PoolEventKind::kDeactivated, e.id};
}

double ModelPool::max_query_energy_wh() const {
  double best = 0.0;
  for (const auto& e : entries_) {
    for (const auto& [task, n] : e.max_new_tokens) {
      best = std::max(best, e.energy_per_token_wh * n);
    }
  }
  return best;
}

void apply_event(const PoolEvent& event, bandit::Policy& policy) {
  switch (event.kind) {
    case PoolEventKind::kAdded:
      policy.add_arm(event.model_id);
      break;
    case PoolEventKind::kDeactivated:
      policy.remove_arm(event.model_id);
      break;
  }
}

bool consistent(const ModelPool& pool, const bandit::Policy& policy) {
  return pool.active_ids() == policy.arm_ids();
}

std::vector<std::string> default_task_labels() {
  return {"qa", "completion", "commonsense", "math", "summarization"};
}

ModelEntry make_entry(std::string id, std::string family, double params_b) {
  ModelEntry m;
  m.id = std::move(id);
  m.family = std::move(family);
  m.params_b = params_b;
  // Roughly inverse-square-root throughput and near-linear per-token energy
  // in parameter count.
  m.tokens_per_sec = 240.0 / std::sqrt(params_b + 0.5);
  m.energy_per_token_wh = 1.2e-5 * (params_b + 0.6);
  m.max_new_tokens = {{"qa", 16},
                      {"completion", 32},
                      {"commonsense", 16},
                      {"math", 256},
                      {"summarization", 128}};
  return m;
}

std::vector<ModelEntry> default_pool_entries() {
  return {
      make_entry("Qwen/Qwen2.5-0.5B-Instruct", "Qwen", 0.5),
      make_entry("Qwen/Qwen2.5-1.5B-Instruct", "Qwen", 1.5),
      make_entry("Qwen/Qwen2.5-3B-Instruct", "Qwen", 3),
      make_entry("Qwen/Qwen2.5-7B", "Qwen", 7),
      make_entry("Qwen/Qwen2.5-14B-Instruct", "Qwen", 14),
      make_entry("mistralai/Mistral-7B-Instruct-v0.3", "Mistral", 7),
      make_entry("google/gemma-3-1b-it", "Gemma", 1),
      make_entry("google/gemma-3-4b-it", "Gemma", 4),
      make_entry("google/gemma-3-12b-it", "Gemma", 12),
      make_entry("google/gemma-3-27b-it", "Gemma", 27),
      make_entry("meta-llama/Llama-3.1-1B-Instruct", "Llama", 1),
      make_entry("meta-llama/Llama-3.2-3B-Instruct", "Llama", 3),
      make_entry("meta-llama/Llama-3.1-8B-Instruct", "Llama", 8),
      make_entry("microsoft/Phi-4-mini-instruct", "Phi", 4),
      make_entry("microsoft/Phi-4-14B", "Phi", 14),
      make_entry("01-ai/Yi-34B", "Yi", 34),
  };
}

}  // namespace ecoroute::pool
