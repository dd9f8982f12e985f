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

#include <filesystem>
#include <limits>
#include <map>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <nlohmann/json_fwd.hpp>

namespace ecoroute::bandit {
class Policy;
}

namespace ecoroute::pool {

struct ModelEntry {
  std::string id;
  std::string family;
  double params_b = 0.0;
  double tokens_per_sec = 0.0;
  std::map<std::string, int> max_new_tokens;  // keyed by task label
  double energy_per_token_wh = 0.0;
  bool active = true;

  void validate() const;
  nlohmann::json to_json() const;
  static ModelEntry from_json(const nlohmann::json& j);
};

// max_new_tokens[task] / tokens_per_sec * 1000.
double estimate_latency_ms(const ModelEntry& m, std::string_view task);

struct FeasibilityQuery {
  std::string task;
  double l_max_ms = std::numeric_limits<double>::infinity();
};

enum class PoolEventKind { kAdded, kDeactivated };

struct PoolEvent {
  PoolEventKind kind;
  std::string model_id;
};

// Registry of candidate models. Entries keep their registration order;
// deactivated entries stay registered so their ids cannot be reused.
//
// Not internally synchronized. Callers that share a pool across threads
// must serialize churn against reads.
class ModelPool {
 public:
  ModelPool() = default;
  explicit ModelPool(std::vector<ModelEntry> entries);

  static ModelPool from_json(const nlohmann::json& j);
  static ModelPool load(const std::filesystem::path& path);
  nlohmann::json to_json() const;
  void save(const std::filesystem::path& path) const;

  const std::vector<ModelEntry>& entries() const noexcept { return entries_; }
  std::vector<std::string> active_ids() const;
  std::size_t active_count() const;
  bool contains(std::string_view id) const;
  const ModelEntry& get(std::string_view id) const;

  // {m active : overhead_ms + latency(m) <= l_max}. Falls back to the single
  // active model with the lowest estimate when nothing fits.
  std::vector<std::string> feasible_set(const FeasibilityQuery& query,
                                        double overhead_ms = 0.0) const;

  PoolEvent add_model(ModelEntry entry);
  PoolEvent deactivate_model(std::string_view id);

  // Largest energy_per_token_wh * max_new_tokens over all registered entries.
  double max_query_energy_wh() const;

 private:
  std::vector<ModelEntry> entries_;
  std::unordered_map<std::string, std::size_t> index_;
};

// Mirrors a churn event onto the bandit's arm set.
void apply_event(const PoolEvent& event, bandit::Policy& policy);

// True when the policy's arms are exactly the pool's active ids, in order.
bool consistent(const ModelPool& pool, const bandit::Policy& policy);

std::vector<std::string> default_task_labels();

// Sixteen open-weight models across the Qwen, Mistral, Gemma, Llama, Phi and
// Yi families, with synthetic throughput and energy profiles.
std::vector<ModelEntry> default_pool_entries();

ModelEntry make_entry(std::string id, std::string family, double params_b);

}  // namespace ecoroute::pool
