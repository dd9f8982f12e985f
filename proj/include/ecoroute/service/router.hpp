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
#include <fstream>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include <nlohmann/json.hpp>

#include "ecoroute/bandit/policy.hpp"
#include "ecoroute/features/context.hpp"
#include "ecoroute/pool/model_pool.hpp"
#include "ecoroute/reward/reward.hpp"

namespace ecoroute::service {

struct ServiceConfig {
  double lambda = 0.4;
  std::optional<double> l_max_ms;  // default budget; unset means unbounded
  double overhead_ms = 0.0;        // L_opt added to every latency estimate
  std::string pool_path;           // empty selects the default pool
  std::string classifier_path;     // empty trains a bootstrap classifier
  std::string embeddings_path;     // empty selects the hashing embedder
  std::vector<std::string> task_labels;  // empty selects the default labels
  std::size_t clusters = 3;
  std::size_t bins = 3;
  std::string features = "full";
  bandit::PolicyConfig policy;
  double e_max_wh = 0.0;  // 0 derives it from the pool
  std::map<std::string, reward::AccuracyBounds> accuracy_bounds;  // per task
  double pending_ttl_s = 3600.0;
  std::size_t window = 50;  // recent-selection window reported by stats
  std::string decision_log;  // JSONL path; empty disables persistence
  std::string checkpoint_path;
  std::size_t checkpoint_every = 100;  // finalized decisions per checkpoint
  std::string host = "127.0.0.1";
  int port = 8080;

  void validate() const;
  nlohmann::json to_json() const;
  static ServiceConfig from_json(const nlohmann::json& j);
  static ServiceConfig load(const std::filesystem::path& path);
};

struct RouteRequest {
  std::string request_id;
  std::string text;
  std::optional<double> l_max_ms;
  std::optional<double> lambda_override;

  static RouteRequest from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;
};

struct RouteResponse {
  std::string request_id;
  std::string model_id;
  std::size_t task = 0;
  std::string task_label;
  std::size_t cluster = 0;
  std::size_t bin = 0;
  double flesch = 0.0;
  std::vector<bandit::ArmScore> scores;
  std::vector<std::string> feasible;
  bool exploration = false;
  double decision_latency_ms = 0.0;

  nlohmann::json to_json() const;
};

struct FeedbackReport {
  std::string request_id;
  double accuracy_raw = 0.0;
  std::string metric;
  double energy_wh = 0.0;
  double latency_ms = 0.0;

  static FeedbackReport from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;
};

struct FeedbackAck {
  std::string request_id;
  std::string model_id;
  double reward = 0.0;
  double accuracy_norm = 0.0;
  double energy_norm = 0.0;
  bool archived = false;  // the arm had been deactivated since routing

  nlohmann::json to_json() const;
};

// Seconds on an arbitrary monotone scale; injectable for tests.
using Clock = std::function<double()>;
Clock steady_clock();

// Routes queries and learns from deferred feedback.
//
// All bandit, cluster, pool and pending-table mutations happen under one
// mutex, so learning is serialized in finalization order and churn is
// linearized with respect to selection. Text feature extraction runs
// outside the lock.
class RouterService {
 public:
  RouterService(ServiceConfig config, pool::ModelPool pool,
                features::TaskClassifier classifier,
                std::shared_ptr<const features::EmbeddingProvider> provider,
                Clock clock = steady_clock());
  ~RouterService();

  RouterService(const RouterService&) = delete;
  RouterService& operator=(const RouterService&) = delete;

  const ServiceConfig& config() const noexcept { return config_; }

  RouteResponse route(const RouteRequest& req);
  FeedbackAck feedback(const FeedbackReport& fb);

  // {"op": "add", "model": ModelEntry} or {"op": "deactivate", "id": ...}.
  nlohmann::json pool_churn(const nlohmann::json& body);
  void add_model(pool::ModelEntry entry);
  void deactivate_model(const std::string& id);

  nlohmann::json stats() const;

  // Drops pending decisions older than the TTL without learning from them.
  std::size_t expire_pending();

  // Replaces the learned state, e.g. after replaying a decision log.
  // Request ids that already finished stay rejected as duplicates.
  void restore(bandit::Policy policy, pool::ModelPool pool,
               std::optional<features::ClusterModel> clusters,
               const std::vector<std::string>& finished_ids = {});

  bandit::Policy policy_snapshot() const;
  pool::ModelPool pool_snapshot() const;
  nlohmann::json checkpoint() const;
  // Writes the checkpoint to a temporary file and renames it into place.
  void write_checkpoint(const std::filesystem::path& path) const;

  struct HttpResult {
    int status = 200;
    nlohmann::json body;
  };
  // Transport-independent request handler behind the HTTP server.
  HttpResult handle(const std::string& method, const std::string& path,
                    const std::string& body);

  // Blocks serving HTTP until stop() is called.
  void serve(const std::string& host, int port);
  // Binds to `port` (0 picks a free one) and returns it; serving continues
  // on a background thread.
  int serve_in_background(const std::string& host, int port);
  void stop();

 private:
  struct Pending {
    std::string model_id;
    std::uint64_t generation = 0;
    Eigen::VectorXd x;
    double lambda = 0.0;
    std::size_t task = 0;
    std::size_t cluster = 0;
    std::size_t bin = 0;
    double routed_at = 0.0;
  };

  // Writes the init event with the current state if the log is still empty.
  // Must run before the first mutation that gets logged.
  void start_log();
  void append_log(const nlohmann::json& event);
  nlohmann::json checkpoint_locked() const;
  std::size_t expire_locked(double now);
  reward::AccuracyBounds bounds_for(const std::string& task) const;

  ServiceConfig config_;
  Clock clock_;
  double e_max_wh_ = 0.0;
  std::unique_ptr<features::ContextPipeline> pipeline_;

  mutable std::mutex mu_;
  pool::ModelPool pool_;
  bandit::Policy policy_;
  std::unordered_map<std::string, Pending> pending_;
  std::unordered_set<std::string> finalized_;
  std::unordered_set<std::string> expired_;
  std::vector<std::string> recent_;  // ring buffer of chosen model ids
  std::size_t recent_next_ = 0;
  std::map<std::string, std::uint64_t> routed_counts_;
  std::map<std::string, double> reward_totals_;
  std::uint64_t routed_ = 0;
  std::uint64_t finalized_count_ = 0;
  std::uint64_t expired_count_ = 0;
  std::uint64_t seq_ = 0;
  bool log_started_ = false;
  features::StageTimings timing_sums_;
  double decision_ms_sum_ = 0.0;
  std::ofstream log_;

  struct Server;
  std::unique_ptr<Server> server_;
};

// Builds a service from its config: loads or defaults the pool, embedding
// provider and classifier (training a bootstrap classifier on synthetic
// instructions when no classifier file is given), then restores the
// checkpoint if one exists.
std::unique_ptr<RouterService> make_service(const ServiceConfig& config,
                                            Clock clock = steady_clock());

struct ReplayResult {
  bandit::Policy policy;
  pool::ModelPool pool;
  std::size_t decisions = 0;
  std::size_t expired = 0;
  std::vector<std::string> finished_ids;  // finalized or expired requests
  std::uint64_t last_seq = 0;
};

// Rebuilds bandit and pool state from a decision log written by
// RouterService: the init event, then pool churn and finalized decisions in
// order.
ReplayResult replay_decision_log(const std::filesystem::path& path);
ReplayResult replay_decision_log(std::istream& in);

}  // namespace ecoroute::service
