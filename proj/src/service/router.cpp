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

#include "ecoroute/service/router.hpp"

#include <chrono>
#include <cmath>
#include <limits>
#include <thread>

#include <httplib.h>
#include <spdlog/spdlog.h>

#include "ecoroute/error.hpp"
#include "ecoroute/features/text.hpp"
#include "ecoroute/sim/stream.hpp"

namespace ecoroute::service {
namespace {

using Json = nlohmann::json;

constexpr std::uint64_t kBootstrapSeed = 20260101;
constexpr std::size_t kBootstrapPerTask = 120;

double elapsed_ms(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() -
                                                   start)
      .count();
}

template <typename T>
T field(const Json& j, const char* key, const char* what) {
  try {
    return j.at(key).get<T>();
  } catch (const Json::exception& e) {
    throw_invalid(std::string(what) + ": field '" + key + "': " + e.what());
  }
}

std::optional<double> optional_number(const Json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  if (!j.at(key).is_number()) {
    throw_invalid(std::string("field '") + key + "' must be a number");
  }
  return j.at(key).get<double>();
}

Json vector_json(const Eigen::VectorXd& v) {
  return Json(std::vector<double>(v.data(), v.data() + v.size()));
}

Eigen::VectorXd vector_from(const Json& j) {
  const auto values = j.get<std::vector<double>>();
  return Eigen::Map<const Eigen::VectorXd>(values.data(),
                                           static_cast<Eigen::Index>(values.size()));
}

Json clusters_json(const features::ClusterModel& m) {
  Json centroids = Json::array();
  for (const auto& c : m.centroids()) centroids.push_back(vector_json(c.values()));
  return {{"k", m.k()}, {"centroids", centroids}, {"counts", m.counts()}};
}

features::ClusterModel clusters_from(const Json& j) {
  const auto k = j.at("k").get<std::size_t>();
  const auto counts = j.at("counts").get<std::vector<std::uint64_t>>();
  if (counts.size() < k) {
    features::ClusterModel partial(k);
    for (const auto& c : j.at("centroids")) {
      partial.observe(features::EmbeddingVector(vector_from(c)));
    }
    return partial;
  }
  std::vector<features::EmbeddingVector> centroids;
  for (const auto& c : j.at("centroids")) centroids.emplace_back(vector_from(c));
  return features::ClusterModel(std::move(centroids), counts);
}

void write_atomically(const std::filesystem::path& path, const Json& j) {
  const auto tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::trunc);
    if (!out) throw_invalid("cannot write " + tmp);
    out << j.dump() << '\n';
  }
  std::filesystem::rename(tmp, path);
}

}  // namespace

void ServiceConfig::validate() const {
  reward::RewardParams{lambda};
  if (l_max_ms && !(*l_max_ms > 0)) throw_invalid("service config: l_max_ms must be positive");
  if (!(overhead_ms >= 0)) throw_invalid("service config: overhead_ms must be >= 0");
  if (clusters == 0 || bins == 0) {
    throw_invalid("service config: clusters and bins must be positive");
  }
  features::FeatureSet::parse(features);
  policy.validate();
  if (e_max_wh < 0) throw_invalid("service config: e_max_wh must be >= 0");
  for (const auto& [task, b] : accuracy_bounds) {
    if (!(b.min < b.max)) {
      throw_invalid("service config: accuracy bounds for '" + task + "' are degenerate");
    }
  }
  if (!(pending_ttl_s > 0)) throw_invalid("service config: pending_ttl_s must be positive");
  if (window == 0) throw_invalid("service config: window must be positive");
  if (checkpoint_every == 0) {
    throw_invalid("service config: checkpoint_every must be positive");
  }
  if (port < 0 || port > 65535) throw_invalid("service config: port out of range");
}

Json ServiceConfig::to_json() const {
  Json bounds = Json::object();
  for (const auto& [task, b] : accuracy_bounds) bounds[task] = {b.min, b.max};
  Json j = {{"lambda", lambda},
            {"overhead_ms", overhead_ms},
            {"pool", pool_path},
            {"classifier", classifier_path},
            {"embeddings", embeddings_path},
            {"task_labels", task_labels},
            {"clusters", clusters},
            {"bins", bins},
            {"features", features},
            {"policy", policy.to_json()},
            {"e_max_wh", e_max_wh},
            {"accuracy_bounds", bounds},
            {"pending_ttl_s", pending_ttl_s},
            {"window", window},
            {"decision_log", decision_log},
            {"checkpoint", checkpoint_path},
            {"checkpoint_every", checkpoint_every},
            {"host", host},
            {"port", port}};
  j["l_max_ms"] = l_max_ms ? Json(*l_max_ms) : Json(nullptr);
  return j;
}

ServiceConfig ServiceConfig::from_json(const Json& j) {
  if (!j.is_object()) throw_invalid("service config: expected a JSON object");
  ServiceConfig c;
  try {
    c.lambda = j.value("lambda", c.lambda);
    c.l_max_ms = optional_number(j, "l_max_ms");
    c.overhead_ms = j.value("overhead_ms", c.overhead_ms);
    c.pool_path = j.value("pool", c.pool_path);
    c.classifier_path = j.value("classifier", c.classifier_path);
    c.embeddings_path = j.value("embeddings", c.embeddings_path);
    c.task_labels = j.value("task_labels", c.task_labels);
    c.clusters = j.value("clusters", c.clusters);
    c.bins = j.value("bins", c.bins);
    c.features = j.value("features", c.features);
    if (j.contains("policy")) c.policy = bandit::PolicyConfig::from_json(j.at("policy"));
    c.e_max_wh = j.value("e_max_wh", c.e_max_wh);
    if (j.contains("accuracy_bounds")) {
      for (const auto& [task, b] : j.at("accuracy_bounds").items()) {
        c.accuracy_bounds[task] = {b.at(0).get<double>(), b.at(1).get<double>()};
      }
    }
    c.pending_ttl_s = j.value("pending_ttl_s", c.pending_ttl_s);
    c.window = j.value("window", c.window);
    c.decision_log = j.value("decision_log", c.decision_log);
    c.checkpoint_path = j.value("checkpoint", c.checkpoint_path);
    c.checkpoint_every = j.value("checkpoint_every", c.checkpoint_every);
    c.host = j.value("host", c.host);
    c.port = j.value("port", c.port);
  } catch (const Json::exception& e) {
    throw_invalid(std::string("service config: ") + e.what());
  }
  c.validate();
  return c;
}

ServiceConfig ServiceConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw_invalid("cannot open service config " + path.string());
  Json j;
  try {
    in >> j;
  } catch (const Json::exception& e) {
    throw_invalid("service config " + path.string() + ": " + e.what());
  }
  return from_json(j);
}

RouteRequest RouteRequest::from_json(const Json& j) {
  if (!j.is_object()) throw_invalid("route request: expected a JSON object");
  RouteRequest r;
  r.request_id = field<std::string>(j, "request_id", "route request");
  r.text = field<std::string>(j, "text", "route request");
  r.l_max_ms = optional_number(j, "l_max_ms");
  r.lambda_override = optional_number(j, "lambda_override");
  return r;
}

Json RouteRequest::to_json() const {
  Json j = {{"request_id", request_id}, {"text", text}};
  if (l_max_ms) j["l_max_ms"] = *l_max_ms;
  if (lambda_override) j["lambda_override"] = *lambda_override;
  return j;
}

Json RouteResponse::to_json() const {
  Json s = Json::array();
  for (const auto& a : scores) s.push_back({{"model_id", a.arm_id}, {"score", a.score}});
  return {{"request_id", request_id},
          {"model_id", model_id},
          {"context",
           {{"task", task_label},
            {"task_index", task},
            {"cluster", cluster},
            {"bin", bin},
            {"flesch", flesch}}},
          {"scores", s},
          {"feasible", feasible},
          {"exploration", exploration},
          {"decision_latency_ms", decision_latency_ms}};
}

FeedbackReport FeedbackReport::from_json(const Json& j) {
  if (!j.is_object()) throw_invalid("feedback: expected a JSON object");
  FeedbackReport f;
  f.request_id = field<std::string>(j, "request_id", "feedback");
  f.accuracy_raw = field<double>(j, "accuracy_raw", "feedback");
  f.metric = j.value("metric", std::string());
  f.energy_wh = field<double>(j, "energy_wh", "feedback");
  f.latency_ms = j.value("latency_ms", 0.0);
  return f;
}

Json FeedbackReport::to_json() const {
  return {{"request_id", request_id},
          {"accuracy_raw", accuracy_raw},
          {"metric", metric},
          {"energy_wh", energy_wh},
          {"latency_ms", latency_ms}};
}

Json FeedbackAck::to_json() const {
  return {{"request_id", request_id},
          {"model_id", model_id},
          {"reward", reward},
          {"accuracy_norm", accuracy_norm},
          {"energy_norm", energy_norm},
          {"archived", archived}};
}

Clock steady_clock() {
  return [] {
    return std::chrono::duration<double>(
               std::chrono::steady_clock::now().time_since_epoch())
        .count();
  };
}

struct RouterService::Server {
  httplib::Server http;
  std::thread thread;
};

RouterService::RouterService(ServiceConfig config, pool::ModelPool pool,
                             features::TaskClassifier classifier,
                             std::shared_ptr<const features::EmbeddingProvider> provider,
                             Clock clock)
    : config_(std::move(config)),
      clock_(std::move(clock)),
      pipeline_(std::make_unique<features::ContextPipeline>(
          std::move(provider), std::move(classifier), config_.clusters,
          features::ComplexityBinner(config_.bins),
          features::FeatureSet::parse(config_.features))),
      pool_(std::move(pool)),
      policy_(config_.policy, pool_.active_ids(), pipeline_->layout().dimension()) {
  config_.validate();
  if (config_.task_labels.empty()) config_.task_labels = pipeline_->classifier().labels();
  if (config_.task_labels != pipeline_->classifier().labels()) {
    throw_invalid("service: task_labels do not match the classifier's labels");
  }
  e_max_wh_ = config_.e_max_wh > 0 ? config_.e_max_wh : pool_.max_query_energy_wh();
  if (!(e_max_wh_ > 0)) throw_invalid("service: cannot derive e_max from an empty pool");
  recent_.assign(config_.window, std::string());
  if (!config_.decision_log.empty()) {
    const std::filesystem::path path(config_.decision_log);
    log_started_ = std::filesystem::exists(path) && std::filesystem::file_size(path) > 0;
    log_.open(path, std::ios::app);
    if (!log_) throw_invalid("service: cannot open decision log " + path.string());
  }
}

RouterService::~RouterService() { stop(); }

reward::AccuracyBounds RouterService::bounds_for(const std::string& task) const {
  const auto it = config_.accuracy_bounds.find(task);
  return it == config_.accuracy_bounds.end() ? reward::AccuracyBounds{} : it->second;
}

void RouterService::start_log() {
  if (!log_.is_open() || log_started_) return;
  const Json init = {{"event", "init"},
                     {"seq", ++seq_},
                     {"policy", policy_.checkpoint()},
                     {"pool", pool_.to_json()}};
  log_ << init.dump() << '\n';
  log_started_ = true;
}

void RouterService::append_log(const Json& event) {
  if (!log_.is_open()) return;
  start_log();
  Json e = event;
  e["seq"] = ++seq_;
  log_ << e.dump() << '\n';
  log_.flush();
}

std::size_t RouterService::expire_locked(double now) {
  std::size_t n = 0;
  for (auto it = pending_.begin(); it != pending_.end();) {
    if (now - it->second.routed_at > config_.pending_ttl_s) {
      append_log({{"event", "expired"},
                  {"request_id", it->first},
                  {"model_id", it->second.model_id}});
      expired_.insert(it->first);
      it = pending_.erase(it);
      ++n;
    } else {
      ++it;
    }
  }
  expired_count_ += n;
  return n;
}

std::size_t RouterService::expire_pending() {
  std::lock_guard lock(mu_);
  return expire_locked(clock_());
}

RouteResponse RouterService::route(const RouteRequest& req) {
  const auto start = std::chrono::steady_clock::now();
  if (req.request_id.empty()) throw_invalid("route: request_id is empty");
  if (features::trim(req.text).empty()) throw_invalid("route: text is empty");
  if (req.lambda_override) reward::RewardParams{*req.lambda_override};
  if (req.l_max_ms && !(*req.l_max_ms > 0)) throw_invalid("route: l_max_ms must be positive");

  auto extracted = pipeline_->extract(req.text);

  std::lock_guard lock(mu_);
  expire_locked(clock_());
  if (pending_.contains(req.request_id) || finalized_.contains(req.request_id) ||
      expired_.contains(req.request_id)) {
    throw Error(ErrorCode::kConflict,
                "route: request_id '" + req.request_id + "' was already routed");
  }
  if (pool_.active_count() == 0) {
    throw Error(ErrorCode::kNoFeasibleArm, "route: no active models");
  }
  auto ctx = pipeline_->finalize(std::move(extracted), true);
  const double l_max = req.l_max_ms.value_or(
      config_.l_max_ms.value_or(std::numeric_limits<double>::infinity()));
  auto feasible = pool_.feasible_set({ctx.features.task_label, l_max}, config_.overhead_ms);

  const auto select_start = std::chrono::steady_clock::now();
  auto sel = policy_.select(ctx.x.values(), feasible);
  const double decision_ms = elapsed_ms(select_start);

  Pending p;
  p.model_id = sel.arm_id;
  p.generation = policy_.arm(sel.arm_id).generation;
  p.x = ctx.x.values();
  p.lambda = req.lambda_override.value_or(config_.lambda);
  p.task = ctx.features.task;
  p.cluster = ctx.features.cluster;
  p.bin = ctx.features.complexity_bin;
  p.routed_at = clock_();
  pending_.emplace(req.request_id, std::move(p));

  ++routed_;
  ++routed_counts_[sel.arm_id];
  recent_[recent_next_] = sel.arm_id;
  recent_next_ = (recent_next_ + 1) % recent_.size();
  timing_sums_.task_ms += ctx.timings.task_ms;
  timing_sums_.cluster_ms += ctx.timings.cluster_ms;
  timing_sums_.complexity_ms += ctx.timings.complexity_ms;
  timing_sums_.build_ms += ctx.timings.build_ms;
  decision_ms_sum_ += decision_ms;

  RouteResponse r;
  r.request_id = req.request_id;
  r.model_id = sel.arm_id;
  r.task = ctx.features.task;
  r.task_label = ctx.features.task_label;
  r.cluster = ctx.features.cluster;
  r.bin = ctx.features.complexity_bin;
  r.flesch = ctx.features.flesch;
  r.scores = std::move(sel.scores);
  r.feasible = std::move(feasible);
  r.exploration = sel.exploration;
  r.decision_latency_ms = elapsed_ms(start);
  return r;
}

FeedbackAck RouterService::feedback(const FeedbackReport& fb) {
  if (!std::isfinite(fb.accuracy_raw)) throw_invalid("feedback: accuracy_raw must be finite");
  if (!std::isfinite(fb.energy_wh) || fb.energy_wh < 0) {
    throw_invalid("feedback: energy_wh must be a nonnegative number");
  }
  if (!std::isfinite(fb.latency_ms) || fb.latency_ms < 0) {
    throw_invalid("feedback: latency_ms must be a nonnegative number");
  }

  std::lock_guard lock(mu_);
  expire_locked(clock_());
  if (finalized_.contains(fb.request_id)) {
    throw Error(ErrorCode::kConflict,
                "feedback: request '" + fb.request_id + "' is already finalized");
  }
  const auto it = pending_.find(fb.request_id);
  if (it == pending_.end()) {
    throw Error(ErrorCode::kNotFound,
                expired_.contains(fb.request_id)
                    ? "feedback: request '" + fb.request_id + "' expired"
                    : "feedback: unknown request '" + fb.request_id + "'");
  }
  const Pending& p = it->second;
  const std::string& task = config_.task_labels[p.task];
  const double acc = reward::normalize_accuracy(fb.accuracy_raw, bounds_for(task));
  const double energy = reward::normalize_energy(fb.energy_wh, e_max_wh_);
  const double r = reward::reward(reward::RewardParams(p.lambda), acc, energy);

  start_log();
  const bool live = policy_.has_arm(p.model_id) &&
                    policy_.arm(p.model_id).generation == p.generation;
  if (live) {
    policy_.update(p.model_id, p.x, r);
  } else {
    policy_.update_archived(p.model_id, p.generation, p.x, r);
  }

  FeedbackAck ack{fb.request_id, p.model_id, r, acc, energy, !live};
  append_log({{"event", "decision"},
              {"request_id", fb.request_id},
              {"model_id", p.model_id},
              {"generation", p.generation},
              {"archived", !live},
              {"x", vector_json(p.x)},
              {"lambda", p.lambda},
              {"context", {{"task", task}, {"cluster", p.cluster}, {"bin", p.bin}}},
              {"accuracy_raw", fb.accuracy_raw},
              {"metric", fb.metric},
              {"accuracy_norm", acc},
              {"energy_wh", fb.energy_wh},
              {"energy_norm", energy},
              {"latency_ms", fb.latency_ms},
              {"reward", r}});
  reward_totals_[p.model_id] += r;
  finalized_.insert(fb.request_id);
  pending_.erase(it);
  ++finalized_count_;

  if (!config_.checkpoint_path.empty() &&
      finalized_count_ % config_.checkpoint_every == 0) {
    write_atomically(config_.checkpoint_path, checkpoint_locked());
  }
  return ack;
}

void RouterService::add_model(pool::ModelEntry entry) {
  std::lock_guard lock(mu_);
  entry.validate();
  if (pool_.contains(entry.id)) {
    throw_invalid("add_model: model '" + entry.id + "' is already registered");
  }
  for (const auto& task : config_.task_labels) {
    if (!entry.max_new_tokens.contains(task)) {
      throw_invalid("add_model: model '" + entry.id + "' has no max_new_tokens for '" +
                    task + "'");
    }
  }
  const Json logged = entry.to_json();
  start_log();
  const auto event = pool_.add_model(std::move(entry));
  pool::apply_event(event, policy_);
  append_log({{"event", "pool"}, {"op", "add"}, {"model", logged}});
}

void RouterService::deactivate_model(const std::string& id) {
  std::lock_guard lock(mu_);
  start_log();
  const auto event = pool_.deactivate_model(id);
  pool::apply_event(event, policy_);
  append_log({{"event", "pool"}, {"op", "deactivate"}, {"id", id}});
}

Json RouterService::pool_churn(const Json& body) {
  if (!body.is_object()) throw_invalid("pool: expected a JSON object");
  const auto op = field<std::string>(body, "op", "pool");
  if (op == "add") {
    if (!body.contains("model")) throw_invalid("pool: add requires 'model'");
    auto entry = pool::ModelEntry::from_json(body.at("model"));
    const std::string id = entry.id;
    add_model(std::move(entry));
    return {{"ok", true}, {"op", op}, {"id", id}};
  }
  if (op == "deactivate") {
    const auto id = field<std::string>(body, "id", "pool");
    deactivate_model(id);
    return {{"ok", true}, {"op", op}, {"id", id}};
  }
  throw_invalid("pool: unknown op '" + op + "'");
}

Json RouterService::stats() const {
  std::lock_guard lock(mu_);
  Json arms = Json::array();
  std::uint64_t total_pulls = 0;
  for (const auto& a : policy_.arms()) {
    const auto rt = reward_totals_.find(a.id);
    arms.push_back({{"model_id", a.id},
                    {"generation", a.generation},
                    {"pulls", a.pulls},
                    {"mean_reward", a.mean_reward()},
                    {"reward_total", rt == reward_totals_.end() ? 0.0 : rt->second},
                    {"theta", vector_json(a.theta)}});
    total_pulls += a.pulls;
  }
  Json archived = Json::array();
  for (const auto& a : policy_.archived()) {
    archived.push_back({{"model_id", a.id}, {"generation", a.generation}, {"pulls", a.pulls}});
    total_pulls += a.pulls;
  }
  Json freq = Json::object();
  for (const auto& [id, n] : routed_counts_) {
    freq[id] = routed_ == 0 ? 0.0 : static_cast<double>(n) / static_cast<double>(routed_);
  }
  std::map<std::string, double> recent_counts;
  std::size_t recent_n = 0;
  for (const auto& id : recent_) {
    if (id.empty()) continue;
    recent_counts[id] += 1.0;
    ++recent_n;
  }
  Json recent = Json::object();
  for (const auto& [id, n] : recent_counts) recent[id] = n / static_cast<double>(recent_n);
  double reward_total = 0.0;
  for (const auto& [id, v] : reward_totals_) reward_total += v;
  const double dn = routed_ == 0 ? 1.0 : static_cast<double>(routed_);
  return {{"routed", routed_},
          {"finalized", finalized_count_},
          {"pending", pending_.size()},
          {"expired", expired_count_},
          {"total_pulls", total_pulls},
          {"reward_total", reward_total},
          {"lambda", config_.lambda},
          {"active_models", pool_.active_ids()},
          {"arms", arms},
          {"archived", archived},
          {"selection_frequency", freq},
          {"recent_selection_frequency", recent},
          {"overhead_ms",
           {{"task", timing_sums_.task_ms / dn},
            {"cluster", timing_sums_.cluster_ms / dn},
            {"complexity", timing_sums_.complexity_ms / dn},
            {"context", timing_sums_.build_ms / dn},
            {"decision", decision_ms_sum_ / dn}}}};
}

void RouterService::restore(bandit::Policy policy, pool::ModelPool pool,
                            std::optional<features::ClusterModel> clusters,
                            const std::vector<std::string>& finished_ids) {
  std::lock_guard lock(mu_);
  if (policy.dimension() != pipeline_->layout().dimension()) {
    throw_invalid("restore: policy dimension does not match the feature layout");
  }
  if (!pool::consistent(pool, policy)) {
    throw_invalid("restore: policy arms do not match the pool's active models");
  }
  policy_ = std::move(policy);
  pool_ = std::move(pool);
  if (clusters) pipeline_->restore_clusters(std::move(*clusters));
  pending_.clear();
  for (const auto& id : finished_ids) finalized_.insert(id);
}

bandit::Policy RouterService::policy_snapshot() const {
  std::lock_guard lock(mu_);
  return policy_;
}

pool::ModelPool RouterService::pool_snapshot() const {
  std::lock_guard lock(mu_);
  return pool_;
}

Json RouterService::checkpoint_locked() const {
  return {{"policy", policy_.checkpoint()},
          {"pool", pool_.to_json()},
          {"clusters", clusters_json(pipeline_->cluster_snapshot())},
          {"finalized", finalized_count_},
          {"seq", seq_}};
}

Json RouterService::checkpoint() const {
  std::lock_guard lock(mu_);
  return checkpoint_locked();
}

void RouterService::write_checkpoint(const std::filesystem::path& path) const {
  write_atomically(path, checkpoint());
}

RouterService::HttpResult RouterService::handle(const std::string& method,
                                                const std::string& path,
                                                const std::string& body) {
  auto error = [](int status, std::string_view code, const std::string& message) {
    return HttpResult{status, {{"error", code}, {"message", message}}};
  };
  try {
    auto parse = [&] {
      try {
        return Json::parse(body);
      } catch (const Json::parse_error& e) {
        throw_invalid(std::string("malformed JSON: ") + e.what());
      }
    };
    if (path == "/healthz") {
      if (method != "GET") return error(405, "method_not_allowed", method);
      return {200, {{"status", "ok"}}};
    }
    if (path == "/stats") {
      if (method != "GET") return error(405, "method_not_allowed", method);
      return {200, stats()};
    }
    if (path == "/route" || path == "/feedback" || path == "/pool") {
      if (method != "POST") return error(405, "method_not_allowed", method);
      const Json j = parse();
      if (path == "/route") return {200, route(RouteRequest::from_json(j)).to_json()};
      if (path == "/feedback") return {200, feedback(FeedbackReport::from_json(j)).to_json()};
      return {200, pool_churn(j)};
    }
    return error(404, "not_found", "no route for " + path);
  } catch (const Error& e) {
    return error(http_status(e.code()), to_string(e.code()), e.what());
  } catch (const std::exception& e) {
    spdlog::error("unhandled error on {} {}: {}", method, path, e.what());
    return error(500, "internal", e.what());
  }
}

namespace {

void install_handlers(httplib::Server& http, RouterService& service) {
  auto handler = [&service](const httplib::Request& req, httplib::Response& res) {
    const auto r = service.handle(req.method, req.path, req.body);
    res.status = r.status;
    res.set_content(r.body.dump(), "application/json");
  };
  http.Get(".*", handler);
  http.Post(".*", handler);
}

}  // namespace

void RouterService::serve(const std::string& host, int port) {
  server_ = std::make_unique<Server>();
  install_handlers(server_->http, *this);
  spdlog::info("ecoroute listening on {}:{}", host, port);
  if (!server_->http.listen(host, port)) {
    throw Error(ErrorCode::kInternal,
                "cannot listen on " + host + ":" + std::to_string(port));
  }
}

int RouterService::serve_in_background(const std::string& host, int port) {
  server_ = std::make_unique<Server>();
  install_handlers(server_->http, *this);
  const int bound = port == 0 ? server_->http.bind_to_any_port(host)
                              : (server_->http.bind_to_port(host, port) ? port : -1);
  if (bound < 0) {
    throw Error(ErrorCode::kInternal,
                "cannot bind " + host + ":" + std::to_string(port));
  }
  server_->thread = std::thread([this] { server_->http.listen_after_bind(); });
  return bound;
}

void RouterService::stop() {
  if (!server_) return;
  server_->http.stop();
  if (server_->thread.joinable()) server_->thread.join();
  server_.reset();
}

std::unique_ptr<RouterService> make_service(const ServiceConfig& config, Clock clock) {
  config.validate();
  pool::ModelPool pool = config.pool_path.empty()
                             ? pool::ModelPool(pool::default_pool_entries())
                             : pool::ModelPool::load(config.pool_path);
  const auto labels =
      config.task_labels.empty() ? pool::default_task_labels() : config.task_labels;

  std::shared_ptr<const features::EmbeddingProvider> provider;
  if (config.embeddings_path.empty()) {
    provider = std::make_shared<features::HashingEmbedder>();
  } else {
    provider = std::make_shared<features::PrecomputedEmbeddings>(
        features::PrecomputedEmbeddings::load(config.embeddings_path));
  }

  std::optional<features::TaskClassifier> classifier;
  if (!config.classifier_path.empty()) {
    classifier.emplace(features::TaskClassifier::load(config.classifier_path));
  } else {
    if (!config.embeddings_path.empty()) {
      throw_invalid("service: a classifier file is required with precomputed embeddings");
    }
    sim::QueryGenerator gen(labels, sim::QueryGenerator::kMaxTopics,
                            features::ComplexityBinner(config.bins));
    features::TrainingConfig tc;
    tc.seed = kBootstrapSeed;
    tc.labels = labels;
    auto trained = features::train_task_classifier(
        sim::classifier_training_set(gen, *provider, kBootstrapPerTask, kBootstrapSeed),
        tc);
    spdlog::info("bootstrap task classifier trained (validation macro-F1 {:.3f})",
                 trained.report.validation_macro_f1.value_or(0.0));
    classifier.emplace(std::move(trained.classifier));
  }

  auto service = std::make_unique<RouterService>(config, std::move(pool),
                                                 std::move(*classifier), provider,
                                                 std::move(clock));

  std::optional<Json> cp;
  if (!config.checkpoint_path.empty() && std::filesystem::exists(config.checkpoint_path)) {
    std::ifstream in(config.checkpoint_path);
    cp = Json::parse(in);
  }
  std::optional<features::ClusterModel> clusters;
  if (cp && cp->contains("clusters")) clusters = clusters_from(cp->at("clusters"));

  const bool have_log = !config.decision_log.empty() &&
                        std::filesystem::exists(config.decision_log) &&
                        std::filesystem::file_size(config.decision_log) > 0;
  if (have_log) {
    auto replay = replay_decision_log(config.decision_log);
    spdlog::info("replayed {} decisions from {}", replay.decisions, config.decision_log);
    service->restore(std::move(replay.policy), std::move(replay.pool),
                     std::move(clusters), replay.finished_ids);
  } else if (cp) {
    service->restore(bandit::Policy::restore(cp->at("policy")),
                     pool::ModelPool::from_json(cp->at("pool")), std::move(clusters));
  }
  return service;
}

ReplayResult replay_decision_log(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw_invalid("cannot open decision log " + path.string());
  return replay_decision_log(in);
}

ReplayResult replay_decision_log(std::istream& in) {
  std::optional<ReplayResult> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (features::trim(line).empty()) continue;
    try {
      const Json e = Json::parse(line);
      const auto kind = e.at("event").get<std::string>();
      if (kind == "init") {
        if (out) throw_invalid("duplicate init event");
        out.emplace(ReplayResult{bandit::Policy::restore(e.at("policy")),
                                 pool::ModelPool::from_json(e.at("pool")), 0, 0, {}, 0});
      } else if (!out) {
        throw_invalid("log does not start with an init event");
      } else if (kind == "decision") {
        const auto id = e.at("model_id").get<std::string>();
        const auto gen = e.at("generation").get<std::uint64_t>();
        const Eigen::VectorXd x = vector_from(e.at("x"));
        const double r = e.at("reward").get<double>();
        if (out->policy.has_arm(id) && out->policy.arm(id).generation == gen) {
          out->policy.update(id, x, r);
        } else {
          out->policy.update_archived(id, gen, x, r);
        }
        out->finished_ids.push_back(e.at("request_id").get<std::string>());
        ++out->decisions;
      } else if (kind == "pool") {
        const auto op = e.at("op").get<std::string>();
        if (op == "add") {
          pool::apply_event(out->pool.add_model(pool::ModelEntry::from_json(e.at("model"))),
                            out->policy);
        } else if (op == "deactivate") {
          pool::apply_event(out->pool.deactivate_model(e.at("id").get<std::string>()),
                            out->policy);
        } else {
          throw_invalid("unknown pool op '" + op + "'");
        }
      } else if (kind == "expired") {
        out->finished_ids.push_back(e.at("request_id").get<std::string>());
        ++out->expired;
      } else {
        throw_invalid("unknown event '" + kind + "'");
      }
      if (e.contains("seq")) out->last_seq = e.at("seq").get<std::uint64_t>();
    } catch (const Json::exception& ex) {
      throw_invalid("decision log line " + std::to_string(line_no) + ": " + ex.what());
    } catch (const Error& ex) {
      throw ex.with_context("decision log line " + std::to_string(line_no));
    }
  }
  if (!out) throw_invalid("decision log is empty");
  return std::move(*out);
}

}  // namespace ecoroute::service
