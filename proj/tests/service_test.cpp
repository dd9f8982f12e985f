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

#include <atomic>
#include <filesystem>
#include <random>
#include <thread>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "ecoroute/error.hpp"
#include "ecoroute/pool/model_pool.hpp"
#include "ecoroute/service/router.hpp"

// After Eigen: <resolv.h> defines a _res macro.
#include <httplib.h>

namespace ecoroute::service {
namespace {

using nlohmann::json;

template <typename F>
ErrorCode code_of(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "expected an ecoroute::Error";
  return ErrorCode::kInternal;
}

const char* kTexts[] = {
    "Answer the following question.\n\nWhat organ pumps blood through the body?",
    "Summarize the passage below.\n\nThe market fell as interest rates rose and "
    "investors sold stock in several large banks.",
    "Solve the math problem and give the number.\n\nWhat is twelve times seven?",
    "Continue the passage below.\n\nThe team ran onto the field and the crowd",
    "Choose the most plausible option.\n\nA glass falls off a table. It breaks or it floats.",
};

class TempDir {
 public:
  TempDir() {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("ecoroute_service_test_" + std::to_string(::getpid()) + "_" +
             std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() { std::filesystem::remove_all(path_); }
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

std::unique_ptr<RouterService> make(ServiceConfig config = {}, Clock clock = steady_clock()) {
  return make_service(config, std::move(clock));
}

RouteRequest request(const std::string& id, std::size_t text = 0) {
  RouteRequest r;
  r.request_id = id;
  r.text = kTexts[text % std::size(kTexts)];
  return r;
}

FeedbackReport report(const std::string& id, double acc = 0.7, double wh = 0.05) {
  FeedbackReport f;
  f.request_id = id;
  f.accuracy_raw = acc;
  f.metric = "accuracy";
  f.energy_wh = wh;
  f.latency_ms = 100.0;
  return f;
}

std::uint64_t total_pulls(const RouterService& s) {
  return s.stats().at("total_pulls").get<std::uint64_t>();
}

TEST(RouteTest, ChoosesFeasibleModel) {
  auto s = make();
  for (std::size_t i = 0; i < 20; ++i) {
    const auto r = s->route(request("r" + std::to_string(i), i));
    EXPECT_NE(std::find(r.feasible.begin(), r.feasible.end(), r.model_id), r.feasible.end());
    EXPECT_EQ(r.feasible.size(), 16u);
    EXPECT_EQ(r.scores.size(), 16u);
    EXPECT_GE(r.decision_latency_ms, 0.0);
    const auto j = r.to_json();
    for (const char* key : {"request_id", "model_id", "context", "scores", "feasible",
                            "decision_latency_ms"}) {
      EXPECT_TRUE(j.contains(key)) << key;
    }
  }
}

TEST(RouteTest, TightBudgetFallsBackToFastestModel) {
  auto s = make();
  auto req = request("tight");
  req.l_max_ms = 0.001;
  const auto r = s->route(req);
  ASSERT_EQ(r.feasible.size(), 1u);
  const auto pool = s->pool_snapshot();
  double best = 1e300;
  std::string fastest;
  for (const auto& id : pool.active_ids()) {
    const double l = pool::estimate_latency_ms(pool.get(id), r.task_label);
    if (l < best) best = l, fastest = id;
  }
  EXPECT_EQ(r.model_id, fastest);
}

TEST(RouteTest, RejectsBadRequests) {
  auto s = make();
  s->route(request("dup"));
  EXPECT_EQ(code_of([&] { s->route(request("dup")); }), ErrorCode::kConflict);
  EXPECT_EQ(code_of([&] { s->route(RouteRequest{"e", "   ", {}, {}}); }),
            ErrorCode::kInvalidInput);
  EXPECT_EQ(code_of([&] { s->route(RouteRequest{"", "text", {}, {}}); }),
            ErrorCode::kInvalidInput);
  auto bad_lambda = request("lam");
  bad_lambda.lambda_override = 1.5;
  EXPECT_EQ(code_of([&] { s->route(bad_lambda); }), ErrorCode::kInvalidInput);
}

TEST(RouteTest, EmptyPoolIsUnavailable) {
  auto s = make();
  for (const auto& id : s->pool_snapshot().active_ids()) s->deactivate_model(id);
  EXPECT_EQ(code_of([&] { s->route(request("x")); }), ErrorCode::kNoFeasibleArm);
  EXPECT_EQ(http_status(ErrorCode::kNoFeasibleArm), 503);
}

TEST(FeedbackTest, ExactlyOnce) {
  auto s = make();
  s->route(request("a"));
  s->feedback(report("a"));
  EXPECT_EQ(total_pulls(*s), 1u);
  const auto before = s->policy_snapshot().checkpoint();
  EXPECT_EQ(code_of([&] { s->feedback(report("a")); }), ErrorCode::kConflict);
  EXPECT_EQ(s->policy_snapshot().checkpoint(), before);
  EXPECT_EQ(code_of([&] { s->feedback(report("never")); }), ErrorCode::kNotFound);
  EXPECT_EQ(code_of([&] { s->route(request("a")); }), ErrorCode::kConflict);
  EXPECT_EQ(code_of([&] { s->feedback(report("a", std::nan(""))); }),
            ErrorCode::kInvalidInput);
}

TEST(FeedbackTest, AccuracyOnlyRewardAtUpperBound) {
  ServiceConfig c;
  c.lambda = 0.0;
  auto s = make(c);
  s->route(request("a"));
  const auto ack = s->feedback(report("a", 1.0, 0.2));
  EXPECT_EQ(ack.reward, 1.0);
  EXPECT_EQ(ack.accuracy_norm, 1.0);
}

TEST(FeedbackTest, LambdaCapturedAtRouteTime) {
  auto s = make();
  auto req = request("a");
  req.lambda_override = 1.0;
  s->route(req);
  const auto ack = s->feedback(report("a", 1.0, 0.0));
  EXPECT_EQ(ack.reward, 0.0);
}

TEST(FeedbackTest, DeactivatedModelStillLearnsIntoArchive) {
  auto s = make();
  const auto r = s->route(request("a"));
  s->deactivate_model(r.model_id);
  const auto ack = s->feedback(report("a"));
  EXPECT_TRUE(ack.archived);
  EXPECT_EQ(ack.model_id, r.model_id);
  const auto st = s->stats();
  ASSERT_EQ(st.at("archived").size(), 1u);
  EXPECT_EQ(st.at("archived")[0].at("pulls"), 1);
  EXPECT_EQ(st.at("total_pulls"), 1);
}

TEST(FeedbackTest, ExpiredDecisionsAreDropped) {
  double now = 0.0;
  ServiceConfig c;
  c.pending_ttl_s = 10.0;
  auto s = make(c, [&now] { return now; });
  s->route(request("old"));
  now = 11.0;
  EXPECT_EQ(s->expire_pending(), 1u);
  EXPECT_EQ(code_of([&] { s->feedback(report("old")); }), ErrorCode::kNotFound);
  EXPECT_EQ(code_of([&] { s->route(request("old")); }), ErrorCode::kConflict);
  EXPECT_EQ(total_pulls(*s), 0u);
  EXPECT_EQ(s->stats().at("expired"), 1);
}

TEST(ChurnTest, AddedModelIsEligibleImmediately) {
  auto s = make();
  auto entry = pool::make_entry("acme/new-model", "Acme", 2.0);
  s->add_model(entry);
  auto req = request("a");
  const auto r = s->route(req);
  EXPECT_NE(std::find(r.feasible.begin(), r.feasible.end(), "acme/new-model"), r.feasible.end());
  // A fresh arm carries the largest bonus, so it scores at the top.
  double top = -1e300, fresh = -1e300;
  for (const auto& a : r.scores) {
    top = std::max(top, a.score);
    if (a.arm_id == "acme/new-model") fresh = a.score;
  }
  EXPECT_EQ(fresh, top);
  EXPECT_EQ(code_of([&] { s->add_model(entry); }), ErrorCode::kInvalidInput);
  auto bad = s->handle("POST", "/pool", R"({"op": "add", "model": {"id": "x"}})");
  EXPECT_EQ(bad.status, 400);
}

TEST(StatsTest, PullsAreConserved) {
  auto s = make();
  auto st = s->stats();
  for (const auto& a : st.at("arms")) EXPECT_EQ(a.at("pulls"), 0);
  EXPECT_EQ(st.at("total_pulls"), 0);
  for (int i = 0; i < 30; ++i) s->route(request("r" + std::to_string(i), i));
  for (int i = 0; i < 30; i += 2) s->feedback(report("r" + std::to_string(i)));
  st = s->stats();
  EXPECT_EQ(st.at("total_pulls"), 15);
  EXPECT_EQ(st.at("finalized"), 15);
  EXPECT_EQ(st.at("pending"), 15);
  double sum = 0.0;
  for (const auto& [id, f] : st.at("selection_frequency").items()) sum += f.get<double>();
  EXPECT_NEAR(sum, 1.0, 1e-12);
}

TEST(ConcurrencyTest, EveryFinalizedRequestLearnsOnce) {
  auto s = make();
  std::atomic<int> finalized{0};
  std::vector<std::thread> threads;
  for (int t = 0; t < 4; ++t) {
    threads.emplace_back([&, t] {
      std::mt19937_64 rng(static_cast<std::uint64_t>(t));
      for (int i = 0; i < 150; ++i) {
        // Ids collide across threads on purpose.
        const std::string id = "q" + std::to_string(std::uniform_int_distribution<int>(0, 299)(rng));
        try {
          s->route(request(id, static_cast<std::size_t>(i)));
        } catch (const Error&) {
        }
        try {
          s->feedback(report(id));
          ++finalized;
        } catch (const Error&) {
        }
      }
    });
  }
  for (auto& th : threads) th.join();
  EXPECT_EQ(total_pulls(*s), static_cast<std::uint64_t>(finalized.load()));
  EXPECT_EQ(s->stats().at("finalized"), finalized.load());
}

void expect_same_statistics(const bandit::Policy& a, const bandit::Policy& b) {
  ASSERT_EQ(a.arm_ids(), b.arm_ids());
  for (const auto& arm : a.arms()) {
    const auto& other = b.arm(arm.id);
    EXPECT_LE((arm.A - other.A).cwiseAbs().maxCoeff(), 1e-9) << arm.id;
    EXPECT_LE((arm.b - other.b).cwiseAbs().maxCoeff(), 1e-9) << arm.id;
    EXPECT_EQ(arm.pulls, other.pulls);
  }
  ASSERT_EQ(a.archived().size(), b.archived().size());
}

TEST(PersistenceTest, ReplayRebuildsLiveState) {
  TempDir dir;
  ServiceConfig c;
  c.decision_log = (dir.path() / "decisions.jsonl").string();
  c.checkpoint_path = (dir.path() / "checkpoint.json").string();
  c.checkpoint_every = 7;
  auto s = make(c);
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 120; ++i) {
    const std::string id = "r" + std::to_string(i);
    s->route(request(id, static_cast<std::size_t>(i)));
    if (i == 40) s->deactivate_model("01-ai/Yi-34B");
    if (i == 60) s->add_model(pool::make_entry("acme/late", "Acme", 3.0));
    if (i % 5 != 0) s->feedback(report(id, u(rng), 0.1 * u(rng)));
  }
  const auto live = s->policy_snapshot();
  const auto replayed = replay_decision_log(c.decision_log);
  EXPECT_EQ(replayed.decisions, 96u);
  expect_same_statistics(live, replayed.policy);
  EXPECT_EQ(replayed.pool.to_json(), s->pool_snapshot().to_json());

  const auto lines = [&] {
    std::ifstream in(c.decision_log);
    std::size_t n = 0;
    for (std::string line; std::getline(in, line);) n += !line.empty();
    return n;
  }();
  s.reset();

  // A restart picks the log up again; nothing is applied twice.
  auto again = make(c);
  expect_same_statistics(live, again->policy_snapshot());
  EXPECT_EQ(code_of([&] { again->route(request("r1")); }), ErrorCode::kConflict);
  std::ifstream in(c.decision_log);
  std::size_t n = 0;
  for (std::string line; std::getline(in, line);) n += !line.empty();
  EXPECT_EQ(n, lines);
}

TEST(PersistenceTest, CheckpointRestoresWithoutLog) {
  TempDir dir;
  ServiceConfig c;
  c.checkpoint_path = (dir.path() / "checkpoint.json").string();
  auto s = make(c);
  for (int i = 0; i < 10; ++i) {
    s->route(request("r" + std::to_string(i), i));
    s->feedback(report("r" + std::to_string(i)));
  }
  s->write_checkpoint(c.checkpoint_path);
  const auto live = s->policy_snapshot();
  s.reset();
  auto again = make(c);
  expect_same_statistics(live, again->policy_snapshot());
}

TEST(HttpTest, HandlerStatusCodes) {
  auto s = make();
  EXPECT_EQ(s->handle("GET", "/healthz", "").status, 200);
  EXPECT_EQ(s->handle("POST", "/healthz", "").status, 405);
  EXPECT_EQ(s->handle("GET", "/route", "").status, 405);
  EXPECT_EQ(s->handle("GET", "/nope", "").status, 404);
  EXPECT_EQ(s->handle("POST", "/route", "{not json").status, 400);
  EXPECT_EQ(s->handle("POST", "/route", R"({"request_id": "a"})").status, 400);
  const auto ok = s->handle("POST", "/route", json{{"request_id", "a"}, {"text", kTexts[0]}}.dump());
  EXPECT_EQ(ok.status, 200);
  EXPECT_EQ(s->handle("POST", "/route", json{{"request_id", "a"}, {"text", kTexts[0]}}.dump()).status,
            409);
  const auto fb = json{{"request_id", "a"}, {"accuracy_raw", 0.5}, {"energy_wh", 0.1}}.dump();
  EXPECT_EQ(s->handle("POST", "/feedback", fb).status, 200);
  EXPECT_EQ(s->handle("POST", "/feedback", fb).status, 409);
  EXPECT_EQ(s->handle("POST", "/feedback",
                      json{{"request_id", "zz"}, {"accuracy_raw", 0.5}, {"energy_wh", 0.1}}.dump())
                .status,
            404);
  EXPECT_EQ(s->handle("POST", "/pool", R"({"op": "explode"})").status, 400);
  EXPECT_EQ(s->handle("POST", "/pool", R"({"op": "deactivate", "id": "nope"})").status, 400);
}

TEST(HttpTest, ServesOverTheNetwork) {
  auto s = make();
  const int port = s->serve_in_background("127.0.0.1", 0);
  ASSERT_GT(port, 0);
  httplib::Client cli("127.0.0.1", port);
  auto health = cli.Get("/healthz");
  ASSERT_TRUE(health);
  EXPECT_EQ(health->status, 200);
  auto routed = cli.Post("/route", json{{"request_id", "n1"}, {"text", kTexts[2]}}.dump(),
                         "application/json");
  ASSERT_TRUE(routed);
  ASSERT_EQ(routed->status, 200);
  const auto body = json::parse(routed->body);
  EXPECT_EQ(body.at("request_id"), "n1");
  auto fb = cli.Post("/feedback",
                     json{{"request_id", "n1"}, {"accuracy_raw", 0.9}, {"energy_wh", 0.01}}.dump(),
                     "application/json");
  ASSERT_TRUE(fb);
  EXPECT_EQ(fb->status, 200);
  auto stats = cli.Get("/stats");
  ASSERT_TRUE(stats);
  EXPECT_EQ(json::parse(stats->body).at("total_pulls"), 1);
  s->stop();
}

}  // namespace
}  // namespace ecoroute::service
