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

// Runs the ten acceptance checks and prints one PASS/FAIL line for each.
// Exit status is nonzero when any check fails.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <mutex>
#include <random>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>
#include <spdlog/fmt/fmt.h>
#include <spdlog/spdlog.h>

#include "ecoroute/bandit/policy.hpp"
#include "ecoroute/error.hpp"
#include "ecoroute/features/complexity.hpp"
#include "ecoroute/pool/model_pool.hpp"
#include "ecoroute/service/router.hpp"
#include "ecoroute/sim/experiment.hpp"
#include "ecoroute/sim/oracle.hpp"
#include "test_util.hpp"

namespace {

using namespace ecoroute;

struct Outcome {
  bool pass = false;
  std::string detail;
};

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

Outcome ridge_equivalence() {
  const auto t0 = std::chrono::steady_clock::now();
  const std::size_t d = 12, arms = 16, updates = 1000;
  bandit::PolicyConfig pc;
  std::vector<std::string> ids;
  for (std::size_t i = 0; i < arms; ++i) ids.push_back("arm" + std::to_string(i));
  bandit::Policy policy(pc, ids, d);
  std::mt19937_64 rng(20260301);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> uniform(-1.0, 1.0);
  std::map<std::string, std::vector<std::vector<double>>> xs;
  std::map<std::string, std::vector<double>> rs;
  for (std::size_t k = 0; k < updates; ++k) {
    for (const auto& id : ids) {
      Eigen::VectorXd x(static_cast<Eigen::Index>(d));
      for (Eigen::Index i = 0; i < x.size(); ++i) x(i) = normal(rng);
      const double r = uniform(rng);
      policy.update(id, x, r);
      xs[id].emplace_back(x.data(), x.data() + x.size());
      rs[id].push_back(r);
    }
  }
  double worst = 0.0;
  for (const auto& arm : policy.arms()) {
    const auto want = testing::ridge_solution(xs[arm.id], rs[arm.id], d, pc.lambda_reg);
    const std::vector<double> got(arm.theta.data(), arm.theta.data() + arm.theta.size());
    worst = std::max(worst, testing::relative_error(got, want));
  }
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return {worst <= 1e-6 && secs < 10.0,
          fmt::format("max relative error {:.3g} (<= 1e-6), {:.2f} s (< 10 s)", worst, secs)};
}

Outcome regret_exactness() {
  sim::ExperimentConfig config;
  const auto env = sim::make_environment(config);
  const auto options = sim::run_options(config);
  const auto stream = sim::make_stream(env, config.steps, {}, 77);
  double worst = 0.0;
  for (const char* kind : {"linucb", "eps_greedy", "thompson"}) {
    bandit::PolicyConfig pc;
    pc.kind = bandit::parse_policy_kind(kind);
    const auto result = sim::run_policy(pc, env, stream, options, 78);
    const auto ids = env.pool.active_ids();
    double total = 0.0;
    for (const auto& rec : result.records) {
      const auto best = sim::optimal_arm(env.oracle, rec.cell, ids, options.params);
      total += best.expected_reward -
               env.oracle.expected_reward(options.params, result.arms[rec.arm], rec.cell);
    }
    worst = std::max(worst, std::abs(total - result.cumulative_regret()));
  }
  return {worst <= 1e-9, fmt::format("max |ledger - recomputed| {:.3g} (<= 1e-9)", worst)};
}

Outcome learning_beats_random() {
  const auto t0 = std::chrono::steady_clock::now();
  sim::ExperimentConfig config;
  config.policies = {"linucb"};
  config.baselines = {"random"};
  config.steps = 2500;
  config.reps = 50;
  config.lambda = 0.4;
  const auto env = sim::make_environment(config);
  const auto result = sim::run_comparison(config, env);
  std::vector<double> lin_final, rnd_final, lin_ratio, rnd_ratio;
  for (const auto& run : result.runs[0]) {
    lin_final.push_back(run.final_regret);
    lin_ratio.push_back(run.final_regret / run.half_regret);
  }
  for (const auto& run : result.runs[1]) {
    rnd_final.push_back(run.final_regret);
    rnd_ratio.push_back(run.final_regret / run.half_regret);
  }
  const double lin = median(lin_final), rnd = median(rnd_final);
  const double lr = median(lin_ratio), rr = median(rnd_ratio);
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return {lin <= 0.5 * rnd && lr <= 1.6 && rr >= 1.9 && secs < 300.0,
          fmt::format("median regret linucb {:.1f} vs random {:.1f} (ratio {:.3f} <= 0.5); "
                      "R(2500)/R(1250) linucb {:.3f} (<= 1.6), random {:.3f} (>= 1.9); {:.1f} s",
                      lin, rnd, lin / rnd, lr, rr, secs)};
}

Outcome lambda_endpoints() {
  sim::ExperimentConfig config;
  config.policies = {"linucb"};
  config.baselines = {};
  config.steps = 2500;
  config.reps = 50;
  const auto env = sim::make_environment(config);
  const auto points = sim::single_model_points(env.oracle, env.pool.active_ids());
  std::string most_accurate = points.front().label, cheapest = points.front().label;
  for (const auto& p : points) {
    const auto& best_acc = *std::find_if(points.begin(), points.end(), [&](const auto& q) {
      return q.label == most_accurate;
    });
    const auto& best_energy = *std::find_if(points.begin(), points.end(), [&](const auto& q) {
      return q.label == cheapest;
    });
    if (p.accuracy > best_acc.accuracy) most_accurate = p.label;
    if (p.energy < best_energy.energy) cheapest = p.label;
  }
  int hits[2] = {0, 0};
  const double lambdas[2] = {0.0, 1.0};
  for (int i = 0; i < 2; ++i) {
    config.lambda = lambdas[i];
    const auto result = sim::run_comparison(config, env);
    const std::string& target = i == 0 ? most_accurate : cheapest;
    for (const auto& run : result.runs[0]) hits[i] += run.modal_arm == target;
  }
  return {hits[0] >= 45 && hits[1] >= 45,
          fmt::format("lambda=0 modal {} in {}/50, lambda=1 modal {} in {}/50 (>= 45)",
                      most_accurate, hits[0], cheapest, hits[1])};
}

Outcome lambda_sweep_direction() {
  sim::ExperimentConfig config;
  config.policies = {"linucb"};
  config.reps = 20;
  config.steps = 2500;
  config.lambda_grid = {0.0, 0.2, 0.4, 0.6, 0.8, 1.0};
  const auto env = sim::make_environment(config);
  const auto sweep = sim::run_lambda_sweep(config, env);
  bool ok = sweep.rows.size() == config.lambda_grid.size();
  std::string energy = "energy Wh", accuracy = "accuracy";
  for (std::size_t i = 0; ok && i < sweep.rows.size(); ++i) {
    const auto& row = sweep.rows[i];
    energy += fmt::format(" {:.2f}", row.energy_wh.mean);
    accuracy += fmt::format(" {:.3f}", row.accuracy.mean);
    if (i == 0) continue;
    const auto& prev = sweep.rows[i - 1];
    ok &= row.energy_wh.mean <= prev.energy_wh.mean;
    ok &= row.accuracy.mean <= prev.accuracy.mean + row.accuracy.ci95 + prev.accuracy.ci95;
  }
  return {ok, energy + "; " + accuracy};
}

Outcome ablation_signal() {
  sim::ExperimentConfig config;
  config.oracle = "task_separable";
  config.policies = {"linucb"};
  config.reps = 50;
  config.steps = 2500;
  config.ablation_configs = {"none", "task"};
  const auto env = sim::make_environment(config);
  const auto rows = sim::run_feature_ablation(config, env);
  const double none = rows[0].stats.median, task = rows[1].stats.median;
  return {task <= 0.8 * none,
          fmt::format("median regret task {:.1f} vs none {:.1f} ({:.1f}% lower, >= 20%)", task,
                      none, 100.0 * (1.0 - task / none))};
}

Outcome addition_adoption() {
  sim::ExperimentConfig config;
  config.oracle = "dominance:google/gemma-3-12b-it";
  config.policies = {"linucb"};
  config.reps = 50;
  config.steps = 2500;
  config.lambda = 0.2;
  config.add_at = 1000;
  config.new_model = "google/gemma-3-12b-it";
  config.adoption_window = 25;
  const auto env = sim::make_environment(config);
  const auto result = sim::run_model_addition(config, env);
  int adopted = 0;
  bool absent_before = true;
  for (const auto& curve : result.adoption) {
    for (std::size_t t = 0; t < config.add_at; ++t) absent_before &= curve[t] == 0.0;
    const auto first = curve.begin() + static_cast<std::ptrdiff_t>(config.add_at);
    adopted += *std::max_element(first, first + 200) >= 0.2;
  }
  return {absent_before && adopted >= 45,
          fmt::format("window-25 frequency >= 0.2 within 200 steps in {}/50 seeds (>= 45)",
                      adopted)};
}

Outcome overhead_budget() {
  sim::ExperimentConfig config;
  const auto env = sim::make_environment(config);
  const auto report = sim::measure_overhead(env, 1000, 91);
  const double features = report.features_ms();
  const double lin = report.decision("linucb"), eps = report.decision("eps_greedy");
  const double total = features + lin;
  return {total <= 10.0 && lin <= 5.0 && eps < lin,
          fmt::format("pre-inference {:.3f} ms (<= 10), linucb decision {:.4f} ms (<= 5), "
                      "eps-greedy {:.4f} ms (< linucb)",
                      total, lin, eps)};
}

Outcome flesch_conformance() {
  std::ifstream in(std::string(ECOROUTE_TEST_DATA_DIR) + "/flesch_golden.jsonl");
  if (!in) return {false, "golden corpus not found"};
  double worst = 0.0;
  int n = 0;
  for (std::string line; std::getline(in, line);) {
    if (line.empty()) continue;
    const auto j = nlohmann::json::parse(line);
    const std::string text = j.at("text");
    const auto got = features::flesch_score(text);
    worst = std::max(worst, std::abs(got.raw - testing::reference_flesch(text).raw));
    worst = std::max(worst, std::abs(got.raw - j.at("raw").get<double>()));
    ++n;
  }
  return {n == 50 && worst <= 1e-6,
          fmt::format("{} texts, max deviation {:.3g} (<= 1e-6)", n, worst)};
}

Outcome service_exactly_once() {
  const auto dir = std::filesystem::temp_directory_path() /
                   ("ecoroute_acceptance_" + std::to_string(::getpid()));
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  service::ServiceConfig config;
  config.decision_log = (dir / "decisions.jsonl").string();
  config.checkpoint_path = (dir / "checkpoint.json").string();
  config.checkpoint_every = 500;
  auto svc = service::make_service(config);

  const char* texts[] = {
      "Answer the following question.\n\nWhich vitamin helps the immune system?",
      "Summarize the passage below.\n\nThe bank raised its interest rate and the stock fell.",
      "Solve the math problem and give the number.\n\nWhat is forty plus two?",
      "Continue the passage below.\n\nThe runner crossed the line and the crowd",
      "Choose the most plausible option.\n\nIt rains hard. The road is wet or dry.",
  };
  const int pairs = 10000, threads = 4;
  std::mutex mu;
  std::set<std::string> finalized;
  std::atomic<int> next{0};
  std::atomic<int> churn{0};
  std::vector<std::thread> workers;
  for (int w = 0; w < threads; ++w) {
    workers.emplace_back([&, w] {
      std::mt19937_64 rng(1000 + static_cast<std::uint64_t>(w));
      std::uniform_real_distribution<double> u(0.0, 1.0);
      for (int i = next++; i < pairs; i = next++) {
        // About one in ten requests reuses an earlier id.
        const int id_num = u(rng) < 0.1 && i > 0
                               ? std::uniform_int_distribution<int>(0, i - 1)(rng)
                               : i;
        const std::string id = "req-" + std::to_string(id_num);
        service::RouteRequest req{id, texts[static_cast<std::size_t>(i) % 5], {}, {}};
        try {
          svc->route(req);
        } catch (const Error&) {
        }
        service::FeedbackReport fb{id, u(rng), "accuracy", 0.2 * u(rng), 50.0};
        for (int attempt = 0; attempt < 1 + (u(rng) < 0.1); ++attempt) {
          try {
            svc->feedback(fb);
            std::lock_guard lock(mu);
            if (!finalized.insert(id).second) {
              spdlog::error("request {} finalized twice", id);
            }
          } catch (const Error&) {
          }
        }
        if (i % 997 == 0) {
          const int c = churn++;
          try {
            svc->add_model(pool::make_entry("churn/model-" + std::to_string(c), "Churn", 2.0));
            if (c % 2 == 1) svc->deactivate_model("churn/model-" + std::to_string(c - 1));
          } catch (const Error& e) {
            spdlog::error("churn failed: {}", e.what());
          }
        }
      }
    });
  }
  for (auto& t : workers) t.join();

  const auto stats = svc->stats();
  const auto pulls = stats.at("total_pulls").get<std::uint64_t>();
  svc->write_checkpoint(config.checkpoint_path);
  const auto live = bandit::Policy::restore(nlohmann::json::parse(
      std::ifstream(config.checkpoint_path)).at("policy"));
  const auto replayed = service::replay_decision_log(config.decision_log);
  double worst = 0.0;
  bool same_arms = replayed.policy.arm_ids() == live.arm_ids() &&
                   replayed.policy.archived().size() == live.archived().size();
  auto compare = [&](const bandit::ArmState& a, const bandit::ArmState& b) {
    worst = std::max(worst, (a.A - b.A).cwiseAbs().maxCoeff());
    worst = std::max(worst, (a.b - b.b).cwiseAbs().maxCoeff());
    same_arms &= a.pulls == b.pulls;
  };
  if (same_arms) {
    for (const auto& a : live.arms()) compare(a, replayed.policy.arm(a.id));
    for (std::size_t i = 0; i < live.archived().size(); ++i) {
      compare(live.archived()[i], replayed.policy.archived()[i]);
    }
  }
  svc.reset();
  std::filesystem::remove_all(dir);
  const bool ok = pulls == finalized.size() && same_arms && worst <= 1e-9 &&
                  replayed.decisions == finalized.size();
  return {ok, fmt::format("{} unique finalized, {} pulls, {} replayed decisions, "
                          "max replay deviation {:.3g} (<= 1e-9), {} churn events",
                          finalized.size(), pulls, replayed.decisions, worst, churn.load())};
}

}  // namespace

int main() {
  spdlog::set_level(spdlog::level::warn);
  const std::vector<std::pair<const char*, std::function<Outcome()>>> checks = {
      {"ridge-oracle equivalence", ridge_equivalence},
      {"regret accounting exactness", regret_exactness},
      {"learning beats random", learning_beats_random},
      {"lambda endpoint correctness", lambda_endpoints},
      {"lambda sweep direction", lambda_sweep_direction},
      {"feature ablation signal", ablation_signal},
      {"model-addition adoption", addition_adoption},
      {"overhead budget", overhead_budget},
      {"flesch conformance", flesch_conformance},
      {"service exactly-once", service_exactly_once},
  };
  int failures = 0;
  for (std::size_t i = 0; i < checks.size(); ++i) {
    Outcome out;
    try {
      out = checks[i].second();
    } catch (const std::exception& e) {
      out = {false, std::string("error: ") + e.what()};
    }
    failures += !out.pass;
    std::printf("[%s] %zu %s: %s\n", out.pass ? "PASS" : "FAIL", i + 1, checks[i].first,
                out.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(checks.size()) - failures,
              checks.size());
  return failures == 0 ? 0 : 1;
}
