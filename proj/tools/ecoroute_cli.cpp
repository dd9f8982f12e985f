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

#include <csignal>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include "ecoroute/error.hpp"
#include "ecoroute/service/router.hpp"
#include "ecoroute/sim/experiment.hpp"
#include "ecoroute/sim/report.hpp"

namespace {

using ecoroute::sim::ExperimentConfig;
namespace fs = std::filesystem;

struct SimArgs {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::optional<std::size_t> reps;
  std::optional<std::size_t> steps;
};

ExperimentConfig resolve(const SimArgs& args) {
  ExperimentConfig c = args.config.empty() ? ExperimentConfig{}
                                           : ExperimentConfig::load(args.config);
  if (args.seed) c.seed = *args.seed;
  if (args.reps) c.reps = *args.reps;
  if (args.steps) c.steps = *args.steps;
  c.validate();
  return c;
}

void add_sim_options(CLI::App* cmd, SimArgs& args) {
  cmd->add_option("--config", args.config, "Experiment config JSON");
  cmd->add_option("--seed", args.seed, "Override the experiment seed");
  cmd->add_option("--out", args.out, "Output directory")->required();
  cmd->add_option("--reps", args.reps, "Override the number of repetitions");
  cmd->add_option("--steps", args.steps, "Override the horizon T");
}

void print(const nlohmann::json& summary) { std::cout << summary.dump(2) << '\n'; }

void write_json(const fs::path& path, const nlohmann::json& j) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) ecoroute::throw_invalid("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

// Writes the default configuration files used by the documented workflows.
void write_defaults(const fs::path& dir) {
  fs::create_directories(dir);
  ecoroute::pool::ModelPool(ecoroute::pool::default_pool_entries()).save(dir / "pool.json");
  ecoroute::sim::default_oracle().save(dir / "oracle.json");

  ExperimentConfig run;
  run.policies = {"linucb", "thompson", "eps_greedy_contextual", "eps_greedy"};
  run.baselines = {"random", "largest", "smallest", "highest_accuracy"};
  write_json(dir / "run.json", run.to_json());

  ExperimentConfig sweep;
  sweep.reps = 20;
  sweep.lambda_grid = {0.0, 0.2, 0.4, 0.6, 0.8, 1.0};
  write_json(dir / "sweep_lambda.json", sweep.to_json());

  ExperimentConfig ablation;
  ablation.oracle = "task_separable";
  write_json(dir / "ablate_features.json", ablation.to_json());

  ExperimentConfig addition;
  addition.oracle = "dominance:" + addition.new_model;
  addition.lambda = 0.2;
  write_json(dir / "add_model.json", addition.to_json());

  ExperimentConfig overhead;
  overhead.reps = 1;
  write_json(dir / "overhead.json", overhead.to_json());

  ecoroute::service::ServiceConfig service;
  service.pool_path = (dir / "pool.json").string();
  service.decision_log = "decisions.jsonl";
  service.checkpoint_path = "checkpoint.json";
  write_json(dir / "service.json", service.to_json());
}

ecoroute::service::RouterService* g_service = nullptr;

void on_signal(int) {
  if (g_service != nullptr) g_service->stop();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Energy-aware LLM routing with contextual bandits"};
  app.require_subcommand(1);
  bool verbose = false;
  app.add_flag("-v,--verbose", verbose, "Debug logging");

  auto* sim = app.add_subcommand("sim", "Run simulator experiments");
  sim->require_subcommand(1);
  SimArgs run_args, sweep_args, ablate_args, add_args, overhead_args;
  auto* run = sim->add_subcommand("run", "Compare policies and baselines");
  add_sim_options(run, run_args);
  auto* sweep = sim->add_subcommand("sweep-lambda", "Sweep the energy weight");
  add_sim_options(sweep, sweep_args);
  auto* ablate = sim->add_subcommand("ablate-features", "Context feature ablation");
  add_sim_options(ablate, ablate_args);
  auto* add = sim->add_subcommand("add-model", "Register a model mid-run");
  add_sim_options(add, add_args);
  auto* overhead = sim->add_subcommand("overhead", "Per-stage routing overhead");
  add_sim_options(overhead, overhead_args);

  std::string serve_config;
  std::optional<std::string> serve_host;
  std::optional<int> serve_port;
  auto* serve = app.add_subcommand("serve", "Run the HTTP routing service");
  serve->add_option("--config", serve_config, "Service config JSON");
  serve->add_option("--host", serve_host, "Override the listen address");
  serve->add_option("--port", serve_port, "Override the listen port");

  std::string train_config, train_out;
  std::optional<std::uint64_t> train_seed;
  auto* train = app.add_subcommand("train-classifier",
                                   "Train a task classifier on synthetic instructions");
  train->add_option("--config", train_config, "Experiment config JSON");
  train->add_option("--seed", train_seed, "Override the seed");
  train->add_option("--out", train_out, "Classifier JSON to write")->required();

  std::string init_out = "configs";
  auto* init = app.add_subcommand("init", "Write default configuration files");
  init->add_option("--out", init_out, "Directory to write into");

  CLI11_PARSE(app, argc, argv);
  spdlog::set_level(verbose ? spdlog::level::debug : spdlog::level::info);

  try {
    if (run->parsed()) {
      const auto config = resolve(run_args);
      const auto env = ecoroute::sim::make_environment(config);
      print(ecoroute::sim::write_comparison(run_args.out, config,
                                            ecoroute::sim::run_comparison(config, env)));
    } else if (sweep->parsed()) {
      const auto config = resolve(sweep_args);
      const auto env = ecoroute::sim::make_environment(config);
      print(ecoroute::sim::write_sweep(sweep_args.out, config,
                                       ecoroute::sim::run_lambda_sweep(config, env)));
    } else if (ablate->parsed()) {
      const auto config = resolve(ablate_args);
      const auto env = ecoroute::sim::make_environment(config);
      print(ecoroute::sim::write_ablation(ablate_args.out, config,
                                          ecoroute::sim::run_feature_ablation(config, env)));
    } else if (add->parsed()) {
      const auto config = resolve(add_args);
      const auto env = ecoroute::sim::make_environment(config);
      print(ecoroute::sim::write_addition(add_args.out, config,
                                          ecoroute::sim::run_model_addition(config, env)));
    } else if (overhead->parsed()) {
      const auto config = resolve(overhead_args);
      const auto env = ecoroute::sim::make_environment(config);
      print(ecoroute::sim::write_overhead(
          overhead_args.out, config,
          ecoroute::sim::measure_overhead(env, config.overhead_queries, config.seed)));
    } else if (serve->parsed()) {
      auto config = serve_config.empty() ? ecoroute::service::ServiceConfig{}
                                         : ecoroute::service::ServiceConfig::load(serve_config);
      if (serve_host) config.host = *serve_host;
      if (serve_port) config.port = *serve_port;
      auto service = ecoroute::service::make_service(config);
      g_service = service.get();
      std::signal(SIGINT, on_signal);
      std::signal(SIGTERM, on_signal);
      service->serve(config.host, config.port);
      g_service = nullptr;
    } else if (train->parsed()) {
      ExperimentConfig config =
          train_config.empty() ? ExperimentConfig{} : ExperimentConfig::load(train_config);
      if (train_seed) config.seed = *train_seed;
      const auto env = ecoroute::sim::make_environment(config);
      env.classifier->save(train_out);
      nlohmann::json report = {{"out", train_out},
                               {"train_size", env.classifier_report.train_size},
                               {"validation_size", env.classifier_report.validation_size},
                               {"final_loss", env.classifier_report.final_loss}};
      if (env.classifier_report.validation_macro_f1) {
        report["validation_macro_f1"] = *env.classifier_report.validation_macro_f1;
      }
      print(report);
    } else if (init->parsed()) {
      write_defaults(init_out);
      std::cout << "wrote default configs to " << init_out << '\n';
    }
  } catch (const ecoroute::Error& e) {
    spdlog::error("{}: {}", ecoroute::to_string(e.code()), e.what());
    return 2;
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return 1;
  }
  return 0;
}
