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

#include <nlohmann/json_fwd.hpp>

#include "ecoroute/sim/experiment.hpp"

namespace ecoroute::sim {

// Each writer creates `dir` if needed and returns the summary it wrote to
// `dir/summary.json`. CSVs are long-format with a header row.

// ledger_<name>.csv and decisions_<name>.jsonl for the first repetition,
// regret_curves.csv (every rep), regret_bands.csv (per-step mean, median,
// quartiles), frequencies.csv (first rep) and frequencies_mean.csv.
nlohmann::json write_comparison(const std::filesystem::path& dir,
                                const ExperimentConfig& config,
                                const ComparisonResult& result);

// sweep.csv and pareto.csv.
nlohmann::json write_sweep(const std::filesystem::path& dir,
                           const ExperimentConfig& config, const SweepResult& result);

// ablation.csv (per rep) and ablation_summary.csv.
nlohmann::json write_ablation(const std::filesystem::path& dir,
                              const ExperimentConfig& config,
                              const std::vector<AblationRow>& rows);

// adoption.csv (per rep and step) and adoption_mean.csv.
nlohmann::json write_addition(const std::filesystem::path& dir,
                              const ExperimentConfig& config,
                              const AdditionResult& result);

// overhead.json.
nlohmann::json write_overhead(const std::filesystem::path& dir,
                              const ExperimentConfig& config,
                              const OverheadReport& report);

}  // namespace ecoroute::sim
