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

#include "ecoroute/sim/report.hpp"

#include <algorithm>
#include <fstream>
#include <iomanip>
#include <limits>

#include <nlohmann/json.hpp>

#include "ecoroute/error.hpp"

namespace ecoroute::sim {
namespace {

using Json = nlohmann::json;

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw_invalid("cannot write " + path.string());
  out << std::setprecision(std::numeric_limits<double>::max_digits10);
  return out;
}

void prepare(const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw_invalid("cannot create output directory " + dir.string() + ": " + ec.message());
}

// Model ids contain '/', which is not usable in a file name.
std::string file_stem(std::string name) {
  std::replace_if(
      name.begin(), name.end(),
      [](char c) { return !(std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-'); },
      '_');
  return name;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

Json finish(const std::filesystem::path& dir, Json summary) {
  auto out = open_out(dir / "summary.json");
  out << summary.dump(2) << '\n';
  return summary;
}

Json stats_of(const std::vector<RunSummary>& runs, double RunSummary::*field) {
  std::vector<double> v;
  for (const auto& r : runs) v.push_back(r.*field);
  return SummaryStats::of(std::move(v)).to_json();
}

}  // namespace

Json write_comparison(const std::filesystem::path& dir, const ExperimentConfig& config,
                      const ComparisonResult& result) {
  prepare(dir);
  for (const auto& r : result.first_rep) {
    auto ledger = open_out(dir / ("ledger_" + file_stem(r.name) + ".csv"));
    r.ledger.write_csv(ledger);
    auto log = open_out(dir / ("decisions_" + file_stem(r.name) + ".jsonl"));
    for (const auto& rec : r.records) log << r.record_json(rec).dump() << '\n';
  }

  auto curves = open_out(dir / "regret_curves.csv");
  curves << "name,rep,step,cumulative_regret,moving_avg\n";
  auto bands = open_out(dir / "regret_bands.csv");
  bands << "name,step,mean,median,q1,q3\n";
  auto freq = open_out(dir / "frequencies.csv");
  freq << "name,window,arm_id,frequency\n";
  auto freq_mean = open_out(dir / "frequencies_mean.csv");
  freq_mean << "name,window,arm_id,frequency\n";

  Json policies = Json::object();
  for (std::size_t n = 0; n < result.names.size(); ++n) {
    const auto& name = result.names[n];
    const auto& runs = result.runs[n];
    if (runs.empty()) continue;
    const std::size_t steps = runs.front().cumulative.size();
    for (const auto& r : runs) {
      for (std::size_t t = 0; t < r.cumulative.size(); ++t) {
        curves << name << ',' << r.rep << ',' << t + 1 << ',' << r.cumulative[t] << ','
               << r.moving_average[t] << '\n';
      }
    }
    for (std::size_t t = 0; t < steps; ++t) {
      std::vector<double> at;
      for (const auto& r : runs) at.push_back(r.cumulative[t]);
      const auto s = SummaryStats::of(std::move(at));
      bands << name << ',' << t + 1 << ',' << s.mean << ',' << s.median << ',' << s.q1
            << ',' << s.q3 << '\n';
    }
    const auto& first = runs.front();
    for (std::size_t w = 0; w < first.frequencies.size(); ++w) {
      for (std::size_t a = 0; a < first.arms.size(); ++a) {
        freq << name << ',' << w << ',' << csv_field(first.arms[a]) << ','
             << first.frequencies[w][a] << '\n';
        double sum = 0.0;
        for (const auto& r : runs) sum += r.frequencies[w][a];
        freq_mean << name << ',' << w << ',' << csv_field(first.arms[a]) << ','
                  << sum / static_cast<double>(runs.size()) << '\n';
      }
    }

    std::map<std::string, std::size_t> modal;
    std::vector<double> ratio;
    for (const auto& r : runs) {
      ++modal[r.modal_arm];
      if (r.half_regret > 0) ratio.push_back(r.final_regret / r.half_regret);
    }
    policies[name] = {{"final_regret", stats_of(runs, &RunSummary::final_regret)},
                      {"half_regret", stats_of(runs, &RunSummary::half_regret)},
                      {"mean_accuracy", stats_of(runs, &RunSummary::mean_accuracy)},
                      {"total_energy_wh", stats_of(runs, &RunSummary::total_energy_wh)},
                      {"regret_growth_ratio", SummaryStats::of(ratio).to_json()},
                      {"modal_arms", modal}};
  }
  return finish(dir, {{"experiment", "run"}, {"config", config.to_json()}, {"results", policies}});
}

Json write_sweep(const std::filesystem::path& dir, const ExperimentConfig& config,
                 const SweepResult& result) {
  prepare(dir);
  auto sweep = open_out(dir / "sweep.csv");
  sweep << "lambda,policy,accuracy_mean,accuracy_ci95,energy_wh_mean,energy_wh_ci95,"
           "regret_mean,regret_ci95\n";
  Json rows = Json::array();
  for (const auto& r : result.rows) {
    sweep << r.lambda << ',' << r.policy << ',' << r.accuracy.mean << ',' << r.accuracy.ci95
          << ',' << r.energy_wh.mean << ',' << r.energy_wh.ci95 << ',' << r.regret.mean << ','
          << r.regret.ci95 << '\n';
    rows.push_back({{"lambda", r.lambda},
                    {"policy", r.policy},
                    {"accuracy", r.accuracy.to_json()},
                    {"energy_wh", r.energy_wh.to_json()},
                    {"regret", r.regret.to_json()}});
  }
  auto pareto = open_out(dir / "pareto.csv");
  pareto << "source,label,accuracy,energy_wh,on_front\n";
  auto on_front = [&](const std::string& label) {
    return std::any_of(result.front.begin(), result.front.end(),
                       [&](const ParetoPoint& p) { return p.label == label; });
  };
  for (const auto& p : result.static_points) {
    pareto << "static," << csv_field(p.label) << ',' << p.accuracy << ',' << p.energy << ','
           << (on_front(p.label) ? 1 : 0) << '\n';
  }
  for (const auto& r : result.rows) {
    pareto << "router," << r.policy << "@" << r.lambda << ',' << r.accuracy.mean << ','
           << r.energy_wh.mean << ",0\n";
  }
  Json front = Json::array();
  for (const auto& p : result.front) {
    front.push_back({{"label", p.label}, {"accuracy", p.accuracy}, {"energy_wh", p.energy}});
  }
  return finish(dir, {{"experiment", "sweep-lambda"},
                      {"config", config.to_json()},
                      {"rows", rows},
                      {"pareto_front", front}});
}

Json write_ablation(const std::filesystem::path& dir, const ExperimentConfig& config,
                    const std::vector<AblationRow>& rows) {
  prepare(dir);
  auto per_rep = open_out(dir / "ablation.csv");
  per_rep << "features,rep,final_regret\n";
  auto summary = open_out(dir / "ablation_summary.csv");
  summary << "features,median,q1,q3,mean,ci95\n";
  Json out = Json::array();
  for (const auto& row : rows) {
    for (std::size_t i = 0; i < row.final_regret.size(); ++i) {
      per_rep << row.features << ',' << i << ',' << row.final_regret[i] << '\n';
    }
    summary << row.features << ',' << row.stats.median << ',' << row.stats.q1 << ','
            << row.stats.q3 << ',' << row.stats.mean << ',' << row.stats.ci95 << '\n';
    out.push_back({{"features", row.features}, {"final_regret", row.stats.to_json()}});
  }
  return finish(dir,
                {{"experiment", "ablate-features"}, {"config", config.to_json()}, {"rows", out}});
}

Json write_addition(const std::filesystem::path& dir, const ExperimentConfig& config,
                    const AdditionResult& result) {
  prepare(dir);
  auto per_rep = open_out(dir / "adoption.csv");
  per_rep << "rep,step,frequency\n";
  for (std::size_t rep = 0; rep < result.adoption.size(); ++rep) {
    for (std::size_t t = 0; t < result.adoption[rep].size(); ++t) {
      per_rep << rep << ',' << t + 1 << ',' << result.adoption[rep][t] << '\n';
    }
  }
  const auto mean = result.mean_adoption();
  auto mean_out = open_out(dir / "adoption_mean.csv");
  mean_out << "step,frequency\n";
  for (std::size_t t = 0; t < mean.size(); ++t) mean_out << t + 1 << ',' << mean[t] << '\n';

  std::vector<double> final_share;
  for (const auto& run : result.adoption) {
    if (!run.empty()) final_share.push_back(run.back());
  }
  return finish(dir, {{"experiment", "add-model"},
                      {"config", config.to_json()},
                      {"new_model", result.new_model},
                      {"add_at", result.add_at},
                      {"window", result.window},
                      {"final_frequency", SummaryStats::of(final_share).to_json()},
                      {"final_regret", stats_of(result.runs, &RunSummary::final_regret)}});
}

Json write_overhead(const std::filesystem::path& dir, const ExperimentConfig& config,
                    const OverheadReport& report) {
  prepare(dir);
  auto out = open_out(dir / "overhead.json");
  out << report.to_json().dump(2) << '\n';
  return finish(dir, {{"experiment", "overhead"},
                      {"config", config.to_json()},
                      {"overhead", report.to_json()}});
}

}  // namespace ecoroute::sim
