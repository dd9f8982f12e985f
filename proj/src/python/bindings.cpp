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

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <nlohmann/json.hpp>

#include "ecoroute/bandit/policy.hpp"
#include "ecoroute/error.hpp"
#include "ecoroute/features/complexity.hpp"
#include "ecoroute/pool/model_pool.hpp"
#include "ecoroute/reward/reward.hpp"
#include "ecoroute/service/router.hpp"
#include "ecoroute/sim/experiment.hpp"
#include "ecoroute/sim/report.hpp"

namespace py = pybind11;
using nlohmann::json;

namespace {

py::object to_py(const json& j) {
  return py::module_::import("json").attr("loads")(j.dump());
}

json from_py(const py::handle& o) {
  return json::parse(py::module_::import("json").attr("dumps")(o).cast<std::string>());
}

ecoroute::sim::ExperimentConfig experiment_config(const py::object& config) {
  return config.is_none() ? ecoroute::sim::ExperimentConfig{}
                          : ecoroute::sim::ExperimentConfig::from_json(from_py(config));
}

py::dict selection_dict(const ecoroute::bandit::Selection& s) {
  py::dict scores;
  for (const auto& a : s.scores) scores[py::str(a.arm_id)] = a.score;
  py::dict d;
  d["arm_id"] = s.arm_id;
  d["score"] = s.score;
  d["exploration"] = s.exploration;
  d["scores"] = scores;
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Energy-aware contextual-bandit routing core";

  py::register_exception<ecoroute::Error>(m, "EcorouteError", PyExc_ValueError);

  m.def("flesch_score", [](const std::string& text) {
    return ecoroute::features::flesch_score(text).score;
  });
  m.def("normalize_accuracy",
        [](double raw, double lo, double hi) {
          return ecoroute::reward::normalize_accuracy(raw, {lo, hi});
        },
        py::arg("raw"), py::arg("min") = 0.0, py::arg("max") = 1.0);
  m.def("normalize_energy", &ecoroute::reward::normalize_energy, py::arg("energy_wh"),
        py::arg("e_max_wh"));
  m.def("reward",
        [](double lambda, double acc_norm, double energy_norm) {
          return ecoroute::reward::reward(ecoroute::reward::RewardParams(lambda), acc_norm,
                                          energy_norm);
        },
        py::arg("lam"), py::arg("accuracy_norm"), py::arg("energy_norm"));

  py::class_<ecoroute::bandit::Policy>(m, "Policy")
      .def(py::init([](const std::string& kind, const std::vector<std::string>& arms,
                       std::size_t d, const py::object& config) {
             json j = config.is_none() ? json::object() : from_py(config);
             j["kind"] = kind;
             return ecoroute::bandit::Policy(ecoroute::bandit::PolicyConfig::from_json(j),
                                             arms, d);
           }),
           py::arg("kind"), py::arg("arms"), py::arg("d"), py::arg("config") = py::none())
      .def_property_readonly("dimension", &ecoroute::bandit::Policy::dimension)
      .def_property_readonly("arm_ids", &ecoroute::bandit::Policy::arm_ids)
      .def("select",
           [](ecoroute::bandit::Policy& p, const Eigen::VectorXd& x,
              const std::vector<std::string>& feasible) {
             return selection_dict(p.select(x, feasible));
           })
      .def("update", [](ecoroute::bandit::Policy& p, const std::string& id,
                        const Eigen::VectorXd& x, double r) { p.update(id, x, r); })
      .def("add_arm", &ecoroute::bandit::Policy::add_arm)
      .def("remove_arm",
           [](ecoroute::bandit::Policy& p, const std::string& id) { p.remove_arm(id); })
      .def("theta",
           [](const ecoroute::bandit::Policy& p, const std::string& id) -> Eigen::VectorXd {
             return p.arm(id).theta;
           })
      .def("pulls", [](const ecoroute::bandit::Policy& p,
                       const std::string& id) { return p.arm(id).pulls; })
      .def("checkpoint",
           [](const ecoroute::bandit::Policy& p) { return to_py(p.checkpoint()); })
      .def_static("restore", [](const py::object& cp) {
        return ecoroute::bandit::Policy::restore(from_py(cp));
      });

  py::class_<ecoroute::pool::ModelPool>(m, "ModelPool")
      .def_static("default",
                  [] { return ecoroute::pool::ModelPool(ecoroute::pool::default_pool_entries()); })
      .def_static("load",
                  [](const std::string& path) { return ecoroute::pool::ModelPool::load(path); })
      .def_static("from_json",
                  [](const py::object& j) { return ecoroute::pool::ModelPool::from_json(from_py(j)); })
      .def("to_json", [](const ecoroute::pool::ModelPool& p) { return to_py(p.to_json()); })
      .def("active_ids", &ecoroute::pool::ModelPool::active_ids)
      .def("feasible_set",
           [](const ecoroute::pool::ModelPool& p, const std::string& task,
              std::optional<double> l_max_ms, double overhead_ms) {
             ecoroute::pool::FeasibilityQuery q{task};
             if (l_max_ms) q.l_max_ms = *l_max_ms;
             return p.feasible_set(q, overhead_ms);
           },
           py::arg("task"), py::arg("l_max_ms") = py::none(), py::arg("overhead_ms") = 0.0)
      .def("add_model",
           [](ecoroute::pool::ModelPool& p, const py::object& entry) {
             p.add_model(ecoroute::pool::ModelEntry::from_json(from_py(entry)));
           })
      .def("deactivate_model", [](ecoroute::pool::ModelPool& p, const std::string& id) {
        p.deactivate_model(id);
      });

  auto sim = m.def_submodule("sim", "Simulator experiments");
  auto run_verb = [](auto runner, auto writer) {
    return [runner, writer](const py::object& config, const std::string& out) {
      const auto c = experiment_config(config);
      json summary;
      {
        py::gil_scoped_release release;
        const auto env = ecoroute::sim::make_environment(c);
        summary = writer(out, c, runner(c, env));
      }
      return to_py(summary);
    };
  };
  sim.def("run",
          run_verb(&ecoroute::sim::run_comparison,
                   [](const std::string& o, const auto& c, const auto& r) {
                     return ecoroute::sim::write_comparison(o, c, r);
                   }),
          py::arg("config") = py::none(), py::arg("out"));
  sim.def("sweep_lambda",
          run_verb(&ecoroute::sim::run_lambda_sweep,
                   [](const std::string& o, const auto& c, const auto& r) {
                     return ecoroute::sim::write_sweep(o, c, r);
                   }),
          py::arg("config") = py::none(), py::arg("out"));
  sim.def("ablate_features",
          run_verb(&ecoroute::sim::run_feature_ablation,
                   [](const std::string& o, const auto& c, const auto& r) {
                     return ecoroute::sim::write_ablation(o, c, r);
                   }),
          py::arg("config") = py::none(), py::arg("out"));
  sim.def("add_model",
          run_verb(&ecoroute::sim::run_model_addition,
                   [](const std::string& o, const auto& c, const auto& r) {
                     return ecoroute::sim::write_addition(o, c, r);
                   }),
          py::arg("config") = py::none(), py::arg("out"));
  sim.def(
      "overhead",
      [](const py::object& config, const std::string& out) {
        const auto c = experiment_config(config);
        json summary;
        {
          py::gil_scoped_release release;
          const auto env = ecoroute::sim::make_environment(c);
          summary = ecoroute::sim::write_overhead(
              out, c, ecoroute::sim::measure_overhead(env, c.overhead_queries, c.seed));
        }
        return to_py(summary);
      },
      py::arg("config") = py::none(), py::arg("out"));

  py::class_<ecoroute::service::RouterService>(m, "Router")
      .def(py::init([](const py::object& config) {
             const auto c = config.is_none()
                                ? ecoroute::service::ServiceConfig{}
                                : ecoroute::service::ServiceConfig::from_json(from_py(config));
             return ecoroute::service::make_service(c);
           }),
           py::arg("config") = py::none())
      .def("route",
           [](ecoroute::service::RouterService& s, const py::object& req) {
             return to_py(
                 s.route(ecoroute::service::RouteRequest::from_json(from_py(req))).to_json());
           })
      .def("feedback",
           [](ecoroute::service::RouterService& s, const py::object& fb) {
             return to_py(
                 s.feedback(ecoroute::service::FeedbackReport::from_json(from_py(fb)))
                     .to_json());
           })
      .def("pool",
           [](ecoroute::service::RouterService& s, const py::object& body) {
             return to_py(s.pool_churn(from_py(body)));
           })
      .def("stats",
           [](const ecoroute::service::RouterService& s) { return to_py(s.stats()); })
      .def("handle",
           [](ecoroute::service::RouterService& s, const std::string& method,
              const std::string& path, const std::string& body) {
             const auto r = s.handle(method, path, body);
             return py::make_tuple(r.status, to_py(r.body));
           })
      .def("checkpoint", [](const ecoroute::service::RouterService& s) {
        return to_py(s.checkpoint());
      });
}
