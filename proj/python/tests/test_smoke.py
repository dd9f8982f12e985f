# Copyright 2026 The Ecoroute Authors. All Rights Reserved.
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#      http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

import json

import numpy as np
import pytest

import ecoroute


def test_reward_endpoints():
    assert ecoroute.reward(0.0, 1.0, 0.3) == pytest.approx(1.0)
    assert ecoroute.reward(1.0, 1.0, 0.3) == pytest.approx(-0.3)
    assert ecoroute.normalize_energy(5.0, 10.0) == pytest.approx(0.5)
    assert ecoroute.normalize_energy(50.0, 10.0) == pytest.approx(1.0)
    with pytest.raises(ecoroute.EcorouteError):
        ecoroute.reward(1.5, 0.5, 0.5)


def test_flesch_bounds():
    assert 0.0 <= ecoroute.flesch_score("The cat sat on the mat.") <= 100.0


def test_linucb_learns_theta():
    rng = np.random.default_rng(0)
    truth = rng.normal(size=4)
    policy = ecoroute.Policy("linucb", ["a", "b"], 4)
    xs = rng.normal(size=(300, 4))
    for x in xs:
        policy.update("a", x, float(truth @ x))
    ridge = np.linalg.solve(0.05 * np.eye(4) + xs.T @ xs, xs.T @ (xs @ truth))
    np.testing.assert_allclose(policy.theta("a"), ridge, rtol=1e-8, atol=1e-10)
    sel = policy.select(xs[0], ["a", "b"])
    assert sel["arm_id"] in ("a", "b")
    assert set(sel["scores"]) == {"a", "b"}


def test_checkpoint_roundtrip():
    policy = ecoroute.Policy("thompson", ["a"], 3)
    policy.update("a", np.array([1.0, 0.0, 2.0]), 0.5)
    restored = ecoroute.Policy.restore(policy.checkpoint())
    np.testing.assert_allclose(restored.theta("a"), policy.theta("a"), rtol=1e-9)


def test_pool_fallback_to_fastest():
    pool = ecoroute.ModelPool.default()
    assert len(pool.active_ids()) == 16
    assert pool.feasible_set("math", l_max_ms=1e-6) == ["Qwen/Qwen2.5-0.5B-Instruct"]


def test_router_roundtrip(tmp_path):
    router = ecoroute.Router({"decision_log": str(tmp_path / "log.jsonl")})
    resp = router.route({"request_id": "q1",
                         "text": "Answer the following question.\n\nWho won the match?"})
    assert resp["model_id"] in resp["feasible"]
    ack = router.feedback({"request_id": "q1", "accuracy_raw": 1.0, "metric": "em",
                           "energy_wh": 0.01, "latency_ms": 20.0})
    assert ack["model_id"] == resp["model_id"]
    with pytest.raises(ecoroute.EcorouteError):
        router.feedback({"request_id": "q1", "accuracy_raw": 1.0, "energy_wh": 0.01})
    status, body = router.handle("GET", "/stats", "")
    assert status == 200 and body["total_pulls"] == 1
    status, _ = router.handle("POST", "/feedback", json.dumps({"request_id": "nope",
                                                                 "accuracy_raw": 1,
                                                                 "energy_wh": 0}))
    assert status == 404


def test_sim_run_writes_outputs(tmp_path):
    config = {"reps": 2, "steps": 200, "baselines": ["random"]}
    summary = ecoroute.sim.run(config, str(tmp_path))
    assert set(summary["results"]) == {"linucb", "random"}
    assert (tmp_path / "ledger_linucb.csv").exists()
    assert (tmp_path / "summary.json").exists()
