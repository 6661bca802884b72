from __future__ import annotations

import json
import math

import numpy as np
import pytest

from quadwbc.model import foot_frame
from quadwbc.rigid_body import RobotData
from quadwbc.runner import RunLogs, RunResult, ScenarioRunner, effective_inertia, task_gains, write_logs
from quadwbc.scenarios import (FEET, STAND_HEIGHT, ScenarioError, export_library, expanded_events,
                               get_scenario, initial_state, load_scenario, save_scenario, scenario_from_dict,
                               scenario_library, solve_stance, validate_scenario)


def _stand_doc(**extra) -> dict:
    doc = {
        "name": "stand",
        "duration": 0.3,
        "initial_state": {"base_position": [0.0, 0.0, STAND_HEIGHT], "feet": {k: list(v) for k, v in FEET.items()}},
        "events": [{"t": 0.0, "type": "contacts", "frames": ["LF_FOOT", "RF_FOOT", "LH_FOOT", "RH_FOOT"]},
                   {"t": 0.0, "type": "task", "name": "base", "frame": "base",
                    "segments": [{"kind": "quintic", "duration": 0.2, "offset": [0.0, 0.005, -0.005]}]}],
        "properties": [{"name": "qp optimal", "kind": "qp_optimal_fraction", "min": 0.99},
                       {"name": "friction pyramids", "kind": "friction_cone", "tol": 1e-6}],
    }
    doc.update(extra)
    return doc


def test_library_scenarios_validate(model):
    lib = scenario_library()
    assert {"A_fixed_foot_circle", "B_prong_rotation", "C_two_prong_pitch", "D_shank_press",
            "E_low_friction_push", "F_slope_walk", "mission"} <= set(lib)
    for sc in lib.values():
        events = validate_scenario(sc, model)
        assert all(events[i].t <= events[i + 1].t for i in range(len(events) - 1))
        assert sc.properties


def test_get_scenario_by_prefix():
    assert get_scenario("A").name == "A_fixed_foot_circle"
    assert get_scenario("mission").name == "mission"
    with pytest.raises(KeyError):
        get_scenario("Z")


def test_round_trip(tmp_path):
    for sc in scenario_library().values():
        p = tmp_path / f"{sc.name}.json"
        save_scenario(sc, p)
        again = load_scenario(p)
        assert again.to_dict() == sc.to_dict()


def test_export_matches_library(tmp_path):
    paths = export_library(tmp_path)
    assert len(paths) == len(scenario_library())
    for p in paths:
        assert load_scenario(p).to_dict() == get_scenario(p.stem).to_dict()


@pytest.mark.parametrize("mutate, field", [
    (lambda d: d.pop("duration"), "<root>"),
    (lambda d: d.__setitem__("duration", -1.0), "duration"),
    (lambda d: d["events"][0].__setitem__("type", "teleport"), "events/0/type"),
    (lambda d: d["initial_state"].__setitem__("base_position", [0.0, 0.0]), "initial_state/base_position"),
    (lambda d: d["events"][1]["segments"][0].__setitem__("kind", "zigzag"), "events/1/segments/0/kind"),
    (lambda d: d.__setitem__("integrator", "leapfrog"), "integrator"),
])
def test_schema_errors_name_the_field(mutate, field):
    doc = _stand_doc()
    mutate(doc)
    with pytest.raises(ScenarioError, match=f"field {field}"):
        scenario_from_dict(doc)


def test_unsorted_timeline_rejected():
    doc = _stand_doc()
    doc["events"][0]["t"] = 1.0
    with pytest.raises(ScenarioError, match="events/1/t"):
        scenario_from_dict(doc)


def test_invalid_json_reports_position(tmp_path):
    p = tmp_path / "bad.json"
    p.write_text('{\n  "name": "x",\n  "duration": ,\n}')
    with pytest.raises(ScenarioError, match="line 3 column"):
        load_scenario(p)


def test_contact_task_overlap_rejected(model):
    doc = _stand_doc()
    doc["events"].append({"t": 0.1, "type": "task", "name": "LF_FOOT", "frame": "LF_FOOT", "dims": ["x", "y", "z"]})
    with pytest.raises(ScenarioError, match="LF_FOOT"):
        validate_scenario(scenario_from_dict(doc), model)


def test_unknown_frame_and_task_rejected(model):
    doc = _stand_doc()
    doc["events"].append({"t": 0.1, "type": "wrench", "frame": "TAIL", "force": [1, 0, 0]})
    with pytest.raises(ScenarioError, match="TAIL"):
        validate_scenario(scenario_from_dict(doc), model)
    doc = _stand_doc()
    doc["events"].append({"t": 0.1, "type": "remove_task", "name": "LF_FOOT"})
    with pytest.raises(ScenarioError, match="no active task"):
        validate_scenario(scenario_from_dict(doc), model)


def test_unreachable_stance_rejected(model):
    with pytest.raises(ScenarioError):
        solve_stance(model, np.array([0.0, 0.0, 1.5]), np.eye(3), FEET)
    with pytest.raises(ScenarioError):
        initial_state(model, {"base_position": [0.0, 0.0, 0.45], "feet": {"LF": [0.9, 0.18, 0.0]}})


def test_stance_solution_places_feet(model):
    s = solve_stance(model, np.array([0.02, -0.01, 0.42]), np.eye(3), FEET)
    data = RobotData(model, s)
    for leg, p in FEET.items():
        assert np.allclose(data.placement(foot_frame(leg)).position, p, atol=1e-8)
    lo = np.array([j.lower for j in model.joints])
    hi = np.array([j.upper for j in model.joints])
    assert np.all(s.joint_positions >= lo) and np.all(s.joint_positions <= hi)


def test_walk_expansion_alternates_contacts(model):
    sc = get_scenario("F")
    events = expanded_events(sc, model)
    contact_sets = [e.data["frames"] for e in events if e.kind == "contacts"]
    assert all(len(c) >= 3 for c in contact_sets)
    assert sum(len(c) == 3 for c in contact_sets) == 4


def test_gain_helpers():
    K, D = task_gains({"frequency": 2.0, "damping_ratio": 0.5}, np.array([1.0, 4.0]), (0, 1))
    w = 2 * math.pi * 2.0
    assert np.allclose(K, [w * w, 4 * w * w]) and np.allclose(D, [w, 4 * w])
    K, D = task_gains({"stiffness": [1, 2, 3, 4, 5, 6]}, np.ones(2), (0, 5))
    assert np.allclose(K, [1, 6]) and np.allclose(D, 2 * np.sqrt([1, 6]))
    with pytest.raises(ValueError):
        task_gains({"stiffness": [1.0, 2.0, 3.0]}, np.ones(2), (0, 1))
    assert np.allclose(effective_inertia(np.array([[0.5, 0.1], [0.1, 0.25]])), [2.0, 4.0])
    with pytest.raises(ValueError):
        effective_inertia(np.zeros((2, 2)))


def test_short_run_is_deterministic_and_logged(model, tmp_path):
    sc = scenario_from_dict(_stand_doc())
    a = ScenarioRunner(sc, model).run()
    b = ScenarioRunner(sc, model).run()
    assert a.report.passed and a.report.error is None
    assert a.report.control_steps == 120 and a.report.sim_steps == 300
    write_logs(a, tmp_path / "a")
    write_logs(b, tmp_path / "b")
    for name in ("states.csv", "tasks.csv", "forces.csv", "torques.csv", "control.csv", "sim_forces.csv"):
        ta = (tmp_path / "a" / name).read_text()
        assert ta == (tmp_path / "b" / name).read_text()
        lines = ta.splitlines()
        assert lines[0].startswith("# units:")
        assert len(lines) > 2
    rep = json.loads((tmp_path / "a" / "report.json").read_text())
    assert rep["scenario"] == "stand" and rep["passed"] is True


def test_empty_logs_have_headers_only(model, tmp_path):
    sc = scenario_from_dict(_stand_doc())
    result = ScenarioRunner(sc, model).run()
    empty = RunResult(result.scenario, result.report, RunLogs(), result.final_state)
    files = write_logs(empty, tmp_path)
    for p in files:
        if p.suffix == ".csv":
            lines = p.read_text().splitlines()
            assert len(lines) == 2 and lines[0].startswith("# units:")


def test_control_period_shorter_than_step_rejected(model):
    sc = scenario_from_dict(_stand_doc(control_period=5e-4))
    with pytest.raises(ValueError):
        ScenarioRunner(sc, model)
