"""Scripted evaluation scenarios: schema, validation, initial stances and the built-in library.

A scenario is a JSON document with a timeline of events (contact changes,
mode switches, task definitions, friction updates, external wrenches and
static-walk blocks) and a list of properties the run must satisfy.
"""

from __future__ import annotations

import copy
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .controller import ControlMode, mode_template
from .model import LEGS, RobotModel, foot_frame
from .rigid_body import GeneralizedState, RobotData, resolve_dims
from .spatial import matrix_to_quat, rpy_to_matrix
from .trajectories import SEGMENT_KINDS, TrajectorySegment, orientation_sequence, static_walk_sequencer


class ScenarioError(ValueError):
    """Malformed or inconsistent scenario."""


EVENT_KINDS = ("contacts", "mode", "task", "remove_task", "friction", "wrench", "walk")
PROPERTY_KINDS = (
    "hierarchy", "max_task_error", "qp_optimal_fraction", "friction_cone", "torque_limits", "contact_rank",
    "estimator_accuracy", "estimator_isolation", "contact_drift", "cycle_time", "impedance_ode",
)

_vec3 = {"type": "array", "items": {"type": "number"}, "minItems": 3, "maxItems": 3}
_gains = {
    "type": "object",
    "properties": {
        "frequency": {"oneOf": [{"type": "number", "exclusiveMinimum": 0},
                                {"type": "array", "items": {"type": "number", "exclusiveMinimum": 0}}]},
        "damping_ratio": {"type": "number", "minimum": 0},
        "stiffness": {"oneOf": [{"type": "number", "minimum": 0},
                                {"type": "array", "items": {"type": "number", "minimum": 0}}]},
        "damping": {"oneOf": [{"type": "number", "minimum": 0},
                              {"type": "array", "items": {"type": "number", "minimum": 0}}]},
    },
}

SCENARIO_SCHEMA = {
    "type": "object",
    "required": ["name", "duration", "initial_state", "events"],
    "properties": {
        "name": {"type": "string", "minLength": 1},
        "description": {"type": "string"},
        "model": {"type": ["string", "null"]},
        "duration": {"type": "number", "exclusiveMinimum": 0},
        "control_period": {"type": "number", "exclusiveMinimum": 0},
        "sim_dt": {"type": "number", "exclusiveMinimum": 0},
        "integrator": {"enum": ["euler", "rk4"]},
        "friction_mu": {"type": "number", "minimum": 0},
        "use_qp": {"type": "boolean"},
        "initial_state": {
            "type": "object",
            "properties": {
                "base_position": _vec3,
                "base_rpy": _vec3,
                "base_orientation": {"type": "array", "items": {"type": "number"}, "minItems": 4, "maxItems": 4},
                "feet": {"type": "object", "additionalProperties": _vec3},
                "joint_positions": {"type": "array", "items": {"type": "number"}},
            },
            "required": ["base_position"],
        },
        "terrain": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["point", "normal"],
                "properties": {"point": _vec3, "normal": _vec3, "friction_mu": {"type": "number", "minimum": 0}},
            },
        },
        "gains": {"type": "object", "additionalProperties": _gains},
        "events": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["t", "type"],
                "properties": {
                    "t": {"type": "number", "minimum": 0},
                    "type": {"enum": list(EVENT_KINDS)},
                    "frames": {"type": "array", "items": {"type": "string"}},
                    "mode": {"enum": [m.value for m in ControlMode]},
                    "params": {"type": "object"},
                    "name": {"type": "string"},
                    "frame": {"type": "string"},
                    "dims": {"type": "array", "items": {"type": ["string", "integer"]}},
                    "gains": _gains,
                    "segments": {
                        "type": "array",
                        "items": {
                            "type": "object",
                            "required": ["kind", "duration"],
                            "properties": {
                                "kind": {"enum": list(SEGMENT_KINDS)},
                                "start": {"type": "number", "minimum": 0},
                                "duration": {"type": "number", "exclusiveMinimum": 0},
                            },
                        },
                    },
                    "mu": {"type": "number", "minimum": 0},
                    "force": _vec3,
                    "torque": _vec3,
                    "duration": {"type": "number", "exclusiveMinimum": 0},
                    "disturbance": {"type": "boolean"},
                },
            },
        },
        "properties": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["name", "kind"],
                "properties": {"name": {"type": "string"}, "kind": {"enum": list(PROPERTY_KINDS)}},
            },
        },
    },
}


@dataclass(frozen=True)
class Event:
    t: float
    kind: str
    data: dict = field(default_factory=dict)


@dataclass(frozen=True)
class PropertySpec:
    name: str
    kind: str
    params: dict = field(default_factory=dict)


@dataclass(frozen=True)
class Scenario:
    name: str
    duration: float
    initial: dict
    events: tuple[Event, ...]
    properties: tuple[PropertySpec, ...] = ()
    description: str = ""
    model_path: str | None = None
    control_period: float = 1.0 / 400.0
    sim_dt: float = 1e-3
    integrator: str = "euler"
    friction_mu: float = 0.6
    use_qp: bool = True
    terrain: tuple[dict, ...] = ()
    gains: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        out = {
            "name": self.name,
            "description": self.description,
            "model": self.model_path,
            "duration": self.duration,
            "control_period": self.control_period,
            "sim_dt": self.sim_dt,
            "integrator": self.integrator,
            "friction_mu": self.friction_mu,
            "use_qp": self.use_qp,
            "initial_state": copy.deepcopy(self.initial),
            "terrain": [copy.deepcopy(t) for t in self.terrain],
            "gains": copy.deepcopy(self.gains),
            "events": [dict(t=e.t, type=e.kind, **copy.deepcopy(e.data)) for e in self.events],
            "properties": [dict(name=p.name, kind=p.kind, **copy.deepcopy(p.params)) for p in self.properties],
        }
        return out

    def with_overrides(self, **kw) -> "Scenario":
        from dataclasses import replace

        return replace(self, **{k: v for k, v in kw.items() if v is not None})


def scenario_from_dict(doc: dict) -> Scenario:
    import jsonschema

    try:
        jsonschema.validate(doc, SCENARIO_SCHEMA)
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ScenarioError(f"scenario field {where}: {exc.message}") from None
    events = []
    last = -math.inf
    for i, e in enumerate(doc["events"]):
        if e["t"] < last:
            raise ScenarioError(f"scenario field events/{i}/t: timeline is not sorted")
        last = e["t"]
        data = {k: v for k, v in e.items() if k not in ("t", "type")}
        events.append(Event(float(e["t"]), e["type"], data))
    props = tuple(
        PropertySpec(p["name"], p["kind"], {k: v for k, v in p.items() if k not in ("name", "kind")})
        for p in doc.get("properties", [])
    )
    return Scenario(
        name=doc["name"],
        description=doc.get("description", ""),
        duration=float(doc["duration"]),
        initial=doc["initial_state"],
        events=tuple(events),
        properties=props,
        model_path=doc.get("model"),
        control_period=float(doc.get("control_period", 1.0 / 400.0)),
        sim_dt=float(doc.get("sim_dt", 1e-3)),
        integrator=doc.get("integrator", "euler"),
        friction_mu=float(doc.get("friction_mu", 0.6)),
        use_qp=bool(doc.get("use_qp", True)),
        terrain=tuple(doc.get("terrain", ())),
        gains=doc.get("gains", {}),
    )


def load_scenario(path: str | Path) -> Scenario:
    text = Path(path).read_text()
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"{path}: invalid JSON at line {exc.lineno} column {exc.colno}: {exc.msg}") from None
    return scenario_from_dict(doc)


def save_scenario(scenario: Scenario, path: str | Path):
    Path(path).write_text(json.dumps(scenario.to_dict(), indent=2) + "\n")


# -- initial states ------------------------------------------------------------


def _default_leg_guess(leg: str) -> np.ndarray:
    return np.array([0.0, 0.6, -1.2]) if leg[1] == "F" else np.array([0.0, -0.6, 1.2])


def solve_stance(model: RobotModel, base_position, base_rotation, feet: dict, tol: float = 1e-10,
                 max_iter: int = 50) -> GeneralizedState:
    """Joint angles placing each listed foot at a world position for a given base pose.

    Damped Newton iterations on each leg's 3x3 position Jacobian, started from
    the nominal knee configuration.  Legs without a target keep that nominal
    configuration.
    """
    quat = matrix_to_quat(np.asarray(base_rotation, float))
    qj = np.zeros(model.n)
    for leg in LEGS:
        qj[model.supporting_joints(foot_frame(leg))] = _default_leg_guess(leg)
    for leg, target in feet.items():
        frame = foot_frame(leg)
        idx = model.supporting_joints(frame)
        target = np.asarray(target, dtype=float)
        for _ in range(max_iter):
            st = GeneralizedState(base_position, quat, qj)
            data = RobotData(model, st)
            err = data.placement(frame).position - target
            if np.linalg.norm(err) < tol:
                break
            J = data.full_jacobian(frame)[:3, [6 + i for i in idx]]
            step = np.linalg.solve(J.T @ J + 1e-9 * np.eye(3), J.T @ err)
            qj[idx] -= np.clip(step, -0.3, 0.3)
        else:
            raise ScenarioError(f"foot {leg} cannot reach {target.tolist()} from the given base pose")
        for i in idx:
            jt = model.joints[i]
            if not jt.lower - 1e-9 <= qj[i] <= jt.upper + 1e-9:
                raise ScenarioError(f"foot {leg} target needs {jt.name} = {qj[i]:.3f} rad beyond its limits")
    return GeneralizedState(base_position, quat, qj)


def initial_state(model: RobotModel, spec: dict) -> GeneralizedState:
    if "joint_positions" in spec:
        doc = dict(spec)
        if "base_orientation" not in doc:
            doc["base_orientation"] = matrix_to_quat(rpy_to_matrix(spec.get("base_rpy", (0.0, 0.0, 0.0)))).tolist()
        return GeneralizedState.from_dict(doc)
    if "base_orientation" in spec:
        from .spatial import quat_normalize, quat_to_matrix

        R = quat_to_matrix(quat_normalize(spec["base_orientation"]))
    else:
        R = rpy_to_matrix(spec.get("base_rpy", (0.0, 0.0, 0.0)))
    return solve_stance(model, np.asarray(spec["base_position"], float), R, spec.get("feet", {}))


# -- timeline ------------------------------------------------------------------


def expand_walk(event: Event, model: RobotModel | None = None) -> list[Event]:
    """Replace a static-walk block by contact, base-shift and swing-task events."""
    d = event.data
    feet = {leg: tuple(xy) for leg, xy in d.get("feet", {}).items()} or None
    sched = static_walk_sequencer(
        float(d["stride"]), float(d["clearance"]), float(d["cycle_time"]), float(d.get("slope", 0.0)),
        feet=feet, cycles=int(d.get("cycles", 1)), start_time=event.t,
        stability_margin=float(d.get("stability_margin", 0.02)),
        shift_fraction=float(d.get("shift_fraction", 0.4)))
    height = float(d.get("base_height", 0.45))
    slope = sched.slope
    normal = np.array([-math.sin(slope), 0.0, math.cos(slope)])
    out = []
    all_feet = [foot_frame(l) for l in LEGS]
    for (t0, t1, xy) in sched.base_waypoints:
        surface = np.array([xy[0], xy[1], xy[0] * math.tan(slope)])
        target = surface + height * normal
        out.append(Event(t0, "task", {"name": "base", "frame": "base",
                                      "segments": [{"kind": "quintic", "duration": t1 - t0,
                                                    "position": target.tolist()}]}))
    for sw in sched.swings:
        frame = foot_frame(sw.leg)
        stance = [f for f in all_feet if f != frame]
        out.append(Event(sw.lift_off, "contacts", {"frames": stance}))
        out.append(Event(sw.lift_off, "task", {
            "name": frame, "frame": frame, "dims": ["x", "y", "z"],
            "segments": [{"kind": "swing", "duration": sw.touch_down - sw.lift_off,
                          "target": sw.target.tolist(), "clearance": sw.clearance,
                          "normal": sw.normal.tolist()}]}))
        out.append(Event(sw.touch_down, "remove_task", {"name": frame}))
        out.append(Event(sw.touch_down, "contacts", {"frames": all_feet}))
    out.sort(key=lambda e: e.t)
    return out


def expanded_events(scenario: Scenario, model: RobotModel | None = None) -> list[Event]:
    out = []
    for e in scenario.events:
        out.extend(expand_walk(e, model) if e.kind == "walk" else [e])
    # stable sort keeps the listed order for simultaneous events
    return sorted(out, key=lambda e: e.t)


def validate_scenario(scenario: Scenario, model: RobotModel) -> list[Event]:
    """Check frames, dims and the contact/task exclusivity at every instant; returns the expanded timeline."""
    events = expanded_events(scenario, model)
    contacts: set[str] = set()
    tasks: dict[str, str] = {}
    i = 0
    while i < len(events):
        t = events[i].t
        while i < len(events) and events[i].t == t:
            e = events[i]
            d = e.data
            where = f"event at t = {t:g} ({e.kind})"
            try:
                if e.kind == "contacts":
                    for f in d["frames"]:
                        model.frame(f)
                    contacts = set(d["frames"])
                elif e.kind == "mode":
                    tpl = mode_template(model, d["mode"], d.get("params"))
                    contacts = set(tpl.contact_frames)
                    tasks = {k: v for k, v in tasks.items() if v == "base"}
                    tasks.update({f: f for f in tpl.limb_dims})
                elif e.kind == "task":
                    frame = d.get("frame", d.get("name"))
                    model.frame(frame)
                    resolve_dims(d.get("dims"))
                    for seg in d.get("segments", []):
                        TrajectorySegment(seg["kind"], 0.0, seg["duration"], {})
                    tasks[d.get("name", frame)] = frame
                elif e.kind == "remove_task":
                    if d["name"] not in tasks:
                        raise ScenarioError(f"no active task named {d['name']!r}")
                    if d["name"] == "base":
                        raise ScenarioError("the base task cannot be removed")
                    del tasks[d["name"]]
                elif e.kind == "wrench":
                    model.frame(d["frame"])
                elif e.kind == "friction":
                    if not d["mu"] >= 0.0:
                        raise ScenarioError("friction coefficient must be >= 0")
            except (KeyError, ValueError) as exc:
                msg = exc.args[0] if exc.args else str(exc)
                raise ScenarioError(f"{where}: {msg}") from None
            i += 1
        overlap = contacts & set(tasks.values())
        if overlap:
            raise ScenarioError(f"at t = {t:g}: frames {sorted(overlap)} are both in contact and under a task")
    return events


# -- library -------------------------------------------------------------------

STAND_HEIGHT = 0.45
FEET = {"LF": (0.3, 0.18, 0.0), "RF": (0.3, -0.18, 0.0), "LH": (-0.3, 0.18, 0.0), "RH": (-0.3, -0.18, 0.0)}
DEFAULT_GAINS = {
    "base": {"frequency": [2.5, 2.5, 3.0, 2.5, 2.5, 2.5], "damping_ratio": 1.0},
    "foot": {"frequency": 5.0, "damping_ratio": 1.0},
    "shank": {"frequency": 5.0, "damping_ratio": 1.0},
}
_COMMON_PROPS = [
    {"name": "qp optimal", "kind": "qp_optimal_fraction", "min": 0.99},
    {"name": "torque limits", "kind": "torque_limits", "tol": 1e-9},
    {"name": "friction pyramids", "kind": "friction_cone", "tol": 1e-6},
    {"name": "contact drift", "kind": "contact_drift", "limit": 1e-4},
]


def _triangle_centroid(legs) -> np.ndarray:
    return np.mean([FEET[l][:2] for l in legs], axis=0)


def _scenario_a() -> dict:
    r, period, ramp = 0.03, 4.0, 1.0
    c = _triangle_centroid(("RF", "LH", "RH"))
    feet = dict(FEET)
    feet["LF"] = (0.3, 0.18, 0.06)
    return {
        "name": "A_fixed_foot_circle",
        "description": "Base circles in x-y on three feet while the raised left-fore foot holds a 5-DOF pose (yaw relaxed).",
        "duration": 0.25 + 2 * period + ramp / 2,
        "initial_state": {"base_position": [c[0] + r, c[1], STAND_HEIGHT], "base_rpy": [0, 0, 0], "feet": feet},
        "gains": DEFAULT_GAINS,
        "events": [
            {"t": 0.0, "type": "contacts", "frames": ["RF_FOOT", "LH_FOOT", "RH_FOOT"]},
            {"t": 0.0, "type": "task", "name": "LF_FOOT", "frame": "LF_FOOT", "dims": ["x", "y", "z", "roll", "pitch"]},
            {"t": 0.0, "type": "task", "name": "base", "frame": "base",
             "segments": [{"kind": "hold", "duration": 0.25},
                          {"kind": "circle", "duration": 2 * period + ramp / 2, "radius": r, "period": period,
                           "ramp": ramp}]},
        ],
        "properties": [
            {"name": "foot-over-base hierarchy", "kind": "hierarchy", "task": "LF_FOOT", "base": "base",
             "ratio": 0.1, "relaxed": "yaw", "controlled": ["roll", "pitch"]},
            *_COMMON_PROPS,
            {"name": "cycle time", "kind": "cycle_time", "limit": 0.0025},
        ],
    }


BODY_HEIGHT = 0.25


def _body_contact(name: str, prongs: list[str], amplitudes, description: str) -> dict:
    seg_T = 2.0
    pivot = [0.32, 0.08 if len(prongs) == 1 else 0.0, 0.0]
    feet = dict(FEET)
    feet["LF"] = (0.38, 0.18, 0.06)
    feet["RF"] = (0.38, -0.18, 0.06)
    segs = [{"kind": "hold", "duration": 0.25}]
    for seg in orientation_sequence(pivot, amplitudes, seg_T):
        segs.append({"kind": seg.kind, "duration": seg.duration, **seg.params})
    segs.append({"kind": "hold", "duration": 0.25})
    duration = sum(s["duration"] for s in segs)
    return {
        "name": name,
        "description": description,
        "duration": duration,
        "initial_state": {"base_position": [0.0, 0.0, BODY_HEIGHT], "base_rpy": [0, 0, 0], "feet": feet},
        "gains": DEFAULT_GAINS,
        "events": [
            {"t": 0.0, "type": "mode", "mode": "body_contact", "params": {"prongs": prongs}},
            {"t": 0.0, "type": "task", "name": "base", "frame": "base", "segments": segs},
        ],
        "properties": [
            {"name": "fore feet hold", "kind": "max_task_error", "tasks": ["LF_FOOT", "RF_FOOT"], "axes": ["x", "y", "z"],
             "limit": 0.01},
            {"name": "contact rank", "kind": "contact_rank", "rank": 9 if len(prongs) == 1 else 11,
             "rows": 3 * (len(prongs) + 2)},
            *_COMMON_PROPS,
        ],
    }


def _scenario_d() -> dict:
    c = _triangle_centroid(("RF", "LH", "RH"))
    feet = dict(FEET)
    feet["LF"] = (0.3, 0.18, 0.06)
    t_move, T_move, t_force, t_dist = 0.25, 1.0, 1.5, 3.0
    force = [-10.0, 0.0, 0.0]
    return {
        "name": "D_shank_press",
        "description": "Left-fore shank 6-DOF task reaches a button and holds against a 10 N reaction; "
                       "then the torso target steps while the force estimate must stay put.",
        "duration": 4.5,
        "initial_state": {"base_position": [c[0] + 0.03, c[1], STAND_HEIGHT], "base_rpy": [0, 0, 0], "feet": feet},
        "gains": DEFAULT_GAINS,
        "events": [
            {"t": 0.0, "type": "mode", "mode": "manipulation", "params": {"leg": "LF"}},
            {"t": 0.0, "type": "task", "name": "base", "frame": "base"},
            {"t": t_move, "type": "task", "name": "LF_SHANK", "frame": "LF_SHANK",
             "dims": ["x", "y", "z", "roll", "pitch", "yaw"],
             "segments": [{"kind": "quintic", "duration": T_move, "offset": [0.05, 0.0, 0.05]}]},
            {"t": t_force, "type": "wrench", "frame": "LF_SHANK", "force": force, "torque": [0, 0, 0],
             "duration": 10.0},
            {"t": t_dist, "type": "task", "name": "base", "frame": "base", "disturbance": True,
             "segments": [{"kind": "quintic", "duration": 1.0, "offset": [0.0, 0.0, 0.015], "rpy": [0.03, 0.0, 0.0]}]},
        ],
        "properties": [
            {"name": "force estimate", "kind": "estimator_accuracy", "expected": force + [0, 0, 0],
             "t_start": t_force + 0.5, "t_end": t_dist, "rel_tol": 0.1},
            {"name": "estimate isolation", "kind": "estimator_isolation", "t_disturb": t_dist, "t_end": 4.5,
             "rel_tol": 1e-3},
            {"name": "impedance response", "kind": "impedance_ode", "task": "LF_SHANK", "force": force + [0, 0, 0],
             "t_start": t_force, "t_end": t_dist, "skip_cycles": 3, "rel_tol": 0.05},
            *_COMMON_PROPS,
        ],
    }


def _scenario_e() -> dict:
    return {
        "name": "E_low_friction_push",
        "description": "Four-foot stance; friction parameter lowered to 0.2 (ice), then a lateral push on the torso.",
        "duration": 3.5,
        "friction_mu": 0.6,
        "initial_state": {"base_position": [0.0, 0.0, STAND_HEIGHT], "base_rpy": [0, 0, 0], "feet": dict(FEET)},
        "terrain": [{"point": [0, 0, 0], "normal": [0, 0, 1], "friction_mu": 0.2}],
        "gains": DEFAULT_GAINS,
        "events": [
            {"t": 0.0, "type": "contacts", "frames": [foot_frame(l) for l in LEGS]},
            {"t": 0.0, "type": "task", "name": "base", "frame": "base"},
            {"t": 0.5, "type": "friction", "mu": 0.2},
            {"t": 1.0, "type": "wrench", "frame": "base", "force": [0.0, 35.0, 0.0], "torque": [0, 0, 0],
             "duration": 1.5},
        ],
        "properties": [*_COMMON_PROPS],
    }


def _walk_event(t: float, slope: float, cycles: int = 1) -> dict:
    return {"t": t, "type": "walk", "stride": 0.08, "clearance": 0.05, "cycle_time": 8.0, "shift_fraction": 0.5,
            "slope": slope, "cycles": cycles, "base_height": STAND_HEIGHT}


def _scenario_slope() -> dict:
    slope = math.radians(20.0)
    n = [-math.sin(slope), 0.0, math.cos(slope)]
    feet = {k: (v[0], v[1], v[0] * math.tan(slope)) for k, v in FEET.items()}
    return {
        "name": "F_slope_walk",
        "description": "One crawl cycle up a 20 degree incline; contact pyramids follow the surface normal.",
        "duration": 8.75,
        "friction_mu": 0.8,
        "initial_state": {"base_position": [STAND_HEIGHT * n[0], 0.0, STAND_HEIGHT * n[2]], "base_rpy": [0, -slope, 0],
                          "feet": feet},
        "terrain": [{"point": [0, 0, 0], "normal": n, "friction_mu": 0.8}],
        "gains": DEFAULT_GAINS,
        "events": [
            {"t": 0.0, "type": "contacts", "frames": [foot_frame(l) for l in LEGS]},
            {"t": 0.0, "type": "task", "name": "base", "frame": "base"},
            _walk_event(0.25, slope),
        ],
        "properties": [*_COMMON_PROPS],
    }


def _scenario_mission() -> dict:
    """Walk a cycle, step onto ice, shift over three feet and press a button with the fore shank."""
    t_walk_end = 0.25 + 8.0
    t_mode, t_force = t_walk_end + 1.75, t_walk_end + 3.25
    stride = 0.08
    tri = np.mean([[FEET["RF"][0] + stride, -0.18], [FEET["LH"][0] + stride, 0.18],
                   [FEET["RH"][0] + stride, -0.18]], axis=0)
    force = [-10.0, 0.0, 0.0]
    return {
        "name": "mission",
        "description": "Composite run: crawl cycle, friction drop to 0.2, body shift onto three feet, "
                       "then a 6-DOF shank press against a 10 N reaction.",
        "duration": t_walk_end + 4.75,
        "initial_state": {"base_position": [0.0, 0.0, STAND_HEIGHT], "base_rpy": [0, 0, 0], "feet": dict(FEET)},
        "gains": DEFAULT_GAINS,
        "events": [
            {"t": 0.0, "type": "contacts", "frames": [foot_frame(l) for l in LEGS]},
            {"t": 0.0, "type": "task", "name": "base", "frame": "base"},
            _walk_event(0.25, 0.0),
            {"t": t_walk_end + 0.25, "type": "friction", "mu": 0.2},
            {"t": t_walk_end + 0.25, "type": "task", "name": "base", "frame": "base",
             "segments": [{"kind": "quintic", "duration": 1.25, "position": [tri[0] + 0.03, tri[1], STAND_HEIGHT]}]},
            {"t": t_mode, "type": "mode", "mode": "manipulation", "params": {"leg": "LF"}},
            {"t": t_mode + 0.25, "type": "task", "name": "LF_SHANK", "frame": "LF_SHANK",
             "dims": ["x", "y", "z", "roll", "pitch", "yaw"],
             "segments": [{"kind": "quintic", "duration": 1.0, "offset": [0.05, 0.0, 0.05]}]},
            {"t": t_force, "type": "wrench", "frame": "LF_SHANK", "force": force, "torque": [0, 0, 0],
             "duration": 10.0},
        ],
        "properties": [
            {"name": "force estimate", "kind": "estimator_accuracy", "expected": force + [0, 0, 0],
             "t_start": t_force + 0.5, "t_end": t_walk_end + 4.75, "rel_tol": 0.1},
            *_COMMON_PROPS,
        ],
    }


def _library_docs() -> dict[str, dict]:
    docs = [
        _scenario_a(),
        _body_contact("B_prong_rotation", ["PRONG_LEFT"], [0.2, 0.2, 0.1],
                      "Body rests on one prong and both hind feet; the torso rolls, pitches and yaws about "
                      "the prong while the fore feet hold their positions."),
        _body_contact("C_two_prong_pitch", ["PRONG_LEFT", "PRONG_RIGHT"], [0.0, 0.2, 0.0],
                      "Both prongs and both hind feet in contact (rank-deficient constraint Jacobian); "
                      "the torso pitches about the prong axis."),
        _scenario_d(),
        _scenario_e(),
        _scenario_slope(),
        _scenario_mission(),
    ]
    # JSON round trip turns tuples into lists, as in a file on disk
    return {d["name"]: json.loads(json.dumps(d)) for d in docs}


def scenario_library() -> dict[str, Scenario]:
    return {name: scenario_from_dict(doc) for name, doc in _library_docs().items()}


def get_scenario(name: str) -> Scenario:
    lib = scenario_library()
    if name in lib:
        return lib[name]
    matches = [k for k in lib if k.split("_")[0] == name or k.lower().startswith(name.lower())]
    if len(matches) == 1:
        return lib[matches[0]]
    raise KeyError(f"unknown scenario {name!r}; available: {sorted(lib)}")


def export_library(directory: str | Path) -> list[Path]:
    out = []
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    for name, sc in scenario_library().items():
        p = d / f"{name}.json"
        save_scenario(sc, p)
        out.append(p)
    return out
