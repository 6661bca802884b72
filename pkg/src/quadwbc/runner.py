"""Closed-loop scenario execution: controller at its own rate on top of the simulator, logs and property checks."""

from __future__ import annotations

import csv
import json
import math
import time
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .controller import ControllerConfig, ControlOutput, WholeBodyController
from .model import RobotModel, default_model, load_model
from .projection import (ContactPoint, ContactSet, constrained_inertia, invert_constrained_inertia, projector,
                         stack_constraint_jacobian)
from .qp import OPTIMAL, TorqueLimits, pyramid_violation
from .rigid_body import DIM_NAMES, GeneralizedState, RobotData, resolve_dims
from .scenarios import Event, PropertySpec, Scenario, initial_state, validate_scenario
from .simulator import IntegratorConfig, SimWorld, TerrainPlane, step
from .tasks import TaskSpec, task_jacobian
from .trajectories import Reference, TaskTrajectory, TrajectorySegment

DEFAULT_TASK_GAINS = {"frequency": 3.0, "damping_ratio": 1.0}
_TIME_EPS = 1e-9


@dataclass
class ActiveTask:
    name: str
    frame: str
    dims: tuple[int, ...]
    stiffness: np.ndarray
    damping: np.ndarray
    trajectory: TaskTrajectory

    def spec(self, t: float) -> TaskSpec:
        ref = self.trajectory(t)
        return TaskSpec(self.frame, self.dims, ref.position, ref.rotation, self.stiffness, self.damping,
                        ref.velocity, ref.acceleration, name=self.name)


@dataclass
class RunLogs:
    """Per-control-tick records; each list holds one row per tick (or per tick and item)."""

    states: list = field(default_factory=list)
    tasks: list = field(default_factory=list)
    forces: list = field(default_factory=list)
    sim_forces: list = field(default_factory=list)
    torques: list = field(default_factory=list)
    estimator: list = field(default_factory=list)
    ticks: list = field(default_factory=list)
    impedance: list = field(default_factory=list)


@dataclass
class PropertyResult:
    name: str
    kind: str
    passed: bool
    value: float
    limit: float
    detail: str = ""

    def to_dict(self) -> dict:
        return {"name": self.name, "kind": self.kind, "passed": bool(self.passed), "value": _num(self.value),
                "limit": _num(self.limit), "detail": self.detail}


@dataclass
class RunReport:
    scenario: str
    duration: float
    sim_steps: int
    control_steps: int
    qp_status: dict
    max_constraint_violation: float
    max_pyramid_violation: float
    max_torque_violation: float
    timing: dict
    properties: list
    error: str | None = None

    @property
    def passed(self) -> bool:
        return self.error is None and all(p.passed for p in self.properties)

    def to_dict(self) -> dict:
        return {
            "scenario": self.scenario,
            "passed": self.passed,
            "error": self.error,
            "duration": self.duration,
            "sim_steps": self.sim_steps,
            "control_steps": self.control_steps,
            "qp_status": dict(self.qp_status),
            "max_constraint_violation": _num(self.max_constraint_violation),
            "max_pyramid_violation": _num(self.max_pyramid_violation),
            "max_torque_violation": _num(self.max_torque_violation),
            "timing": {k: _num(v) for k, v in self.timing.items()},
            "properties": [p.to_dict() for p in self.properties],
        }

    def property(self, name_or_kind: str) -> PropertyResult:
        for p in self.properties:
            if p.name == name_or_kind or p.kind == name_or_kind:
                return p
        raise KeyError(name_or_kind)


@dataclass
class RunResult:
    scenario: Scenario
    report: RunReport
    logs: RunLogs
    final_state: GeneralizedState


def _num(x):
    x = float(x)
    return x if math.isfinite(x) else (None if math.isnan(x) else ("inf" if x > 0 else "-inf"))


# -- gains ---------------------------------------------------------------------


def _gain_entry(scenario: Scenario, model: RobotModel, name: str, frame: str, override: dict | None) -> dict:
    if override:
        return override
    table = scenario.gains
    kind = "base" if frame == "base" else (model.frames[[f.name for f in model.frames].index(frame)].kind
                                          if model.has_frame(frame) else "")
    for key in (name, frame, kind, "default"):
        if key in table:
            return table[key]
    return DEFAULT_TASK_GAINS


def _broadcast(value, dims: tuple[int, ...]) -> np.ndarray:
    arr = np.asarray(value, dtype=float)
    if arr.ndim == 0:
        return np.full(len(dims), float(arr))
    if arr.shape == (6,) and len(dims) != 6:
        return arr[list(dims)]
    if arr.shape != (len(dims),):
        raise ValueError(f"gain vector of length {arr.size} does not match {len(dims)} task dims")
    return arr


def task_gains(entry: dict, inertia: np.ndarray, dims: tuple[int, ...]) -> tuple[np.ndarray, np.ndarray]:
    """Stiffness and damping from explicit values or from a natural frequency and damping ratio.

    For a frequency ``f`` the gains are ``K = m_i (2 pi f)^2`` and
    ``D = 2 zeta m_i (2 pi f)`` with ``m_i`` the per-axis effective inertia
    at activation (see ``effective_inertia``).
    """
    if "stiffness" in entry:
        K = _broadcast(entry["stiffness"], dims)
        D = _broadcast(entry.get("damping", 2.0 * np.sqrt(K)), dims)
        return K, D
    w = 2.0 * math.pi * _broadcast(entry.get("frequency", DEFAULT_TASK_GAINS["frequency"]), dims)
    zeta = float(entry.get("damping_ratio", 1.0))
    return inertia * w * w, 2.0 * zeta * inertia * w


def effective_inertia(mobility: np.ndarray) -> np.ndarray:
    """Per-axis inertia ``1 / A_ii`` from the task mobility ``A = J M_c^-1 P J^T`` (the inverse of Lambda).

    It is the mass felt along one axis when the other axes move freely.  Gains
    scaled by it keep the closed-loop modes of ``Lambda e'' + D e' + K e``
    near the requested frequency even when the task axes are strongly coupled,
    whereas scaling by ``Lambda_ii`` can push coupled modes far above it.
    """
    d = np.diag(mobility)
    if np.any(d <= 0.0):
        raise ValueError("task axis without mobility in the constraint-free space")
    return 1.0 / d


# -- runner --------------------------------------------------------------------


class ScenarioRunner:
    def __init__(self, scenario: Scenario, model: RobotModel | None = None, *, control_period: float | None = None,
                 friction_mu: float | None = None, use_qp: bool | None = None, integrator: str | None = None,
                 sim_dt: float | None = None):
        self.scenario = scenario.with_overrides(control_period=control_period, friction_mu=friction_mu,
                                                use_qp=use_qp, integrator=integrator, sim_dt=sim_dt)
        sc = self.scenario
        if model is None:
            model = load_model(sc.model_path) if sc.model_path else default_model()
        self.model = model
        self.events = validate_scenario(sc, model)
        self.config = ControllerConfig(friction_mu=sc.friction_mu, control_period=sc.control_period,
                                       use_qp=sc.use_qp)
        self.integrator = IntegratorConfig(dt=sc.sim_dt, method=sc.integrator)
        if sc.control_period < sc.sim_dt - 1e-12:
            raise ValueError("control period must not be shorter than the simulation step")
        self.controller = WholeBodyController(model, self.config)
        terrain = [TerrainPlane(np.asarray(p["point"], float),
                                np.asarray(p["normal"], float) / np.linalg.norm(p["normal"]),
                                float(p.get("friction_mu", sc.friction_mu))) for p in sc.terrain]
        self.world = SimWorld(model, initial_state(model, sc.initial), terrain)
        self.tasks: dict[str, ActiveTask] = {}
        self.contacts = ContactSet()
        self.limits = TorqueLimits.from_model(model)
        self._pending = list(self.events)
        for e in self.events:
            if e.kind == "wrench":
                d = e.data
                self.world.apply_external_force(d["frame"], d["force"], d.get("torque", (0.0, 0.0, 0.0)),
                                                e.t, e.t + float(d.get("duration", math.inf)))
        self._ode_tasks = {p.params["task"] for p in sc.properties if p.kind == "impedance_ode"}

    # -- events --------------------------------------------------------------

    def _set_contacts(self, frames):
        self.world.set_contacts(list(frames))
        # controller contacts carry no friction value so that friction updates apply
        self.contacts = ContactSet(tuple(ContactPoint(c.frame, c.surface_rotation, None) for c in self.world.contacts))

    def _current_reference(self, frame: str, name: str) -> Reference:
        t = self.world.time
        if name in self.tasks and self.tasks[name].frame == frame:
            ref = self.tasks[name].trajectory(t)
            return Reference(ref.position, ref.rotation)
        pl = RobotData(self.model, self.world.state).placement(frame)
        return Reference(pl.position.copy(), pl.rotation.copy())

    def _add_task(self, name: str, frame: str, dims, segments=(), gains: dict | None = None):
        t = self.world.time
        dims = resolve_dims(dims)
        start = self._current_reference(frame, name)
        segs = []
        t0 = t
        for s in segments:
            params = {k: v for k, v in s.items() if k not in ("kind", "start", "duration")}
            begin = t + float(s["start"]) if "start" in s else t0
            segs.append(TrajectorySegment(s["kind"], begin, float(s["duration"]), params))
            t0 = begin + float(s["duration"])
        entry = _gain_entry(self.scenario, self.model, name, frame, gains)
        if "stiffness" in entry:
            lam = np.ones(len(dims))
        else:
            lam = self._effective_inertia(frame, dims, start)
        K, D = task_gains(entry, lam, dims)
        self.tasks[name] = ActiveTask(name, frame, dims, K, D, TaskTrajectory(start, segs))

    def _effective_inertia(self, frame: str, dims, ref: Reference) -> np.ndarray:
        data = RobotData(self.model, self.world.state)
        proj = projector(stack_constraint_jacobian(self.model, data, self.contacts), self.config.svd_rel_tol)
        spec = TaskSpec(frame, dims, ref.position, ref.rotation, 0.0, 0.0)
        J, _ = task_jacobian(data, spec)
        McinvP = invert_constrained_inertia(constrained_inertia(proj.P, data.M)) @ proj.P
        return effective_inertia(J @ McinvP @ J.T)

    def _apply(self, e: Event):
        d = e.data
        if e.kind == "contacts":
            self._set_contacts(d["frames"])
        elif e.kind == "mode":
            tpl = self.controller.set_mode(d["mode"], d.get("params"))
            self.tasks = {k: v for k, v in self.tasks.items() if v.frame == "base"}
            self._set_contacts(tpl.contact_frames)
            for frame, dims in tpl.limb_dims.items():
                self._add_task(frame, frame, dims)
        elif e.kind == "task":
            frame = d.get("frame", d.get("name"))
            name = d.get("name", frame)
            dims = d.get("dims")
            if dims is None:
                dims = self.tasks[name].dims if name in self.tasks else tuple(range(6))
            self._add_task(name, frame, dims, d.get("segments", ()), d.get("gains"))
        elif e.kind == "remove_task":
            del self.tasks[d["name"]]
        elif e.kind == "friction":
            self.controller.update_friction(float(d["mu"]))
        # wrenches are registered with the simulator up front

    # -- loop ----------------------------------------------------------------

    def run(self, progress=None) -> RunResult:
        sc = self.scenario
        world = self.world
        logs = RunLogs()
        n_steps = int(round(sc.duration / sc.sim_dt))
        next_tick = 0.0
        tau = np.zeros(self.model.n)
        statuses: Counter = Counter()
        drift = 0.0
        pyr = -np.inf
        torque_viol = -np.inf
        timings = []
        error = None
        steps_done = 0
        for k in range(n_steps):
            t = world.time
            tick = t >= next_tick - _TIME_EPS
            out = None
            if tick:
                while self._pending and self._pending[0].t <= t + _TIME_EPS:
                    self._apply(self._pending.pop(0))
                if "base" not in self.tasks:
                    self._add_task("base", "base", tuple(range(6)))
                base = self.tasks["base"].spec(t)
                limbs = [v.spec(t) for k_, v in self.tasks.items() if k_ != "base"]
                try:
                    out = self.controller.control_step(world.state, self.contacts, base, limbs, t=t)
                except Exception as exc:  # noqa: BLE001 - reported, not swallowed
                    error = f"controller failed at t = {t:.4f} s: {exc}"
                    break
                tau = out.joint_torques
                statuses[out.qp_status] += 1
                timings.append(out.timing)
                resolved = self.contacts.resolved(self.controller.mu)
                if len(resolved):
                    pyr = max(pyr, pyramid_violation(resolved, out.contact_forces))
                torque_viol = max(torque_viol, float(np.max(np.maximum(tau - self.limits.tau_max,
                                                                       self.limits.tau_min - tau))))
                self._log_tick(logs, t, out, base, limbs)
                while next_tick <= t + _TIME_EPS:
                    next_tick += sc.control_period
            tick_state = world.state
            try:
                step(world, tau, self.integrator)
            except FloatingPointError as exc:
                error = str(exc)
                break
            steps_done += 1
            if tick:
                logs.sim_forces.extend(
                    [t, f, *world.last_forces[3 * i: 3 * i + 3]] for i, f in enumerate(world.contacts.frames))
                self._log_impedance(logs, t, tick_state, out, limbs)
            drift = max(drift, world.contact_drift())
            if progress is not None and k % 500 == 0:
                progress(world.time, sc.duration)
        report = RunReport(
            scenario=sc.name, duration=world.time, sim_steps=steps_done, control_steps=sum(statuses.values()),
            qp_status=dict(statuses), max_constraint_violation=drift, max_pyramid_violation=pyr,
            max_torque_violation=torque_viol, timing=_timing_stats(timings), properties=[], error=error)
        report.properties = [evaluate_property(p, logs, report, self) for p in sc.properties]
        return RunResult(sc, report, logs, world.state)

    def counterfactual(self, t_end: float) -> "RunResult":
        """The same scenario without events flagged as disturbances, run up to ``t_end``."""
        from dataclasses import replace

        sc = self.scenario
        events = tuple(e for e in sc.events if not e.data.get("disturbance", False))
        props = tuple(p for p in sc.properties if p.kind != "estimator_isolation")
        twin = replace(sc, events=events, properties=props, duration=min(sc.duration, t_end + sc.sim_dt))
        return ScenarioRunner(twin, self.model).run()

    def _log_tick(self, logs: RunLogs, t: float, out: ControlOutput, base: TaskSpec, limbs: list[TaskSpec]):
        st = self.world.state
        logs.states.append([t, *st.base_position, *st.base_orientation, *st.joint_positions, *st.qdot])
        for spec in [base, *limbs]:
            err = out.task_errors[spec.name]
            mask = "".join("1" if i in spec.dims else "0" for i in range(6))
            logs.tasks.append([t, spec.name, mask, *err.full_error, *err.full_rate])
        mu = self.controller.mu
        for i, f in enumerate(out.contact_frames):
            logs.forces.append([t, f, *out.contact_forces[3 * i: 3 * i + 3], mu])
        logs.torques.append([t, *out.joint_torques, *out.motion_torques[6:], *out.adjustment])
        wext = np.zeros(6)
        for w in self.world.wrenches:
            if w.active(t):
                wext += np.concatenate([w.force, w.torque])
        if out.estimated_wrench is not None and limbs:
            est = np.full(6, np.nan)
            est[list(limbs[0].dims)] = out.estimated_wrench
            logs.estimator.append([t, limbs[0].name, *est, *wext])
        # wall-clock timing stays out of the logs so that they are reproducible byte for byte
        logs.ticks.append([t, out.qp_status, out.rank, self.contacts.size, out.qp_iterations, out.kkt_residual,
                           int(out.fallback), mu])

    def _log_impedance(self, logs: RunLogs, t: float, st: GeneralizedState, out: ControlOutput,
                       limbs: list[TaskSpec]):
        """Residual data of the closed-loop task dynamics using the simulator's acceleration at the tick."""
        if not self._ode_tasks or len(limbs) != 1 or limbs[0].name not in self._ode_tasks:
            return
        spec = limbs[0]
        data = RobotData(self.model, st)
        J, drift = task_jacobian(data, spec)
        acc = J @ self.world.last_acceleration + drift - spec.reference_acceleration()
        err = out.task_errors[spec.name]
        lhs = out.limb_lambda @ acc + spec.damping * err.error_rate + spec.stiffness * err.error
        logs.impedance.append([t, spec.name, *lhs])


def _timing_stats(timings) -> dict:
    if not timings:
        return {"mean": math.nan, "p99": math.nan, "max": math.nan}
    a = np.asarray(timings)
    return {"mean": float(a.mean()), "p99": float(np.percentile(a, 99)), "max": float(a.max())}


def run_scenario(scenario: Scenario, model: RobotModel | None = None, log_dir: str | Path | None = None,
                 **overrides) -> RunResult:
    result = ScenarioRunner(scenario, model, **overrides).run()
    if log_dir is not None:
        write_logs(result, log_dir)
    return result


# -- properties ----------------------------------------------------------------


def _task_rows(logs: RunLogs, name: str, t0: float = -math.inf, t1: float = math.inf) -> np.ndarray:
    rows = [[r[0], *r[3:]] for r in logs.tasks if r[1] == name and t0 - _TIME_EPS <= r[0] <= t1 + _TIME_EPS]
    return np.asarray(rows, dtype=float).reshape(-1, 13)


def _window(p: PropertySpec, default_end: float):
    return float(p.params.get("t_start", 0.0)), float(p.params.get("t_end", default_end))


def evaluate_property(p: PropertySpec, logs: RunLogs, report: RunReport, runner: ScenarioRunner) -> PropertyResult:
    kind = p.kind
    prm = p.params
    t0, t1 = _window(p, report.duration)
    if report.error is not None:
        return PropertyResult(p.name, kind, False, math.nan, math.nan, "run aborted")
    if kind == "hierarchy":
        start = float(prm.get("t_start", 0.25))
        task = _task_rows(logs, prm["task"], start, t1)
        base = _task_rows(logs, prm.get("base", "base"), start, t1)
        task_pos = float(np.max(np.linalg.norm(task[:, 1:4], axis=1)))
        base_pos = float(np.max(np.linalg.norm(base[:, 1:3], axis=1)))
        ratio = task_pos / base_pos if base_pos > 0 else math.inf
        relaxed = DIM_NAMES.index(prm.get("relaxed", "yaw"))
        ctrl = [DIM_NAMES.index(c) for c in prm.get("controlled", ("roll", "pitch"))]
        relaxed_err = float(np.max(np.abs(task[:, 1 + relaxed])))
        ctrl_err = float(max(np.max(np.abs(task[:, 1 + c])) for c in ctrl))
        ok = ratio < float(prm.get("ratio", 0.1)) and relaxed_err > ctrl_err
        return PropertyResult(p.name, kind, ok, ratio, float(prm.get("ratio", 0.1)),
                              f"task position error {task_pos:.3g} m, base error {base_pos:.3g} m, "
                              f"{DIM_NAMES[relaxed]} error {relaxed_err:.3g} rad vs controlled {ctrl_err:.3g} rad")
    if kind == "max_task_error":
        axes = [DIM_NAMES.index(a) for a in prm.get("axes", ("x", "y", "z"))]
        worst = 0.0
        for name in prm["tasks"]:
            rows = _task_rows(logs, name, t0, t1)
            if len(rows):
                worst = max(worst, float(np.max(np.linalg.norm(rows[:, [1 + a for a in axes]], axis=1))))
        return PropertyResult(p.name, kind, worst < float(prm["limit"]), worst, float(prm["limit"]))
    if kind == "qp_optimal_fraction":
        total = sum(report.qp_status.values())
        frac = report.qp_status.get(OPTIMAL, 0) / total if total else 0.0
        return PropertyResult(p.name, kind, frac >= float(prm.get("min", 0.99)), frac, float(prm.get("min", 0.99)),
                              json.dumps(report.qp_status))
    if kind == "friction_cone":
        tol = float(prm.get("tol", 1e-6))
        return PropertyResult(p.name, kind, report.max_pyramid_violation <= tol, report.max_pyramid_violation, tol)
    if kind == "torque_limits":
        tol = float(prm.get("tol", 1e-9))
        return PropertyResult(p.name, kind, report.max_torque_violation <= tol, report.max_torque_violation, tol)
    if kind == "contact_rank":
        ranks = {(int(r[2]), int(r[3])) for r in logs.ticks}
        want = (int(prm["rank"]), int(prm["rows"]))
        ok = ranks == {want}
        return PropertyResult(p.name, kind, ok, float(max(r for r, _ in ranks)), float(want[0]),
                              f"observed (rank, rows): {sorted(ranks)}")
    if kind == "contact_drift":
        lim = float(prm.get("limit", 1e-4))
        return PropertyResult(p.name, kind, report.max_constraint_violation < lim, report.max_constraint_violation,
                              lim)
    if kind == "cycle_time":
        lim = float(prm.get("limit", 0.0025))
        mean = report.timing["mean"]
        return PropertyResult(p.name, kind, mean < lim, mean, lim,
                              f"p99 {report.timing['p99'] * 1e3:.3f} ms, max {report.timing['max'] * 1e3:.3f} ms")
    if kind == "estimator_accuracy":
        expected = np.asarray(prm["expected"], float)
        rows = [r for r in logs.estimator if t0 - _TIME_EPS <= r[0] <= t1 + _TIME_EPS]
        if not rows:
            return PropertyResult(p.name, kind, False, math.nan, float(prm["rel_tol"]), "no estimates in window")
        est = np.asarray([r[2:8] for r in rows], float)
        mask = ~np.isnan(est[0])
        err = np.max(np.linalg.norm(est[:, mask] - expected[mask], axis=1)) / np.linalg.norm(expected)
        return PropertyResult(p.name, kind, err <= float(prm["rel_tol"]), float(err), float(prm["rel_tol"]))
    if kind == "estimator_isolation":
        # the change caused by the disturbance is measured against a run without it
        td = float(prm["t_disturb"])
        base_run = runner.counterfactual(t1)
        if base_run.report.error is not None:
            return PropertyResult(p.name, kind, False, math.nan, math.nan, "reference run aborted")
        ref = {round(r[0], 9): np.asarray(r[2:8], float) for r in base_run.logs.estimator}
        rows = [r for r in logs.estimator if td - _TIME_EPS <= r[0] <= t1 + _TIME_EPS and round(r[0], 9) in ref]
        if not rows:
            return PropertyResult(p.name, kind, False, math.nan, math.nan, "no estimates after the disturbance")
        before = [r for r in logs.estimator if r[0] < td - _TIME_EPS]
        level = np.asarray(before[-1][2:8] if before else rows[0][2:8], float)
        mask = ~np.isnan(level)
        change = max(float(np.linalg.norm((np.asarray(r[2:8], float) - ref[round(r[0], 9)])[mask])) for r in rows)
        lim = float(prm["limit"]) if "limit" in prm else float(prm["rel_tol"]) * float(np.linalg.norm(level[mask]))
        return PropertyResult(p.name, kind, change < lim, change, lim,
                              "largest difference to the undisturbed run after the disturbance")
    if kind == "impedance_ode":
        force = np.asarray(prm["force"], float)
        skip = int(prm.get("skip_cycles", 3)) * runner.scenario.control_period
        rows = [r for r in logs.impedance if r[1] == prm["task"] and t0 + skip - _TIME_EPS <= r[0] <= t1 + _TIME_EPS]
        if not rows:
            return PropertyResult(p.name, kind, False, math.nan, float(prm["rel_tol"]), "no samples in window")
        dims = runner.tasks[prm["task"]].dims if prm["task"] in runner.tasks else tuple(range(6))
        lhs = np.asarray([r[2:] for r in rows], float)
        res = float(np.max(np.linalg.norm(lhs - force[list(dims)], axis=1)) / np.linalg.norm(force))
        return PropertyResult(p.name, kind, res < float(prm["rel_tol"]), res, float(prm["rel_tol"]))
    raise ValueError(f"unknown property kind {kind!r}")


# -- output --------------------------------------------------------------------


def _fmt(v) -> str:
    if isinstance(v, str):
        return v
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return format(float(v), ".10g")


def _write_csv(path: Path, units: list[str], header: list[str], rows):
    with path.open("w", newline="") as fh:
        fh.write("# units: " + ", ".join(units) + "\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([_fmt(v) for v in r])


def write_logs(result: RunResult, directory: str | Path) -> list[Path]:
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    model_n = len(result.final_state.joint_positions)
    joints = [f"q{i}" for i in range(model_n)]
    axes = list(DIM_NAMES)
    logs = result.logs
    files = []

    def out(name, units, header, rows):
        p = d / name
        _write_csv(p, units, header, rows)
        files.append(p)

    out("states.csv", ["s", "m", "-", "rad", "m/s, rad/s (base frame), rad/s"],
        ["t", "px", "py", "pz", "qw", "qx", "qy", "qz", *joints, "vx", "vy", "vz", "wx", "wy", "wz",
         *[f"d{j}" for j in joints]], logs.states)
    out("tasks.csv", ["s", "-", "-", "m and rad", "m/s and rad/s"],
        ["t", "task", "mask", *[f"e_{a}" for a in axes], *[f"de_{a}" for a in axes]], logs.tasks)
    out("forces.csv", ["s", "-", "N (inertial frame)", "-"], ["t", "frame", "fx", "fy", "fz", "mu"], logs.forces)
    out("sim_forces.csv", ["s", "-", "N (inertial frame)"], ["t", "frame", "fx", "fy", "fz"], logs.sim_forces)
    out("torques.csv", ["s", "N m"],
        ["t", *[f"tau_{j}" for j in joints], *[f"tau_m_{j}" for j in joints], *[f"u_{j}" for j in joints]],
        logs.torques)
    out("estimator.csv", ["s", "-", "N and N m (task coordinates)", "N and N m (inertial frame)"],
        ["t", "task", *[f"est_{a}" for a in axes], *[f"ext_{a}" for a in axes]], logs.estimator)
    out("control.csv", ["s", "-", "-", "-", "-", "-", "-", "-"],
        ["t", "qp_status", "rank", "rows", "iterations", "kkt_residual", "fallback", "mu"], logs.ticks)
    rp = d / "report.json"
    rp.write_text(json.dumps(result.report.to_dict(), indent=2) + "\n")
    files.append(rp)
    return files


__all__ = [
    "ActiveTask", "PropertyResult", "RunLogs", "RunReport", "RunResult", "ScenarioRunner", "evaluate_property",
    "run_scenario", "task_gains", "write_logs",
]
