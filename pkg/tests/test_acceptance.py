"""The ten acceptance criteria at their stated tolerances; one summary line per criterion."""

from __future__ import annotations

import math
import time
from dataclasses import replace

import numpy as np
import pytest
from scipy.integrate import solve_ivp

from quadwbc.controller import ControllerConfig, WholeBodyController
from quadwbc.projection import (ContactSet, constrained_inertia, invert_constrained_inertia, projector,
                                stack_constraint_jacobian)
from quadwbc.qp import OPTIMAL, friction_pyramid_rows
from quadwbc.rigid_body import GeneralizedState, RobotData, selection_matrix
from quadwbc.runner import ScenarioRunner
from quadwbc.scenarios import get_scenario
from quadwbc.simulator import IntegratorConfig, SimWorld, constrained_forward_dynamics, step
from quadwbc.spatial import rotation_log
from quadwbc.tasks import TaskSpec, operational_quantities

from conftest import CONTACT_SETS, FOOT_FRAMES, TWO_PRONGS, random_state, record_criterion, stance_state

pytestmark = pytest.mark.slow

# -- scenario runs shared by several criteria ----------------------------------


class _Run:
    def __init__(self, name: str, **overrides):
        self.runner = ScenarioRunner(get_scenario(name), **overrides)
        start = time.perf_counter()
        self.result = self.runner.run()
        self.wall = time.perf_counter() - start
        self.report = self.result.report
        self.logs = self.result.logs

    def task_rows(self, name: str, t0: float = -math.inf, t1: float = math.inf) -> np.ndarray:
        rows = [[r[0], *r[3:]] for r in self.logs.tasks if r[1] == name and t0 - 1e-9 <= r[0] <= t1 + 1e-9]
        return np.asarray(rows, dtype=float)


@pytest.fixture(scope="module")
def run_a():
    return _Run("A")


@pytest.fixture(scope="module")
def run_d():
    return _Run("D")


# -- 1 -------------------------------------------------------------------------


def test_criterion_1_projection_algebra(model):
    rng = np.random.default_rng(2024)
    start = time.perf_counter()
    worst = 0.0
    ranks = set()
    two_prong_ranks = set()
    for i in range(1000):
        s = random_state(model, rng)
        frames = CONTACT_SETS[i % len(CONTACT_SETS)]
        J = stack_constraint_jacobian(model, s, frames)
        res = projector(J)
        P = res.P
        worst = max(worst, np.abs(P - P.T).max(), np.abs(P @ P - P).max(), np.abs(P @ J.T).max())
        ranks.add(res.rank)
        if frames == TWO_PRONGS + ("LH_FOOT", "RH_FOOT"):
            two_prong_ranks.add(res.rank)
    elapsed = time.perf_counter() - start
    ok = worst < 1e-9 and two_prong_ranks == {11} and min(ranks) == 3 and max(ranks) == 12 and elapsed < 60.0
    record_criterion(1, "projection algebra", ok,
                     f"max invariant residual {worst:.2e}, ranks {sorted(ranks)}, two-prong rank "
                     f"{sorted(two_prong_ranks)}, {elapsed:.1f} s")
    assert ok


# -- 2 -------------------------------------------------------------------------


def test_criterion_2_decomposition_identity(model):
    rng = np.random.default_rng(99)
    B = selection_matrix(model.n)
    worst = 0.0
    for i in range(500):
        data = RobotData(model, random_state(model, rng))
        J = stack_constraint_jacobian(model, data, CONTACT_SETS[i % len(CONTACT_SETS)])
        P = projector(J).P
        I = np.eye(model.nv)
        qdd = rng.normal(size=model.nv)
        tau = B @ rng.normal(scale=20.0, size=model.nv)
        lam = rng.normal(scale=50.0, size=J.shape[0])
        M, h = data.M, data.h
        free = P @ M @ qdd + P @ h - P @ B @ tau
        cons = (I - P) @ (M @ qdd + h) - (I - P) @ B @ tau - J.T @ lam
        full = M @ qdd + h - B @ tau - J.T @ lam
        scale = max(np.abs(M @ qdd).max(), np.abs(h).max(), np.abs(tau).max(), np.abs(J.T @ lam).max())
        worst = max(worst, np.abs(free + cons - full).max() / scale)
    ok = worst < 1e-12
    record_criterion(2, "decomposition identity", ok, f"max relative residual {worst:.2e}")
    assert ok


# -- 3 -------------------------------------------------------------------------


def _fd_jacobian_error(model, rng, samples: int = 10) -> float:
    h = 1e-6
    worst = 0.0
    frames = [f.name for f in model.frames] + ["base"]
    for _ in range(samples):
        s = random_state(model, rng)
        data = RobotData(model, s)
        for frame in frames:
            J = data.full_jacobian(frame)
            R = data.placement(frame).rotation
            for i in range(model.nv):
                e = np.zeros(model.nv)
                e[i] = 1.0
                plus = RobotData(model, s.integrate(e, h)).placement(frame)
                minus = RobotData(model, s.integrate(e, -h)).placement(frame)
                lin = (plus.position - minus.position) / (2 * h)
                ang = R @ rotation_log(minus.rotation.T @ plus.rotation) / (2 * h)
                worst = max(worst, np.abs(J[:3, i] - lin).max(), np.abs(J[3:, i] - ang).max())
    return worst


def test_criterion_3_dynamics_validation(model):
    rng = np.random.default_rng(5)
    s = stance_state(model)
    s = GeneralizedState(s.base_position + [0.0, 0.0, 1.0], s.base_orientation, s.joint_positions,
                         rng.normal(scale=0.5, size=3), rng.normal(size=3), rng.normal(size=model.n))
    world = SimWorld(model, s)
    e0 = world.energy()
    cfg = IntegratorConfig(dt=1e-3, method="rk4")
    drift = 0.0
    for _ in range(5000):
        step(world, np.zeros(model.n), cfg)
        drift = max(drift, abs(world.energy() - e0) / abs(e0))
    jac = _fd_jacobian_error(model, rng)
    ok = drift < 1e-6 and jac < 1e-6
    record_criterion(3, "dynamics validation", ok,
                     f"relative energy drift {drift:.2e} over 5 s (RK4, dt 1e-3), Jacobian FD error {jac:.2e}")
    assert ok


# -- 4 and 9 ---------------------------------------------------------------------


def test_criterion_4_fixed_foot_hierarchy(run_a):
    assert run_a.report.error is None
    t_start = 0.25
    foot = run_a.task_rows("LF_FOOT", t_start)
    base = run_a.task_rows("base", t_start)
    foot_pos = float(np.max(np.linalg.norm(foot[:, 1:4], axis=1)))
    base_pos = float(np.max(np.linalg.norm(base[:, 1:4], axis=1)))
    yaw = float(np.max(np.abs(foot[:, 6])))
    controlled = [float(np.max(np.abs(foot[:, 1 + a]))) for a in range(5)]
    ok = foot_pos < 0.1 * base_pos and yaw > max(controlled) and run_a.wall < 30.0
    record_criterion(4, "fixed-foot hierarchy over two base circles", ok,
                     f"foot {foot_pos:.2e} m vs base {base_pos:.2e} m, yaw {yaw:.3g} rad vs controlled max "
                     f"{max(controlled):.2e}, run {run_a.wall:.1f} s")
    assert ok


def test_criterion_9_real_time_budget(run_a):
    mean = run_a.report.timing["mean"]
    ok = mean < 2.5e-3
    record_criterion(9, "real-time budget", ok,
                     f"mean control_step {mean * 1e3:.3f} ms over scenario A "
                     f"(p99 {run_a.report.timing['p99'] * 1e3:.3f} ms)")
    assert ok


# -- 5 ---------------------------------------------------------------------------


def test_criterion_5_body_contact_sequences():
    b, c = _Run("B"), _Run("C")
    errs = []
    for run in (b, c):
        assert run.report.error is None
        worst = 0.0
        for name in ("LF_FOOT", "RF_FOOT"):
            rows = run.task_rows(name)
            worst = max(worst, float(np.max(np.linalg.norm(rows[:, 1:4], axis=1))))
        errs.append(worst)
    frac_c = c.report.qp_status.get(OPTIMAL, 0) / c.report.control_steps
    ranks_c = {(int(r[2]), int(r[3])) for r in c.logs.ticks}
    ok = max(errs) < 0.01 and frac_c >= 0.99 and ranks_c == {(11, 12)}
    record_criterion(5, "prong orientation sequences", ok,
                     f"fore-feet error B {errs[0]:.2e} m, C {errs[1]:.2e} m; C qp optimal {frac_c:.1%}, "
                     f"C (rank, rows) {sorted(ranks_c)}")
    assert ok


# -- 6 ---------------------------------------------------------------------------


def _max_logged_pyramid(run: _Run) -> float:
    # flat ground: the surface frame is the inertial frame
    from quadwbc.projection import ContactPoint

    worst = -math.inf
    for t, frame, fx, fy, fz, mu in run.logs.forces:
        G = friction_pyramid_rows(ContactPoint.on_surface(frame), mu)
        worst = max(worst, float(np.max(G @ np.array([fx, fy, fz]))))
    return worst


def test_criterion_6_friction_satisfaction():
    with_qp = _Run("E")
    without = _Run("E", use_qp=False)
    v_qp = _max_logged_pyramid(with_qp)
    v_no = _max_logged_pyramid(without)
    mus = {r[5] for r in with_qp.logs.forces if r[0] >= 1.0}
    ok = with_qp.report.error is None and mus == {0.2} and v_qp <= 1e-6 and v_no > 1e-6
    record_criterion(6, "friction pyramid under lateral push at mu 0.2", ok,
                     f"max violation with QP {v_qp:.2e} N, without QP {v_no:.3g} N")
    assert ok


# -- 7 ---------------------------------------------------------------------------


def test_criterion_7_force_estimation(run_d):
    assert run_d.report.error is None
    t_on = 1.5
    rows = [r for r in run_d.logs.estimator if t_on + 0.5 - 1e-9 <= r[0] < 3.0 - 1e-9]
    est = np.asarray([r[2:5] for r in rows], float)
    true = np.asarray([r[8:11] for r in rows], float)
    acc = float(np.max(np.linalg.norm(est - true, axis=1) / np.linalg.norm(true, axis=1)))
    iso = run_d.report.property("estimate isolation")
    ok = acc <= 0.1 and iso.passed
    record_criterion(7, "external force estimation and null-space isolation", ok,
                     f"estimate error {acc:.2%} of 10 N after 0.5 s; torso disturbance changes the estimate by "
                     f"{iso.value:.2e} N (limit {iso.limit:.2e} N)")
    assert ok


# -- 8 ---------------------------------------------------------------------------


def _ode_trajectory_residual(run: _Run, t_on: float, t_off: float, force: np.ndarray) -> float:
    """Closed-loop task error against the reference ODE started from the logged state at the step."""
    model = run.runner.model
    rows = run.task_rows("LF_SHANK", t_on, t_off - 1e-9)
    ts, E, dE = rows[:, 0], rows[:, 1:7], rows[:, 7:13]
    st = next(r for r in run.logs.states if abs(r[0] - ts[0]) < 1e-9)
    n = model.n
    s = GeneralizedState(np.array(st[1:4]), np.array(st[4:8]), np.array(st[8:8 + n]), np.array(st[8 + n:11 + n]),
                         np.array(st[11 + n:14 + n]), np.array(st[14 + n:14 + 2 * n]))
    task = run.runner.tasks["LF_SHANK"].spec(ts[0])
    data = RobotData(model, s)
    contacts = ContactSet.of(("RF_FOOT", "LH_FOOT", "RH_FOOT"))
    P = projector(stack_constraint_jacobian(model, data, contacts)).P
    q = operational_quantities(model, data, P, constrained_inertia(P, data.M), task)
    lam_inv = np.linalg.inv(q.lambda_c)
    K, D = task.stiffness, task.damping

    def rhs(_, y):
        return np.concatenate([y[6:], lam_inv @ (force - D * y[6:] - K * y[:6])])

    sol = solve_ivp(rhs, (ts[0], ts[-1]), np.concatenate([E[0], dE[0]]), t_eval=ts, rtol=1e-10, atol=1e-12)
    after = ts >= ts[0] + 3 * run.runner.scenario.control_period - 1e-9
    # force-equivalent mismatch of the spring and damper terms
    mismatch = K * (E - sol.y[:6].T) + D * (dE - sol.y[6:].T)
    return float(np.max(np.linalg.norm(mismatch[after], axis=1)) / np.linalg.norm(force))


def test_criterion_8_impedance_behavior(run_d):
    ode = run_d.report.property("impedance response")
    force = np.array([-10.0, 0.0, 0.0, 0.0, 0.0, 0.0])
    traj = _ode_trajectory_residual(run_d, 1.5, 3.0, force)
    ok = ode.passed and ode.value < 0.05 and traj < 0.05
    record_criterion(8, "impedance step response vs mass-spring-damper", ok,
                     f"ODE residual with simulated accelerations {ode.value:.2e} of |F|; "
                     f"trajectory against the integrated reference ODE {traj:.2%} of |F|")
    assert ok


# -- 10 --------------------------------------------------------------------------


def test_criterion_10_static_equilibrium(model):
    s = stance_state(model)
    world = SimWorld(model, s)
    world.set_contacts(list(FOOT_FRAMES))
    ctrl = WholeBodyController(model, ControllerConfig())
    pl = RobotData(model, s).placement("base")
    task = TaskSpec("base", range(6), pl.position, pl.rotation,
                    [800, 800, 1200, 300, 300, 200], [150, 150, 200, 30, 30, 20])
    contacts = ContactSet.of(FOOT_FRAMES)
    cfg = IntegratorConfig(dt=1e-3)
    first = None
    out = None
    for k in range(2000):
        if k % 2 == 0:
            out = ctrl.control_step(world.state, contacts, task, t=world.time)
            first = out if first is None else first
        step(world, out.joint_torques, cfg)
    weight = model.total_mass * float(np.linalg.norm(model.gravity))
    normals = first.contact_forces.reshape(4, 3)[:, 2]
    split = float(np.max(np.abs(normals - weight / 4)) / (weight / 4))
    _, sim = constrained_forward_dynamics(world, out.joint_torques, cfg)
    qp = out.contact_forces
    agree = float(np.max(np.linalg.norm((sim - qp).reshape(4, 3), axis=1) / np.linalg.norm(qp.reshape(4, 3), axis=1)))
    ok = split < 0.02 and agree < 0.05 and out.qp_status == OPTIMAL
    record_criterion(10, "static equilibrium", ok,
                     f"normal forces deviate {split:.2e} from W/4; simulator vs QP forces differ by {agree:.2e}")
    assert ok
