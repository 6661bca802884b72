from __future__ import annotations

import numpy as np
import pytest

from quadwbc.controller import ControllerConfig, WholeBodyController
from quadwbc.projection import ContactSet, stack_constraint_jacobian
from quadwbc.rigid_body import GeneralizedState, RobotData, selection_matrix
from quadwbc.simulator import (IntegratorConfig, SimulationDivergedError, SimWorld, TerrainPlane,
                               apply_external_force, constrained_forward_dynamics, step)
from quadwbc.tasks import TaskSpec

from conftest import FOOT_FRAMES, TWO_PRONGS, stance_state


def _airborne(model, seed=0):
    rng = np.random.default_rng(seed)
    s = stance_state(model)
    return GeneralizedState(s.base_position + [0, 0, 1.0], s.base_orientation, s.joint_positions,
                            rng.normal(scale=0.5, size=3), rng.normal(scale=1.0, size=3),
                            rng.normal(scale=1.0, size=model.n))


def test_rk4_energy_conservation_contact_free(model):
    world = SimWorld(model, _airborne(model))
    e0 = world.energy()
    cfg = IntegratorConfig(dt=1e-3, method="rk4")
    tau = np.zeros(model.n)
    drift = 0.0
    for _ in range(5000):
        step(world, tau, cfg)
        drift = max(drift, abs(world.energy() - e0))
    assert np.isclose(world.time, 5.0)
    assert drift / abs(e0) < 1e-6


def test_free_fall_center_of_mass(model):
    """Without contacts the center of mass follows a parabola regardless of joint motion."""
    s = _airborne(model, 1)
    world = SimWorld(model, s)
    data = RobotData(model, s)
    c0 = data.center_of_mass()
    # center-of-mass velocity from the linear momentum rows
    v0 = (data.M[:3] @ s.qdot) / model.total_mass
    cfg = IntegratorConfig(dt=1e-3, method="rk4")
    for _ in range(500):
        step(world, np.zeros(model.n), cfg)
    c = RobotData(model, world.state).center_of_mass()
    expected = c0 + v0 * 0.5 + 0.5 * model.gravity * 0.25
    assert np.allclose(c, expected, atol=1e-6)


def test_constrained_dynamics_kkt_two_prongs(model):
    s = stance_state(model, height=0.3)
    world = SimWorld(model, s)
    frames = TWO_PRONGS + ("LH_FOOT", "RH_FOOT")
    world.set_contacts(ContactSet.of(frames, friction_mu=0.6))
    rng = np.random.default_rng(4)
    tau = rng.normal(scale=5.0, size=model.n)
    qdd, lam = constrained_forward_dynamics(world, tau)
    data = RobotData(model, world.state)
    J = stack_constraint_jacobian(model, data, frames)
    B = selection_matrix(model.n)
    tau_full = B @ np.concatenate([np.zeros(6), tau])
    assert lam.shape == (12,)
    assert np.allclose(data.M @ qdd + data.h, tau_full + J.T @ lam, atol=1e-8)
    drift = np.concatenate([data.full_drift(f)[:3] for f in frames])
    # anchored at rest: the Baumgarte terms vanish and the constraint acceleration is zero
    assert np.allclose(J @ qdd + drift, 0.0, atol=1e-8)
    # the minimum-norm multiplier lies in the row space of J^T
    assert np.allclose(np.linalg.pinv(J.T) @ (J.T @ lam), lam, atol=1e-8)


def test_touchdown_projects_velocity(model):
    s = stance_state(model).with_velocity(np.random.default_rng(0).normal(size=model.nv))
    world = SimWorld(model, s)
    world.set_contacts(list(FOOT_FRAMES))
    data = RobotData(model, world.state)
    assert np.abs(stack_constraint_jacobian(model, data, FOOT_FRAMES) @ world.state.qdot).max() < 1e-10
    assert world.contact_drift() == 0.0
    assert all(c.friction_mu == 0.6 for c in world.contacts)


def test_external_wrench_mapping(model):
    s = stance_state(model)
    world = SimWorld(model, s)
    apply_external_force(world, "LF_SHANK", [1.0, 2.0, 3.0, 0.0, 0.0, 0.5], 0.1, 0.2)
    data = RobotData(model, s)
    assert np.all(world.generalized_external_force(data, 0.05) == 0.0)
    expected = data.full_jacobian("LF_SHANK").T @ np.array([1.0, 2.0, 3.0, 0.0, 0.0, 0.5])
    assert np.allclose(world.generalized_external_force(data, 0.15), expected)
    assert np.all(world.generalized_external_force(data, 0.2) == 0.0)
    with pytest.raises(KeyError):
        world.apply_external_force("NOPE", [0, 0, 1])


def test_divergence_raises(model):
    world = SimWorld(model, stance_state(model))
    with pytest.raises(SimulationDivergedError):
        step(world, np.full(model.n, np.nan))
    with pytest.raises(ValueError):
        constrained_forward_dynamics(world, np.zeros(3))


def test_integrator_config_validation():
    with pytest.raises(ValueError):
        IntegratorConfig(dt=0.0)
    with pytest.raises(ValueError):
        IntegratorConfig(method="midpoint")
    with pytest.raises(ValueError):
        TerrainPlane(np.zeros(3), np.array([0.0, 0.0, 2.0]))


def test_simulated_forces_match_controller_in_steady_stance(model):
    """After settling, the simulator's contact forces agree with the QP forces within 5%."""
    s = stance_state(model)
    world = SimWorld(model, s)
    world.set_contacts(list(FOOT_FRAMES))
    ctrl = WholeBodyController(model, ControllerConfig())
    pl = RobotData(model, s).placement("base")
    task = TaskSpec("base", range(6), pl.position, pl.rotation,
                    [800, 800, 1200, 300, 300, 200], [150, 150, 200, 30, 30, 20])
    contacts = ContactSet.of(FOOT_FRAMES)
    cfg = IntegratorConfig(dt=1e-3)
    out = None
    for k in range(1000):
        if k % 2 == 0:
            out = ctrl.control_step(world.state, contacts, task, t=world.time)
        step(world, out.joint_torques, cfg)
    qp = out.contact_forces
    _, sim = constrained_forward_dynamics(world, out.joint_torques, cfg)
    assert np.linalg.norm(sim - qp) < 0.05 * np.linalg.norm(qp)
    for i in range(4):
        assert abs(sim[3 * i + 2] - qp[3 * i + 2]) < 0.05 * qp[3 * i + 2]
