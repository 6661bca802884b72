from __future__ import annotations

import time

import numpy as np
import pytest

from quadwbc.projection import (ContactPoint, ContactSet, SingularInertiaError, constrained_inertia,
                                invert_constrained_inertia, projector, projector_derivative,
                                stack_constraint_jacobian, surface_quaternion, svd_pseudoinverse)
from quadwbc.rigid_body import RobotData, selection_matrix

from conftest import CONTACT_SETS, TWO_PRONGS, random_state, stance_state


def _rank_oracle(J):
    s = np.linalg.svd(J, compute_uv=False)
    return int(np.sum(s > 1e-8 * s[0]))


def test_projector_invariants_over_random_states(model):
    rng = np.random.default_rng(7)
    start = time.perf_counter()
    ranks = set()
    for i in range(1000):
        s = random_state(model, rng)
        frames = CONTACT_SETS[i % len(CONTACT_SETS)]
        J = stack_constraint_jacobian(model, s, frames)
        res = projector(J)
        P = res.P
        assert np.abs(P - P.T).max() < 1e-9
        assert np.abs(P @ P - P).max() < 1e-9
        assert np.abs(P @ J.T).max() < 1e-9
        assert res.rank == _rank_oracle(J)
        ranks.add(res.rank)
    assert time.perf_counter() - start < 60.0
    assert {3, 6, 9, 11, 12} <= ranks


def test_two_prong_rank_is_eleven(model, rng):
    """Two torso points fix the base except for rotation about the line joining them."""
    for _ in range(50):
        s = random_state(model, rng)
        assert projector(stack_constraint_jacobian(model, s, TWO_PRONGS)).rank == 5
        frames = TWO_PRONGS + ("LH_FOOT", "RH_FOOT")
        assert projector(stack_constraint_jacobian(model, s, frames)).rank == 11


def test_bases_span_complementary_spaces(model, rng):
    s = random_state(model, rng)
    res = projector(stack_constraint_jacobian(model, s, CONTACT_SETS[3]))
    U, F = res.constrained_basis, res.free_basis
    assert U.shape[1] + F.shape[1] == model.nv
    assert np.allclose(U.T @ U, np.eye(U.shape[1]), atol=1e-12)
    assert np.allclose(U @ U.T + res.P, np.eye(model.nv), atol=1e-12)
    assert np.allclose(res.J_c_pinv, np.linalg.pinv(res.J_c), atol=1e-10)


def test_empty_contact_set_gives_identity(model, rng):
    s = random_state(model, rng)
    res = projector(stack_constraint_jacobian(model, s, ()))
    assert res.rank == 0 and np.array_equal(res.P, np.eye(model.nv))


def test_decomposition_identity(model):
    """Constraint-free plus constrained equations reproduce the full dynamics for arbitrary inputs."""
    rng = np.random.default_rng(11)
    B = selection_matrix(model.n)
    worst = 0.0
    for i in range(200):
        s = random_state(model, rng)
        data = RobotData(model, s)
        J = stack_constraint_jacobian(model, data, CONTACT_SETS[i % len(CONTACT_SETS)])
        P = projector(J).P
        I = np.eye(model.nv)
        M, h = data.M, data.h
        qdd = rng.normal(size=model.nv)
        tau = B @ rng.normal(scale=20.0, size=model.nv)
        lam = rng.normal(scale=50.0, size=J.shape[0])
        free = P @ M @ qdd + P @ h - P @ B @ tau
        cons = (I - P) @ (M @ qdd + h) - (I - P) @ B @ tau - J.T @ lam
        full = M @ qdd + h - B @ tau - J.T @ lam
        scale = max(np.abs(M @ qdd).max(), np.abs(h).max(), np.abs(tau).max(), np.abs(J.T @ lam).max())
        worst = max(worst, np.abs(free + cons - full).max() / scale)
    assert worst < 1e-12


def test_forward_dynamics_satisfies_constraint_free_equation(model, rng):
    B = selection_matrix(model.n)
    for frames in CONTACT_SETS:
        s = random_state(model, rng)
        data = RobotData(model, s)
        P = projector(stack_constraint_jacobian(model, data, frames)).P
        Mc = constrained_inertia(P, data.M)
        tau = B @ rng.normal(size=model.nv)
        qdd = invert_constrained_inertia(Mc) @ (P @ tau - P @ data.h)
        assert np.allclose(P @ data.M @ qdd + P @ data.h, P @ tau, atol=1e-9)
        assert np.allclose(qdd, P @ qdd, atol=1e-9)


def test_singular_constrained_inertia_rejected():
    Mc = np.diag([1.0, 1.0, 0.0])
    with pytest.raises(SingularInertiaError):
        invert_constrained_inertia(Mc)
    with pytest.raises(SingularInertiaError):
        invert_constrained_inertia(np.diag([1.0, 1e-14]))


def test_projector_derivative():
    P0, P1 = np.eye(3), np.diag([1.0, 1.0, 0.0])
    assert np.array_equal(projector_derivative(None, P1, 0.01), np.zeros((3, 3)))
    assert np.allclose(projector_derivative(P0, P1, 0.5), np.diag([0.0, 0.0, -2.0]))
    with pytest.raises(ValueError):
        projector_derivative(P0, P1, 0.0)
    with pytest.raises(ValueError):
        projector_derivative(np.eye(2), P1, 0.1)


def test_projector_derivative_matches_analytic_rate(model):
    """Backward difference of P along a trajectory approaches dP/dt from a central difference."""
    s = stance_state(model)
    rng = np.random.default_rng(3)
    s = s.with_velocity(rng.normal(scale=0.2, size=model.nv))
    frames = CONTACT_SETS[3]
    h = 1e-5

    def P_at(t):
        return projector(stack_constraint_jacobian(model, s.integrate(s.qdot, t), frames)).P

    central = (P_at(h) - P_at(-h)) / (2 * h)
    backward = projector_derivative(P_at(-h), P_at(0.0), h)
    assert np.abs(backward - central).max() < 1e-3 * max(1.0, np.abs(central).max())


def test_svd_pseudoinverse(rng):
    A = rng.normal(size=(5, 3)) @ rng.normal(size=(3, 7))
    assert np.allclose(svd_pseudoinverse(A), np.linalg.pinv(A, rcond=1e-8), atol=1e-10)
    assert np.array_equal(svd_pseudoinverse(np.zeros((2, 3))), np.zeros((3, 2)))
    with pytest.raises(ValueError):
        svd_pseudoinverse(A, rel_tol=0.0)


def test_contact_validation():
    with pytest.raises(ValueError):
        ContactPoint("LF_FOOT", np.array([1.0, 0.0, 0.0, 0.5]))
    with pytest.raises(ValueError):
        ContactPoint("LF_FOOT", friction_mu=-0.1)
    with pytest.raises(ValueError):
        ContactSet.of(["LF_FOOT", "LF_FOOT"])
    cs = ContactSet.of(["LF_FOOT", "RF_FOOT"]).resolved(0.4)
    assert all(c.friction_mu == 0.4 for c in cs)


def test_surface_quaternion_aligns_normal():
    n = np.array([np.sin(0.3), 0.0, np.cos(0.3)])
    c = ContactPoint("LF_FOOT", surface_quaternion(n))
    assert np.allclose(c.normal, n, atol=1e-12)
    R = c.surface_matrix
    assert np.allclose(R.T @ R, np.eye(3), atol=1e-12) and np.isclose(np.linalg.det(R), 1.0)
