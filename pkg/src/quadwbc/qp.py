"""Constrained-space quadratic program: contact forces and the torque adjustment.

Decision vector ``z = [u; lambda]``: ``u`` is the actuated joint-torque
adjustment (n), ``lambda`` the stacked contact forces (3k, inertial frame,
acting on the robot).  The adjustment is restricted to torques that produce
no constraint-free motion (``P B u = 0``), so adding it never disturbs the
impedance tasks.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .projection import ContactPoint, ContactSet, DEFAULT_REL_TOL, invert_constrained_inertia
from .tasks import projected_actuation

FORCE_REGULARIZATION = 1e-6
PYRAMID_SCALE = math.sqrt(2.0) / 2.0

OPTIMAL = "optimal"
MAX_ITERATIONS = "max-iterations"
INFEASIBLE = "infeasible"


class QpInfeasibleError(RuntimeError):
    pass


@dataclass(frozen=True)
class TorqueLimits:
    tau_min: np.ndarray
    tau_max: np.ndarray

    def __post_init__(self):
        lo = np.asarray(self.tau_min, dtype=float)
        hi = np.asarray(self.tau_max, dtype=float)
        if lo.shape != hi.shape or lo.ndim != 1:
            raise ValueError("torque limits must be vectors of equal length")
        if np.any(lo > hi):
            raise ValueError("tau_min exceeds tau_max")
        object.__setattr__(self, "tau_min", lo)
        object.__setattr__(self, "tau_max", hi)

    @classmethod
    def symmetric(cls, limit, n: int | None = None) -> "TorqueLimits":
        lim = np.abs(np.asarray(limit, dtype=float))
        if lim.ndim == 0:
            lim = np.full(n, float(lim))
        return cls(-lim, lim)

    @classmethod
    def from_model(cls, model) -> "TorqueLimits":
        return cls(model.tau_min, model.tau_max)

    def clamp(self, tau: np.ndarray) -> np.ndarray:
        return np.clip(tau, self.tau_min, self.tau_max)


@dataclass(frozen=True)
class QpProblem:
    """``min 1/2 z'Hz + g'z`` s.t. ``A_eq z = b_eq`` and ``A_in z <= b_in``."""

    hessian: np.ndarray
    gradient: np.ndarray
    A_eq: np.ndarray
    b_eq: np.ndarray
    A_in: np.ndarray
    b_in: np.ndarray
    n_torque: int
    n_force: int

    def __post_init__(self):
        nz = self.n_torque + self.n_force
        if self.hessian.shape != (nz, nz) or self.gradient.shape != (nz,):
            raise ValueError("objective does not match the variable layout")
        if self.A_eq.shape != (len(self.b_eq), nz) or self.A_in.shape != (len(self.b_in), nz):
            raise ValueError("constraint rows do not match the variable layout")

    @property
    def n_variables(self) -> int:
        return self.n_torque + self.n_force

    def objective(self, z: np.ndarray) -> float:
        return 0.5 * float(z @ self.hessian @ z) + float(self.gradient @ z)

    def split(self, z: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        return z[: self.n_torque], z[self.n_torque:]


@dataclass(frozen=True)
class QpSolution:
    joint_torque_adjustment: np.ndarray
    contact_forces: np.ndarray
    status: str
    iterations: int
    kkt_residual: float
    objective: float = float("nan")
    active_set: tuple[int, ...] = ()

    @property
    def ok(self) -> bool:
        return self.status == OPTIMAL


def friction_pyramid_rows(contact: ContactPoint, mu: float | None = None) -> np.ndarray:
    """Inequality rows ``G lambda <= 0`` on one contact's inertial-frame force.

    Row 0 is the unilateral row; rows 1-4 bound the two tangential components
    by ``sqrt(2)/2 * mu`` times the normal component.  With ``mu = inf`` only
    the unilateral row is returned.
    """
    mu = contact.friction_mu if mu is None else mu
    if mu is None:
        raise ValueError(f"contact {contact.frame}: friction coefficient not set")
    if not mu >= 0.0:
        raise ValueError("friction coefficient must be >= 0")
    if math.isinf(mu):
        local = np.array([[0.0, 0.0, -1.0]])
    else:
        c = PYRAMID_SCALE * mu
        local = np.array([
            [0.0, 0.0, -1.0],
            [1.0, 0.0, -c],
            [-1.0, 0.0, -c],
            [0.0, 1.0, -c],
            [0.0, -1.0, -c],
        ])
    # local force = R^T f
    return local @ contact.surface_matrix.T


def pyramid_violation(contacts: ContactSet, forces: np.ndarray) -> float:
    """Largest ``G lambda`` over all contacts (<= 0 when every force is inside its pyramid)."""
    worst = -np.inf
    for i, c in enumerate(contacts):
        worst = max(worst, float(np.max(friction_pyramid_rows(c) @ forces[3 * i: 3 * i + 3])))
    return worst


def build_constrained_space_problem(P, M, M_c, h, pdot_qdot, J_c, tau_m, limits: TorqueLimits,
                                    contacts: ContactSet, *, constrained_basis=None, actuation=None,
                                    M_c_inv=None, rel_tol: float = DEFAULT_REL_TOL,
                                    force_regularization: float = FORCE_REGULARIZATION) -> QpProblem:
    """Assemble the QP for one control cycle.

    Equality rows: the constrained-space dynamics projected on an orthonormal
    basis ``U`` of ``range(I - P)``,

        U'(B u + J_c' lambda) = U'(M qdd + h - tau_m),
        qdd = M_c^-1 (P tau_m - P h + Pdot qdot),

    followed by the rows ``P B u = 0``.  Objective ``1/2 |u|^2`` (equal to
    ``1/2 |(I-P) B u|^2`` on the feasible set) plus a small force
    regularization that makes the Hessian positive definite.
    """
    nv = P.shape[0]
    n = nv - 6
    k3 = J_c.shape[0]
    if len(contacts) * 3 != k3:
        raise ValueError(f"J_c has {k3} rows but the contact set has {len(contacts)} contacts")
    for name, arr, shape in (("M", M, (nv, nv)), ("M_c", M_c, (nv, nv)), ("h", h, (nv,)),
                             ("pdot_qdot", pdot_qdot, (nv,)), ("tau_m", tau_m, (nv,))):
        if np.shape(arr) != shape:
            raise ValueError(f"{name} has shape {np.shape(arr)}, expected {shape}")
    if J_c.shape[1] != nv or len(limits.tau_min) != n:
        raise ValueError("dimension mismatch between J_c, limits and the projector")

    if constrained_basis is None:
        w, V = np.linalg.eigh(np.eye(nv) - P)
        constrained_basis = V[:, w > 0.5]
    U = constrained_basis
    if actuation is None:
        actuation = projected_actuation(P, n, rel_tol)
    if M_c_inv is None:
        M_c_inv = invert_constrained_inertia(M_c)

    qdd = M_c_inv @ (P @ tau_m - P @ h + pdot_qdot)
    nz = n + k3
    r = U.shape[1]
    A_eq = np.zeros((r + actuation.rank, nz))
    A_eq[:r, :n] = U[6:].T
    A_eq[:r, n:] = U.T @ J_c.T
    A_eq[r:, :n] = actuation.range_rows
    b_eq = np.zeros(len(A_eq))
    b_eq[:r] = U.T @ (M @ qdd + h - tau_m)

    tau_act = tau_m[6:]
    # bounds: tau_min - tau_m <= u <= tau_max - tau_m
    eye = np.eye(n, nz)
    upper = np.isfinite(limits.tau_max)
    lower = np.isfinite(limits.tau_min)
    blocks = [eye[upper], -eye[lower]]
    rhs = [limits.tau_max[upper] - tau_act[upper], tau_act[lower] - limits.tau_min[lower]]
    for i, c in enumerate(contacts):
        G = friction_pyramid_rows(c)
        rows = np.zeros((len(G), nz))
        rows[:, n + 3 * i: n + 3 * i + 3] = G
        blocks.append(rows)
        rhs.append(np.zeros(len(G)))
    A_in = np.vstack(blocks)
    b_in = np.concatenate(rhs)

    H = np.eye(nz)
    H[n:, n:] *= force_regularization
    return QpProblem(H, np.zeros(nz), A_eq, b_eq, A_in, b_in, n, k3)


class ActiveSetSolver:
    """Dual active-set method for strictly convex QPs (Goldfarb-Idnani).

    Starts from the equality-constrained minimizer, which is dual feasible,
    and adds the most violated inequality at each major iteration.  An
    inequality that cannot be made feasible by any dual step certifies
    infeasibility.  Keeps the previous active set for warm starts on
    problems of the same shape.
    """

    def __init__(self, tol: float = 1e-8, max_iter: int = 200):
        if tol <= 0.0 or max_iter < 1:
            raise ValueError("tol must be positive and max_iter at least 1")
        self.tol = tol
        self.max_iter = max_iter
        self._warm: tuple[tuple, tuple[int, ...]] | None = None

    def reset(self):
        self._warm = None

    def solve(self, problem: QpProblem, warm_start: bool = True) -> QpSolution:
        shape = (problem.A_eq.shape, problem.A_in.shape)
        start = ()
        if warm_start and self._warm is not None and self._warm[0] == shape:
            start = self._warm[1]
        sol = _dual_active_set(problem, self.tol, self.max_iter, start)
        if sol.status == OPTIMAL:
            self._warm = (shape, sol.active_set)
        return sol


def solve_qp(problem: QpProblem, tol: float = 1e-8, max_iter: int = 200,
             warm_start: tuple[int, ...] = ()) -> QpSolution:
    return _dual_active_set(problem, tol, max_iter, tuple(warm_start))


def _kkt_solve(H, N, rhs_z, rhs_c):
    nz = H.shape[0]
    m = N.shape[0]
    K = np.zeros((nz + m, nz + m))
    K[:nz, :nz] = H
    K[:nz, nz:] = N.T
    K[nz:, :nz] = N
    rhs = np.concatenate([rhs_z, rhs_c])
    try:
        sol = np.linalg.solve(K, rhs)
    except np.linalg.LinAlgError:
        sol = np.linalg.lstsq(K, rhs, rcond=None)[0]
    return sol[:nz], sol[nz:]


def _dual_active_set(problem: QpProblem, tol: float, max_iter: int, start: tuple[int, ...]) -> QpSolution:
    H, g = problem.hessian, problem.gradient
    A_eq, b_eq = problem.A_eq, problem.b_eq
    # normalize inequality rows so tolerances are in consistent units
    norms = np.linalg.norm(problem.A_in, axis=1) if len(problem.b_in) else np.zeros(0)
    norms = np.where(norms > 0.0, norms, 1.0)
    A_in = problem.A_in / norms[:, None]
    b_in = problem.b_in / norms
    me = A_eq.shape[0]
    mi = A_in.shape[0]

    def rows(active):
        return np.vstack([A_eq, A_in[list(active)]]) if active else A_eq

    def rhs(active):
        return np.concatenate([b_eq, b_in[list(active)]]) if active else b_eq

    # dual-feasible start: equality minimizer plus any warm rows with non-negative multipliers
    active = [i for i in start if 0 <= i < mi]
    iterations = 0
    while True:
        z, y = _kkt_solve(H, rows(active), -g, rhs(active))
        y_in = y[me:]
        if not active or np.all(y_in >= -tol):
            break
        active.pop(int(np.argmin(y_in)))
        iterations += 1
    y_in = np.clip(y_in, 0.0, None) if active else np.zeros(0)

    status = OPTIMAL
    while True:
        slack = A_in @ z - b_in if mi else np.zeros(0)
        if mi:
            slack[active] = -np.inf
        if mi == 0 or float(np.max(slack)) <= tol:
            break
        if iterations >= max_iter:
            status = MAX_ITERATIONS
            break
        p = int(np.argmax(slack))
        a_p = A_in[p]
        t_p = 0.0  # multiplier of the constraint being added
        while True:
            iterations += 1
            N = rows(active)
            dz, dy = _kkt_solve(H, N, -a_p, np.zeros(N.shape[0]))
            dy_in = dy[me:]
            rate = float(a_p @ dz)
            violation = float(a_p @ z - b_in[p])
            full_step = violation / -rate if rate < -1e-14 else np.inf
            partial = np.inf
            drop = -1
            for j, dyj in enumerate(dy_in):
                if dyj < -1e-14:
                    step = y_in[j] / -dyj
                    if step < partial:
                        partial, drop = step, j
            if not np.isfinite(full_step) and not np.isfinite(partial):
                status = INFEASIBLE
                break
            t = min(full_step, partial)
            if np.isfinite(full_step):
                z = z + t * dz
            y_in = y_in + t * dy_in
            t_p += t
            if t == full_step:
                active.append(p)
                y_in = np.append(np.clip(y_in, 0.0, None), t_p)
                break
            active.pop(drop)
            y_in = np.delete(y_in, drop)
            if iterations >= max_iter:
                status = MAX_ITERATIONS
                break
        if status != OPTIMAL:
            break

    # final multipliers from a clean solve on the active set
    z_eq, y = _kkt_solve(H, rows(active), -g, rhs(active))
    if status == OPTIMAL:
        z = z_eq
    residual = _kkt_residual(problem, z, y, active, A_in, b_in, me)
    if status == OPTIMAL and residual > max(tol, 1e-6 * (1.0 + float(np.abs(b_eq).max(initial=0.0)))):
        # numerical trouble: report it rather than claiming optimality
        status = MAX_ITERATIONS
    u, lam = problem.split(z)
    return QpSolution(u, lam, status, iterations, residual, problem.objective(z), tuple(active))


def _kkt_residual(problem, z, y, active, A_in, b_in, me) -> float:
    y_eq = y[:me]
    y_in = np.zeros(A_in.shape[0])
    if active:
        y_in[list(active)] = y[me:]
    stat = problem.hessian @ z + problem.gradient + problem.A_eq.T @ y_eq + A_in.T @ y_in
    prim_eq = problem.A_eq @ z - problem.b_eq
    slack = A_in @ z - b_in
    parts = [np.abs(stat).max(initial=0.0), np.abs(prim_eq).max(initial=0.0),
             np.clip(slack, 0.0, None).max(initial=0.0), np.clip(-y_in, 0.0, None).max(initial=0.0),
             np.abs(y_in * slack).max(initial=0.0)]
    return float(max(parts))


def compose_torque(tau_m: np.ndarray, sol: QpSolution, limits: TorqueLimits | None = None) -> np.ndarray:
    """Actuated torque ``tau_m[6:] + u``; clipped to the limits to remove solver round-off."""
    if sol.status == INFEASIBLE:
        raise QpInfeasibleError("cannot compose torque from an infeasible QP")
    tau = tau_m[6:] + sol.joint_torque_adjustment
    return tau if limits is None else limits.clamp(tau)
