"""Operational-space control in the constraint-free space.

Task coordinates: rows 0-2 are the frame position in the inertial frame,
rows 3-5 the rotation vector of ``R_des^T R`` (orientation error expressed in
the desired frame).  Task Jacobians therefore carry the world angular rows
rotated by ``R_des^T``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .model import RobotModel
from .projection import DEFAULT_REL_TOL, invert_constrained_inertia, svd_pseudoinverse
from .rigid_body import FramePlacement, GeneralizedState, RobotData, resolve_dims
from .spatial import rotation_log

LAMBDA_DAMPING = 1e-6


class SingularTaskError(np.linalg.LinAlgError):
    """The task has no component in the constraint-free space."""


@dataclass(frozen=True)
class TaskSpec:
    frame: str
    dims: tuple[int, ...]
    desired_position: np.ndarray
    desired_rotation: np.ndarray
    stiffness: np.ndarray
    damping: np.ndarray
    # world-frame [linear; angular] reference rates
    desired_velocity: np.ndarray = field(default_factory=lambda: np.zeros(6))
    desired_acceleration: np.ndarray = field(default_factory=lambda: np.zeros(6))
    name: str = ""

    def __post_init__(self):
        dims = resolve_dims(self.dims)
        object.__setattr__(self, "dims", dims)
        for attr, shape in (("desired_position", (3,)), ("desired_rotation", (3, 3)),
                            ("desired_velocity", (6,)), ("desired_acceleration", (6,))):
            arr = np.asarray(getattr(self, attr), dtype=float)
            if arr.shape != shape:
                raise ValueError(f"{attr} must have shape {shape}")
            object.__setattr__(self, attr, arr)
        for attr in ("stiffness", "damping"):
            arr = np.asarray(getattr(self, attr), dtype=float)
            if arr.ndim == 0:
                arr = np.full(len(dims), float(arr))
            if arr.shape != (len(dims),):
                raise ValueError(f"{attr} needs {len(dims)} entries for dims {dims}")
            if np.any(arr < 0.0):
                raise ValueError(f"{attr} entries must be non-negative")
            object.__setattr__(self, attr, arr)
        if not self.name:
            object.__setattr__(self, "name", self.frame)

    @classmethod
    def hold(cls, frame: str, placement: FramePlacement, dims, stiffness, damping, name: str = "") -> "TaskSpec":
        return cls(frame, dims, placement.position, placement.rotation, stiffness, damping, name=name)

    def with_reference(self, position, rotation, velocity=None, acceleration=None) -> "TaskSpec":
        from dataclasses import replace

        return replace(
            self,
            desired_position=np.asarray(position, float),
            desired_rotation=np.asarray(rotation, float),
            desired_velocity=np.zeros(6) if velocity is None else np.asarray(velocity, float),
            desired_acceleration=np.zeros(6) if acceleration is None else np.asarray(acceleration, float),
        )

    @property
    def size(self) -> int:
        return len(self.dims)

    def task_rotation(self) -> np.ndarray:
        """6x6 map from world twists to task coordinates."""
        T = np.eye(6)
        T[3:, 3:] = self.desired_rotation.T
        return T

    def reference_acceleration(self) -> np.ndarray:
        acc = self.desired_acceleration.copy()
        acc[3:] = self.desired_rotation.T @ acc[3:]
        return acc[list(self.dims)]


@dataclass(frozen=True)
class PoseError:
    error: np.ndarray
    error_rate: np.ndarray
    # all six axes regardless of the mask, for logging
    full_error: np.ndarray
    full_rate: np.ndarray


@dataclass(frozen=True)
class OperationalQuantities:
    lambda_c: np.ndarray
    h_c: np.ndarray
    jacobian: np.ndarray
    drift: np.ndarray


def pose_error(current: FramePlacement, target: TaskSpec) -> PoseError:
    Rd = target.desired_rotation
    e = np.empty(6)
    e[:3] = current.position - target.desired_position
    e[3:] = rotation_log(Rd.T @ current.rotation)
    rate = np.empty(6)
    rate[:3] = current.linear_velocity - target.desired_velocity[:3]
    rate[3:] = Rd.T @ (current.angular_velocity - target.desired_velocity[3:])
    idx = list(target.dims)
    return PoseError(e[idx], rate[idx], e, rate)


def damped_inverse(A: np.ndarray, rel_damping: float = LAMBDA_DAMPING) -> np.ndarray:
    """Tikhonov-regularized inverse of a symmetric PSD matrix.

    Eigenvalues well above ``rel_damping * trace(A) / m`` are inverted
    exactly (to relative order damping^2); those near zero map to zero
    instead of blowing up.
    """
    A = 0.5 * (A + A.T)
    s, V = np.linalg.eigh(A)
    s = np.clip(s, 0.0, None)
    sigma = rel_damping * max(float(np.trace(A)), 0.0) / A.shape[0]
    inv_s = s / (s * s + sigma * sigma) if sigma > 0.0 else np.zeros_like(s)
    return (V * inv_s) @ V.T


def operational_space(J: np.ndarray, drift: np.ndarray, McinvP: np.ndarray,
                      mc_rhs: np.ndarray) -> OperationalQuantities:
    """Core of :func:`operational_quantities` on precomputed matrices.

    ``McinvP`` is ``M_c^-1 P`` and ``mc_rhs`` is ``M_c^-1 (P h - Pdot qdot)``.
    """
    A = J @ McinvP @ J.T
    ref = float(np.abs(J).max()) ** 2 * float(np.abs(McinvP).max()) if J.size else 0.0
    if not A.size or float(np.abs(A).max()) <= 1e-12 * max(ref, 1e-300):
        raise SingularTaskError("task Jacobian has no component in the constraint-free space")
    lam = damped_inverse(A)
    return OperationalQuantities(lam, lam @ (J @ mc_rhs - drift), J, drift)


def task_jacobian(data: RobotData, task: TaskSpec) -> tuple[np.ndarray, np.ndarray]:
    """Task-coordinate Jacobian and drift for the masked dimensions."""
    J6 = data.full_jacobian(task.frame)
    d6 = data.full_drift(task.frame)
    Rt = task.desired_rotation.T
    J = np.vstack([J6[:3], Rt @ J6[3:]])
    d = np.concatenate([d6[:3], Rt @ d6[3:]])
    idx = list(task.dims)
    return J[idx], d[idx]


def operational_quantities(model: RobotModel, state: GeneralizedState | RobotData, P: np.ndarray,
                           M_c: np.ndarray, task: TaskSpec, pdot_qdot: np.ndarray | None = None,
                           M_c_inv: np.ndarray | None = None) -> OperationalQuantities:
    """Operational-space inertia and nonlinear term of ``task``.

    ``Lambda = (J M_c^-1 P J^T)^-1`` (damped) and
    ``h_c = Lambda (J M_c^-1 (P h - Pdot qdot) - Jdot qdot)``.
    """
    data = state if isinstance(state, RobotData) else RobotData(model, state)
    if M_c_inv is None:
        M_c_inv = invert_constrained_inertia(M_c)
    if pdot_qdot is None:
        pdot_qdot = np.zeros(model.nv)
    J, drift = task_jacobian(data, task)
    rhs = M_c_inv @ (P @ data.h - pdot_qdot)
    try:
        return operational_space(J, drift, M_c_inv @ P, rhs)
    except SingularTaskError:
        raise SingularTaskError(f"task on {task.frame} has no component in the constraint-free space") from None


def impedance_wrench(task: TaskSpec, quantities: OperationalQuantities, err: PoseError) -> np.ndarray:
    """``F = h_c + Lambda xdd_des - D e_dot - K e``."""
    return (quantities.h_c + quantities.lambda_c @ task.reference_acceleration()
            - task.damping * err.error_rate - task.stiffness * err.error)


def nullspace_projector(J_s: np.ndarray, P: np.ndarray, M_c: np.ndarray | None, lambda_s: np.ndarray,
                        M_c_inv: np.ndarray | None = None) -> np.ndarray:
    """``N_s = I - J_s^T Jbar_s^T`` with ``Jbar_s = M_c^-1 P J_s^T Lambda_s``."""
    nv = P.shape[0]
    if J_s.shape[0] == 0:
        return np.eye(nv)
    if M_c_inv is None:
        M_c_inv = invert_constrained_inertia(M_c)
    Jbar = M_c_inv @ P @ J_s.T @ lambda_s
    return np.eye(nv) - J_s.T @ Jbar.T


@dataclass(frozen=True)
class ProjectedActuation:
    """SVD-derived pieces of the projected selection ``P B``.

    ``pinv`` is ``(P B)^+`` restricted to the actuated rows (n x nv);
    ``range_rows`` holds orthonormal rows with ``P B u = 0`` iff
    ``range_rows @ u = 0``.
    """

    pinv: np.ndarray
    range_rows: np.ndarray
    rank: int


def projected_actuation(P: np.ndarray, n: int, rel_tol: float = DEFAULT_REL_TOL) -> ProjectedActuation:
    PB = P[:, P.shape[0] - n:]
    U, s, Vt = np.linalg.svd(PB, full_matrices=False)
    r = int(np.count_nonzero(s >= rel_tol * s[0])) if s.size and s[0] > 0.0 else 0
    pinv = (Vt[:r].T / s[:r]) @ U[:, :r].T
    return ProjectedActuation(pinv, Vt[:r], r)


def motion_torques(P: np.ndarray, B: np.ndarray, J_s: np.ndarray, F_s: np.ndarray, N_s: np.ndarray,
                   J_b: np.ndarray, F_b: np.ndarray, rel_tol: float = DEFAULT_REL_TOL,
                   actuation: ProjectedActuation | None = None) -> np.ndarray:
    """``tau_m = (P B)^+ P (J_s^T F_s + N_s J_b^T F_b)`` as an (n+6)-vector.

    The pseudo-inverse is taken over the actuated columns of ``B`` only, so
    the unactuated rows of the result are exactly zero.
    """
    nv = P.shape[0]
    actuated = np.flatnonzero(np.any(B != 0.0, axis=0))
    gen = N_s @ (J_b.T @ F_b)
    if J_s.shape[0]:
        gen = gen + J_s.T @ F_s
    tau = np.zeros(nv)
    if actuation is not None and len(actuated) == actuation.pinv.shape[0]:
        pinv = actuation.pinv
    else:
        pinv = svd_pseudoinverse((P @ B)[:, actuated], rel_tol)
    tau[actuated] = pinv @ (P @ gen)
    return tau


def estimate_external_force(task: TaskSpec, quantities: OperationalQuantities, err: PoseError,
                            err_accel: np.ndarray) -> np.ndarray:
    """``F_hat = Lambda e_ddot + D e_dot + K e``."""
    return quantities.lambda_c @ err_accel + task.damping * err.error_rate + task.stiffness * err.error


class ExternalForceEstimator:
    """Finite-difference error acceleration (2-sample window, first-order low-pass) and the force estimate."""

    def __init__(self, cutoff_hz: float | None = 50.0):
        self.cutoff_hz = cutoff_hz
        self.reset()

    def reset(self):
        self._prev_rate = None
        self._prev_t = None
        self._accel = None
        self.estimate = None

    def update(self, t: float, task: TaskSpec, quantities: OperationalQuantities, err: PoseError) -> np.ndarray:
        rate = err.error_rate
        if self._prev_rate is None or self._prev_rate.shape != rate.shape or t <= self._prev_t:
            raw = np.zeros_like(rate)
            self._accel = raw
        else:
            dt = t - self._prev_t
            raw = (rate - self._prev_rate) / dt
            if self.cutoff_hz:
                a = dt / (dt + 1.0 / (2.0 * math.pi * self.cutoff_hz))
                self._accel = self._accel + a * (raw - self._accel)
            else:
                self._accel = raw
        self._prev_rate = rate.copy()
        self._prev_t = t
        self.estimate = estimate_external_force(task, quantities, err, self._accel)
        return self.estimate
