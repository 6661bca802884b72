"""Kinematics and dynamics of the floating-base tree.

The generalized velocity is ``[v_I, w_B, qd_j]``: base linear velocity in the
inertial frame, base angular velocity in the base frame, joint rates.  Frame
Jacobians map it to ``[world linear velocity; world angular velocity]``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from . import _kernels
from .model import RobotModel
from .spatial import cross, matrix_to_quat, quat_exp, quat_multiply, quat_normalize, quat_to_matrix

DIM_NAMES = ("x", "y", "z", "roll", "pitch", "yaw")
_DIM_ALIASES = {"rx": 3, "ry": 4, "rz": 5}


def resolve_dims(dims: Iterable[str | int] | str | None) -> tuple[int, ...]:
    """Normalize a dimension mask to sorted row indices into a 6-D twist."""
    if dims is None:
        return tuple(range(6))
    if isinstance(dims, str):
        dims = dims.replace(",", " ").split()
    out = set()
    for d in dims:
        if isinstance(d, (int, np.integer)):
            idx = int(d)
        elif d in DIM_NAMES:
            idx = DIM_NAMES.index(d)
        elif d in _DIM_ALIASES:
            idx = _DIM_ALIASES[d]
        else:
            raise ValueError(f"unknown dimension {d!r}")
        if not 0 <= idx < 6:
            raise ValueError(f"dimension index {idx} out of range")
        out.add(idx)
    if not out:
        raise ValueError("empty dimension mask")
    return tuple(sorted(out))


@dataclass(frozen=True)
class GeneralizedState:
    base_position: np.ndarray
    base_orientation: np.ndarray  # unit quaternion (w, x, y, z)
    joint_positions: np.ndarray
    base_linear_velocity: np.ndarray = None
    base_angular_velocity: np.ndarray = None
    joint_velocities: np.ndarray = None

    def __post_init__(self):
        n = len(self.joint_positions)
        for name, size in (("base_position", 3), ("base_orientation", 4), ("joint_positions", n),
                           ("base_linear_velocity", 3), ("base_angular_velocity", 3),
                           ("joint_velocities", n)):
            value = getattr(self, name)
            arr = np.zeros(size) if value is None else np.array(value, dtype=float)
            if arr.shape != (size,):
                raise ValueError(f"{name} must have shape ({size},), got {arr.shape}")
            arr.flags.writeable = False
            object.__setattr__(self, name, arr)
        norm = float(np.linalg.norm(self.base_orientation))
        if abs(norm - 1.0) > 1e-9:
            raise ValueError(f"base orientation quaternion has norm {norm}")

    @classmethod
    def neutral(cls, model: RobotModel, base_height: float = 0.0) -> "GeneralizedState":
        return cls(np.array([0.0, 0.0, base_height]), np.array([1.0, 0.0, 0.0, 0.0]), np.zeros(model.n))

    @property
    def n(self) -> int:
        return len(self.joint_positions)

    @property
    def base_rotation(self) -> np.ndarray:
        return quat_to_matrix(self.base_orientation)

    @property
    def qdot(self) -> np.ndarray:
        return np.concatenate([self.base_linear_velocity, self.base_angular_velocity, self.joint_velocities])

    def with_velocity(self, qdot: np.ndarray) -> "GeneralizedState":
        qdot = np.asarray(qdot, dtype=float)
        if qdot.shape != (6 + self.n,):
            raise ValueError(f"velocity vector must have dimension {6 + self.n}")
        return GeneralizedState(self.base_position, self.base_orientation, self.joint_positions,
                                qdot[:3], qdot[3:6], qdot[6:])

    def integrate(self, qdot: np.ndarray, dt: float) -> "GeneralizedState":
        """Advance the configuration by ``qdot * dt`` (multiplicative on the base rotation).

        The velocity of the returned state is ``qdot``.
        """
        qdot = np.asarray(qdot, dtype=float)
        pos = self.base_position + dt * qdot[:3]
        quat = quat_normalize(quat_multiply(self.base_orientation, quat_exp(dt * qdot[3:6])))
        qj = self.joint_positions + dt * qdot[6:]
        return GeneralizedState(pos, quat, qj, qdot[:3], qdot[3:6], qdot[6:])

    def to_dict(self) -> dict:
        return {
            "base_position": self.base_position.tolist(),
            "base_orientation": self.base_orientation.tolist(),
            "joint_positions": self.joint_positions.tolist(),
            "base_linear_velocity": self.base_linear_velocity.tolist(),
            "base_angular_velocity": self.base_angular_velocity.tolist(),
            "joint_velocities": self.joint_velocities.tolist(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "GeneralizedState":
        return cls(
            d["base_position"], quat_normalize(d["base_orientation"]), d["joint_positions"],
            d.get("base_linear_velocity"), d.get("base_angular_velocity"), d.get("joint_velocities"),
        )


@dataclass(frozen=True)
class FramePlacement:
    position: np.ndarray
    rotation: np.ndarray
    linear_velocity: np.ndarray = field(default_factory=lambda: np.zeros(3))
    angular_velocity: np.ndarray = field(default_factory=lambda: np.zeros(3))

    @property
    def orientation(self) -> np.ndarray:
        return matrix_to_quat(self.rotation)


class RobotData:
    """Kinematic and dynamic quantities of one model at one state.

    Evaluated once, queried many times; this is what the controller and the
    simulator use internally.  ``M`` and ``h`` are computed on first access.
    """

    def __init__(self, model: RobotModel, state: GeneralizedState):
        if state.n != model.n:
            raise ValueError(f"state has {state.n} joints, model has {model.n}")
        self.model = model
        self.state = state
        self.qdot = state.qdot
        self._R0 = quat_to_matrix(state.base_orientation)
        (self.R, self.p, self.axis, self.omega, self.vel,
         self.alpha, self.acc) = _kernels.link_kinematics(
            model.parent, model.joint_origin, model.joint_axis, state.base_position, self._R0,
            state.joint_positions, state.base_linear_velocity, state.base_angular_velocity,
            state.joint_velocities)
        self._M = None
        self._h = None
        self._jac_cache: dict[str, np.ndarray] = {}
        self._point_cache: dict[str, tuple] = {}

    def _dynamics(self, want_bias: bool):
        m = self.model
        self._M, h = _kernels.mass_matrix_and_bias(
            m.parent, m.link_mass, m.link_com, m.link_inertia, self.R, self.p, self.axis,
            self.omega, self.vel, self.state.base_linear_velocity, m.gravity,
            self.state.joint_velocities, want_bias)
        if want_bias:
            self._h = h

    @property
    def M(self) -> np.ndarray:
        if self._M is None:
            self._dynamics(want_bias=True)
        return self._M

    @property
    def h(self) -> np.ndarray:
        if self._h is None:
            self._dynamics(want_bias=True)
        return self._h

    def _frame_point(self, frame: str):
        out = self._point_cache.get(frame)
        if out is None:
            link, offset, rot = self.model.frame(frame)
            R = self.R[link]
            out = (link, self.p[link] + R @ offset, R @ rot)
            self._point_cache[frame] = out
        return out

    def placement(self, frame: str) -> FramePlacement:
        link, x, Rf = self._frame_point(frame)
        w = self.omega[link]
        v = self.vel[link] + cross(w, x - self.p[link])
        return FramePlacement(x, Rf, v, w.copy())

    def full_jacobian(self, frame: str) -> np.ndarray:
        J = self._jac_cache.get(frame)
        if J is None:
            link, x, _ = self._frame_point(frame)
            J = _kernels.point_jacobian(self.model.parent, link, x, self.p, self.axis, self._R0,
                                        self.model.nv)
            self._jac_cache[frame] = J
        return J

    def jacobian(self, frame: str, dims=None) -> np.ndarray:
        return self.full_jacobian(frame)[list(resolve_dims(dims))]

    def full_drift(self, frame: str) -> np.ndarray:
        """``Jdot @ qdot`` of the frame, 6 rows."""
        link, x, _ = self._frame_point(frame)
        r = x - self.p[link]
        w = self.omega[link]
        alpha = self.alpha[link]
        lin = self.acc[link] + cross(alpha, r) + cross(w, cross(w, r))
        return np.concatenate([lin, alpha])

    def drift(self, frame: str, dims=None) -> np.ndarray:
        return self.full_drift(frame)[list(resolve_dims(dims))]

    def center_of_mass(self) -> np.ndarray:
        m = self.model
        coms = self.p + np.einsum("lij,lj->li", self.R, m.link_com)
        return (m.link_mass[:, None] * coms).sum(axis=0) / m.total_mass


def evaluate(model: RobotModel, state: GeneralizedState) -> RobotData:
    return RobotData(model, state)


def forward_kinematics(model: RobotModel, state: GeneralizedState, frame: str) -> FramePlacement:
    return RobotData(model, state).placement(frame)


def mass_matrix(model: RobotModel, state: GeneralizedState) -> np.ndarray:
    return RobotData(model, state).M


def bias_forces(model: RobotModel, state: GeneralizedState) -> np.ndarray:
    return RobotData(model, state).h


def frame_jacobian(model: RobotModel, state: GeneralizedState, frame: str, dims=None) -> np.ndarray:
    return RobotData(model, state).jacobian(frame, dims)


def jacobian_drift(model: RobotModel, state: GeneralizedState, frame: str, dims=None) -> np.ndarray:
    return RobotData(model, state).drift(frame, dims)


def selection_matrix(n: int) -> np.ndarray:
    """Actuation selection: zeros on the 6 base rows, identity on the joints."""
    if n < 1:
        raise ValueError("n must be at least 1")
    B = np.zeros((n + 6, n + 6))
    B[6:, 6:] = np.eye(n)
    return B


def kinetic_energy(model: RobotModel, state: GeneralizedState) -> float:
    qd = state.qdot
    return 0.5 * float(qd @ mass_matrix(model, state) @ qd)


def potential_energy(model: RobotModel, state: GeneralizedState) -> float:
    data = RobotData(model, state)
    return -model.total_mass * float(model.gravity @ data.center_of_mass())


def gravity_torques(model: RobotModel, state: GeneralizedState) -> np.ndarray:
    """Generalized gravity force at ``state`` with velocities ignored."""
    still = state.with_velocity(np.zeros(model.nv))
    return bias_forces(model, still)


def frames_on_path(model: RobotModel, frames: Sequence[str]) -> set[int]:
    cols = set(range(6))
    for f in frames:
        cols.update(6 + j for j in model.supporting_joints(f))
    return cols
