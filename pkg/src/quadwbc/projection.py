"""Contact constraint Jacobian and the orthogonal projector onto constraint-free motion."""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Iterable, Sequence

import numpy as np

from .model import RobotModel
from .rigid_body import GeneralizedState, RobotData
from .spatial import quat_normalize, quat_to_matrix

DEFAULT_REL_TOL = 1e-8
MAX_INERTIA_CONDITION = 1e12


class SingularInertiaError(np.linalg.LinAlgError):
    pass


@dataclass(frozen=True)
class ContactPoint:
    """A 3-D point contact.

    ``surface_rotation`` maps the contact frame (z along the surface normal)
    to the inertial frame.  ``friction_mu`` of ``None`` defers to the
    controller's current friction setting.
    """

    frame: str
    surface_rotation: np.ndarray = field(default_factory=lambda: np.array([1.0, 0.0, 0.0, 0.0]))
    friction_mu: float | None = None
    dims: int = 3

    def __post_init__(self):
        q = np.asarray(self.surface_rotation, dtype=float)
        if abs(np.linalg.norm(q) - 1.0) > 1e-9:
            raise ValueError(f"contact {self.frame}: surface quaternion is not normalized")
        object.__setattr__(self, "surface_rotation", q)
        if self.friction_mu is not None and not self.friction_mu >= 0.0:
            raise ValueError(f"contact {self.frame}: friction coefficient must be >= 0")
        if self.dims != 3:
            raise ValueError("only 3-D point contacts are supported")

    @property
    def surface_matrix(self) -> np.ndarray:
        return quat_to_matrix(self.surface_rotation)

    @property
    def normal(self) -> np.ndarray:
        return self.surface_matrix[:, 2]

    @classmethod
    def on_surface(cls, frame: str, normal=(0.0, 0.0, 1.0), friction_mu: float | None = None) -> "ContactPoint":
        """Contact whose surface frame has z along ``normal`` and x in the plane spanned by world x."""
        return cls(frame, surface_quaternion(normal), friction_mu)


def surface_quaternion(normal) -> np.ndarray:
    from .spatial import matrix_to_quat

    n = np.asarray(normal, dtype=float)
    n = n / np.linalg.norm(n)
    ref = np.array([1.0, 0.0, 0.0]) if abs(n[0]) < 0.9 else np.array([0.0, 1.0, 0.0])
    x = ref - (ref @ n) * n
    x /= np.linalg.norm(x)
    y = np.cross(n, x)
    return matrix_to_quat(np.column_stack([x, y, n]))


@dataclass(frozen=True)
class ContactSet:
    """Ordered contacts; the order fixes the block layout of the contact forces."""

    points: tuple[ContactPoint, ...] = ()

    def __post_init__(self):
        pts = tuple(self.points)
        frames = [p.frame for p in pts]
        if len(set(frames)) != len(frames):
            raise ValueError(f"duplicate contact frames in {frames}")
        object.__setattr__(self, "points", pts)

    @classmethod
    def of(cls, frames: Iterable[str | ContactPoint], normal=(0.0, 0.0, 1.0), friction_mu=None) -> "ContactSet":
        pts = []
        for f in frames:
            pts.append(f if isinstance(f, ContactPoint) else ContactPoint.on_surface(f, normal, friction_mu))
        return cls(tuple(pts))

    def __len__(self) -> int:
        return len(self.points)

    def __iter__(self):
        return iter(self.points)

    def __getitem__(self, i):
        return self.points[i]

    @property
    def frames(self) -> tuple[str, ...]:
        return tuple(p.frame for p in self.points)

    @property
    def size(self) -> int:
        return 3 * len(self.points)

    def with_friction(self, mu: float) -> "ContactSet":
        return ContactSet(tuple(replace(p, friction_mu=mu) for p in self.points))

    def resolved(self, default_mu: float) -> "ContactSet":
        return ContactSet(tuple(p if p.friction_mu is not None else replace(p, friction_mu=default_mu)
                                for p in self.points))


@dataclass(frozen=True)
class ProjectionResult:
    J_c: np.ndarray
    J_c_pinv: np.ndarray
    P: np.ndarray
    rank: int
    singular_values: np.ndarray
    # orthonormal bases of range(I - P) (row space of J_c) and range(P)
    constrained_basis: np.ndarray
    free_basis: np.ndarray


def stack_constraint_jacobian(model: RobotModel, state: GeneralizedState | RobotData,
                              contacts: ContactSet | Sequence[str]) -> np.ndarray:
    data = state if isinstance(state, RobotData) else RobotData(model, state)
    frames = contacts.frames if isinstance(contacts, ContactSet) else tuple(contacts)
    if not frames:
        return np.zeros((0, model.nv))
    return np.vstack([data.full_jacobian(f)[:3] for f in frames])


def svd_pseudoinverse(A: np.ndarray, rel_tol: float = DEFAULT_REL_TOL) -> np.ndarray:
    """Moore-Penrose inverse dropping singular values below ``rel_tol * sigma_max``."""
    if not 0.0 < rel_tol < 1.0:
        raise ValueError("rel_tol must lie in (0, 1)")
    A = np.asarray(A, dtype=float)
    if A.size == 0:
        return np.zeros(A.shape[::-1])
    U, s, Vt = np.linalg.svd(A, full_matrices=False)
    if s[0] == 0.0:
        return np.zeros(A.shape[::-1])
    keep = s >= rel_tol * s[0]
    return (Vt[keep].T / s[keep]) @ U[:, keep].T


def projector(J_c: np.ndarray, rel_tol: float = DEFAULT_REL_TOL) -> ProjectionResult:
    """``P = I - pinv(J_c) J_c`` built from one full SVD of ``J_c``."""
    if not 0.0 < rel_tol < 1.0:
        raise ValueError("rel_tol must lie in (0, 1)")
    J_c = np.asarray(J_c, dtype=float)
    nv = J_c.shape[1]
    if J_c.shape[0] == 0:
        return ProjectionResult(J_c, np.zeros((nv, 0)), np.eye(nv), 0, np.zeros(0),
                                np.zeros((nv, 0)), np.eye(nv))
    U, s, Vt = np.linalg.svd(J_c, full_matrices=True)
    r = int(np.count_nonzero(s >= rel_tol * s[0])) if s[0] > 0.0 else 0
    Vr = Vt[:r].T
    pinv = (Vr / s[:r]) @ U[:, :r].T
    # P from the null-space basis is symmetric and idempotent to rounding
    free = Vt[r:].T
    P = free @ free.T
    return ProjectionResult(J_c, pinv, P, r, s, Vr, free)


def projector_derivative(P_prev: np.ndarray | None, P_curr: np.ndarray, dt: float) -> np.ndarray:
    """Backward difference of the projector; zero when there is no previous sample."""
    if P_prev is None:
        return np.zeros_like(P_curr)
    if dt <= 0.0:
        raise ValueError("dt must be positive")
    if P_prev.shape != P_curr.shape:
        raise ValueError(f"projector shape changed from {P_prev.shape} to {P_curr.shape}")
    return (P_curr - P_prev) / dt


def constrained_inertia(P: np.ndarray, M: np.ndarray) -> np.ndarray:
    if P.shape != M.shape:
        raise ValueError("P and M must have the same shape")
    Mc = P @ M
    Mc += np.eye(M.shape[0]) - P
    return Mc


def invert_constrained_inertia(Mc: np.ndarray) -> np.ndarray:
    """Inverse of ``M_c`` with a 1-norm condition check."""
    try:
        inv = np.linalg.inv(Mc)
    except np.linalg.LinAlgError:
        raise SingularInertiaError("constrained inertia is singular") from None
    cond = np.abs(Mc).sum(axis=0).max() * np.abs(inv).sum(axis=0).max()
    if not np.isfinite(cond) or cond > MAX_INERTIA_CONDITION:
        raise SingularInertiaError(f"constrained inertia condition number {cond:.3g} exceeds limit")
    return inv
