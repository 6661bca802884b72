"""Ground-truth constrained rigid-body simulation.

Contacts are hard bilateral point constraints switched by the caller.  The
forward dynamics solve the full KKT system of the equations of motion and
the acceleration-level constraints; this path shares nothing with the
controller's projected formulation beyond the model quantities.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .model import RobotModel
from .projection import ContactPoint, ContactSet, surface_quaternion
from .rigid_body import GeneralizedState, RobotData, kinetic_energy, potential_energy
from .spatial import quat_multiply, quat_normalize


class SimulationDivergedError(FloatingPointError):
    pass


@dataclass(frozen=True)
class IntegratorConfig:
    dt: float = 1e-3
    baumgarte_alpha: float = 20.0
    baumgarte_beta: float = 100.0
    method: str = "euler"  # "euler" (semi-implicit) or "rk4"

    def __post_init__(self):
        if not self.dt > 0.0:
            raise ValueError("dt must be positive")
        if self.method not in ("euler", "rk4"):
            raise ValueError(f"unknown integration method {self.method!r}")


@dataclass(frozen=True)
class TerrainPlane:
    point: np.ndarray
    normal: np.ndarray
    friction_mu: float = 0.6

    def __post_init__(self):
        n = np.asarray(self.normal, dtype=float)
        if abs(np.linalg.norm(n) - 1.0) > 1e-9:
            raise ValueError("terrain normal must be a unit vector")
        object.__setattr__(self, "normal", n)
        object.__setattr__(self, "point", np.asarray(self.point, dtype=float))

    def distance(self, x: np.ndarray) -> float:
        return float(self.normal @ (x - self.point))


@dataclass(frozen=True)
class ExternalWrench:
    frame: str
    force: np.ndarray
    torque: np.ndarray = field(default_factory=lambda: np.zeros(3))
    t_start: float = 0.0
    t_end: float = np.inf

    def active(self, t: float) -> bool:
        return self.t_start <= t < self.t_end


class SimWorld:
    def __init__(self, model: RobotModel, state: GeneralizedState, terrain=(), time: float = 0.0):
        self.model = model
        self.state = state
        self.terrain = list(terrain) or [TerrainPlane(np.zeros(3), np.array([0.0, 0.0, 1.0]))]
        self.time = float(time)
        self.contacts = ContactSet()
        self.anchors: dict[str, np.ndarray] = {}
        self.wrenches: list[ExternalWrench] = []
        self.last_forces = np.zeros(0)
        self.last_acceleration = np.zeros(model.nv)

    # -- contacts ------------------------------------------------------------

    def nearest_plane(self, x: np.ndarray) -> TerrainPlane:
        return min(self.terrain, key=lambda p: abs(p.distance(x)))

    def set_contacts(self, contacts: ContactSet | list, project_velocity: bool = True):
        """Replace the active contact set.

        Newly added frames are anchored where they currently are and, if
        ``project_velocity``, the generalized velocity is projected so that
        all contact points are at rest (perfectly inelastic touchdown).
        """
        if not isinstance(contacts, ContactSet):
            contacts = self.contacts_on_terrain(contacts)
        data = RobotData(self.model, self.state)
        anchors = {}
        added = False
        for c in contacts:
            if c.frame in self.anchors:
                anchors[c.frame] = self.anchors[c.frame]
            else:
                anchors[c.frame] = data.placement(c.frame).position.copy()
                added = True
        self.contacts = contacts
        self.anchors = anchors
        if added and project_velocity and len(contacts):
            self.state = self.state.with_velocity(_project_velocity(data, contacts))

    def contacts_on_terrain(self, frames) -> ContactSet:
        data = RobotData(self.model, self.state)
        pts = []
        for f in frames:
            if isinstance(f, ContactPoint):
                pts.append(f)
                continue
            plane = self.nearest_plane(data.placement(f).position)
            pts.append(ContactPoint(f, surface_quaternion(plane.normal), plane.friction_mu))
        return ContactSet(tuple(pts))

    def contact_drift(self) -> float:
        if not len(self.contacts):
            return 0.0
        data = RobotData(self.model, self.state)
        return max(float(np.linalg.norm(data.placement(f).position - self.anchors[f])) for f in self.contacts.frames)

    # -- external forces -----------------------------------------------------

    def apply_external_force(self, frame: str, force, torque=(0.0, 0.0, 0.0),
                             t_start: float | None = None, t_end: float = np.inf):
        self.model.frame(frame)
        t0 = self.time if t_start is None else t_start
        self.wrenches.append(ExternalWrench(frame, np.asarray(force, float), np.asarray(torque, float), t0, t_end))

    def generalized_external_force(self, data: RobotData, t: float) -> np.ndarray:
        out = np.zeros(self.model.nv)
        for w in self.wrenches:
            if w.active(t):
                out += data.full_jacobian(w.frame).T @ np.concatenate([w.force, w.torque])
        return out

    def energy(self) -> float:
        return kinetic_energy(self.model, self.state) + potential_energy(self.model, self.state)


def apply_external_force(world: SimWorld, frame: str, wrench, t_start: float, t_end: float):
    """Add a 6-D wrench ``[force; torque]`` at ``frame`` during ``[t_start, t_end)``."""
    wrench = np.asarray(wrench, dtype=float)
    world.apply_external_force(frame, wrench[:3], wrench[3:6] if len(wrench) > 3 else np.zeros(3), t_start, t_end)


def _project_velocity(data: RobotData, contacts: ContactSet) -> np.ndarray:
    J = np.vstack([data.full_jacobian(f)[:3] for f in contacts.frames])
    M = data.M
    MinvJt = np.linalg.solve(M, J.T)
    impulse = np.linalg.lstsq(J @ MinvJt, J @ data.qdot, rcond=None)[0]
    return data.qdot - MinvJt @ impulse


def _dynamics(world: SimWorld, state: GeneralizedState, tau_j: np.ndarray, t: float,
              config: IntegratorConfig) -> tuple[np.ndarray, np.ndarray]:
    model = world.model
    nv = model.nv
    data = RobotData(model, state)
    rhs_q = -data.h
    rhs_q[6:] += tau_j
    rhs_q += world.generalized_external_force(data, t)
    k3 = world.contacts.size
    if k3 == 0:
        return np.linalg.solve(data.M, rhs_q), np.zeros(0)
    J = np.empty((k3, nv))
    stab = np.empty(k3)
    qdot = data.qdot
    for i, f in enumerate(world.contacts.frames):
        Ji = data.full_jacobian(f)[:3]
        J[3 * i: 3 * i + 3] = Ji
        err = data.placement(f).position - world.anchors[f]
        stab[3 * i: 3 * i + 3] = (data.full_drift(f)[:3] + config.baumgarte_alpha * (Ji @ qdot)
                                  + config.baumgarte_beta * err)
    # reduce the constraint rows to an orthonormal basis of their row space so
    # that the KKT matrix stays nonsingular for redundant contacts
    U, s, Vt = np.linalg.svd(J, full_matrices=False)
    r = int(np.count_nonzero(s > 1e-10 * s[0]))
    Ur = U[:, :r]
    K = np.zeros((nv + r, nv + r))
    K[:nv, :nv] = data.M
    K[:nv, nv:] = -Vt[:r].T
    K[nv:, :nv] = Vt[:r]
    sol = np.linalg.solve(K, np.concatenate([rhs_q, -(Ur.T @ stab) / s[:r]]))
    # J^T lam = Vt_r^T mu  ->  minimum-norm lam = U_r mu / s_r
    return sol[:nv], Ur @ (sol[nv:] / s[:r])


def constrained_forward_dynamics(world: SimWorld, tau_j: np.ndarray,
                                 config: IntegratorConfig | None = None) -> tuple[np.ndarray, np.ndarray]:
    """``(qdd, lambda)`` at the world's current state for joint torques ``tau_j``."""
    config = config or IntegratorConfig()
    tau_j = np.asarray(tau_j, dtype=float)
    if tau_j.shape != (world.model.n,):
        raise ValueError(f"expected {world.model.n} joint torques")
    return _dynamics(world, world.state, tau_j, world.time, config)


def _check(state: GeneralizedState, t: float):
    if not (np.all(np.isfinite(state.qdot)) and np.all(np.isfinite(state.base_position))
            and np.all(np.isfinite(state.joint_positions))):
        raise SimulationDivergedError(f"non-finite state at t = {t:.4f} s")


def step(world: SimWorld, tau_j: np.ndarray, config: IntegratorConfig | None = None) -> GeneralizedState:
    """Advance the world by one ``config.dt``; zero-order hold on ``tau_j``."""
    config = config or IntegratorConfig()
    tau_j = np.asarray(tau_j, dtype=float)
    dt = config.dt
    qdd, lam = _dynamics(world, world.state, tau_j, world.time, config)
    if not (np.all(np.isfinite(qdd)) and np.all(np.isfinite(lam))):
        raise SimulationDivergedError(f"non-finite acceleration at t = {world.time:.4f} s")
    world.last_acceleration = qdd
    world.last_forces = lam
    if config.method == "euler":
        new = world.state.integrate(world.state.qdot + dt * qdd, dt)
    else:
        new = _rk4(world, tau_j, config, qdd)
    _check(new, world.time + dt)
    world.state = new
    world.time += dt
    return new


def _pack(state: GeneralizedState) -> np.ndarray:
    return np.concatenate([state.base_position, state.base_orientation, state.joint_positions, state.qdot])


def _unpack(y: np.ndarray, n: int) -> GeneralizedState:
    q = quat_normalize(y[3:7])
    v = y[7 + n:]
    return GeneralizedState(y[:3], q, y[7:7 + n], v[:3], v[3:6], v[6:])


def _rk4(world: SimWorld, tau_j: np.ndarray, config: IntegratorConfig, qdd0: np.ndarray) -> GeneralizedState:
    n = world.model.n
    dt = config.dt

    def deriv(y, t, qdd=None):
        state = _unpack(y, n)
        v = y[7 + n:]
        if qdd is None:
            qdd = _dynamics(world, state, tau_j, t, config)[0]
        quat = y[3:7]
        qdot_quat = 0.5 * quat_multiply(quat, np.concatenate([[0.0], v[3:6]]))
        return np.concatenate([v[:3], qdot_quat, v[6:], qdd])

    y0 = _pack(world.state)
    t = world.time
    k1 = deriv(y0, t, qdd0)
    k2 = deriv(y0 + 0.5 * dt * k1, t + 0.5 * dt)
    k3 = deriv(y0 + 0.5 * dt * k2, t + 0.5 * dt)
    k4 = deriv(y0 + dt * k3, t + dt)
    return _unpack(y0 + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4), n)


__all__ = [
    "ExternalWrench", "IntegratorConfig", "SimWorld", "SimulationDivergedError", "TerrainPlane",
    "apply_external_force", "constrained_forward_dynamics", "step",
]
