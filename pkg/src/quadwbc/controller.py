"""One control cycle: projection, impedance tasks, constrained-space QP, composition."""

from __future__ import annotations

import enum
import time
from dataclasses import dataclass, field

import numpy as np

from .model import LEGS, RobotModel, foot_frame
from .projection import (
    DEFAULT_REL_TOL, ContactSet, constrained_inertia, invert_constrained_inertia, projector,
    projector_derivative, stack_constraint_jacobian,
)
from .qp import (
    INFEASIBLE, OPTIMAL, ActiveSetSolver, QpSolution, TorqueLimits, build_constrained_space_problem,
    compose_torque,
)
from .rigid_body import GeneralizedState, RobotData, selection_matrix
from .tasks import (
    ExternalForceEstimator, PoseError, SingularTaskError, TaskSpec,
    operational_space, pose_error, projected_actuation, task_jacobian,
)


class ModeTransitionError(RuntimeError):
    pass


class ControlMode(enum.Enum):
    LOCOMOTION = "locomotion"
    MANIPULATION = "manipulation"
    BODY_CONTACT = "body_contact"


@dataclass(frozen=True)
class ModeTemplate:
    """Contact frames and limb-task masks implied by a mode."""

    mode: ControlMode
    contact_frames: tuple[str, ...]
    limb_dims: dict = field(default_factory=dict)  # frame -> dims


@dataclass
class ControllerConfig:
    friction_mu: float = 0.6
    torque_limits: TorqueLimits | None = None  # None: model effort limits
    control_period: float = 1.0 / 400.0
    svd_rel_tol: float = DEFAULT_REL_TOL
    qp_tol: float = 1e-8
    qp_max_iter: int = 200
    estimator_cutoff_hz: float | None = 50.0
    use_qp: bool = True
    # default gains for templates; tasks carry their own
    base_stiffness: tuple = (800.0, 800.0, 1200.0, 300.0, 300.0, 200.0)
    base_damping: tuple = (150.0, 150.0, 200.0, 30.0, 30.0, 20.0)
    foot_stiffness: tuple = (400.0, 400.0, 400.0, 8.0, 8.0, 8.0)
    foot_damping: tuple = (25.0, 25.0, 25.0, 0.4, 0.4, 0.4)

    def __post_init__(self):
        if not self.control_period > 0.0:
            raise ValueError("control period must be positive")
        if not self.friction_mu >= 0.0:
            raise ValueError("friction coefficient must be >= 0")
        for name in ("base_stiffness", "base_damping", "foot_stiffness", "foot_damping"):
            if np.any(np.asarray(getattr(self, name)) < 0.0):
                raise ValueError(f"{name} entries must be non-negative")


@dataclass(frozen=True)
class ControlOutput:
    joint_torques: np.ndarray
    contact_forces: np.ndarray  # 3 per contact, contact-set order, inertial frame
    contact_frames: tuple[str, ...]
    estimated_wrench: np.ndarray | None
    qp_status: str
    rank: int
    timing: float
    motion_torques: np.ndarray
    adjustment: np.ndarray
    fallback: bool = False
    qp_iterations: int = 0
    kkt_residual: float = 0.0
    task_errors: dict = field(default_factory=dict)  # task name -> PoseError
    predicted_acceleration: np.ndarray | None = None
    limb_lambda: np.ndarray | None = None  # stacked operational inertia of the limb tasks


def mode_template(model: RobotModel, mode: ControlMode | str, params: dict | None = None) -> ModeTemplate:
    """Contacts and limb-task masks for a mode.

    Locomotion: ``params["swing"]`` lists swinging legs (3-DOF foot tasks).
    Manipulation: ``params["leg"]`` (default LF) drives its shank frame in
    6-DOF; the other feet are in contact.  BodyContact: ``params["prongs"]``
    plus both hind feet are in contact; fore feet get 3-DOF tasks.
    """
    mode = ControlMode(mode)
    params = params or {}
    feet = {leg: foot_frame(leg) for leg in LEGS}
    if mode is ControlMode.LOCOMOTION:
        swing = tuple(params.get("swing", ()))
        unknown = set(swing) - set(LEGS)
        if unknown:
            raise ModeTransitionError(f"unknown legs {sorted(unknown)}")
        contacts = tuple(f for leg, f in feet.items() if leg not in swing)
        limbs = {feet[leg]: (0, 1, 2) for leg in swing}
    elif mode is ControlMode.MANIPULATION:
        leg = params.get("leg", "LF")
        frame = params.get("frame", f"{leg}_SHANK")
        if not model.has_frame(frame):
            raise ModeTransitionError(f"model has no manipulation frame {frame!r}")
        contacts = tuple(f for l, f in feet.items() if l != leg)
        limbs = {frame: (0, 1, 2, 3, 4, 5)}
    else:
        prongs = tuple(params.get("prongs", model.frame_names("prong")[:1]))
        if not prongs:
            raise ModeTransitionError("body contact needs at least one prong frame")
        for p in prongs:
            model.frame(p)
        contacts = prongs + (feet["LH"], feet["RH"])
        limbs = {feet["LF"]: (0, 1, 2), feet["RF"]: (0, 1, 2)}
    return ModeTemplate(mode, contacts, limbs)


class WholeBodyController:
    """Stateful control loop: keeps the projector history, QP warm start and estimator."""

    def __init__(self, model: RobotModel, config: ControllerConfig | None = None):
        self.model = model
        self.config = config or ControllerConfig()
        self.limits = self.config.torque_limits or TorqueLimits.from_model(model)
        if len(self.limits.tau_min) != model.n:
            raise ValueError("torque limits do not match the number of joints")
        self.mu = float(self.config.friction_mu)
        self.B = selection_matrix(model.n)
        self.mode = ControlMode.LOCOMOTION
        self.template = ModeTemplate(self.mode, tuple(foot_frame(l) for l in LEGS))
        self.solver = ActiveSetSolver(self.config.qp_tol, self.config.qp_max_iter)
        self.estimator = ExternalForceEstimator(self.config.estimator_cutoff_hz)
        self.reset()

    def reset(self):
        self._prev_P = None
        self._prev_frames = None
        self._prev_t = None
        self._prev_adjustment = None
        self.solver.reset()
        self.estimator.reset()

    # -- mode and parameters -------------------------------------------------

    def update_friction(self, mu: float):
        if not mu >= 0.0:
            raise ValueError("friction coefficient must be >= 0")
        self.mu = float(mu)

    def set_mode(self, mode: ControlMode | str, params: dict | None = None, settled: bool = True) -> ModeTemplate:
        """Switch the task/contact template.

        ``settled`` tells whether every swing foot is at its scripted
        waypoint; switching otherwise is refused.
        """
        mode = ControlMode(mode)
        if not settled:
            raise ModeTransitionError(f"cannot switch to {mode.value} while a swing foot is off its waypoint")
        template = mode_template(self.model, mode, params)
        if self.mode is ControlMode.MANIPULATION and mode is not ControlMode.MANIPULATION:
            self.estimator.reset()
        self.mode = mode
        self.template = template
        return template

    # -- control cycle -------------------------------------------------------

    def control_step(self, state: GeneralizedState, contacts: ContactSet, base_task: TaskSpec,
                     limb_tasks: list[TaskSpec] | tuple = (), t: float | None = None) -> ControlOutput:
        start = time.perf_counter()
        model = self.model
        nv = model.nv
        contacts = contacts.resolved(self.mu)
        task_frames = [task.frame for task in limb_tasks] + [base_task.frame]
        clash = set(task_frames) & set(contacts.frames)
        if clash:
            raise ValueError(f"frames both in contact and under a motion task: {sorted(clash)}")
        if t is None:
            t = 0.0 if self._prev_t is None else self._prev_t + self.config.control_period

        data = RobotData(model, state)
        M, h, qdot = data.M, data.h, data.qdot
        proj = projector(stack_constraint_jacobian(model, data, contacts), self.config.svd_rel_tol)
        P = proj.P
        same_contacts = self._prev_frames == contacts.frames
        if same_contacts and self._prev_P is not None and t > self._prev_t:
            Pdot = projector_derivative(self._prev_P, P, t - self._prev_t)
        else:
            Pdot = projector_derivative(None, P, 1.0)
        pdot_qdot = Pdot @ qdot
        Mc = constrained_inertia(P, M)
        Mc_inv = invert_constrained_inertia(Mc)
        McinvP = Mc_inv @ P
        mc_rhs = Mc_inv @ (P @ h - pdot_qdot)

        errors: dict[str, PoseError] = {}
        limb_jac = []
        limb_drift = []
        limb_err = []
        limb_rate = []
        limb_K = []
        limb_D = []
        limb_acc = []
        for task in limb_tasks:
            J, d = task_jacobian(data, task)
            err = pose_error(data.placement(task.frame), task)
            errors[task.name] = err
            limb_jac.append(J)
            limb_drift.append(d)
            limb_err.append(err.error)
            limb_rate.append(err.error_rate)
            limb_K.append(task.stiffness)
            limb_D.append(task.damping)
            limb_acc.append(task.reference_acceleration())
        if limb_tasks:
            J_s = np.vstack(limb_jac)
            q_s = operational_space(J_s, np.concatenate(limb_drift), McinvP, mc_rhs)
            F_s = (q_s.h_c + q_s.lambda_c @ np.concatenate(limb_acc)
                   - np.concatenate(limb_D) * np.concatenate(limb_rate)
                   - np.concatenate(limb_K) * np.concatenate(limb_err))
            Jbar_T = q_s.lambda_c @ J_s @ McinvP.T
            N_s = np.eye(nv) - J_s.T @ Jbar_T
        else:
            J_s = np.zeros((0, nv))
            q_s = None
            F_s = np.zeros(0)
            N_s = np.eye(nv)

        J_b, d_b = task_jacobian(data, base_task)
        err_b = pose_error(data.placement(base_task.frame), base_task)
        errors[base_task.name] = err_b
        q_b = operational_space(J_b, d_b, McinvP, mc_rhs)
        F_b = (q_b.h_c + q_b.lambda_c @ base_task.reference_acceleration()
               - base_task.damping * err_b.error_rate - base_task.stiffness * err_b.error)

        actuation = projected_actuation(P, model.n, self.config.svd_rel_tol)
        gen = N_s @ (J_b.T @ F_b)
        if limb_tasks:
            gen = gen + J_s.T @ F_s
        tau_m = np.zeros(nv)
        tau_m[6:] = actuation.pinv @ (P @ gen)

        problem = build_constrained_space_problem(
            P, M, Mc, h, pdot_qdot, proj.J_c, tau_m, self.limits, contacts,
            constrained_basis=proj.constrained_basis, actuation=actuation, M_c_inv=Mc_inv,
            rel_tol=self.config.svd_rel_tol)
        fallback = False
        if self.config.use_qp:
            sol = self.solver.solve(problem)
            if sol.status == INFEASIBLE:
                fallback = True
                prev = self._prev_adjustment
                u = prev if prev is not None and len(prev) == model.n else np.zeros(model.n)
                sol = QpSolution(u, self._least_squares_forces(problem, u), INFEASIBLE,
                                 sol.iterations, sol.kkt_residual)
                tau_j = self.limits.clamp(tau_m[6:] + u)
            else:
                tau_j = compose_torque(tau_m, sol, self.limits)
                self._prev_adjustment = sol.joint_torque_adjustment
        else:
            u = np.zeros(model.n)
            sol = QpSolution(u, self._least_squares_forces(problem, u), "disabled", 0, 0.0)
            tau_j = self.limits.clamp(tau_m[6:])

        estimate = None
        if self.mode is ControlMode.MANIPULATION and limb_tasks:
            task = limb_tasks[0]
            if len(limb_tasks) == 1:
                q_e = q_s
            else:
                J_e, d_e = task_jacobian(data, task)
                q_e = operational_space(J_e, d_e, McinvP, mc_rhs)
            estimate = self.estimator.update(t, task, q_e, errors[task.name])

        tau_full = np.zeros(nv)
        tau_full[6:] = tau_j
        qdd = Mc_inv @ (P @ tau_full - P @ h + pdot_qdot)

        self._prev_P = P
        self._prev_frames = contacts.frames
        self._prev_t = t
        return ControlOutput(
            joint_torques=tau_j,
            contact_forces=sol.contact_forces,
            contact_frames=contacts.frames,
            estimated_wrench=estimate,
            qp_status=sol.status,
            rank=proj.rank,
            timing=time.perf_counter() - start,
            motion_torques=tau_m,
            adjustment=sol.joint_torque_adjustment,
            fallback=fallback,
            qp_iterations=sol.iterations,
            kkt_residual=sol.kkt_residual,
            task_errors=errors,
            predicted_acceleration=qdd,
            limb_lambda=None if q_s is None else q_s.lambda_c,
        )

    @staticmethod
    def _least_squares_forces(problem, u: np.ndarray) -> np.ndarray:
        """Contact forces consistent with the equality rows for a fixed adjustment."""
        n = problem.n_torque
        if problem.n_force == 0:
            return np.zeros(0)
        A = problem.A_eq[:, n:]
        b = problem.b_eq - problem.A_eq[:, :n] @ u
        return np.linalg.lstsq(A, b, rcond=None)[0]


def control_step(model: RobotModel, state: GeneralizedState, contacts: ContactSet, base_task: TaskSpec,
                 limb_tasks=(), config: ControllerConfig | None = None) -> ControlOutput:
    """Single stateless control cycle (no projector history, so the Pdot term is zero)."""
    return WholeBodyController(model, config).control_step(state, contacts, base_task, limb_tasks)


__all__ = [
    "ControlMode", "ControlOutput", "ControllerConfig", "ModeTemplate", "ModeTransitionError",
    "SingularTaskError", "WholeBodyController", "control_step", "mode_template",
]
