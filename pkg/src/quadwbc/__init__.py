"""Whole-body impedance control for a floating-base quadruped.

Contact constraints are removed by an orthogonal projection, limb and base
tasks are stacked by priority in the constraint-free space, and a small QP in
the constrained space adjusts joint torques so that contact forces respect
friction pyramids and torque limits.  A constrained rigid-body simulator
closes the loop.
"""

from __future__ import annotations

from .controller import (ControlMode, ControlOutput, ControllerConfig, ModeTransitionError, WholeBodyController,
                         control_step, mode_template)
from .model import LEGS, ModelError, RobotModel, default_model, foot_frame, load_model, model_from_dict
from .projection import (ContactPoint, ContactSet, ProjectionResult, SingularInertiaError, constrained_inertia,
                         projector, projector_derivative, stack_constraint_jacobian)
from .qp import (QpInfeasibleError, QpProblem, QpSolution, TorqueLimits, build_constrained_space_problem,
                 friction_pyramid_rows, solve_qp)
from .rigid_body import (GeneralizedState, RobotData, bias_forces, forward_kinematics, frame_jacobian,
                         jacobian_drift, mass_matrix)
from .runner import RunReport, RunResult, ScenarioRunner, run_scenario, write_logs
from .scenarios import Scenario, ScenarioError, load_scenario, scenario_from_dict, scenario_library, solve_stance
from .simulator import (IntegratorConfig, SimulationDivergedError, SimWorld, TerrainPlane, apply_external_force,
                        constrained_forward_dynamics, step)
from .tasks import ExternalForceEstimator, SingularTaskError, TaskSpec, estimate_external_force, pose_error
from .trajectories import (TaskTrajectory, circle_trajectory, orientation_sequence, quintic_interpolation,
                           static_walk_sequencer)

__version__ = "0.1.0"
