"""Reference trajectories: circles, minimum-jerk interpolation, orientation sequences, a crawl sequencer."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .spatial import cross, rotation_exp, rotation_log, rpy_to_matrix


@dataclass(frozen=True)
class Reference:
    """Pose target with world-frame rates ``[linear; angular]``."""

    position: np.ndarray
    rotation: np.ndarray
    velocity: np.ndarray = field(default_factory=lambda: np.zeros(6))
    acceleration: np.ndarray = field(default_factory=lambda: np.zeros(6))


def circle_trajectory(center, radius: float, period: float, height: float, t: float):
    """Counterclockwise circle in the x-y plane starting at ``center + (radius, 0)``.

    Returns ``(position, velocity, acceleration)`` with the z coordinate held
    at ``height``.
    """
    if not period > 0.0:
        raise ValueError("period must be positive")
    w = 2.0 * math.pi / period
    c, s = math.cos(w * t), math.sin(w * t)
    pos = np.array([center[0] + radius * c, center[1] + radius * s, height])
    vel = np.array([-radius * w * s, radius * w * c, 0.0])
    acc = np.array([-radius * w * w * c, -radius * w * w * s, 0.0])
    return pos, vel, acc


def smooth_circle_trajectory(center, radius: float, period: float, height: float, t: float, ramp: float):
    """Circle whose angular rate ramps up from rest over ``ramp`` seconds.

    The rate follows a smoothstep so the reference is C2 at ``t = 0``; after
    the ramp the motion is the uniform circle lagging by ``ramp / 2`` seconds.
    """
    w = 2.0 * math.pi / period
    if ramp <= 0.0:
        return circle_trajectory(center, radius, period, height, t)
    theta, dtheta, ddtheta = _ramped_phase(t, w, ramp)
    c, s = math.cos(theta), math.sin(theta)
    pos = np.array([center[0] + radius * c, center[1] + radius * s, height])
    vel = np.array([-radius * s * dtheta, radius * c * dtheta, 0.0])
    acc = np.array([
        -radius * (c * dtheta ** 2 + s * ddtheta),
        radius * (-s * dtheta ** 2 + c * ddtheta),
        0.0,
    ])
    return pos, vel, acc


def _ramped_phase(t: float, w: float, ramp: float):
    # angular rate ramps 0 -> w with a smoothstep (C2) over `ramp`
    if t <= 0.0:
        return 0.0, 0.0, 0.0
    if t < ramp:
        x = t / ramp
        # rate = w * (10x^3 - 15x^4 + 6x^5)
        rate = w * (10 * x ** 3 - 15 * x ** 4 + 6 * x ** 5)
        accel = w * (30 * x ** 2 - 60 * x ** 3 + 30 * x ** 4) / ramp
        theta = w * ramp * (2.5 * x ** 4 - 3 * x ** 5 + x ** 6)
        return theta, rate, accel
    theta_ramp = w * ramp * 0.5
    return theta_ramp + w * (t - ramp), w, 0.0


def quintic_interpolation(x0, x1, T: float, t: float):
    """Minimum-jerk blend from ``x0`` to ``x1`` over ``T``; ``t`` is clamped to ``[0, T]``."""
    if not T > 0.0:
        raise ValueError("duration must be positive")
    x0 = np.asarray(x0, dtype=float)
    x1 = np.asarray(x1, dtype=float)
    tau = min(max(t / T, 0.0), 1.0)
    s = 10 * tau ** 3 - 15 * tau ** 4 + 6 * tau ** 5
    if 0.0 < t / T < 1.0:
        ds = (30 * tau ** 2 - 60 * tau ** 3 + 30 * tau ** 4) / T
        dds = (60 * tau - 180 * tau ** 2 + 120 * tau ** 3) / T ** 2
    else:
        ds = dds = 0.0
    d = x1 - x0
    return x0 + s * d, ds * d, dds * d


def quintic_rotation(R0, R1, T: float, t: float):
    """Minimum-jerk rotation along the geodesic from ``R0`` to ``R1``.

    Returns ``(R, omega, alpha)`` with world-frame angular rates.
    """
    axis_angle = rotation_log(R0.T @ R1)
    s, ds, dds = quintic_interpolation(0.0, 1.0, T, t)
    R = R0 @ rotation_exp(s * axis_angle)
    w_local = R0 @ axis_angle
    return R, ds * w_local, dds * w_local


SEGMENT_KINDS = ("hold", "quintic", "circle", "orientation", "swing")


@dataclass(frozen=True)
class TrajectorySegment:
    """One piece of a task reference.

    ``kind`` is ``hold``, ``quintic`` (point-to-point, optional rotation
    target), ``circle``, ``orientation`` (rotation about a pivot point) or
    ``swing`` (foot step with a lift along the surface normal).
    """

    kind: str
    start: float
    duration: float
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in SEGMENT_KINDS:
            raise ValueError(f"unknown segment kind {self.kind!r}")
        if not self.duration > 0.0:
            raise ValueError("segment duration must be positive")

    @property
    def end(self) -> float:
        return self.start + self.duration


def evaluate_segment(seg: TrajectorySegment, start_pose: Reference, t: float) -> Reference:
    """Reference at absolute time ``t`` (clamped to the segment) given the pose the segment starts from."""
    p0, R0 = start_pose.position, start_pose.rotation
    tl = min(max(t - seg.start, 0.0), seg.duration)
    prm = seg.params
    if seg.kind == "hold":
        return Reference(p0, R0)
    if seg.kind == "quintic":
        p1 = p0 + np.asarray(prm.get("offset", np.zeros(3)), float) if "position" not in prm \
            else np.asarray(prm["position"], float)
        pos, vel, acc = quintic_interpolation(p0, p1, seg.duration, tl)
        if "rpy" in prm or "rotation" in prm:
            R1 = np.asarray(prm["rotation"], float) if "rotation" in prm else R0 @ rpy_to_matrix(prm["rpy"])
            R, w, a = quintic_rotation(R0, R1, seg.duration, tl)
        else:
            R, w, a = R0, np.zeros(3), np.zeros(3)
        return Reference(pos, R, np.concatenate([vel, w]), np.concatenate([acc, a]))
    if seg.kind == "circle":
        radius = float(prm["radius"])
        period = float(prm["period"])
        ramp = float(prm.get("ramp", 0.0))
        # circle through the start point: centre lies -radius along x
        center = p0[:2] - np.array([radius, 0.0])
        pos, vel, acc = smooth_circle_trajectory(center, radius, period, p0[2], tl, ramp)
        return Reference(pos, R0, np.concatenate([vel, np.zeros(3)]), np.concatenate([acc, np.zeros(3)]))
    if seg.kind == "swing":
        sw = SwingPhase("", seg.start, seg.end, p0, np.asarray(prm["target"], float),
                        float(prm.get("clearance", 0.0)), np.asarray(prm.get("normal", (0.0, 0.0, 1.0)), float))
        ref = swing_reference(sw, t)
        return Reference(ref.position, R0, ref.velocity, ref.acceleration)
    # orientation: rotate rigidly about a pivot with minimum-jerk timing
    pivot = np.asarray(prm["pivot"], float)
    rotvec = np.asarray(prm.get("rotvec", np.zeros(3)), float)
    s, ds, dds = quintic_interpolation(0.0, 1.0, seg.duration, tl)
    Rrel = rotation_exp(s * rotvec)
    r0 = p0 - pivot
    r = Rrel @ r0
    w = ds * rotvec
    a = dds * rotvec
    pos = pivot + r
    vel = cross(w, r)
    acc = cross(a, r) + cross(w, cross(w, r))
    return Reference(pos, Rrel @ R0, np.concatenate([vel, w]), np.concatenate([acc, a]))


def segment_end(seg: TrajectorySegment, start_pose: Reference) -> Reference:
    ref = evaluate_segment(seg, start_pose, seg.end)
    return Reference(ref.position, ref.rotation)


class TaskTrajectory:
    """Piecewise reference made of consecutive segments; holds the last pose afterwards."""

    def __init__(self, initial: Reference, segments=()):
        self.initial = Reference(np.asarray(initial.position, float), np.asarray(initial.rotation, float))
        self.segments = sorted(segments, key=lambda s: s.start)
        self._starts = []
        pose = self.initial
        last_end = -math.inf
        for seg in self.segments:
            if seg.start < last_end - 1e-12:
                raise ValueError("trajectory segments overlap")
            self._starts.append(pose)
            pose = segment_end(seg, pose)
            last_end = seg.end
        self.final = pose

    def __call__(self, t: float) -> Reference:
        pose = self.initial
        for seg, start in zip(self.segments, self._starts):
            if t < seg.start:
                return start
            if t <= seg.end:
                return evaluate_segment(seg, start, t)
            pose = segment_end(seg, start)
        return pose


def orientation_sequence(prong_pivot, amplitudes, durations, start_time: float = 0.0,
                         max_amplitude: float = 0.35) -> list[TrajectorySegment]:
    """Roll, pitch and yaw excursions of the base about a pivot point.

    Each non-zero amplitude produces an out-and-back pair of minimum-jerk
    segments (go to the angle, return to level), so the sequence is C1 and
    returns to the initial pose between axes.
    """
    amplitudes = np.asarray(amplitudes, dtype=float)
    if amplitudes.shape != (3,):
        raise ValueError("need roll, pitch and yaw amplitudes")
    if np.any(np.abs(amplitudes) > max_amplitude):
        raise ValueError(f"amplitude beyond the {max_amplitude} rad envelope")
    durations = np.broadcast_to(np.asarray(durations, dtype=float), (3,))
    segs = []
    t = start_time
    pivot = list(map(float, prong_pivot))
    for axis in range(3):
        if amplitudes[axis] == 0.0:
            continue
        rv = np.zeros(3)
        rv[axis] = amplitudes[axis]
        half = durations[axis] / 2.0
        segs.append(TrajectorySegment("orientation", t, half, {"pivot": pivot, "rotvec": rv.tolist()}))
        segs.append(TrajectorySegment("orientation", t + half, half, {"pivot": pivot, "rotvec": (-rv).tolist()}))
        t += durations[axis]
    return segs


@dataclass(frozen=True)
class SwingPhase:
    leg: str
    lift_off: float
    touch_down: float
    start: np.ndarray
    target: np.ndarray
    clearance: float
    normal: np.ndarray


@dataclass(frozen=True)
class WalkSchedule:
    """Crawl gait: base shifts then a single swing per leg, one at a time."""

    swings: tuple[SwingPhase, ...]
    base_waypoints: tuple[tuple[float, float, np.ndarray], ...]  # (t0, t1, base xy target)
    duration: float
    slope: float

    def stance_legs(self, t: float, legs=("LF", "RF", "LH", "RH")) -> tuple[str, ...]:
        swinging = {s.leg for s in self.swings if s.lift_off <= t < s.touch_down}
        return tuple(l for l in legs if l not in swinging)

    def swing_at(self, t: float) -> SwingPhase | None:
        for s in self.swings:
            if s.lift_off <= t < s.touch_down:
                return s
        return None


def swing_reference(sw: SwingPhase, t: float) -> Reference:
    """Foot target during a swing: minimum-jerk along the step, sine-shaped lift along the surface normal."""
    T = sw.touch_down - sw.lift_off
    tl = min(max(t - sw.lift_off, 0.0), T)
    pos, vel, acc = quintic_interpolation(sw.start, sw.target, T, tl)
    s, ds, dds = quintic_interpolation(0.0, 1.0, T, tl)
    # lift profile 4 s (1 - s): apex at s = 1/2 with height = clearance
    lift = 4.0 * s * (1.0 - s)
    dlift = 4.0 * (1.0 - 2.0 * s) * ds
    ddlift = 4.0 * ((1.0 - 2.0 * s) * dds - 2.0 * ds * ds)
    n = sw.normal
    pos = pos + sw.clearance * lift * n
    vel = vel + sw.clearance * dlift * n
    acc = acc + sw.clearance * ddlift * n
    return Reference(pos, np.eye(3), np.concatenate([vel, np.zeros(3)]), np.concatenate([acc, np.zeros(3)]))


def static_walk_sequencer(stride: float, clearance: float, cycle_time: float, surface_slope: float = 0.0,
                          feet: dict | None = None, cycles: int = 1, start_time: float = 0.0,
                          max_reach: float = 0.15, shift_fraction: float = 0.4,
                          stability_margin: float = 0.02) -> WalkSchedule:
    """Crawl schedule walking ``cycles`` strides along +x of an incline.

    The gait order is LH, LF, RH, RF.  Before each swing the base shifts into
    the triangle of the three remaining feet, keeping ``stability_margin``
    from its edges.  ``feet`` maps leg names to initial foot positions; the
    incline rises along x by ``surface_slope``.
    """
    if not 0.0 <= surface_slope <= 0.35:
        raise ValueError("slope must lie in [0, 0.35] rad")
    if stride <= 0.0 or stride > max_reach:
        raise ValueError(f"stride {stride} m outside kinematic reach (0, {max_reach}]")
    if cycle_time <= 0.0 or clearance < 0.0:
        raise ValueError("cycle time must be positive and clearance non-negative")
    if feet is None:
        feet = {"LF": (0.3, 0.18), "RF": (0.3, -0.18), "LH": (-0.3, 0.18), "RH": (-0.3, -0.18)}
    c, s = math.cos(surface_slope), math.sin(surface_slope)
    direction = np.array([c, 0.0, s])
    normal = np.array([-s, 0.0, c])

    def on_surface(xy):
        x, y = float(xy[0]), float(xy[1])
        return np.array([x, y, x * math.tan(surface_slope)])

    pos = {leg: on_surface(xy) for leg, xy in feet.items()}
    order = ("LH", "LF", "RH", "RF")
    phase = cycle_time / 4.0
    shift_T = shift_fraction * phase
    swing_T = phase - shift_T
    swings = []
    base_wp = []
    t = start_time
    for _ in range(cycles):
        for leg in order:
            support = [pos[l] for l in order if l != leg]
            target_xy = _safe_point(support, stability_margin)
            base_wp.append((t, t + shift_T, target_xy))
            t += shift_T
            new = pos[leg] + stride * direction
            swings.append(SwingPhase(leg, t, t + swing_T, pos[leg].copy(), new, clearance, normal))
            pos[leg] = new
            t += swing_T
    return WalkSchedule(tuple(swings), tuple(base_wp), t - start_time, surface_slope)


def _safe_point(support, margin: float) -> np.ndarray:
    """Centroid of the support triangle (x-y); checks the inscribed margin."""
    pts = np.array([p[:2] for p in support])
    centroid = pts.mean(axis=0)
    if support_margin(pts, centroid) < margin:
        raise ValueError("support triangle too small for the stability margin")
    return centroid


def support_margin(pts: np.ndarray, point: np.ndarray) -> float:
    """Signed distance from ``point`` to the boundary of the convex polygon ``pts`` (positive inside)."""
    pts = np.asarray(pts, dtype=float)[:, :2]
    # order counterclockwise around the centroid
    c = pts.mean(axis=0)
    ang = np.arctan2(pts[:, 1] - c[1], pts[:, 0] - c[0])
    pts = pts[np.argsort(ang)]
    best = math.inf
    for i in range(len(pts)):
        a, b = pts[i], pts[(i + 1) % len(pts)]
        e = b - a
        nrm = np.array([-e[1], e[0]]) / np.linalg.norm(e)  # inward for ccw order
        best = min(best, float(nrm @ (np.asarray(point)[:2] - a)))
    return best
