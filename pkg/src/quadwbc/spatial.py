"""Rotation helpers.

Quaternions are stored scalar-first, ``(w, x, y, z)``.
"""

from __future__ import annotations

import math

import numpy as np

_EYE3 = np.eye(3)


def cross(a, b) -> np.ndarray:
    """3-vector cross product; much cheaper than ``np.cross`` for single vectors."""
    a0, a1, a2 = a
    b0, b1, b2 = b
    return np.array([a1 * b2 - a2 * b1, a2 * b0 - a0 * b2, a0 * b1 - a1 * b0])


def skew(v: np.ndarray) -> np.ndarray:
    x, y, z = v
    return np.array([[0.0, -z, y], [z, 0.0, -x], [-y, x, 0.0]])


def quat_normalize(q: np.ndarray) -> np.ndarray:
    q = np.asarray(q, dtype=float)
    return q / np.linalg.norm(q)


def quat_multiply(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    aw, ax, ay, az = a
    bw, bx, by, bz = b
    return np.array(
        [
            aw * bw - ax * bx - ay * by - az * bz,
            aw * bx + ax * bw + ay * bz - az * by,
            aw * by - ax * bz + ay * bw + az * bx,
            aw * bz + ax * by - ay * bx + az * bw,
        ]
    )


def quat_to_matrix(q: np.ndarray) -> np.ndarray:
    """Rotation matrix of a (not necessarily unit) quaternion."""
    w, x, y, z = q
    n = w * w + x * x + y * y + z * z
    s = 2.0 / n
    return np.array(
        [
            [1.0 - s * (y * y + z * z), s * (x * y - w * z), s * (x * z + w * y)],
            [s * (x * y + w * z), 1.0 - s * (x * x + z * z), s * (y * z - w * x)],
            [s * (x * z - w * y), s * (y * z + w * x), 1.0 - s * (x * x + y * y)],
        ]
    )


def matrix_to_quat(R: np.ndarray) -> np.ndarray:
    tr = R[0, 0] + R[1, 1] + R[2, 2]
    if tr > 0.0:
        s = 2.0 * math.sqrt(tr + 1.0)
        q = [0.25 * s, (R[2, 1] - R[1, 2]) / s, (R[0, 2] - R[2, 0]) / s, (R[1, 0] - R[0, 1]) / s]
    elif R[0, 0] > R[1, 1] and R[0, 0] > R[2, 2]:
        s = 2.0 * math.sqrt(1.0 + R[0, 0] - R[1, 1] - R[2, 2])
        q = [(R[2, 1] - R[1, 2]) / s, 0.25 * s, (R[0, 1] + R[1, 0]) / s, (R[0, 2] + R[2, 0]) / s]
    elif R[1, 1] > R[2, 2]:
        s = 2.0 * math.sqrt(1.0 + R[1, 1] - R[0, 0] - R[2, 2])
        q = [(R[0, 2] - R[2, 0]) / s, (R[0, 1] + R[1, 0]) / s, 0.25 * s, (R[1, 2] + R[2, 1]) / s]
    else:
        s = 2.0 * math.sqrt(1.0 + R[2, 2] - R[0, 0] - R[1, 1])
        q = [(R[1, 0] - R[0, 1]) / s, (R[0, 2] + R[2, 0]) / s, (R[1, 2] + R[2, 1]) / s, 0.25 * s]
    q = np.array(q)
    if q[0] < 0.0:
        q = -q
    return q / np.linalg.norm(q)


def quat_exp(rotvec: np.ndarray) -> np.ndarray:
    """Unit quaternion of the rotation vector ``rotvec`` (axis * angle)."""
    theta = math.sqrt(float(rotvec[0] ** 2 + rotvec[1] ** 2 + rotvec[2] ** 2))
    if theta < 1e-12:
        # second-order series keeps the result unit length to machine precision
        return quat_normalize(np.array([1.0 - theta * theta / 8.0, *(0.5 * np.asarray(rotvec))]))
    half = 0.5 * theta
    s = math.sin(half) / theta
    return np.array([math.cos(half), s * rotvec[0], s * rotvec[1], s * rotvec[2]])


def rotation_exp(rotvec: np.ndarray) -> np.ndarray:
    """Rodrigues formula."""
    rotvec = np.asarray(rotvec, dtype=float)
    theta = math.sqrt(float(rotvec @ rotvec))
    K = skew(rotvec)
    if theta < 1e-8:
        return _EYE3 + K + 0.5 * K @ K
    a = math.sin(theta) / theta
    b = (1.0 - math.cos(theta)) / (theta * theta)
    return _EYE3 + a * K + b * K @ K


def rotation_log(R: np.ndarray) -> np.ndarray:
    """Rotation vector of ``R``.

    At an angle of pi the axis sign is ambiguous; the axis whose first
    nonzero component is positive is returned.
    """
    cos_theta = 0.5 * (R[0, 0] + R[1, 1] + R[2, 2] - 1.0)
    cos_theta = min(1.0, max(-1.0, cos_theta))
    w = np.array([R[2, 1] - R[1, 2], R[0, 2] - R[2, 0], R[1, 0] - R[0, 1]])
    if cos_theta > 0.999:
        # theta / sin(theta) series around zero
        sin_theta = 0.5 * math.sqrt(float(w @ w))
        theta = math.asin(min(1.0, sin_theta))
        t2 = theta * theta
        return 0.5 * (1.0 + t2 / 6.0 + 7.0 * t2 * t2 / 360.0) * w
    theta = math.acos(cos_theta)
    if cos_theta > -0.999:
        return theta / (2.0 * math.sin(theta)) * w
    # near pi: recover the axis from the symmetric part
    B = 0.5 * (R + R.T) - cos_theta * _EYE3
    col = int(np.argmax(np.diag(B)))
    axis = B[:, col] / math.sqrt(max(B[col, col], 1e-300))
    axis /= np.linalg.norm(axis)
    # orient the axis with the antisymmetric part when it carries information
    if float(axis @ w) < 0.0:
        axis = -axis
    if abs(math.pi - theta) < 1e-9:
        nz = np.flatnonzero(np.abs(axis) > 1e-12)
        if nz.size and axis[nz[0]] < 0.0:
            axis = -axis
    return theta * axis


def rotation_about(axis: np.ndarray, angle: float) -> np.ndarray:
    axis = np.asarray(axis, dtype=float)
    return rotation_exp(axis / np.linalg.norm(axis) * angle)


def rpy_to_matrix(rpy) -> np.ndarray:
    """Fixed-axis roll-pitch-yaw, ``Rz(yaw) @ Ry(pitch) @ Rx(roll)``."""
    r, p, y = rpy
    cr, sr = math.cos(r), math.sin(r)
    cp, sp = math.cos(p), math.sin(p)
    cy, sy = math.cos(y), math.sin(y)
    return np.array(
        [
            [cy * cp, cy * sp * sr - sy * cr, cy * sp * cr + sy * sr],
            [sy * cp, sy * sp * sr + cy * cr, sy * sp * cr - cy * sr],
            [-sp, cp * sr, cp * cr],
        ]
    )
