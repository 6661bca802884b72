"""Compiled tree recursions.

All spatial quantities are world-aligned Plücker coordinates taken at the
world origin, angular part first.  Generalized velocities use the mixed base
convention: base linear velocity in the world frame, base angular velocity in
the base frame, then joint rates.
"""

from __future__ import annotations

import math

import numpy as np
from numba import njit


@njit(cache=True, inline="always")
def _cross(a, b):
    return np.array(
        [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
    )


@njit(cache=True, inline="always")
def _matvec(A, x):
    return np.array(
        [
            A[0, 0] * x[0] + A[0, 1] * x[1] + A[0, 2] * x[2],
            A[1, 0] * x[0] + A[1, 1] * x[1] + A[1, 2] * x[2],
            A[2, 0] * x[0] + A[2, 1] * x[1] + A[2, 2] * x[2],
        ]
    )


@njit(cache=True)
def _matmul3(A, B):
    C = np.empty((3, 3))
    for i in range(3):
        for j in range(3):
            C[i, j] = A[i, 0] * B[0, j] + A[i, 1] * B[1, j] + A[i, 2] * B[2, j]
    return C


@njit(cache=True)
def _axis_rotation(u, angle):
    c = math.cos(angle)
    s = math.sin(angle)
    t = 1.0 - c
    x, y, z = u[0], u[1], u[2]
    R = np.empty((3, 3))
    R[0, 0] = c + x * x * t
    R[0, 1] = x * y * t - z * s
    R[0, 2] = x * z * t + y * s
    R[1, 0] = y * x * t + z * s
    R[1, 1] = c + y * y * t
    R[1, 2] = y * z * t - x * s
    R[2, 0] = z * x * t - y * s
    R[2, 1] = z * y * t + x * s
    R[2, 2] = c + z * z * t
    return R


@njit(cache=True)
def link_kinematics(parent, joint_origin, joint_axis, base_pos, base_R, qj, v_I, w_B, qdj):
    """Poses, velocities and velocity-product accelerations of every link.

    Returns ``R, p, axis, omega, vel, alpha, acc`` where ``p``/``vel``/``acc``
    refer to the link origin (the joint location) and ``alpha``/``acc`` are
    evaluated with zero generalized acceleration and no gravity.
    """
    L = parent.shape[0]
    R = np.empty((L, 3, 3))
    p = np.empty((L, 3))
    axis = np.zeros((L, 3))
    omega = np.empty((L, 3))
    vel = np.empty((L, 3))
    alpha = np.zeros((L, 3))
    acc = np.zeros((L, 3))
    R[0] = base_R
    p[0] = base_pos
    omega[0] = _matvec(base_R, w_B)
    vel[0] = v_I
    for i in range(1, L):
        k = parent[i]
        Rp = R[k]
        r = _matvec(Rp, joint_origin[i])
        p[i] = p[k] + r
        a = _matvec(Rp, joint_axis[i])
        axis[i] = a
        R[i] = _matmul3(Rp, _axis_rotation(joint_axis[i], qj[i - 1]))
        wp = omega[k]
        qd = qdj[i - 1]
        omega[i] = wp + a * qd
        vel[i] = vel[k] + _cross(wp, r)
        alpha[i] = alpha[k] + _cross(wp, a) * qd
        acc[i] = acc[k] + _cross(alpha[k], r) + _cross(wp, _cross(wp, r))
    return R, p, axis, omega, vel, alpha, acc


@njit(cache=True)
def _spatial_inertia(m, c, Ic):
    out = np.zeros((6, 6))
    S = np.zeros((3, 3))
    S[0, 1] = -c[2]
    S[0, 2] = c[1]
    S[1, 0] = c[2]
    S[1, 2] = -c[0]
    S[2, 0] = -c[1]
    S[2, 1] = c[0]
    for i in range(3):
        for j in range(3):
            acc = 0.0
            for k in range(3):
                acc += S[i, k] * S[j, k]
            out[i, j] = Ic[i, j] + m * acc
            out[i, 3 + j] = m * S[i, j]
            out[3 + i, j] = m * S[j, i]
        out[3 + i, 3 + i] = m
    return out


@njit(cache=True)
def mass_matrix_and_bias(parent, link_mass, link_com, link_inertia, R, p, axis, omega, vel,
                         v_I, gravity, qdj, want_bias):
    """Composite-rigid-body mass matrix and Newton-Euler bias vector."""
    L = parent.shape[0]
    nv = L - 1 + 6
    Isp = np.empty((L, 6, 6))
    for i in range(L):
        Ri = R[i]
        c = p[i] + _matvec(Ri, link_com[i])
        Ic = _matmul3(_matmul3(Ri, link_inertia[i]), Ri.T.copy())
        Isp[i] = _spatial_inertia(link_mass[i], c, Ic)

    S = np.zeros((L, 6))
    for i in range(1, L):
        S[i, :3] = axis[i]
        S[i, 3:] = _cross(p[i], axis[i])

    # base motion subspace: columns for (v_I, w_B)
    Sb = np.zeros((6, 6))
    R0 = R[0]
    p0 = p[0]
    for b in range(3):
        Sb[3 + b, b] = 1.0
        col = R0[:, b].copy()
        Sb[0:3, 3 + b] = col
        Sb[3:6, 3 + b] = _cross(p0, col)

    SbT = Sb.T.copy()
    Icomp = Isp.copy()
    for i in range(L - 1, 0, -1):
        Icomp[parent[i]] += Icomp[i]

    M = np.zeros((nv, nv))
    for i in range(1, L):
        F = Icomp[i] @ S[i]
        col = 5 + i
        M[col, col] = S[i] @ F
        j = parent[i]
        while j > 0:
            val = S[j] @ F
            M[5 + j, col] = val
            M[col, 5 + j] = val
            j = parent[j]
        for b in range(6):
            val = SbT[b] @ F
            M[b, col] = val
            M[col, b] = val
    M[:6, :6] = SbT @ (Icomp[0] @ Sb)

    h = np.zeros(nv)
    if not want_bias:
        return M, h

    V = np.empty((L, 6))
    for i in range(L):
        V[i, :3] = omega[i]
        V[i, 3:] = vel[i] + _cross(p[i], omega[i])
    A = np.zeros((L, 6))
    A[0, 3:] = _cross(v_I, omega[0]) - gravity
    f = np.empty((L, 6))
    for i in range(L):
        if i > 0:
            k = parent[i]
            w = V[i, :3]
            vo = V[i, 3:]
            sw = S[i, :3]
            sv = S[i, 3:]
            qd = qdj[i - 1]
            A[i, :3] = A[k, :3] + _cross(w, sw) * qd
            A[i, 3:] = A[k, 3:] + (_cross(w, sv) + _cross(vo, sw)) * qd
        IV = Isp[i] @ V[i]
        fi = Isp[i] @ A[i]
        w = V[i, :3]
        vo = V[i, 3:]
        fi[:3] += _cross(w, IV[:3]) + _cross(vo, IV[3:])
        fi[3:] += _cross(w, IV[3:])
        f[i] = fi
    for i in range(L - 1, 0, -1):
        h[5 + i] = S[i] @ f[i]
        f[parent[i]] += f[i]
    h[:6] = SbT @ f[0]
    return M, h


@njit(cache=True)
def point_jacobian(parent, link, point, p, axis, base_R, nv):
    """6 x nv Jacobian of a point rigidly attached to ``link``.

    Rows 0-2 give the world linear velocity of the point, rows 3-5 the world
    angular velocity of the link.
    """
    J = np.zeros((6, nv))
    p0 = p[0]
    d = point - p0
    for b in range(3):
        J[b, b] = 1.0
        col = base_R[:, b].copy()
        J[3:6, 3 + b] = col
        J[0:3, 3 + b] = _cross(col, d)
    i = link
    while i > 0:
        c = 5 + i
        a = axis[i]
        J[0:3, c] = _cross(a, point - p[i])
        J[3:6, c] = a
        i = parent[i]
    return J
