"""Numba-compiled loop kernels, arithmetic-identical to the numpy fallback.

Serial (no prange): reductions stay in a fixed order so runs are
deterministic. cache=True amortizes JIT cost across processes.
"""

from __future__ import annotations

import numpy as np
from numba import njit


@njit(cache=True)
def lagged_step(pos, yaw, ref_pos, ref_yaw, k, v_max, dt):
    n = pos.shape[0]
    new_pos = np.empty_like(pos)
    vel = np.empty_like(pos)
    new_yaw = np.empty_like(yaw)
    yaw_rate = np.empty_like(yaw)
    for i in range(n):
        ex = k * (ref_pos[i, 0] - pos[i, 0])
        ey = k * (ref_pos[i, 1] - pos[i, 1])
        ez = k * (ref_pos[i, 2] - pos[i, 2])
        speed = np.sqrt(ex * ex + ey * ey + ez * ez)
        if speed > v_max:
            s = v_max / speed
            ex *= s
            ey *= s
            ez *= s
        vel[i, 0] = ex
        vel[i, 1] = ey
        vel[i, 2] = ez
        new_pos[i, 0] = pos[i, 0] + ex * dt
        new_pos[i, 1] = pos[i, 1] + ey * dt
        new_pos[i, 2] = pos[i, 2] + ez * dt
        d = ref_yaw[i] - yaw[i]
        dyaw = np.arctan2(np.sin(d), np.cos(d))
        yaw_rate[i] = k * dyaw
        new_yaw[i] = yaw[i] + yaw_rate[i] * dt
    return new_pos, vel, new_yaw, yaw_rate


@njit(cache=True)
def pairwise_distances(pos):
    n = pos.shape[0]
    out = np.zeros((n, n))
    for i in range(n):
        for j in range(i + 1, n):
            dx = pos[j, 0] - pos[i, 0]
            dy = pos[j, 1] - pos[i, 1]
            dz = pos[j, 2] - pos[i, 2]
            d = np.sqrt(dx * dx + dy * dy + dz * dz)
            out[i, j] = d
            out[j, i] = d
    return out


@njit(cache=True)
def min_pairwise_distance(pos):
    n = pos.shape[0]
    if n < 2:
        return np.inf
    best = np.inf
    for i in range(n):
        for j in range(i + 1, n):
            dx = pos[j, 0] - pos[i, 0]
            dy = pos[j, 1] - pos[i, 1]
            dz = pos[j, 2] - pos[i, 2]
            d = np.sqrt(dx * dx + dy * dy + dz * dz)
            if d < best:
                best = d
    return best


@njit(cache=True)
def trace_metrics(pos, vel, ref_pos, present, vc_pos, vc_vel, omega_z):
    t_len, n = pos.shape[0], pos.shape[1]
    cohesion = np.empty((t_len, n))
    ref_err = np.empty((t_len, n))
    align = np.empty((t_len, n))
    sep = np.empty((t_len, n, n))
    for t in range(t_len):
        w = omega_z[t]
        for i in range(n):
            if not present[t, i]:
                cohesion[t, i] = np.nan
                ref_err[t, i] = np.nan
                align[t, i] = np.nan
                continue
            rx = pos[t, i, 0] - vc_pos[t, 0]
            ry = pos[t, i, 1] - vc_pos[t, 1]
            rz = pos[t, i, 2] - vc_pos[t, 2]
            cohesion[t, i] = np.sqrt(rx * rx + ry * ry + rz * rz)
            ex = pos[t, i, 0] - ref_pos[t, i, 0]
            ey = pos[t, i, 1] - ref_pos[t, i, 1]
            ez = pos[t, i, 2] - ref_pos[t, i, 2]
            ref_err[t, i] = np.sqrt(ex * ex + ey * ey + ez * ez)
            dvx = vel[t, i, 0] - vc_vel[t, 0] - (-w * ry)
            dvy = vel[t, i, 1] - vc_vel[t, 1] - (w * rx)
            dvz = vel[t, i, 2] - vc_vel[t, 2]
            align[t, i] = np.sqrt(dvx * dvx + dvy * dvy + dvz * dvz)
        for i in range(n):
            for j in range(n):
                if i == j:
                    sep[t, i, j] = 0.0 if present[t, i] else np.nan
                    continue
                if present[t, i] and present[t, j]:
                    sx = pos[t, i, 0] - pos[t, j, 0]
                    sy = pos[t, i, 1] - pos[t, j, 1]
                    sz = pos[t, i, 2] - pos[t, j, 2]
                    sep[t, i, j] = np.sqrt(sx * sx + sy * sy + sz * sz)
                else:
                    sep[t, i, j] = np.nan
    return cohesion, ref_err, align, sep
