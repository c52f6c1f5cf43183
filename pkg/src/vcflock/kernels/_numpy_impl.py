"""Pure-numpy implementations of the hot numeric kernels.

These are the fallback path selected with VCFLOCK_NUMBA=0 and the reference
the numba path is benchmarked against. Elementwise formulas mirror the loop
versions exactly (explicit component squares, same association order) so the
two backends agree bitwise on identical inputs.
"""

from __future__ import annotations

import numpy as np


def lagged_step(pos, yaw, ref_pos, ref_yaw, k, v_max, dt):
    """One explicit-Euler step of the first-order follower model.

    Returns (new_pos, vel, new_yaw, yaw_rate). Velocity is the commanded
    k * error vector, norm-clamped to v_max.
    """
    err = ref_pos - pos
    vel = k * err
    ex, ey, ez = vel[:, 0], vel[:, 1], vel[:, 2]
    speed = np.sqrt(ex * ex + ey * ey + ez * ez)
    scale = np.ones_like(speed)
    over = speed > v_max
    scale[over] = v_max / speed[over]
    vel = vel * scale[:, None]
    new_pos = pos + vel * dt
    dyaw = np.arctan2(np.sin(ref_yaw - yaw), np.cos(ref_yaw - yaw))
    yaw_rate = k * dyaw
    new_yaw = yaw + yaw_rate * dt
    return new_pos, vel, new_yaw, yaw_rate


def pairwise_distances(pos):
    """Symmetric (N, N) Euclidean distance matrix with zero diagonal."""
    d = pos[:, None, :] - pos[None, :, :]
    dx, dy, dz = d[..., 0], d[..., 1], d[..., 2]
    return np.sqrt(dx * dx + dy * dy + dz * dz)


def min_pairwise_distance(pos):
    n = pos.shape[0]
    if n < 2:
        return np.inf
    d = pairwise_distances(pos)
    iu = np.triu_indices(n, k=1)
    return float(d[iu].min())


def trace_metrics(pos, vel, ref_pos, present, vc_pos, vc_vel, omega_z):
    """Per-sample Reynolds metrics over a (T, N, ...) trace block.

    Args:
        pos, vel, ref_pos: (T, N, 3) world-frame agent series.
        present: (T, N) bool, False where the agent has left the swarm.
        vc_pos, vc_vel: (T, 3) centroid series.
        omega_z: (T,) centroid yaw rate (rad/s).

    Returns:
        cohesion, ref_err, align: (T, N) with NaN where absent.
        sep: (T, N, N) with NaN where either agent is absent.
    """
    rel = pos - vc_pos[:, None, :]
    rx, ry, rz = rel[..., 0], rel[..., 1], rel[..., 2]
    cohesion = np.sqrt(rx * rx + ry * ry + rz * rz)

    err = pos - ref_pos
    ex, ey, ez = err[..., 0], err[..., 1], err[..., 2]
    ref_err = np.sqrt(ex * ex + ey * ey + ez * ez)

    # omega x r with omega = (0, 0, w): (-w*ry, w*rx, 0)
    w = omega_z[:, None]
    dvx = vel[..., 0] - vc_vel[:, None, 0] - (-w * ry)
    dvy = vel[..., 1] - vc_vel[:, None, 1] - (w * rx)
    dvz = vel[..., 2] - vc_vel[:, None, 2]
    align = np.sqrt(dvx * dvx + dvy * dvy + dvz * dvz)

    d = pos[:, None, :, :] - pos[:, :, None, :]
    sx, sy, sz = d[..., 0], d[..., 1], d[..., 2]
    sep = np.sqrt(sx * sx + sy * sy + sz * sz)

    absent = ~present
    cohesion[absent] = np.nan
    ref_err[absent] = np.nan
    align[absent] = np.nan
    pair_absent = absent[:, :, None] | absent[:, None, :]
    sep[pair_absent] = np.nan
    return cohesion, ref_err, align, sep
