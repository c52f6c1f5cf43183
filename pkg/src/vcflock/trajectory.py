"""Virtual-centroid trajectory generation and sampling.

The path is a piecewise Catmull-Rom spline through the waypoints (a straight
segment when only two are given), re-parameterized by arc length with an
adaptive-Simpson table and Newton-refined inversion. Speed along the arc
follows a trapezoidal profile limited by (v_max, a_max). Yaw runs one of
three policies: path_facing (tangent heading, slew-limited), fixed, or a
timed sequence of absolute yaw targets.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import ConstraintViolation, DegenerateSpec, InfeasibleYaw
from .pose import Pose, Twist, quat_from_yaw, wrap_angle

_ARC_TOL = 1e-6          # adaptive Simpson tolerance per segment, meters
_INIT_INTERVALS = 256    # initial uniform mesh per segment before refinement
_YAW_GRID_DT = 1e-3      # path_facing slew integration step, seconds
_GL5_X = (-0.9061798459386640, -0.5384693101056831, 0.0,
          0.5384693101056831, 0.9061798459386640)
_GL5_W = (0.2369268850561891, 0.4786286704993665, 0.5688888888888889,
          0.4786286704993665, 0.2369268850561891)


@dataclass(frozen=True)
class Waypoint:
    position: np.ndarray
    hold_yaw: float | None = None

    def __post_init__(self):
        p = np.asarray(self.position, dtype=np.float64)
        if p.shape != (3,) or not np.all(np.isfinite(p)):
            raise DegenerateSpec(f"waypoint position must be a finite 3-vector: {p}")
        object.__setattr__(self, "position", p)


@dataclass(frozen=True)
class TrajectorySpec:
    """Inputs for plan(). Yaw sequence entries are (t_seconds, yaw_radians)."""

    waypoints: tuple
    v_max: float
    a_max: float = 1.0
    yaw_mode: str = "path_facing"
    fixed_yaw: float = 0.0
    yaw_sequence: tuple = ()
    yaw_rate_max: float = 1.5
    initial_yaw: float | None = None

    def __post_init__(self):
        wps = tuple(
            w if isinstance(w, Waypoint) else Waypoint(np.asarray(w, dtype=np.float64))
            for w in self.waypoints
        )
        object.__setattr__(self, "waypoints", wps)
        object.__setattr__(self, "yaw_sequence",
                           tuple((float(t), float(y)) for t, y in self.yaw_sequence))
        if self.v_max <= 0.0:
            raise ConstraintViolation(f"v_max must be positive, got {self.v_max}")
        if self.a_max <= 0.0:
            raise ConstraintViolation(f"a_max must be positive, got {self.a_max}")
        if self.yaw_rate_max <= 0.0:
            raise ConstraintViolation(
                f"yaw_rate_max must be positive, got {self.yaw_rate_max}")
        if self.yaw_mode not in ("path_facing", "fixed", "sequence"):
            raise DegenerateSpec(f"unknown yaw_mode {self.yaw_mode!r}")


@dataclass(frozen=True)
class TrajectorySample:
    t: float
    pose: Pose
    twist: Twist
    yaw: float = 0.0
    speed: float = 0.0


class _SplinePath:
    """Catmull-Rom spline through K>=2 points with an arc-length table."""

    def __init__(self, points: np.ndarray):
        pts = np.asarray(points, dtype=np.float64)
        k = len(pts)
        ghost_first = 2.0 * pts[0] - pts[1]
        ghost_last = 2.0 * pts[-1] - pts[-2]
        ext = np.vstack([ghost_first, pts, ghost_last])
        self.n_segs = k - 1
        self.coeffs = []
        for i in range(self.n_segs):
            p0, p1, p2, p3 = ext[i], ext[i + 1], ext[i + 2], ext[i + 3]
            m1 = 0.5 * (p2 - p0)
            m2 = 0.5 * (p3 - p1)
            c0 = p1
            c1 = m1
            c2 = -3.0 * p1 + 3.0 * p2 - 2.0 * m1 - m2
            c3 = 2.0 * p1 - 2.0 * p2 + m1 + m2
            self.coeffs.append((c0, c1, c2, c3))
        self._build_arc_table()

    def point(self, seg: int, u: float) -> np.ndarray:
        c0, c1, c2, c3 = self.coeffs[seg]
        return c0 + u * (c1 + u * (c2 + u * c3))

    def deriv(self, seg: int, u: float) -> np.ndarray:
        c0, c1, c2, c3 = self.coeffs[seg]
        return c1 + u * (2.0 * c2 + u * 3.0 * c3)

    def _speed_u(self, seg: int, u: float) -> float:
        d = self.deriv(seg, u)
        return math.sqrt(d[0] * d[0] + d[1] * d[1] + d[2] * d[2])

    def _speeds_u(self, seg: int, u: np.ndarray) -> np.ndarray:
        c0, c1, c2, c3 = self.coeffs[seg]
        d = c1[None, :] + u[:, None] * (2.0 * c2[None, :] + u[:, None] * 3.0 * c3[None, :])
        return np.sqrt(d[:, 0] ** 2 + d[:, 1] ** 2 + d[:, 2] ** 2)

    def _build_arc_table(self):
        """Composite adaptive Simpson per segment.

        Starts from a fine uniform mesh (vectorized), applies the Richardson
        error estimate per interval, and recursively splits any interval
        still above tolerance. Node table keeps interval ends; a denser
        tangent-heading table rides on the half-points.
        """
        m = _INIT_INTERVALS
        self.seg_u_nodes = []
        self.seg_s_nodes = []
        self.seg_start_s = np.zeros(self.n_segs + 1)
        total = 0.0
        node_s_all, node_h_all = [], []
        for seg in range(self.n_segs):
            u = np.arange(4 * m + 1) / (4.0 * m)
            f = self._speeds_u(seg, u)
            h = 1.0 / m
            ends, mids = f[0::4], f[2::4]
            quarter1, quarter3 = f[1::4], f[3::4]
            coarse = h / 6.0 * (ends[:-1] + 4.0 * mids + ends[1:])
            left = h / 12.0 * (ends[:-1] + 4.0 * quarter1 + mids)
            right = h / 12.0 * (mids + 4.0 * quarter3 + ends[1:])
            fine = left + right
            err = np.abs(fine - coarse)
            incr = fine + (fine - coarse) / 15.0
            tol_per = _ARC_TOL / m
            for j in np.nonzero(err > 15.0 * tol_per)[0]:
                incr[j] = self._adaptive(seg, j * h, (j + 1) * h, tol_per, 20)
            u_nodes = np.arange(m + 1) / m
            s_nodes = np.concatenate([[0.0], np.cumsum(incr)])
            self.seg_u_nodes.append(u_nodes)
            self.seg_s_nodes.append(s_nodes)
            # heading table at half-interval resolution, s from the fine sums
            c = self.coeffs[seg]
            du = c[1][None, :] + u[:, None] * (2.0 * c[2][None, :] + u[:, None] * 3.0 * c[3][None, :])
            headings = np.arctan2(du[:, 1], du[:, 0])
            halves = np.empty(2 * m)
            halves[0::2] = left
            halves[1::2] = right
            s_half = np.concatenate([[0.0], np.cumsum(halves)])
            node_s_all.append(total + s_half)
            node_h_all.append(headings[0::2])
            total += s_nodes[-1]
            self.seg_start_s[seg + 1] = total
        self.length = total
        self._node_s = np.concatenate(node_s_all)
        self._node_heading = np.unwrap(np.concatenate(node_h_all))

    def _adaptive(self, seg, a, b, tol, depth) -> float:
        fa = self._speed_u(seg, a)
        fb = self._speed_u(seg, b)
        fm = self._speed_u(seg, 0.5 * (a + b))
        whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb)
        return self._adaptive_rec(seg, a, b, fa, fm, fb, whole, tol, depth)

    def _adaptive_rec(self, seg, a, b, fa, fm, fb, whole, tol, depth) -> float:
        mid = 0.5 * (a + b)
        flm = self._speed_u(seg, 0.5 * (a + mid))
        frm = self._speed_u(seg, 0.5 * (mid + b))
        left = (mid - a) / 6.0 * (fa + 4.0 * flm + fm)
        right = (b - mid) / 6.0 * (fm + 4.0 * frm + fb)
        if depth <= 0 or abs(left + right - whole) <= 15.0 * tol:
            return left + right + (left + right - whole) / 15.0
        return (self._adaptive_rec(seg, a, mid, fa, flm, fm, left, tol / 2.0, depth - 1)
                + self._adaptive_rec(seg, mid, b, fm, frm, fb, right, tol / 2.0, depth - 1))

    def _invert(self, s: float) -> tuple[int, float]:
        """Arc length -> (segment, u), Newton-refined within the node interval."""
        s = min(max(s, 0.0), self.length)
        seg = int(np.searchsorted(self.seg_start_s, s, side="right") - 1)
        seg = min(seg, self.n_segs - 1)
        s_local = s - self.seg_start_s[seg]
        u_nodes = self.seg_u_nodes[seg]
        s_nodes = self.seg_s_nodes[seg]
        idx = int(np.searchsorted(s_nodes, s_local, side="right") - 1)
        idx = min(max(idx, 0), len(u_nodes) - 2)
        ua, ub = u_nodes[idx], u_nodes[idx + 1]
        sa, sb = s_nodes[idx], s_nodes[idx + 1]
        if sb - sa <= 1e-15:
            return seg, ua
        u = ua + (s_local - sa) / (sb - sa) * (ub - ua)
        target = s_local - sa
        for _ in range(4):
            g = self._gl5(seg, ua, u) - target
            du = self._speed_u(seg, u)
            if du <= 1e-15:
                break
            step = g / du
            u -= step
            u = min(max(u, ua), ub)
            if abs(step) < 1e-13:
                break
        return seg, u

    def _gl5(self, seg, ua, ub) -> float:
        half = 0.5 * (ub - ua)
        mid = 0.5 * (ua + ub)
        acc = 0.0
        for x, w in zip(_GL5_X, _GL5_W):
            acc += w * self._speed_u(seg, mid + half * x)
        return acc * half

    def eval_arc(self, s: float) -> tuple[np.ndarray, np.ndarray]:
        """Position and unit tangent at arc length s."""
        seg, u = self._invert(s)
        p = self.point(seg, u)
        d = self.deriv(seg, u)
        n = math.sqrt(d[0] * d[0] + d[1] * d[1] + d[2] * d[2])
        if n < 1e-15:
            return p, np.zeros(3)
        return p, d / n

    def heading_at(self, s: np.ndarray) -> np.ndarray:
        """Unwrapped tangent heading interpolated on the arc-node table."""
        return np.interp(s, self._node_s, self._node_heading)


class _SpeedProfile:
    """Trapezoidal s(t) over distance span, with optional initial speed."""

    def __init__(self, distance: float, v_max: float, a_max: float,
                 v_start: float = 0.0):
        self.distance = distance
        phases = []  # (t0, s0, v0, a)
        t = 0.0
        s = 0.0
        v0 = v_start
        if distance <= 1e-12:
            self.phases = [(0.0, 0.0, 0.0, 0.0)]
            self.duration = 0.0
            return
        if v0 > v_max:
            d_drop = (v0 * v0 - v_max * v_max) / (2.0 * a_max)
            if d_drop >= distance:
                # Not enough room to bleed speed at a_max; stop at the end
                # with the (steeper) rate geometry requires.
                a_req = v0 * v0 / (2.0 * distance)
                phases.append((0.0, 0.0, v0, -a_req))
                self.phases = phases
                self.duration = v0 / a_req
                return
            dt = (v0 - v_max) / a_max
            phases.append((t, s, v0, -a_max))
            t += dt
            s += d_drop
            v0 = v_max
        remaining = distance - s
        v_peak = math.sqrt(a_max * remaining + 0.5 * v0 * v0)
        if v_peak <= v0:
            # pure deceleration fits
            phases.append((t, s, v0, -a_max))
            self.phases = phases
            self.duration = t + v0 / a_max
            return
        v_c = min(v_max, v_peak)
        d_acc = (v_c * v_c - v0 * v0) / (2.0 * a_max)
        d_dec = v_c * v_c / (2.0 * a_max)
        d_cruise = remaining - d_acc - d_dec
        phases.append((t, s, v0, a_max))
        t += (v_c - v0) / a_max
        s += d_acc
        if d_cruise > 1e-12:
            phases.append((t, s, v_c, 0.0))
            t += d_cruise / v_c
            s += d_cruise
        phases.append((t, s, v_c, -a_max))
        t += v_c / a_max
        self.phases = phases
        self.duration = t

    def eval(self, t: float) -> tuple[float, float]:
        """Distance along the profile and speed at time t (clamped)."""
        if t <= 0.0:
            return 0.0, self.phases[0][2] if self.phases else 0.0
        if t >= self.duration:
            return self.distance, 0.0
        ph = self.phases[0]
        for cand in self.phases:
            if cand[0] <= t:
                ph = cand
            else:
                break
        t0, s0, v0, a = ph
        tau = t - t0
        return s0 + v0 * tau + 0.5 * a * tau * tau, v0 + a * tau

    def eval_array(self, t: np.ndarray) -> np.ndarray:
        """Vectorized distance-only eval (used by the yaw-grid builder)."""
        starts = np.array([p[0] for p in self.phases])
        out = np.empty_like(t)
        for i, (t0, s0, v0, a) in enumerate(self.phases):
            hi = starts[i + 1] if i + 1 < len(starts) else self.duration
            sel = (t >= t0) & (t < hi) if i + 1 < len(starts) else (t >= t0)
            tau = t[sel] - t0
            out[sel] = s0 + v0 * tau + 0.5 * a * tau * tau
        out[t <= 0.0] = 0.0
        out[t >= self.duration] = self.distance
        return out


class _YawProfile:
    """Piecewise-linear yaw(t) with per-piece constant rate."""

    def __init__(self, knot_t: np.ndarray, knot_yaw: np.ndarray):
        self.knot_t = knot_t
        self.knot_yaw = knot_yaw

    def eval(self, t: float) -> tuple[float, float]:
        kt, ky = self.knot_t, self.knot_yaw
        if t <= kt[0]:
            return float(ky[0]), 0.0
        if t >= kt[-1]:
            return float(ky[-1]), 0.0
        idx = int(np.searchsorted(kt, t, side="right") - 1)
        idx = min(idx, len(kt) - 2)
        dt = kt[idx + 1] - kt[idx]
        rate = (ky[idx + 1] - ky[idx]) / dt if dt > 0 else 0.0
        return float(ky[idx] + rate * (t - kt[idx])), float(rate)

    @property
    def final_yaw(self) -> float:
        return float(self.knot_yaw[-1])


class PlannedTrajectory:
    """Immutable, samplable result of plan(); safe for concurrent sampling."""

    def __init__(self, spec: TrajectorySpec, path: _SplinePath | None,
                 profile: _SpeedProfile | None, yaw_profile: _YawProfile,
                 s_offset: float = 0.0):
        self.spec = spec
        self._path = path
        self._profile = profile
        self._yaw = yaw_profile
        self._s_offset = s_offset
        path_T = profile.duration if profile is not None else 0.0
        yaw_T = float(yaw_profile.knot_t[-1])
        self.duration = max(path_T, yaw_T)
        self.length = (path.length - s_offset) if path is not None else 0.0
        if path is not None:
            self._final_pos, _ = path.eval_arc(path.length)
        else:
            self._final_pos = spec.waypoints[0].position

    def sample(self, t: float) -> TrajectorySample:
        t = max(t, 0.0)
        yaw, yaw_rate = self._yaw.eval(t)
        if self._path is not None and self._profile is not None:
            s_rel, speed = self._profile.eval(t)
            pos, tangent = self._path.eval_arc(self._s_offset + s_rel)
            vel = tangent * speed
        else:
            pos = self._final_pos
            vel = np.zeros(3)
            speed = 0.0
        if t >= self.duration:
            vel = np.zeros(3)
            speed = 0.0
            yaw_rate = 0.0
        pose = Pose(quat_from_yaw(yaw), pos)
        twist = Twist(vel, np.array([0.0, 0.0, yaw_rate]))
        return TrajectorySample(t=t, pose=pose, twist=twist,
                                yaw=wrap_angle(yaw), speed=speed)

    def replan_speed(self, t_now: float, new_v_max: float) -> "PlannedTrajectory":
        """Re-plan the remaining arc with a new speed cap, keeping continuity.

        The returned trajectory's local time starts at 0 at the current state.
        """
        if new_v_max <= 0.0:
            raise ConstraintViolation(f"v_max must be positive, got {new_v_max}")
        t_now = min(max(t_now, 0.0), self.duration)
        new_spec = replace(self.spec, v_max=new_v_max)
        yaw_now, _ = self._yaw.eval(t_now)
        if self._path is None or self._profile is None:
            kt = self._yaw.knot_t - t_now
            keep = kt >= 0.0
            knot_t = np.concatenate([[0.0], kt[keep]])
            knot_y = np.concatenate([[yaw_now], self._yaw.knot_yaw[keep]])
            return PlannedTrajectory(new_spec, None, None,
                                     _YawProfile(knot_t, knot_y))
        s_rel, v_now = self._profile.eval(t_now)
        s_abs = self._s_offset + s_rel
        profile = _SpeedProfile(self._path.length - s_abs, new_v_max,
                                self.spec.a_max, v_start=max(v_now, 0.0))
        if self.spec.yaw_mode == "path_facing":
            yaw_profile = _path_facing_profile(self._path, profile, s_abs, yaw_now,
                                               self.spec.yaw_rate_max)
        elif self.spec.yaw_mode == "fixed":
            yaw_profile = _YawProfile(np.array([0.0, profile.duration]),
                                      np.array([yaw_now, yaw_now]))
        else:
            kt = np.array([t - t_now for t, _ in self.spec.yaw_sequence])
            ky = np.array([y for _, y in self.spec.yaw_sequence])
            keep = kt > 0.0
            yaw_profile = _sequence_profile(
                tuple(zip(kt[keep], ky[keep])), yaw_now, self.spec.yaw_rate_max)
        return PlannedTrajectory(new_spec, self._path, profile, yaw_profile,
                                 s_offset=s_abs)


def _path_facing_profile(path: _SplinePath, profile: _SpeedProfile,
                         s_offset: float, yaw0: float,
                         yaw_rate_max: float) -> _YawProfile:
    """Slew-limited tangent tracking, integrated on a fixed 1 kHz grid."""
    n = max(int(math.ceil(profile.duration / _YAW_GRID_DT)), 1)
    times = np.minimum(np.arange(n + 1) * _YAW_GRID_DT, profile.duration)
    s_vals = s_offset + profile.eval_array(times)
    desired = path.heading_at(s_vals)
    yaw = np.empty(n + 1)
    # start aligned with the initial tangent unless an explicit yaw was given
    yaw[0] = yaw0
    max_step = yaw_rate_max * _YAW_GRID_DT
    for i in range(1, n + 1):
        err = wrap_angle(desired[i] - yaw[i - 1])
        step = min(max(err, -max_step), max_step)
        yaw[i] = yaw[i - 1] + step
    return _YawProfile(times, yaw)


def _sequence_profile(seq, yaw0: float, yaw_rate_max: float) -> _YawProfile:
    knot_t = [0.0]
    knot_y = [yaw0]
    prev_t, prev_y = 0.0, yaw0
    for t_i, y_i in seq:
        if t_i <= prev_t:
            raise InfeasibleYaw(
                f"yaw sequence times must be strictly increasing, got {t_i} after {prev_t}")
        delta = wrap_angle(y_i - prev_y)
        rate = abs(delta) / (t_i - prev_t)
        if rate > yaw_rate_max + 1e-12:
            raise InfeasibleYaw(
                f"yaw target at t={t_i} needs {rate:.3f} rad/s "
                f"(> yaw_rate_max {yaw_rate_max:.3f} rad/s)")
        prev_y = prev_y + delta
        prev_t = t_i
        knot_t.append(t_i)
        knot_y.append(prev_y)
    return _YawProfile(np.array(knot_t), np.array(knot_y))


def plan(spec: TrajectorySpec, v_max_global: float | None = None) -> PlannedTrajectory:
    """Validate a spec and build its samplable trajectory.

    Raises DegenerateSpec for missing/coincident waypoints, InfeasibleYaw for
    an over-rate yaw sequence, ConstraintViolation when v_max exceeds the
    swarm-wide cap.
    """
    if v_max_global is not None and spec.v_max > v_max_global + 1e-12:
        raise ConstraintViolation(
            f"trajectory v_max {spec.v_max} exceeds swarm V_max {v_max_global}")
    wps = spec.waypoints
    if len(wps) == 0:
        raise DegenerateSpec("trajectory needs at least one waypoint")
    if len(wps) == 1:
        if spec.yaw_mode != "sequence" or not spec.yaw_sequence:
            raise DegenerateSpec(
                "single-waypoint trajectory requires a yaw sequence (pure rotation)")
        yaw0 = spec.initial_yaw if spec.initial_yaw is not None else 0.0
        yaw_profile = _sequence_profile(spec.yaw_sequence, yaw0, spec.yaw_rate_max)
        return PlannedTrajectory(spec, None, None, yaw_profile)

    pts = np.array([w.position for w in wps])
    for i in range(len(pts) - 1):
        if np.linalg.norm(pts[i + 1] - pts[i]) < 1e-9:
            raise DegenerateSpec(
                f"waypoints {i} and {i + 1} coincide; use a single-waypoint "
                "yaw-sequence spec for pure rotation")
    path = _SplinePath(pts)
    profile = _SpeedProfile(path.length, spec.v_max, spec.a_max)

    if spec.yaw_mode == "path_facing":
        yaw0 = (spec.initial_yaw if spec.initial_yaw is not None
                else float(path.heading_at(np.array([0.0]))[0]))
        yaw_profile = _path_facing_profile(path, profile, 0.0, yaw0,
                                           spec.yaw_rate_max)
    elif spec.yaw_mode == "fixed":
        yaw_profile = _YawProfile(np.array([0.0, profile.duration]),
                                  np.array([spec.fixed_yaw, spec.fixed_yaw]))
    else:
        yaw0 = spec.initial_yaw if spec.initial_yaw is not None else 0.0
        yaw_profile = _sequence_profile(spec.yaw_sequence, yaw0, spec.yaw_rate_max)
    return PlannedTrajectory(spec, path, profile, yaw_profile)
