"""Rigid-transform algebra in 3D.

Rotations are unit quaternions stored scalar-first as numpy arrays
[w, x, y, z]; translations are (3,) float64 arrays in meters. A Pose maps
points from its source frame into its target frame: p_target = R p + T.
All values are immutable; operations return new objects.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

_NORM_TOL = 1e-9


def vec3(x: float, y: float, z: float) -> np.ndarray:
    """Build a (3,) float64 vector, validating finiteness."""
    v = np.array([x, y, z], dtype=np.float64)
    if not np.all(np.isfinite(v)):
        raise ValueError(f"non-finite vector components: {v}")
    return v


def _freeze(a: np.ndarray) -> np.ndarray:
    out = np.asarray(a, dtype=np.float64).copy()
    out.flags.writeable = False
    return out


# --- quaternion helpers (scalar-first [w, x, y, z]) ---

def quat_identity() -> np.ndarray:
    return np.array([1.0, 0.0, 0.0, 0.0])


def quat_normalize(q: np.ndarray) -> np.ndarray:
    q = np.asarray(q, dtype=np.float64)
    n = np.sqrt(q[0] * q[0] + q[1] * q[1] + q[2] * q[2] + q[3] * q[3])
    if n < 1e-12 or not np.isfinite(n):
        raise ValueError("cannot normalize near-zero or non-finite quaternion")
    return q / n


def quat_canonical(q: np.ndarray) -> np.ndarray:
    """Canonical double-cover representative: first nonzero of (w,x,y,z) > 0."""
    for c in q:
        if c > 0.0:
            return np.array(q, dtype=np.float64)
        if c < 0.0:
            return -np.asarray(q, dtype=np.float64)
    raise ValueError("zero quaternion has no canonical form")


def quat_mul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Hamilton product a ⊗ b."""
    aw, ax, ay, az = a
    bw, bx, by, bz = b
    return np.array([
        aw * bw - ax * bx - ay * by - az * bz,
        aw * bx + ax * bw + ay * bz - az * by,
        aw * by - ax * bz + ay * bw + az * bx,
        aw * bz + ax * by - ay * bx + az * bw,
    ])


def quat_conjugate(q: np.ndarray) -> np.ndarray:
    return np.array([q[0], -q[1], -q[2], -q[3]])


def quat_rotate(q: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Rotate vector v by quaternion q: R(q) v."""
    w = q[0]
    u = q[1:]
    uv = np.cross(u, v)
    return v + 2.0 * (w * uv + np.cross(u, uv))


def quat_from_axis_angle(axis: np.ndarray, angle: float) -> np.ndarray:
    axis = np.asarray(axis, dtype=np.float64)
    n = np.linalg.norm(axis)
    if n < 1e-12:
        raise ValueError("rotation axis must be nonzero")
    half = 0.5 * angle
    s = np.sin(half) / n
    return np.array([np.cos(half), axis[0] * s, axis[1] * s, axis[2] * s])


def quat_from_yaw(yaw: float) -> np.ndarray:
    half = 0.5 * yaw
    return np.array([np.cos(half), 0.0, 0.0, np.sin(half)])


def quat_from_rpy(roll: float, pitch: float, yaw: float) -> np.ndarray:
    """Intrinsic Z-Y-X (yaw, then pitch, then roll) convention."""
    qz = quat_from_axis_angle(np.array([0.0, 0.0, 1.0]), yaw)
    qy = quat_from_axis_angle(np.array([0.0, 1.0, 0.0]), pitch)
    qx = quat_from_axis_angle(np.array([1.0, 0.0, 0.0]), roll)
    return quat_mul(quat_mul(qz, qy), qx)


def quat_to_yaw(q: np.ndarray) -> float:
    """Heading (rotation about +z) of the rotated x-axis."""
    w, x, y, z = q
    return float(np.arctan2(2.0 * (w * z + x * y), 1.0 - 2.0 * (y * y + z * z)))


def quat_to_matrix(q: np.ndarray) -> np.ndarray:
    w, x, y, z = q
    return np.array([
        [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
        [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
        [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)],
    ])


def quat_slerp(a: np.ndarray, b: np.ndarray, s: float) -> np.ndarray:
    """Spherical interpolation from a (s=0) to b (s=1), shortest arc."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    dot = float(np.dot(a, b))
    if dot < 0.0:
        b = -b
        dot = -dot
    if dot > 1.0 - 1e-12:
        return quat_normalize(a + s * (b - a))
    theta = np.arccos(min(dot, 1.0))
    sin_theta = np.sin(theta)
    wa = np.sin((1.0 - s) * theta) / sin_theta
    wb = np.sin(s * theta) / sin_theta
    return quat_normalize(wa * a + wb * b)


def wrap_angle(theta: float) -> float:
    """Wrap to (-pi, pi]."""
    out = np.arctan2(np.sin(theta), np.cos(theta))
    return float(out)


@dataclass(frozen=True)
class Pose:
    """Rigid transform: p_target = R(rotation) p_source + translation."""

    rotation: np.ndarray = field(default_factory=quat_identity)
    translation: np.ndarray = field(default_factory=lambda: np.zeros(3))

    def __post_init__(self):
        q = quat_normalize(self.rotation)
        t = np.asarray(self.translation, dtype=np.float64)
        if t.shape != (3,):
            raise ValueError(f"translation must be a 3-vector, got shape {t.shape}")
        if not np.all(np.isfinite(t)):
            raise ValueError(f"non-finite translation: {t}")
        object.__setattr__(self, "rotation", _freeze(q))
        object.__setattr__(self, "translation", _freeze(t))

    @staticmethod
    def identity() -> "Pose":
        return Pose()

    @staticmethod
    def from_xyz_yaw(x: float, y: float, z: float, yaw: float = 0.0) -> "Pose":
        return Pose(quat_from_yaw(yaw), vec3(x, y, z))

    @staticmethod
    def from_xyz_rpy(xyz, rpy) -> "Pose":
        return Pose(quat_from_rpy(*rpy), vec3(*xyz))

    @property
    def yaw(self) -> float:
        return quat_to_yaw(self.rotation)

    def matrix(self) -> np.ndarray:
        """Homogeneous 4x4 matrix (produced on demand; storage stays quaternion)."""
        m = np.eye(4)
        m[:3, :3] = quat_to_matrix(self.rotation)
        m[:3, 3] = self.translation
        return m

    def approx_equal(self, other: "Pose", tol: float = _NORM_TOL) -> bool:
        qa = quat_canonical(self.rotation)
        qb = quat_canonical(other.rotation)
        return (np.max(np.abs(qa - qb)) <= tol
                and np.max(np.abs(self.translation - other.translation)) <= tol)


@dataclass(frozen=True)
class Twist:
    """Linear (m/s) and angular (rad/s) velocity, both in the world frame."""

    linear: np.ndarray = field(default_factory=lambda: np.zeros(3))
    angular: np.ndarray = field(default_factory=lambda: np.zeros(3))

    def __post_init__(self):
        lin = np.asarray(self.linear, dtype=np.float64)
        ang = np.asarray(self.angular, dtype=np.float64)
        if not (np.all(np.isfinite(lin)) and np.all(np.isfinite(ang))):
            raise ValueError("non-finite twist components")
        object.__setattr__(self, "linear", _freeze(lin))
        object.__setattr__(self, "angular", _freeze(ang))


def compose(a: Pose, b: Pose) -> Pose:
    """Transform equivalent to applying b, then a."""
    q = quat_normalize(quat_mul(a.rotation, b.rotation))
    t = a.translation + quat_rotate(a.rotation, b.translation)
    return Pose(q, t)


def inverse(p: Pose) -> Pose:
    qc = quat_conjugate(p.rotation)
    return Pose(qc, -quat_rotate(qc, p.translation))


def transform_point(p: Pose, q: np.ndarray) -> np.ndarray:
    return quat_rotate(p.rotation, np.asarray(q, dtype=np.float64)) + p.translation


def transform_points(p: Pose, pts: np.ndarray) -> np.ndarray:
    """Vectorized transform_point for an (N, 3) array."""
    r = quat_to_matrix(p.rotation)
    return pts @ r.T + p.translation


def relative_velocity_in_frame(
    agent_pos_w: np.ndarray,
    agent_vel_w: np.ndarray,
    frame_pose: Pose,
    frame_twist: Twist,
) -> np.ndarray:
    """Agent velocity as seen by an observer rigidly attached to the frame.

    Computes R^T (v_agent - v_frame - omega x (p_agent - p_frame)); zero for
    any point rigidly attached to the frame, whatever its twist.
    """
    rel = (np.asarray(agent_vel_w, dtype=np.float64)
           - frame_twist.linear
           - np.cross(frame_twist.angular, agent_pos_w - frame_pose.translation))
    return quat_rotate(quat_conjugate(frame_pose.rotation), rel)
