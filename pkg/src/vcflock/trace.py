"""Trace CSV reading and writing.

Column order is fixed and every float is serialized with 9 significant
digits so that independent tooling can reproduce metric numbers exactly.
Detached agents stop appearing in the trace from the tick they leave the
swarm; the per-timestamp agent set is therefore not constant.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass

import numpy as np

from .errors import ParseError

COLUMNS = (
    "t", "agent_id", "px", "py", "pz", "yaw", "vx", "vy", "vz",
    "ref_px", "ref_py", "ref_pz",
    "vc_px", "vc_py", "vc_pz", "vc_yaw", "vc_vx", "vc_vy", "vc_vz",
    "phase",
)


def fmt(x: float) -> str:
    """Canonical 9-significant-digit decimal form."""
    return format(float(x), ".9g")


class TraceWriter:
    """Streams rows ordered by (t, agent_id)."""

    def __init__(self, stream):
        self._w = csv.writer(stream, lineterminator="\n")
        self._w.writerow(COLUMNS)

    def write_tick(self, t, pos, yaw, vel, ref_pos, detached, vc, phase):
        """One row per active agent at time t (arrays indexed by agent id)."""
        vc_p = vc.pose.translation
        vc_v = vc.twist.linear
        vc_fields = (fmt(vc_p[0]), fmt(vc_p[1]), fmt(vc_p[2]), fmt(vc.yaw),
                     fmt(vc_v[0]), fmt(vc_v[1]), fmt(vc_v[2]))
        t_field = fmt(t)
        for i in range(len(pos)):
            if detached[i]:
                continue
            self._w.writerow((
                t_field, i,
                fmt(pos[i, 0]), fmt(pos[i, 1]), fmt(pos[i, 2]),
                fmt(_wrap(yaw[i])),
                fmt(vel[i, 0]), fmt(vel[i, 1]), fmt(vel[i, 2]),
                fmt(ref_pos[i, 0]), fmt(ref_pos[i, 1]), fmt(ref_pos[i, 2]),
                *vc_fields,
                phase,
            ))


def _wrap(theta: float) -> float:
    return float(np.arctan2(np.sin(theta), np.cos(theta)))


@dataclass
class TraceData:
    """Column-major trace block: (T,) time grid, (T, N) agent series."""

    t: np.ndarray            # (T,)
    phase: list              # length T
    present: np.ndarray      # (T, N) bool
    pos: np.ndarray          # (T, N, 3)
    yaw: np.ndarray          # (T, N)
    vel: np.ndarray          # (T, N, 3)
    ref_pos: np.ndarray      # (T, N, 3)
    vc_pos: np.ndarray       # (T, 3)
    vc_yaw: np.ndarray       # (T,)
    vc_vel: np.ndarray       # (T, 3)

    @property
    def n_agents(self) -> int:
        return self.present.shape[1]


def read_trace(source) -> TraceData:
    """Parse a trace CSV from a path or file-like object."""
    if hasattr(source, "read"):
        return _parse(source)
    with open(source, "r", newline="") as fh:
        return _parse(fh)


def parse_trace_text(text: str) -> TraceData:
    return _parse(io.StringIO(text))


def _parse(fh) -> TraceData:
    reader = csv.reader(fh)
    try:
        header = next(reader)
    except StopIteration:
        raise ParseError("empty trace file") from None
    if tuple(header) != COLUMNS:
        raise ParseError(
            f"unexpected trace header {header!r}; expected {list(COLUMNS)}")

    rows = []
    for lineno, row in enumerate(reader, start=2):
        if not row:
            continue
        if len(row) != len(COLUMNS):
            raise ParseError(f"line {lineno}: expected {len(COLUMNS)} fields, "
                             f"got {len(row)}")
        try:
            rec = ([float(row[0]), int(row[1])]
                   + [float(v) for v in row[2:19]] + [row[19]])
        except ValueError as e:
            raise ParseError(f"line {lineno}: {e}") from e
        rows.append(rec)
    if not rows:
        raise ParseError("trace contains no data rows")

    n = max(r[1] for r in rows) + 1
    # group rows by timestamp, preserving file order
    times = []
    groups = []
    current_t = None
    for r in rows:
        if current_t is None or r[0] != current_t:
            current_t = r[0]
            times.append(current_t)
            groups.append([])
        groups[-1].append(r)

    t_len = len(times)
    t = np.array(times)
    if np.any(np.diff(t) <= 0):
        raise ParseError("trace timestamps must be strictly increasing")
    present = np.zeros((t_len, n), dtype=bool)
    pos = np.full((t_len, n, 3), np.nan)
    yaw = np.full((t_len, n), np.nan)
    vel = np.full((t_len, n, 3), np.nan)
    ref_pos = np.full((t_len, n, 3), np.nan)
    vc_pos = np.zeros((t_len, 3))
    vc_yaw = np.zeros(t_len)
    vc_vel = np.zeros((t_len, 3))
    phase = [""] * t_len
    for ti, group in enumerate(groups):
        first = group[0]
        vc_pos[ti] = first[12:15]
        vc_yaw[ti] = first[15]
        vc_vel[ti] = first[16:19]
        phase[ti] = first[19]
        for r in group:
            a = r[1]
            present[ti, a] = True
            pos[ti, a] = r[2:5]
            yaw[ti, a] = r[5]
            vel[ti, a] = r[6:9]
            ref_pos[ti, a] = r[9:12]
    return TraceData(t=t, phase=phase, present=present, pos=pos, yaw=yaw,
                     vel=vel, ref_pos=ref_pos, vc_pos=vc_pos, vc_yaw=vc_yaw,
                     vc_vel=vc_vel)
