"""Flocking-law metrics and report summaries.

Per sample: cohesion is each agent's distance to the centroid, separation
the pairwise distance matrix, alignment the norm of the agent's velocity
relative to the rigidly-moving centroid frame, reference error the distance
to the open-loop reference. Reports carry mean and population standard
deviation per series over a steady-state window, plus violation counts.

Two computation paths exist and are cross-checked in tests:

* ``sample_metrics`` consumes live engine snapshots at full precision with
  the centroid's analytic angular rate.
* ``summarize_trace`` consumes a persisted trace, where the centroid yaw
  rate is reconstructed by central differences of the unwrapped vc_yaw
  column (one-sided at the ends of the motion span). Centroid rotation is
  yaw-only by construction, so this is the only derivative the file does
  not carry.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .errors import EmptyWindow
from .pose import relative_velocity_in_frame
from .trace import TraceData

DEFAULT_DELTA = 0.15          # m/s alignment ceiling used when none is given
STEADY_LEAD = 2.0             # seconds trimmed after motion starts
STEADY_TAIL = 1.0             # seconds trimmed before motion ends
# Regular formations sit exactly ON the cohesion circle (the generator uses
# d_max as its radius), so threshold checks carry a guard band against
# floating-point noise; boundary contact is not a violation.
GUARD = 1e-9


@dataclass(frozen=True)
class Thresholds:
    d_max: float
    d_min: float
    delta: float = DEFAULT_DELTA


@dataclass(frozen=True)
class MetricsSample:
    t: float
    cohesion: dict            # agent_id -> meters
    separation: dict          # (i, j), i < j -> meters
    alignment: dict           # agent_id -> m/s
    reference_error: dict     # agent_id -> meters


@dataclass(frozen=True)
class SeriesStat:
    mean: float
    std: float
    count: int


@dataclass(frozen=True)
class MetricsReport:
    window: tuple
    thresholds: Thresholds
    cohesion: dict            # agent_id -> SeriesStat
    reference_error: dict
    alignment: dict
    separation: dict          # (i, j) -> SeriesStat
    violations: dict          # metric name -> count

    def agent_ids(self):
        return sorted(self.cohesion.keys())


def sample_metrics(snapshot) -> MetricsSample:
    """Metrics for one engine snapshot; detached agents are excluded."""
    vc = snapshot.vc
    agents = [a for a in snapshot.agents if not a.detached]
    cohesion = {}
    alignment = {}
    ref_err = {}
    for a in agents:
        cohesion[a.agent_id] = float(np.linalg.norm(
            a.position - vc.pose.translation))
        ref_err[a.agent_id] = float(np.linalg.norm(
            a.position - a.reference.translation))
        rel = relative_velocity_in_frame(a.position, a.velocity,
                                         vc.pose, vc.twist)
        alignment[a.agent_id] = float(np.linalg.norm(rel))
    separation = {}
    for i, ai in enumerate(agents):
        for aj in agents[i + 1:]:
            d = float(np.linalg.norm(ai.position - aj.position))
            separation[(ai.agent_id, aj.agent_id)] = d
    return MetricsSample(t=snapshot.t, cohesion=cohesion,
                         separation=separation, alignment=alignment,
                         reference_error=ref_err)


def _stat(values) -> SeriesStat:
    arr = np.asarray(values, dtype=np.float64)
    return SeriesStat(mean=float(arr.mean()), std=float(arr.std()),
                      count=len(arr))


def summarize(samples, window=None, thresholds: Thresholds | None = None
              ) -> MetricsReport:
    """Aggregate a list of MetricsSample over [t0, t1] (inclusive)."""
    samples = list(samples)
    if not samples:
        raise EmptyWindow("no samples given")
    if window is None:
        t0 = samples[0].t + STEADY_LEAD
        t1 = samples[-1].t - STEADY_TAIL
    else:
        t0, t1 = window
    picked = [s for s in samples if t0 <= s.t <= t1]
    if not picked:
        raise EmptyWindow(f"no samples inside window [{t0}, {t1}]")
    if thresholds is None:
        thresholds = Thresholds(d_max=math.inf, d_min=0.0)

    coh_series: dict = {}
    ref_series: dict = {}
    ali_series: dict = {}
    sep_series: dict = {}
    violations = {"cohesion": 0, "separation": 0, "alignment": 0}
    for s in picked:
        for a, v in s.cohesion.items():
            coh_series.setdefault(a, []).append(v)
            if v > thresholds.d_max + GUARD:
                violations["cohesion"] += 1
        for a, v in s.reference_error.items():
            ref_series.setdefault(a, []).append(v)
        for a, v in s.alignment.items():
            ali_series.setdefault(a, []).append(v)
            if v > thresholds.delta + GUARD:
                violations["alignment"] += 1
        for pair, v in s.separation.items():
            sep_series.setdefault(pair, []).append(v)
            if v < thresholds.d_min - GUARD:
                violations["separation"] += 1

    return MetricsReport(
        window=(t0, t1), thresholds=thresholds,
        cohesion={a: _stat(v) for a, v in sorted(coh_series.items())},
        reference_error={a: _stat(v) for a, v in sorted(ref_series.items())},
        alignment={a: _stat(v) for a, v in sorted(ali_series.items())},
        separation={p: _stat(v) for p, v in sorted(sep_series.items())},
        violations=violations,
    )


def corrected_cohesion(report: MetricsReport) -> dict:
    """Per-agent cohesion + reference error; stds combine in quadrature."""
    out = {}
    for a, c in report.cohesion.items():
        r = report.reference_error[a]
        out[a] = SeriesStat(mean=c.mean + r.mean,
                            std=math.sqrt(c.std ** 2 + r.std ** 2),
                            count=min(c.count, r.count))
    return out


# --- trace-based path (array backed, used by the CLI) ---

def motion_span(trace: TraceData) -> tuple[int, int]:
    """Index range [lo, hi) of motion-phase samples."""
    idx = [i for i, p in enumerate(trace.phase) if p == "motion"]
    if not idx:
        raise EmptyWindow("trace has no motion-phase samples")
    return idx[0], idx[-1] + 1


def default_window(trace: TraceData) -> tuple[float, float]:
    lo, hi = motion_span(trace)
    return float(trace.t[lo]) + STEADY_LEAD, float(trace.t[hi - 1]) - STEADY_TAIL


def yaw_rate_series(t: np.ndarray, yaw: np.ndarray) -> np.ndarray:
    """Unwrap then differentiate: central interior, one-sided at the ends."""
    n = len(t)
    omega = np.zeros(n)
    if n < 2:
        return omega
    steps = np.arctan2(np.sin(np.diff(yaw)), np.cos(np.diff(yaw)))
    u = np.concatenate([[yaw[0]], yaw[0] + np.cumsum(steps)])
    omega[0] = (u[1] - u[0]) / (t[1] - t[0])
    omega[-1] = (u[-1] - u[-2]) / (t[-1] - t[-2])
    if n > 2:
        omega[1:-1] = (u[2:] - u[:-2]) / (t[2:] - t[:-2])
    return omega


def summarize_trace(trace: TraceData, window=None,
                    thresholds: Thresholds | None = None) -> MetricsReport:
    """Array-backed summary over the motion span of a persisted trace."""
    lo, hi = motion_span(trace)
    t = trace.t[lo:hi]
    if window is None:
        t0, t1 = float(t[0]) + STEADY_LEAD, float(t[-1]) - STEADY_TAIL
    else:
        t0, t1 = window
    omega = yaw_rate_series(t, trace.vc_yaw[lo:hi])
    sel = (t >= t0) & (t <= t1)
    if not np.any(sel):
        raise EmptyWindow(f"no motion samples inside window [{t0}, {t1}]")
    if thresholds is None:
        thresholds = Thresholds(d_max=math.inf, d_min=0.0)

    cohesion, ref_err, align, sep = kernels.trace_metrics(
        np.ascontiguousarray(trace.pos[lo:hi]),
        np.ascontiguousarray(trace.vel[lo:hi]),
        np.ascontiguousarray(trace.ref_pos[lo:hi]),
        np.ascontiguousarray(trace.present[lo:hi]),
        np.ascontiguousarray(trace.vc_pos[lo:hi]),
        np.ascontiguousarray(trace.vc_vel[lo:hi]),
        omega,
    )
    present = trace.present[lo:hi][sel]
    cohesion, ref_err, align, sep = (cohesion[sel], ref_err[sel],
                                     align[sel], sep[sel])
    n = trace.n_agents

    def col_stat(block, a):
        vals = block[present[:, a], a]
        return _stat(vals) if len(vals) else None

    coh = {}
    ref = {}
    ali = {}
    for a in range(n):
        st = col_stat(cohesion, a)
        if st is None:
            continue
        coh[a] = st
        ref[a] = col_stat(ref_err, a)
        ali[a] = col_stat(align, a)
    sep_stats = {}
    for i in range(n):
        for j in range(i + 1, n):
            both = present[:, i] & present[:, j]
            if not np.any(both):
                continue
            sep_stats[(i, j)] = _stat(sep[both, i, j])

    violations = {
        "cohesion": int(np.sum(cohesion[present] > thresholds.d_max + GUARD)),
        "alignment": int(np.sum(align[present] > thresholds.delta + GUARD)),
        "separation": 0,
    }
    sep_count = 0
    for i in range(n):
        for j in range(i + 1, n):
            both = present[:, i] & present[:, j]
            sep_count += int(np.sum(sep[both, i, j] < thresholds.d_min - GUARD))
    violations["separation"] = sep_count

    return MetricsReport(
        window=(t0, t1), thresholds=thresholds,
        cohesion=coh, reference_error=ref, alignment=ali,
        separation=sep_stats, violations=violations,
    )


# --- report serialization (metrics.csv) ---

def report_to_csv(report: MetricsReport) -> str:
    from .trace import fmt
    lines = ["agent_id,cohesion_mean,cohesion_std,ref_err_mean,ref_err_std,"
             "align_mean,align_std"]
    for a in report.agent_ids():
        c = report.cohesion[a]
        r = report.reference_error[a]
        al = report.alignment[a]
        lines.append(f"{a},{fmt(c.mean)},{fmt(c.std)},{fmt(r.mean)},"
                     f"{fmt(r.std)},{fmt(al.mean)},{fmt(al.std)}")
    lines.append("agent_i,agent_j,sep_mean,sep_std")
    for (i, j) in sorted(report.separation.keys()):
        s = report.separation[(i, j)]
        lines.append(f"{i},{j},{fmt(s.mean)},{fmt(s.std)}")
    return "\n".join(lines) + "\n"
