"""Headless scenario execution and artifact generation.

A run writes trace.csv (one row per active agent per tick), events.log,
metrics.csv, and summary.json into the output directory. The metrics file
is always computed by parsing the just-written trace, so `flock metrics`
on the same file reproduces it byte for byte.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import kernels
from .engine import StartTrajectory, SwarmEngine, assign_slots
from .errors import EmptyWindow, IoError, ParseError, VcflockError
from .metrics import (
    MetricsReport,
    Thresholds,
    corrected_cohesion,
    report_to_csv,
    summarize_trace,
)
from .pose import quat_rotate
from .scenario import Scenario, resolve_scenario
from .trace import TraceWriter, read_trace
from .trajectory import plan


@dataclass
class RunResult:
    scenario: Scenario
    out_dir: Path
    trace_path: Path
    metrics_path: Path
    events_path: Path
    report: MetricsReport
    rejected_commands: list
    t_s: float
    wall_time: float


def initial_positions_for(scenario: Scenario, vc_pose, rng) -> np.ndarray:
    """Auto positions sit on the slot targets; lagged runs get seed jitter."""
    if isinstance(scenario.initial_positions, str):
        offsets = scenario.formation.offsets_array()
        base = np.array([
            quat_rotate(vc_pose.rotation, o) + vc_pose.translation
            for o in offsets
        ])
    else:
        base = np.array(scenario.initial_positions, dtype=np.float64)
    if scenario.model.mode == "lagged" and scenario.jitter > 0.0:
        base = base + rng.uniform(-scenario.jitter, scenario.jitter,
                                  size=base.shape)
    return base


def run_scenario(scenario: Scenario, out_dir, strict: bool = False,
                 realtime: bool = False, seed: int | None = None,
                 snapshot_hook=None) -> RunResult:
    """Execute one scenario and persist its artifacts.

    Raises SetupConflict / ParseError / IoError; command rejections abort
    only under strict (they are logged either way).
    """
    t_wall = time.perf_counter()
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as e:
        raise IoError(f"cannot create output dir {out}: {e}") from e

    kernels.warmup()
    seed = scenario.seed if seed is None else seed
    rng = np.random.default_rng(seed)
    traj = plan(scenario.trajectory, v_max_global=scenario.v_max_swarm)
    vc0 = traj.sample(0.0)

    events_path = out / "events.log"
    trace_path = out / "trace.csv"
    rejected = []
    try:
        events_fh = open(events_path, "w")
        trace_fh = open(trace_path, "w", newline="")
    except OSError as e:
        raise IoError(f"cannot open artifacts in {out}: {e}") from e

    def on_event(t, kind, detail):
        events_fh.write(f"t={t:.6f} kind={kind} {json.dumps(detail, sort_keys=True)}\n")
        if kind == "command_rejected":
            rejected.append((t, detail))

    init_pos = initial_positions_for(scenario, vc0.pose, rng)
    engine = SwarmEngine(
        formation=scenario.formation,
        models=scenario.model,
        initial_positions=init_pos,
        dt=scenario.dt,
        vc_pose=vc0.pose,
        pos_tolerance=scenario.pos_tolerance,
        yaw_tolerance=scenario.yaw_tolerance,
        v_max_global=scenario.v_max_swarm,
        on_event=on_event,
    )
    writer = TraceWriter(trace_fh)

    def write_row():
        pos, yaw, vel, ref_pos, detached, vc, phase = engine.row_arrays()
        writer.write_tick(engine.t, pos, yaw, vel, ref_pos, detached, vc, phase)

    try:
        assignment = assign_slots(init_pos, scenario.formation, vc0.pose)
        engine.apply_assignment(assignment)
        engine.check_setup_conflicts(scenario.setup_v_max)
        write_row()
        # setup loop (tick by tick so every row lands in the trace)
        while engine.phase == "setup":
            engine.tick(setup_speed=scenario.setup_v_max)
            write_row()
            _pace(realtime, engine.dt)
            if engine.t > 300.0:
                raise VcflockError("setup did not converge in 300 s")
        t_s = engine.t_s if engine.t_s is not None else engine.t

        engine.submit(StartTrajectory(traj))
        event_queue = list(scenario.events)
        done_at = None
        while engine.t < scenario.duration_cap - scenario.dt / 2:
            tau = engine.t - t_s
            while event_queue and event_queue[0].tau <= tau + scenario.dt / 2:
                ev = event_queue.pop(0)
                engine.submit(ev.command)
            engine.tick()
            write_row()
            if snapshot_hook is not None:
                snapshot_hook(engine)
            _pace(realtime, engine.dt)
            if engine.trajectory_done and done_at is None:
                done_at = engine.t
            if done_at is not None and engine.t >= done_at + scenario.tail - scenario.dt / 2:
                break
        if strict and rejected:
            raise VcflockError(
                f"{len(rejected)} command(s) rejected under --strict: "
                f"{rejected[0][1]}")
    finally:
        trace_fh.close()
        events_fh.close()

    trace = read_trace(trace_path)
    thresholds = Thresholds(
        d_max=(scenario.metrics_d_max if scenario.metrics_d_max is not None
               else scenario.formation.d_max),
        d_min=(scenario.metrics_d_min if scenario.metrics_d_min is not None
               else scenario.formation.d_min),
        delta=scenario.metrics_delta,
    )
    report = summarize_trace(trace, window=scenario.metrics_window,
                             thresholds=thresholds)
    metrics_path = out / "metrics.csv"
    metrics_path.write_text(report_to_csv(report))

    wall = time.perf_counter() - t_wall
    corrected = corrected_cohesion(report)
    summary = {
        "scenario": scenario.name,
        "seed": seed,
        "t_s": t_s,
        "trajectory_duration": traj.duration,
        "trajectory_length": traj.length,
        "end_t": engine.t,
        "window": list(report.window),
        "thresholds": {"d_max": thresholds.d_max, "d_min": thresholds.d_min,
                       "delta": thresholds.delta},
        "violations": report.violations,
        "corrected_cohesion": {
            str(a): {"mean": s.mean, "std": s.std}
            for a, s in corrected.items()},
        "rejected_commands": len(rejected),
        "kernel_backend": kernels.BACKEND,
        "wall_time_s": wall,
    }
    (out / "summary.json").write_text(json.dumps(summary, indent=2) + "\n")

    return RunResult(
        scenario=scenario, out_dir=out, trace_path=trace_path,
        metrics_path=metrics_path, events_path=events_path,
        report=report, rejected_commands=rejected, t_s=t_s, wall_time=wall,
    )


def _pace(realtime: bool, dt: float):
    if realtime:
        time.sleep(dt)


def run_ref(ref: str, out_dir, overrides=None, strict=False, realtime=False,
            repeat: int | None = None, seed_base: int | None = None,
            snapshot_hook=None):
    """Resolve a scenario reference and run it (optionally N times)."""
    scenario = resolve_scenario(ref, overrides)
    if repeat is None:
        return [run_scenario(scenario, out_dir, strict=strict,
                             realtime=realtime, snapshot_hook=snapshot_hook)]
    base = seed_base if seed_base is not None else scenario.seed
    results = []
    for i in range(repeat):
        sub = Path(out_dir) / f"run_{i:03d}"
        results.append(run_scenario(scenario, sub, strict=strict,
                                    realtime=realtime, seed=base + i))
    return results


def compute_metrics_file(trace_path, out_path=None, d_max=None, d_min=None,
                         delta=None, window=None) -> Path:
    """Recompute metrics.csv from a persisted trace (CLI `flock metrics`)."""
    trace_path = Path(trace_path)
    if not trace_path.exists():
        raise ParseError(f"trace file {trace_path} does not exist")
    trace = read_trace(trace_path)
    thresholds = Thresholds(
        d_max=d_max if d_max is not None else float("inf"),
        d_min=d_min if d_min is not None else 0.0,
        delta=delta if delta is not None else 0.15,
    )
    report = summarize_trace(trace, window=window, thresholds=thresholds)
    out = Path(out_path) if out_path else trace_path.parent / "metrics.csv"
    try:
        out.write_text(report_to_csv(report))
    except OSError as e:
        raise IoError(f"cannot write {out}: {e}") from e
    return out
