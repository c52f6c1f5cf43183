"""Core simulation loop.

Each tick evaluates the centroid trajectory, composes it with the (possibly
interpolating) formation to produce per-agent reference poses, and advances
the agent models toward those references. Reconfiguration commands arrive
through a queue drained at tick boundaries, so no command ever lands
mid-tick and ordering is preserved. The loop is the single writer; every
published snapshot is an immutable copy.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence, Union

import numpy as np
from scipy.optimize import linear_sum_assignment

from . import kernels
from .errors import (
    ConstraintViolation,
    CountMismatch,
    SetupConflict,
    UnknownAgent,
    VcflockError,
)
from .formation import (
    FormationSpec,
    FormationTransition,
    attach_slot,
    detach_slot,
    interpolate,
    slot_remap_after_detach,
)
from .pose import Pose, Twist, quat_from_yaw, quat_to_yaw, wrap_angle
from .trajectory import (
    PlannedTrajectory,
    TrajectorySample,
    TrajectorySpec,
    plan,
)

DEFAULT_MORPH_DURATION = 1.5   # seconds; the reconfiguration time observed in tests
DEFAULT_POS_TOLERANCE = 0.05   # meters
DEFAULT_YAW_TOLERANCE = 0.05   # radians
SETUP_YAW_RATE = 1.0           # rad/s, yaw slew while occupying slots


@dataclass(frozen=True)
class AgentModel:
    """Follower model: ideal teleports onto the reference, lagged is a
    first-order pursuit with gain k (1/s) and speed cap v_max_agent."""

    mode: str = "lagged"
    k: float = 2.0
    v_max_agent: float = 2.0

    def __post_init__(self):
        if self.mode not in ("ideal", "lagged"):
            raise ConstraintViolation(f"unknown agent mode {self.mode!r}")
        if self.mode == "lagged" and self.k <= 0.0:
            raise ConstraintViolation(f"lagged gain k must be positive, got {self.k}")
        if self.v_max_agent <= 0.0:
            raise ConstraintViolation(
                f"v_max_agent must be positive, got {self.v_max_agent}")


@dataclass(frozen=True)
class AgentState:
    agent_id: int
    slot_id: Optional[int]
    position: np.ndarray
    velocity: np.ndarray
    yaw: float
    reference: Pose
    joining: bool = False

    @property
    def detached(self) -> bool:
        return self.slot_id is None


@dataclass(frozen=True)
class SwarmState:
    t: float
    phase: str
    vc: TrajectorySample
    formation: FormationSpec
    agents: tuple[AgentState, ...]
    transition: Optional[FormationTransition] = None
    transition_progress: float = 0.0


# --- commands ---

@dataclass(frozen=True)
class StartTrajectory:
    spec: Union[TrajectorySpec, PlannedTrajectory]


@dataclass(frozen=True)
class Morph:
    target: FormationSpec
    duration: float = DEFAULT_MORPH_DURATION
    slot_mapping: Optional[dict] = None


@dataclass(frozen=True)
class Detach:
    agent_id: int


@dataclass(frozen=True)
class Attach:
    agent_id: int
    offset: Pose


@dataclass(frozen=True)
class Pause:
    pass


@dataclass(frozen=True)
class Resume:
    pass


@dataclass(frozen=True)
class SetSpeed:
    v_max: float


Command = Union[StartTrajectory, Morph, Detach, Attach, Pause, Resume, SetSpeed]


class CommandReceipt:
    """Outcome of one queued command, resolved at the tick that applied it."""

    def __init__(self, command: Command):
        self.command = command
        self.status: Optional[str] = None   # "accepted" | "rejected"
        self.reason: str = ""
        self.applied_at: Optional[float] = None

    def _resolve(self, status: str, reason: str, t: float):
        self.status = status
        self.reason = reason
        self.applied_at = t


def assign_slots(initial_positions: Sequence, formation: FormationSpec,
                 vc_pose: Pose) -> dict[int, int]:
    """Bijection agent -> slot minimizing total Euclidean travel distance."""
    positions = np.asarray(initial_positions, dtype=np.float64)
    n_agents = len(positions)
    if n_agents != len(formation.slots):
        raise CountMismatch(
            f"{n_agents} agents vs {len(formation.slots)} slots")
    slot_world = np.array([
        np.asarray(vc_pose.translation)
        + _rotate_by_pose(vc_pose, s.offset.translation)
        for s in sorted(formation.slots, key=lambda s: s.slot_id)
    ])
    cost = np.linalg.norm(positions[:, None, :] - slot_world[None, :, :], axis=2)
    rows, cols = linear_sum_assignment(cost)
    return {int(a): int(s) for a, s in zip(rows, cols)}


def _rotate_by_pose(pose: Pose, v: np.ndarray) -> np.ndarray:
    from .pose import quat_rotate
    return quat_rotate(pose.rotation, v)


class SwarmEngine:
    """Single-writer fixed-step simulator for one swarm."""

    def __init__(
        self,
        formation: FormationSpec,
        models: Union[AgentModel, Sequence[AgentModel]],
        initial_positions: Sequence,
        initial_yaws: Optional[Sequence[float]] = None,
        dt: float = 0.01,
        vc_pose: Optional[Pose] = None,
        pos_tolerance: float = DEFAULT_POS_TOLERANCE,
        yaw_tolerance: float = DEFAULT_YAW_TOLERANCE,
        v_max_global: Optional[float] = None,
        on_event: Optional[Callable[[float, str, dict], None]] = None,
    ):
        if dt <= 0.0:
            raise ConstraintViolation(f"dt must be positive, got {dt}")
        self.dt = dt
        self.formation = formation
        self.pos_tolerance = pos_tolerance
        self.yaw_tolerance = yaw_tolerance
        self.v_max_global = v_max_global
        self._on_event = on_event or (lambda t, kind, detail: None)

        pos = np.asarray(initial_positions, dtype=np.float64).copy()
        n = len(pos)
        if isinstance(models, AgentModel):
            models = [models] * n
        if len(models) != n:
            raise CountMismatch(f"{len(models)} models for {n} agents")
        self.models = list(models)
        self._pos = pos
        self._vel = np.zeros((n, 3))
        self._yaw = (np.asarray(initial_yaws, dtype=np.float64).copy()
                     if initial_yaws is not None else np.zeros(n))
        self._slot_of = np.full(n, -1, dtype=np.int64)
        self._joining = np.zeros(n, dtype=bool)
        self._detached = np.zeros(n, dtype=bool)
        self._ref_pos = pos.copy()
        self._ref_yaw = self._yaw.copy()

        self.n_agents = n
        self.phase = "setup"
        self.tick_index = 0
        self.t = 0.0
        self.t_s: Optional[float] = None

        self._vc_pose = vc_pose if vc_pose is not None else Pose.identity()
        self._vc_sample = TrajectorySample(
            t=0.0, pose=self._vc_pose, twist=Twist(),
            yaw=self._vc_pose.yaw, speed=0.0)
        self._traj: Optional[PlannedTrajectory] = None
        self._motion_start: Optional[float] = None
        self._pause_accum = 0.0
        self._paused = False
        self._traj_done = False
        self.transition: Optional[FormationTransition] = None
        self._pending_rates = np.zeros((n, 3))
        self._setup_speed = 0.5
        self._queue: list[CommandReceipt] = []

        self._cache_slot_geometry(self.formation)

    # --- slot geometry caches (rebuilt whenever the layout changes) ---

    def _cache_slot_geometry(self, spec: FormationSpec,
                             rates: Optional[np.ndarray] = None):
        ordered = sorted(spec.slots, key=lambda s: s.slot_id)
        self._slot_offsets = np.array([s.offset.translation for s in ordered])
        self._slot_headings = np.array([s.offset.yaw for s in ordered])
        self._slot_rates = (rates if rates is not None
                            else np.zeros_like(self._slot_offsets))

    def _effective_formation(self, t: float) -> FormationSpec:
        tr = self.transition
        if tr is None:
            return self.formation
        t_clamped = min(max(t, tr.start_time), tr.end_time)
        return interpolate(tr, t_clamped)

    # --- setup phase ---

    def set_setup_speed(self, v_max: float):
        if v_max <= 0.0:
            raise ConstraintViolation(f"setup v_max must be positive, got {v_max}")
        self._setup_speed = v_max

    def apply_assignment(self, assignment: dict[int, int]):
        """Install an agent -> slot map (see assign_slots)."""
        if sorted(assignment.keys()) != list(range(self.n_agents)):
            raise CountMismatch("assignment must cover every agent exactly once")
        if sorted(assignment.values()) != list(range(len(self.formation.slots))):
            raise CountMismatch("assignment must cover every slot exactly once")
        for a, s in assignment.items():
            self._slot_of[a] = s
        # agents staged on their slots skip setup entirely (t_s = t_0)
        if self.phase == "setup" and self._setup_arrived():
            self._finish_setup()

    def _setup_targets(self) -> tuple[np.ndarray, np.ndarray]:
        vc = self._vc_sample.pose
        r = _pose_matrix(vc)
        targets = self._slot_offsets[self._slot_of] @ r.T + vc.translation
        yaws = self._vc_sample.yaw + self._slot_headings[self._slot_of]
        return targets, yaws

    def check_setup_conflicts(self, v_max: float):
        """Predict straight-line closures below d_min; report, never resolve."""
        targets, _ = self._setup_targets()
        start = self._pos.copy()
        delta = targets - start
        dist = np.linalg.norm(delta, axis=1)
        with np.errstate(invalid="ignore", divide="ignore"):
            dirs = np.where(dist[:, None] > 1e-12, delta / np.maximum(dist, 1e-12)[:, None], 0.0)
        horizon = float(dist.max()) / v_max if dist.max() > 0 else 0.0
        steps = int(math.ceil(horizon / self.dt)) + 1
        for k in range(steps + 1):
            tau = k * self.dt
            travelled = np.minimum(v_max * tau, dist)
            pts = start + dirs * travelled[:, None]
            d = kernels.pairwise_distances(pts)
            n = len(pts)
            for i in range(n):
                for j in range(i + 1, n):
                    if d[i, j] < self.formation.d_min:
                        raise SetupConflict((i, j), tau, float(d[i, j]))

    def run_setup(self, assignment: Optional[dict[int, int]] = None,
                  v_max: Optional[float] = None,
                  max_sim_time: float = 300.0) -> float:
        """Drive agents to their slots on straight lines; returns t_s."""
        if assignment is not None:
            self.apply_assignment(assignment)
        if np.any(self._slot_of < 0):
            raise CountMismatch("setup requires a full slot assignment")
        v = v_max if v_max is not None else self._setup_speed
        self.check_setup_conflicts(v)
        deadline = self.t + max_sim_time
        while self.phase == "setup":
            if self._setup_arrived():
                self._finish_setup()
                break
            self.tick(setup_speed=v)
            if self.t > deadline:
                raise VcflockError("setup did not converge within the time budget")
        return self.t_s if self.t_s is not None else self.t

    def _setup_arrived(self) -> bool:
        targets, yaws = self._setup_targets()
        pos_ok = np.linalg.norm(self._pos - targets, axis=1) <= self.pos_tolerance
        yaw_err = np.abs(np.arctan2(np.sin(yaws - self._yaw),
                                    np.cos(yaws - self._yaw)))
        return bool(np.all(pos_ok) and np.all(yaw_err <= self.yaw_tolerance))

    def _finish_setup(self):
        self.phase = "idle"
        self.t_s = self.t
        targets, yaws = self._setup_targets()
        self._ref_pos = targets
        self._ref_yaw = yaws
        self._emit("setup_complete", {"t_s": self.t_s})

    # --- command queue ---

    def submit(self, command: Command) -> CommandReceipt:
        receipt = CommandReceipt(command)
        self._queue.append(receipt)
        return receipt

    def _drain_queue(self):
        pending, self._queue = self._queue, []
        for receipt in pending:
            try:
                self._apply(receipt.command)
            except VcflockError as e:
                receipt._resolve("rejected", f"{type(e).__name__}: {e}", self.t)
                self._emit("command_rejected", {
                    "command": type(receipt.command).__name__,
                    "reason": receipt.reason,
                })
            else:
                receipt._resolve("accepted", "", self.t)
                self._emit("command_accepted", {
                    "command": type(receipt.command).__name__,
                })

    def _apply(self, cmd: Command):
        if isinstance(cmd, StartTrajectory):
            self._apply_start(cmd)
        elif isinstance(cmd, Morph):
            self._apply_morph(cmd)
        elif isinstance(cmd, Detach):
            self._apply_detach(cmd)
        elif isinstance(cmd, Attach):
            self._apply_attach(cmd)
        elif isinstance(cmd, Pause):
            self._paused = True
        elif isinstance(cmd, Resume):
            self._paused = False
        elif isinstance(cmd, SetSpeed):
            self._apply_set_speed(cmd)
        else:
            raise ConstraintViolation(f"unknown command {cmd!r}")

    def _apply_start(self, cmd: StartTrajectory):
        traj = (cmd.spec if isinstance(cmd.spec, PlannedTrajectory)
                else plan(cmd.spec, v_max_global=self.v_max_global))
        if (self.v_max_global is not None
                and traj.spec.v_max > self.v_max_global + 1e-12):
            raise ConstraintViolation(
                f"trajectory v_max {traj.spec.v_max} exceeds swarm cap "
                f"{self.v_max_global}")
        self._traj = traj
        self._motion_start = self.t
        self._pause_accum = 0.0
        self._paused = False
        self._traj_done = False
        self.phase = "motion"
        self._emit("trajectory_started", {"duration": traj.duration})

    def _apply_morph(self, cmd: Morph):
        active = int(np.sum(~self._detached))
        current = self._effective_formation(self.t)
        mapping = cmd.slot_mapping
        if mapping is None:
            if len(cmd.target.slots) != active:
                raise CountMismatch(
                    f"morph target has {len(cmd.target.slots)} slots for "
                    f"{active} active agents")
            shared = min(len(current.slots), len(cmd.target.slots))
            mapping = {i: i for i in range(shared)}
        tr = FormationTransition(
            from_spec=current, to_spec=cmd.target,
            start_time=self.t, duration=cmd.duration,
            slot_mapping=mapping)
        self.transition = tr
        rates = np.zeros((len(cmd.target.slots), 3))
        for old, new in mapping.items():
            a = current.slot(old).offset.translation
            b = cmd.target.slot(new).offset.translation
            rates[new] = (b - a) / cmd.duration
        self._pending_rates = rates
        # agents in mapped slots follow them; unmapped old slots detach
        for a in range(self.n_agents):
            s = int(self._slot_of[a])
            if s < 0:
                continue
            if s in mapping:
                self._slot_of[a] = mapping[s]
            else:
                self._slot_of[a] = -1
                self._detached[a] = True
                self._vel[a] = 0.0
                self._emit("detached", {"agent_id": a, "slot_id": s})
        self._emit("morph_started", {
            "target": cmd.target.name, "duration": cmd.duration,
            "completes_at": tr.end_time,
        })

    def _apply_detach(self, cmd: Detach):
        a = cmd.agent_id
        if not (0 <= a < self.n_agents) or self._detached[a]:
            raise UnknownAgent(f"agent {a} does not exist or is already detached")
        if self.transition is not None:
            raise ConstraintViolation("cannot detach during a formation morph")
        slot = int(self._slot_of[a])
        new_formation = detach_slot(self.formation, slot)
        remap = slot_remap_after_detach(self.formation, slot)
        self.formation = new_formation
        self._cache_slot_geometry(new_formation)
        self._detached[a] = True
        self._slot_of[a] = -1
        self._joining[a] = False
        self._vel[a] = 0.0
        for other in range(self.n_agents):
            s = self._slot_of[other]
            if s >= 0:
                self._slot_of[other] = remap[s]
        self._emit("detached", {"agent_id": a, "slot_id": slot})

    def _apply_attach(self, cmd: Attach):
        a = cmd.agent_id
        if not (0 <= a < self.n_agents) or not self._detached[a]:
            raise UnknownAgent(f"agent {a} does not exist or is not detached")
        if self.transition is not None:
            raise ConstraintViolation("cannot attach during a formation morph")
        new_formation = attach_slot(self.formation, cmd.offset)
        self.formation = new_formation
        self._cache_slot_geometry(new_formation)
        self._detached[a] = False
        self._slot_of[a] = len(new_formation.slots) - 1
        self._joining[a] = True
        self._emit("attached", {
            "agent_id": a, "slot_id": int(self._slot_of[a])})

    def _apply_set_speed(self, cmd: SetSpeed):
        if cmd.v_max <= 0.0:
            raise ConstraintViolation(f"v_max must be positive, got {cmd.v_max}")
        if (self.v_max_global is not None
                and cmd.v_max > self.v_max_global + 1e-12):
            raise ConstraintViolation(
                f"v_max {cmd.v_max} exceeds swarm cap {self.v_max_global}")
        if self._traj is None or self.phase != "motion":
            raise ConstraintViolation("set_speed requires an active trajectory")
        tau = self._traj_time(self.t)
        self._traj = self._traj.replan_speed(tau, cmd.v_max)
        self._motion_start = self.t
        self._pause_accum = 0.0
        self._emit("speed_changed", {"v_max": cmd.v_max})

    # --- main loop ---

    def _traj_time(self, t: float) -> float:
        return t - self._motion_start - self._pause_accum

    def tick(self, setup_speed: Optional[float] = None):
        """Advance one fixed step; commands land first, then kinematics."""
        t_next = (self.tick_index + 1) * self.dt
        self._drain_queue()

        if self.phase == "setup":
            self._tick_setup(setup_speed or self._setup_speed)
        elif self.phase in ("motion", "idle"):
            self._tick_motion(t_next)
        self.tick_index += 1
        self.t = t_next
        if self.phase == "setup" and self._setup_arrived():
            self._finish_setup()

    def _tick_setup(self, v_max: float):
        targets, yaws = self._setup_targets()
        delta = targets - self._pos
        dist = np.linalg.norm(delta, axis=1)
        step = np.minimum(v_max * self.dt, dist)
        with np.errstate(invalid="ignore", divide="ignore"):
            dirs = np.where(dist[:, None] > 1e-12,
                            delta / np.maximum(dist, 1e-12)[:, None], 0.0)
        self._vel = dirs * np.where(dist > 1e-12, np.minimum(v_max, dist / self.dt), 0.0)[:, None]
        self._pos = self._pos + dirs * step[:, None]
        yaw_err = np.arctan2(np.sin(yaws - self._yaw), np.cos(yaws - self._yaw))
        yaw_step = np.clip(yaw_err, -SETUP_YAW_RATE * self.dt,
                           SETUP_YAW_RATE * self.dt)
        self._yaw = self._yaw + yaw_step
        self._ref_pos = targets
        self._ref_yaw = yaws

    def _advance_transition(self, t_next: float):
        tr = self.transition
        if tr is None:
            return
        if t_next >= tr.end_time:
            self.formation = tr.to_spec
            self.transition = None
            self._cache_slot_geometry(tr.to_spec)
            self._emit("morph_completed", {
                "formation": tr.to_spec.name, "at": t_next})
        else:
            eff = interpolate(tr, t_next)
            self._cache_slot_geometry(eff, rates=self._pending_rates)

    def _tick_motion(self, t_next: float):
        if self._paused:
            self._pause_accum += self.dt
        if self._traj is not None and self.phase == "motion":
            tau = t_next - self._motion_start - self._pause_accum
            vc = self._traj.sample(tau)
            # re-anchor sample time to the engine clock; a paused centroid
            # holds pose with zero twist
            twist = Twist() if self._paused else vc.twist
            speed = 0.0 if self._paused else vc.speed
            self._vc_sample = TrajectorySample(
                t=t_next, pose=vc.pose, twist=twist, yaw=vc.yaw,
                speed=speed)
            if not self._traj_done and tau >= self._traj.duration:
                self._traj_done = True
                self.phase = "idle"
                self._emit("trajectory_completed", {"at": t_next})
        else:
            p = self._vc_sample.pose
            self._vc_sample = TrajectorySample(
                t=t_next, pose=p, twist=Twist(), yaw=p.yaw, speed=0.0)

        self._advance_transition(t_next)

        vc = self._vc_sample
        r = _pose_matrix(vc.pose)
        slots = self._slot_of
        active = slots >= 0
        offs = self._slot_offsets[np.where(active, slots, 0)]
        ref_pos = offs @ r.T + vc.pose.translation
        ref_yaw = vc.yaw + self._slot_headings[np.where(active, slots, 0)]
        # rigid-frame velocity field: v_vc + omega x r (+ slot morph rate)
        rel = ref_pos - vc.pose.translation
        omega = vc.twist.angular
        ref_vel = (vc.twist.linear
                   + np.cross(np.broadcast_to(omega, rel.shape), rel)
                   + self._slot_rates[np.where(active, slots, 0)] @ r.T)

        self._ref_pos = np.where(active[:, None], ref_pos, self._pos)
        self._ref_yaw = np.where(active, ref_yaw, self._yaw)

        joining = self._joining & active
        normal = active & ~joining
        if np.any(normal):
            self._step_agents(normal, self._ref_pos, self._ref_yaw, ref_vel)
        if np.any(joining):
            self._step_joining(joining)
        held = ~active
        if np.any(held):
            self._vel[held] = 0.0

    def _step_agents(self, mask: np.ndarray, ref_pos, ref_yaw, ref_vel):
        ids = np.nonzero(mask)[0]
        ideal = np.array([self.models[i].mode == "ideal" for i in ids])
        for group, is_ideal in ((ids[ideal], True), (ids[~ideal], False)):
            if len(group) == 0:
                continue
            if is_ideal:
                self._pos[group] = ref_pos[group]
                self._vel[group] = ref_vel[group]
                self._yaw[group] = ref_yaw[group]
            else:
                k = self.models[int(group[0])].k
                v_cap = self.models[int(group[0])].v_max_agent
                homogeneous = all(
                    self.models[int(i)].k == k
                    and self.models[int(i)].v_max_agent == v_cap
                    for i in group)
                if homogeneous:
                    new_pos, vel, new_yaw, _ = kernels.lagged_step(
                        self._pos[group], self._yaw[group],
                        ref_pos[group], ref_yaw[group], k, v_cap, self.dt)
                    self._pos[group] = new_pos
                    self._vel[group] = vel
                    self._yaw[group] = new_yaw
                else:
                    for i in group:
                        m = self.models[int(i)]
                        new_pos, vel, new_yaw, _ = kernels.lagged_step(
                            self._pos[i:i + 1], self._yaw[i:i + 1],
                            ref_pos[i:i + 1], ref_yaw[i:i + 1],
                            m.k, m.v_max_agent, self.dt)
                        self._pos[i] = new_pos[0]
                        self._vel[i] = vel[0]
                        self._yaw[i] = new_yaw[0]

    def _step_joining(self, mask: np.ndarray):
        """Straight-line pursuit of the (moving) slot until within tolerance."""
        ids = np.nonzero(mask)[0]
        for i in ids:
            v_cap = self.models[int(i)].v_max_agent
            delta = self._ref_pos[i] - self._pos[i]
            dist = float(np.linalg.norm(delta))
            yaw_err = wrap_angle(self._ref_yaw[i] - self._yaw[i])
            if dist <= self.pos_tolerance and abs(yaw_err) <= self.yaw_tolerance:
                self._joining[i] = False
                self._emit("join_complete", {"agent_id": int(i)})
                continue
            if dist > 1e-12:
                d = delta / dist
                speed = min(v_cap, dist / self.dt)
                self._vel[i] = d * speed
                self._pos[i] = self._pos[i] + d * min(v_cap * self.dt, dist)
            else:
                self._vel[i] = 0.0
            step = min(max(yaw_err, -SETUP_YAW_RATE * self.dt),
                       SETUP_YAW_RATE * self.dt)
            self._yaw[i] = self._yaw[i] + step

    def run_for(self, seconds: float, setup_speed: Optional[float] = None):
        steps = int(round(seconds / self.dt))
        for _ in range(steps):
            self.tick(setup_speed=setup_speed)

    # --- observation ---

    def _emit(self, kind: str, detail: dict):
        self._on_event(self.t, kind, detail)

    @property
    def vc_sample(self) -> TrajectorySample:
        return self._vc_sample

    @property
    def trajectory(self) -> Optional[PlannedTrajectory]:
        return self._traj

    @property
    def trajectory_done(self) -> bool:
        return self._traj_done

    def active_mask(self) -> np.ndarray:
        return ~self._detached

    def row_arrays(self):
        """Fast view bundle for trace writing (do not mutate)."""
        return (self._pos, self._yaw, self._vel, self._ref_pos,
                self._detached, self._vc_sample, self.phase)

    def snapshot(self) -> SwarmState:
        agents = []
        for i in range(self.n_agents):
            slot = int(self._slot_of[i]) if self._slot_of[i] >= 0 else None
            ref = Pose(quat_from_yaw(self._ref_yaw[i]), self._ref_pos[i].copy())
            agents.append(AgentState(
                agent_id=i, slot_id=slot,
                position=self._pos[i].copy(),
                velocity=self._vel[i].copy(),
                yaw=float(wrap_angle(self._yaw[i])),
                reference=ref,
                joining=bool(self._joining[i]),
            ))
        progress = 0.0
        if self.transition is not None:
            progress = min(max(self.transition.progress(self.t), 0.0), 1.0)
        return SwarmState(
            t=self.t, phase=self.phase, vc=self._vc_sample,
            formation=self._effective_formation(self.t),
            agents=tuple(agents),
            transition=self.transition,
            transition_progress=progress,
        )


def _pose_matrix(pose: Pose) -> np.ndarray:
    from .pose import quat_to_matrix
    return quat_to_matrix(pose.rotation)
