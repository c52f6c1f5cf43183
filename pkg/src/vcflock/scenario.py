"""Scenario documents: everything one simulation run needs.

A scenario bundles a formation, a centroid trajectory, the agent model,
engine settings, a time-ordered command script, and metric thresholds.
Files are YAML; presets ship inside the package and are addressable by
name. Event times are relative to the start of collective motion.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np
import yaml

from .engine import (
    AgentModel,
    Attach,
    Detach,
    Morph,
    Pause,
    Resume,
    SetSpeed,
)
from .errors import ParseError
from .formation import (
    FormationSpec,
    line_formation,
    load_formation,
    regular_formation,
)
from .pose import Pose, vec3
from .trajectory import TrajectorySpec

DEFAULT_DT = 0.01
DEFAULT_JITTER = 0.02


@dataclass(frozen=True)
class ScenarioEvent:
    tau: float          # seconds after motion start
    command: object
    label: str


@dataclass(frozen=True)
class Scenario:
    name: str
    formation: FormationSpec
    trajectory: TrajectorySpec
    model: AgentModel
    initial_positions: object      # "auto" or (N, 3) array
    jitter: float
    dt: float
    seed: int
    setup_v_max: float
    pos_tolerance: float
    yaw_tolerance: float
    events: tuple[ScenarioEvent, ...]
    metrics_d_max: float | None
    metrics_d_min: float | None
    metrics_delta: float
    metrics_window: tuple | None
    duration_cap: float
    tail: float
    v_max_swarm: float | None
    description: str = ""


def _require(data: dict, key: str, where: str):
    if key not in data:
        raise ParseError(f"{where}: missing required field {key!r}")
    return data[key]


def build_formation(node, base_dir: Path | None = None) -> FormationSpec:
    """Resolve a formation node: inline doc, file reference, or shape recipe."""
    if not isinstance(node, dict):
        raise ParseError(f"formation node must be a mapping, got {node!r}")
    if "file" in node:
        path = Path(node["file"])
        if base_dir is not None and not path.is_absolute():
            path = base_dir / path
        try:
            text = path.read_text()
        except OSError as e:
            raise ParseError(f"cannot read formation file {path}: {e}") from e
        return load_formation(text)
    if "shape" in node:
        shape = node["shape"]
        kind = _require(shape, "kind", "formation.shape")
        d_min = float(_require(shape, "d_min", "formation.shape"))
        name = shape.get("name", kind)
        if kind == "regular":
            return regular_formation(int(_require(shape, "n", "shape")),
                                     float(_require(shape, "d_max", "shape")),
                                     d_min, name=name)
        if kind == "line":
            return line_formation(int(_require(shape, "n", "shape")),
                                  float(_require(shape, "spacing", "shape")),
                                  d_min, name=name)
        if kind == "square":
            half = float(_require(shape, "side", "shape")) / 2.0
            doc = {"name": name, "d_min": d_min, "slots": [
                {"id": 0, "xyz": [half, half, 0.0]},
                {"id": 1, "xyz": [-half, half, 0.0]},
                {"id": 2, "xyz": [-half, -half, 0.0]},
                {"id": 3, "xyz": [half, -half, 0.0]},
            ]}
            return load_formation(doc)
        if kind == "grid":
            rows = int(_require(shape, "rows", "shape"))
            cols = int(_require(shape, "cols", "shape"))
            spacing = float(_require(shape, "spacing", "shape"))
            slots = []
            idx = 0
            for r in range(rows):
                for c in range(cols):
                    slots.append({"id": idx, "xyz": [
                        (r - (rows - 1) / 2.0) * spacing,
                        (c - (cols - 1) / 2.0) * spacing, 0.0]})
                    idx += 1
            return load_formation({"name": name, "d_min": d_min, "slots": slots})
        raise ParseError(f"unknown formation shape kind {kind!r}")
    # inline document
    return load_formation(node)


def build_trajectory(node: dict) -> TrajectorySpec:
    if not isinstance(node, dict):
        raise ParseError("trajectory node must be a mapping")
    waypoints = tuple(tuple(float(c) for c in w)
                      for w in _require(node, "waypoints", "trajectory"))
    v_max = float(_require(node, "v_max", "trajectory"))
    a_max = float(node.get("a_max", 1.0))
    raw_mode = str(node.get("yaw_mode", "path_facing"))
    fixed_yaw = 0.0
    if raw_mode.startswith("fixed"):
        mode = "fixed"
        if ":" in raw_mode:
            fixed_yaw = math.radians(float(raw_mode.split(":", 1)[1]))
    elif raw_mode in ("path_facing", "sequence"):
        mode = raw_mode
    else:
        raise ParseError(f"unknown yaw_mode {raw_mode!r}")
    seq = tuple(
        (float(e["t"]), math.radians(float(e["yaw_deg"])))
        for e in node.get("yaw_sequence", ())
    )
    rate = math.radians(float(node.get("yaw_rate_max_dps", 85.943669)))
    init_yaw = node.get("initial_yaw_deg")
    return TrajectorySpec(
        waypoints=waypoints, v_max=v_max, a_max=a_max, yaw_mode=mode,
        fixed_yaw=fixed_yaw, yaw_sequence=seq, yaw_rate_max=rate,
        initial_yaw=math.radians(float(init_yaw)) if init_yaw is not None else None,
    )


def _build_event(node: dict, base_dir: Path | None) -> ScenarioEvent:
    tau = float(_require(node, "t", "event"))
    kind = _require(node, "command", "event")
    if kind == "detach":
        cmd = Detach(int(_require(node, "agent_id", "detach event")))
    elif kind == "attach":
        off = _require(node, "offset", "attach event")
        xyz = [float(v) for v in _require(off, "xyz", "attach offset")]
        yaw = math.radians(float(off.get("yaw_deg", 0.0)))
        cmd = Attach(int(_require(node, "agent_id", "attach event")),
                     Pose.from_xyz_yaw(*xyz, yaw))
    elif kind == "morph":
        target = build_formation(_require(node, "formation", "morph event"),
                                 base_dir)
        mapping = node.get("slot_mapping")
        if mapping is not None:
            mapping = {int(k): int(v) for k, v in mapping.items()}
        cmd = Morph(target, duration=float(node.get("duration", 1.5)),
                    slot_mapping=mapping)
    elif kind == "pause":
        cmd = Pause()
    elif kind == "resume":
        cmd = Resume()
    elif kind == "set_speed":
        cmd = SetSpeed(float(_require(node, "v_max", "set_speed event")))
    else:
        raise ParseError(f"unknown event command {kind!r}")
    return ScenarioEvent(tau=tau, command=cmd, label=kind)


def load_scenario(source, base_dir: Path | None = None) -> Scenario:
    """Parse a scenario from YAML text, a dict, or a file path."""
    if isinstance(source, (str, Path)) and "\n" not in str(source):
        path = Path(source)
        try:
            text = path.read_text()
        except OSError as e:
            raise ParseError(f"cannot read scenario {path}: {e}") from e
        return load_scenario(text, base_dir=path.parent)
    if isinstance(source, str):
        try:
            data = yaml.safe_load(source)
        except yaml.YAMLError as e:
            raise ParseError(f"malformed scenario: {e}") from e
    else:
        data = source
    if not isinstance(data, dict):
        raise ParseError("scenario must be a mapping")

    name = str(_require(data, "name", "scenario"))
    formation = build_formation(_require(data, "formation", "scenario"), base_dir)
    trajectory = build_trajectory(_require(data, "trajectory", "scenario"))

    agents = data.get("agents", {}) or {}
    mode = str(agents.get("model", "lagged"))
    model = AgentModel(
        mode=mode,
        k=float(agents.get("k", 2.0)),
        v_max_agent=float(agents.get("v_max_agent", 2.0)),
    )
    count = int(agents.get("count", len(formation.slots)))
    if count != len(formation.slots):
        raise ParseError(
            f"agents.count {count} does not match slot count "
            f"{len(formation.slots)}")
    initial = agents.get("initial_positions", "auto")
    if initial != "auto":
        initial = np.asarray([[float(c) for c in p] for p in initial])
        if initial.shape != (count, 3):
            raise ParseError(
                f"initial_positions must be {count} xyz triples")
    jitter = float(agents.get("jitter", DEFAULT_JITTER))

    eng = data.get("engine", {}) or {}
    dt = float(eng.get("dt", DEFAULT_DT))
    seed = int(eng.get("seed", 0))

    setup = data.get("setup", {}) or {}
    events = [
        _build_event(e, base_dir) for e in (data.get("events") or ())
    ]
    taus = [e.tau for e in events]
    if taus != sorted(taus):
        raise ParseError("event times must be nondecreasing")

    met = data.get("metrics", {}) or {}
    window = met.get("window")
    if window is not None:
        window = (float(window[0]), float(window[1]))

    return Scenario(
        name=name,
        formation=formation,
        trajectory=trajectory,
        model=model,
        initial_positions=initial,
        jitter=jitter,
        dt=dt,
        seed=seed,
        setup_v_max=float(setup.get("v_max", 0.5)),
        pos_tolerance=float(setup.get("pos_tolerance", 0.05)),
        yaw_tolerance=float(setup.get("yaw_tolerance", 0.05)),
        events=tuple(events),
        metrics_d_max=(float(met["d_max"]) if met.get("d_max") is not None else None),
        metrics_d_min=(float(met["d_min"]) if met.get("d_min") is not None else None),
        metrics_delta=float(met.get("delta", 0.15)),
        metrics_window=window,
        duration_cap=float(data.get("duration", 600.0)),
        tail=float(data.get("tail", 0.5)),
        v_max_swarm=(float(data["v_max_swarm"])
                     if data.get("v_max_swarm") is not None else None),
        description=str(data.get("description", "")),
    )


def preset_names() -> list[str]:
    files = resources.files("vcflock").joinpath("presets")
    return sorted(p.name[:-5] for p in files.iterdir() if p.name.endswith(".yaml"))


def load_preset(name: str) -> Scenario:
    raw, base = load_raw(name)
    return load_scenario(raw, base_dir=base)


def load_raw(ref) -> tuple[dict, Path | None]:
    """Scenario reference (path or preset name) -> (raw dict, base dir)."""
    p = Path(ref)
    if p.exists():
        try:
            data = yaml.safe_load(p.read_text())
        except (OSError, yaml.YAMLError) as e:
            raise ParseError(f"cannot load scenario {p}: {e}") from e
        return data, p.parent
    files = resources.files("vcflock").joinpath("presets")
    candidate = files.joinpath(f"{ref}.yaml")
    if not candidate.is_file():
        raise ParseError(
            f"{ref!r} is neither a file nor a preset; presets: "
            f"{', '.join(preset_names())}")
    return yaml.safe_load(candidate.read_text()), None


def apply_overrides(data: dict, overrides: dict[str, str]) -> dict:
    """Apply dotted-path overrides; values are parsed as YAML scalars."""
    for dotted, raw_value in overrides.items():
        value = yaml.safe_load(raw_value)
        node = data
        parts = dotted.split(".")
        for part in parts[:-1]:
            nxt = node.get(part)
            if not isinstance(nxt, dict):
                nxt = {}
                node[part] = nxt
            node = nxt
        node[parts[-1]] = value
    return data


def resolve_scenario(ref: str, overrides: dict[str, str] | None = None) -> Scenario:
    """Accept a filesystem path or a bare preset name, with overrides."""
    raw, base = load_raw(ref)
    if overrides:
        raw = apply_overrides(raw, overrides)
    return load_scenario(raw, base_dir=base)
