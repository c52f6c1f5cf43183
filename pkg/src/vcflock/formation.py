"""Formation geometry: slot layouts around the virtual centroid.

A formation is an ordered list of slots, each a rigid offset from the VC
frame, plus the separation floor d_min. Constructors guarantee every
pairwise slot distance is at least d_min, so the separation law holds by
construction for the ideal rigid body.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
import yaml

from .errors import (
    ConstraintViolation,
    DuplicateSlotId,
    EmptyFormation,
    OutOfWindow,
    ParseError,
    UnknownSlot,
)
from .pose import Pose, quat_slerp, vec3

# Sampling density for transition d_min validation; conservative at
# formation scales (slot paths are straight lines under lerp).
_TRANSITION_SAMPLES = 100


@dataclass(frozen=True)
class FormationSlot:
    slot_id: int
    offset: Pose


@dataclass(frozen=True)
class FormationSpec:
    """Named slot layout with separation floor d_min (meters)."""

    name: str
    slots: tuple[FormationSlot, ...]
    d_min: float

    def __post_init__(self):
        if not self.slots:
            raise EmptyFormation("formation must contain at least one slot")
        if self.d_min <= 0.0:
            raise ConstraintViolation(f"d_min must be positive, got {self.d_min}")
        ids = [s.slot_id for s in self.slots]
        if len(set(ids)) != len(ids):
            raise DuplicateSlotId(f"duplicate slot ids in {self.name}: {ids}")
        if sorted(ids) != list(range(len(ids))):
            raise ParseError(f"slot ids must form a contiguous range 0..N-1, got {ids}")
        dmin_actual = self.min_slot_distance()
        if dmin_actual < self.d_min:
            raise ConstraintViolation(
                f"formation {self.name!r}: min pairwise slot distance "
                f"{dmin_actual:.4f} m < d_min {self.d_min:.4f} m"
            )

    def __len__(self) -> int:
        return len(self.slots)

    @property
    def d_max(self) -> float:
        """Cohesion bound: largest slot distance from the VC origin."""
        return max(float(np.linalg.norm(s.offset.translation)) for s in self.slots)

    def slot(self, slot_id: int) -> FormationSlot:
        for s in self.slots:
            if s.slot_id == slot_id:
                return s
        raise UnknownSlot(f"no slot {slot_id} in formation {self.name!r}")

    def offsets_array(self) -> np.ndarray:
        """Slot translations as an (N, 3) array in slot-id order."""
        ordered = sorted(self.slots, key=lambda s: s.slot_id)
        return np.array([s.offset.translation for s in ordered])

    def min_slot_distance(self) -> float:
        if len(self.slots) < 2:
            return math.inf
        pts = self.offsets_array()
        best = math.inf
        for i in range(len(pts)):
            for j in range(i + 1, len(pts)):
                best = min(best, float(np.linalg.norm(pts[i] - pts[j])))
        return best


def _unchecked_spec(name: str, slots: tuple[FormationSlot, ...],
                    d_min: float) -> FormationSpec:
    spec = FormationSpec.__new__(FormationSpec)
    object.__setattr__(spec, "name", name)
    object.__setattr__(spec, "slots", slots)
    object.__setattr__(spec, "d_min", d_min)
    return spec


def regular_formation(n: int, d_max: float, d_min: float,
                      name: str = "regular") -> FormationSpec:
    """n slots on a circle of radius d_max in the VC xy-plane.

    Slot i sits at angle 2*pi*i/n with identity rotation. Adjacent slots are
    chords of length 2*d_max*sin(pi/n), which must be at least d_min.
    """
    if n < 1:
        raise ConstraintViolation(f"need at least one slot, got n={n}")
    if d_max <= 0.0:
        raise ConstraintViolation(f"d_max must be positive, got {d_max}")
    if n >= 2:
        chord = 2.0 * d_max * math.sin(math.pi / n)
        if not chord >= d_min:
            ratio = d_min / (2.0 * d_max)
            if ratio <= 1.0:
                n_max = int(math.pi / math.asin(ratio))
                hint = f"max feasible n={n_max}"
            else:
                hint = "infeasible for any n>=2 at this d_max"
            d_max_min = d_min / (2.0 * math.sin(math.pi / n))
            raise ConstraintViolation(
                f"chord 2*d_max*sin(pi/n) = {chord:.6f} m < d_min {d_min:.6f} m "
                f"({hint}; min feasible d_max={d_max_min:.4f} m for n={n})"
            )
    slots = []
    for i in range(n):
        theta = 2.0 * math.pi * i / n
        slots.append(FormationSlot(
            i, Pose(translation=vec3(d_max * math.cos(theta),
                                     d_max * math.sin(theta), 0.0))))
    return FormationSpec(name, tuple(slots), d_min)


def line_formation(n: int, spacing: float, d_min: float,
                   name: str = "line") -> FormationSpec:
    """n slots on the VC y-axis, centered on the origin.

    For odd n the middle slot sits exactly at the origin.
    """
    if n < 2:
        raise ConstraintViolation(f"line formation needs n>=2, got {n}")
    if spacing <= 0.0:
        raise ConstraintViolation(f"spacing must be positive, got {spacing}")
    if spacing < d_min:
        raise ConstraintViolation(
            f"spacing {spacing} m < d_min {d_min} m")
    slots = []
    for i in range(n):
        y = ((n - 1) / 2.0 - i) * spacing
        slots.append(FormationSlot(i, Pose(translation=vec3(0.0, y, 0.0))))
    return FormationSpec(name, tuple(slots), d_min)


def load_formation(document) -> FormationSpec:
    """Parse a formation document (YAML/JSON text, or an already-parsed dict).

    Schema: name (str), d_min (number), slots (list of {id, xyz, rpy_deg?}).
    """
    if isinstance(document, (str, bytes)):
        try:
            data = yaml.safe_load(document)
        except yaml.YAMLError as e:
            raise ParseError(f"malformed formation document: {e}") from e
    else:
        data = document
    if not isinstance(data, dict):
        raise ParseError(f"formation document must be a mapping, got {type(data)}")
    try:
        name = str(data["name"])
        d_min = float(data["d_min"])
        raw_slots = data["slots"]
    except KeyError as e:
        raise ParseError(f"formation document missing field {e}") from e
    except (TypeError, ValueError) as e:
        raise ParseError(f"bad field value: {e}") from e
    if not isinstance(raw_slots, list) or not raw_slots:
        raise ParseError("slots must be a non-empty list")

    slots = []
    seen = set()
    for entry in raw_slots:
        try:
            sid = int(entry["id"])
            xyz = [float(v) for v in entry["xyz"]]
            rpy_deg = [float(v) for v in entry.get("rpy_deg", (0.0, 0.0, 0.0))]
        except (KeyError, TypeError, ValueError) as e:
            raise ParseError(f"bad slot entry {entry!r}: {e}") from e
        if len(xyz) != 3 or len(rpy_deg) != 3:
            raise ParseError(f"slot {sid}: xyz and rpy_deg must have 3 components")
        if sid in seen:
            raise DuplicateSlotId(f"duplicate slot id {sid}")
        seen.add(sid)
        rpy = [math.radians(v) for v in rpy_deg]
        slots.append(FormationSlot(sid, Pose.from_xyz_rpy(xyz, rpy)))
    slots.sort(key=lambda s: s.slot_id)
    return FormationSpec(name, tuple(slots), d_min)


def dump_formation(spec: FormationSpec) -> str:
    """Serialize to the document schema accepted by load_formation."""
    doc = {
        "name": spec.name,
        "d_min": spec.d_min,
        "slots": [
            {
                "id": s.slot_id,
                "xyz": [float(v) for v in s.offset.translation],
                "rpy_deg": [0.0, 0.0, math.degrees(s.offset.yaw)],
            }
            for s in sorted(spec.slots, key=lambda x: x.slot_id)
        ],
    }
    return yaml.safe_dump(doc, sort_keys=False)


@dataclass(frozen=True)
class FormationTransition:
    """Timed morph between two formations.

    slot_mapping maps old slot ids to new slot ids; unmapped old slots are
    detached, unmapped new slots are vacant. Mapped slot paths are sampled
    at construction to check they never dip under d_min.
    """

    from_spec: FormationSpec
    to_spec: FormationSpec
    start_time: float
    duration: float
    slot_mapping: dict[int, int]

    def __post_init__(self):
        if self.duration <= 0.0:
            raise ConstraintViolation(
                f"transition duration must be positive, got {self.duration}")
        from_ids = {s.slot_id for s in self.from_spec.slots}
        to_ids = {s.slot_id for s in self.to_spec.slots}
        for old, new in self.slot_mapping.items():
            if old not in from_ids:
                raise UnknownSlot(f"mapping source slot {old} not in {self.from_spec.name!r}")
            if new not in to_ids:
                raise UnknownSlot(f"mapping target slot {new} not in {self.to_spec.name!r}")
        if len(set(self.slot_mapping.values())) != len(self.slot_mapping):
            raise ConstraintViolation("slot_mapping maps two old slots to one new slot")
        self._validate_clearance()

    @property
    def d_min(self) -> float:
        return min(self.from_spec.d_min, self.to_spec.d_min)

    def _validate_clearance(self):
        for step in range(_TRANSITION_SAMPLES + 1):
            s = step / _TRANSITION_SAMPLES
            pts = self._mapped_translations(s)
            for i in range(len(pts)):
                for j in range(i + 1, len(pts)):
                    d = float(np.linalg.norm(pts[i] - pts[j]))
                    if d < self.d_min:
                        raise ConstraintViolation(
                            f"transition {self.from_spec.name!r}->{self.to_spec.name!r} "
                            f"drops to {d:.4f} m (< d_min {self.d_min:.4f} m) at s={s:.2f}")

    def _mapped_translations(self, s: float) -> list[np.ndarray]:
        pts = []
        for old, new in sorted(self.slot_mapping.items()):
            a = self.from_spec.slot(old).offset.translation
            b = self.to_spec.slot(new).offset.translation
            pts.append(a + s * (b - a))
        return pts

    def progress(self, t: float) -> float:
        return (t - self.start_time) / self.duration

    @property
    def end_time(self) -> float:
        return self.start_time + self.duration


def interpolate(tr: FormationTransition, t: float) -> FormationSpec:
    """Formation at time t within the transition window.

    Mapped slots lerp translations and slerp rotations from their old to
    their new offset; vacant new slots hold their target offset. Slot ids
    follow the target formation.
    """
    if t < tr.start_time or t > tr.end_time:
        raise OutOfWindow(
            f"t={t} outside transition window [{tr.start_time}, {tr.end_time}]")
    s = tr.progress(t)
    inverse_map = {new: old for old, new in tr.slot_mapping.items()}
    slots = []
    for target in sorted(tr.to_spec.slots, key=lambda x: x.slot_id):
        old_id = inverse_map.get(target.slot_id)
        if old_id is None:
            slots.append(target)
            continue
        a = tr.from_spec.slot(old_id).offset
        b = target.offset
        trans = a.translation + s * (b.translation - a.translation)
        rot = quat_slerp(a.rotation, b.rotation, s)
        slots.append(FormationSlot(target.slot_id, Pose(rot, trans)))
    # Vacant (unmapped) slots may legitimately stand closer than d_min to a
    # slot passing by mid-morph; only mapped pairs carry the sampled
    # clearance guarantee, so skip the constructor's pairwise check here.
    return _unchecked_spec(f"{tr.from_spec.name}->{tr.to_spec.name}",
                           tuple(slots), tr.d_min)


def detach_slot(spec: FormationSpec, slot_id: int) -> FormationSpec:
    """Remove a slot; remaining ids are re-indexed contiguously, order kept."""
    ids = [s.slot_id for s in sorted(spec.slots, key=lambda x: x.slot_id)]
    if slot_id not in ids:
        raise UnknownSlot(f"no slot {slot_id} in formation {spec.name!r}")
    if len(ids) == 1:
        raise EmptyFormation(f"detaching slot {slot_id} would empty {spec.name!r}")
    remaining = [s for s in sorted(spec.slots, key=lambda x: x.slot_id)
                 if s.slot_id != slot_id]
    slots = tuple(FormationSlot(i, s.offset) for i, s in enumerate(remaining))
    return replace(spec, slots=slots)


def attach_slot(spec: FormationSpec, offset: Pose) -> FormationSpec:
    """Append a slot with the next id; placement must clear d_min (inclusive)."""
    for s in spec.slots:
        d = float(np.linalg.norm(offset.translation - s.offset.translation))
        if d < spec.d_min:
            raise ConstraintViolation(
                f"new slot at {offset.translation} is {d:.4f} m from slot "
                f"{s.slot_id} (< d_min {spec.d_min:.4f} m)")
    slots = spec.slots + (FormationSlot(len(spec.slots), offset),)
    return replace(spec, slots=slots)


def slot_remap_after_detach(spec: FormationSpec, slot_id: int) -> dict[int, int]:
    """Old-id -> new-id map matching detach_slot's re-indexing."""
    ids = sorted(s.slot_id for s in spec.slots)
    mapping = {}
    shift = 0
    for sid in ids:
        if sid == slot_id:
            shift = 1
            continue
        mapping[sid] = sid - shift
    return mapping
