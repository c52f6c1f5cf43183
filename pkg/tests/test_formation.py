import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from vcflock.errors import (
    ConstraintViolation,
    DuplicateSlotId,
    EmptyFormation,
    OutOfWindow,
    ParseError,
    UnknownSlot,
)
from vcflock.formation import (
    FormationSpec,
    FormationTransition,
    attach_slot,
    detach_slot,
    dump_formation,
    interpolate,
    line_formation,
    load_formation,
    regular_formation,
)
from vcflock.pose import Pose, vec3


class TestRegularFormation:
    def test_square_slots(self):
        spec = regular_formation(4, 1.0, 0.5)
        pts = spec.offsets_array()
        expect = np.array([[1, 0, 0], [0, 1, 0], [-1, 0, 0], [0, -1, 0]])
        assert np.max(np.abs(pts - expect)) < 1e-12
        assert spec.d_max == pytest.approx(1.0)

    def test_single_slot(self):
        spec = regular_formation(1, 2.0, 0.1)
        assert len(spec.slots) == 1
        assert np.allclose(spec.slots[0].offset.translation, [2, 0, 0])

    def test_chord_violation(self):
        with pytest.raises(ConstraintViolation) as exc:
            regular_formation(3, 1.1547, 2.1)
        assert "d_max" in str(exc.value)

    def test_chord_boundary_pair(self):
        # chord at n=3, r=1.1547 is 1.9999990675; split a 1e-6 hair around it
        regular_formation(3, 1.1547, 2.0 - 1e-6)
        with pytest.raises(ConstraintViolation):
            regular_formation(3, 1.1547, 2.0 + 1e-6)

    def test_chord_identity(self):
        for n in (2, 3, 5, 8, 12):
            spec = regular_formation(n, 2.5, 0.1)
            pts = spec.offsets_array()
            adjacent = np.linalg.norm(pts[1] - pts[0])
            assert adjacent == pytest.approx(2 * 2.5 * math.sin(math.pi / n),
                                             abs=1e-9)

    def test_rejects_bad_counts(self):
        with pytest.raises(ConstraintViolation):
            regular_formation(0, 1.0, 0.1)
        with pytest.raises(ConstraintViolation):
            regular_formation(4, -1.0, 0.1)


class TestLineFormation:
    def test_two_slots_split_around_origin(self):
        spec = line_formation(2, 1.0, 0.5)
        pts = spec.offsets_array()
        assert np.allclose(pts, [[0, 0.5, 0], [0, -0.5, 0]])

    def test_three_slots_middle_on_origin(self):
        spec = line_formation(3, 1.0, 0.5)
        pts = spec.offsets_array()
        assert np.allclose(pts, [[0, 1, 0], [0, 0, 0], [0, -1, 0]])

    def test_spacing_below_dmin(self):
        with pytest.raises(ConstraintViolation):
            line_formation(2, 0.3, 0.5)


class TestLoadFormation:
    def test_square_document(self):
        doc = """
name: square-2m
d_min: 1.5
slots:
  - {id: 0, xyz: [1, 1, 0]}
  - {id: 1, xyz: [-1, 1, 0]}
  - {id: 2, xyz: [-1, -1, 0]}
  - {id: 3, xyz: [1, -1, 0]}
"""
        spec = load_formation(doc)
        assert len(spec.slots) == 4
        assert spec.d_max == pytest.approx(math.sqrt(2.0))

    def test_empty_slots(self):
        with pytest.raises(ParseError):
            load_formation({"name": "x", "d_min": 1.0, "slots": []})

    def test_duplicate_positions(self):
        with pytest.raises(ConstraintViolation):
            load_formation({"name": "x", "d_min": 1.0, "slots": [
                {"id": 0, "xyz": [0, 0, 0]},
                {"id": 1, "xyz": [0, 0, 0]},
            ]})

    def test_duplicate_ids(self):
        with pytest.raises(DuplicateSlotId):
            load_formation({"name": "x", "d_min": 0.5, "slots": [
                {"id": 0, "xyz": [0, 0, 0]},
                {"id": 0, "xyz": [5, 0, 0]},
            ]})

    def test_non_contiguous_ids(self):
        with pytest.raises(ParseError):
            load_formation({"name": "x", "d_min": 0.5, "slots": [
                {"id": 0, "xyz": [0, 0, 0]},
                {"id": 2, "xyz": [5, 0, 0]},
            ]})

    def test_malformed_yaml(self):
        with pytest.raises(ParseError):
            load_formation("{not: [valid")

    def test_rpy_round_trip(self):
        spec = load_formation({"name": "r", "d_min": 0.5, "slots": [
            {"id": 0, "xyz": [1, 0, 0], "rpy_deg": [0, 0, 90]},
            {"id": 1, "xyz": [-1, 0, 0]},
        ]})
        again = load_formation(dump_formation(spec))
        assert again.slots[0].offset.yaw == pytest.approx(math.pi / 2)


class TestInterpolate:
    def _transition(self, duration=1.5):
        square = load_formation({"name": "square", "d_min": 1.5, "slots": [
            {"id": 0, "xyz": [1, 1, 0]},
            {"id": 1, "xyz": [-1, 1, 0]},
            {"id": 2, "xyz": [-1, -1, 0]},
        ]})
        tri = regular_formation(3, 1.1547005383792515, 1.5, name="triangle")
        return FormationTransition(square, tri, start_time=5.0,
                                   duration=duration,
                                   slot_mapping={0: 0, 1: 1, 2: 2})

    def test_endpoints_exact(self):
        tr = self._transition()
        start = interpolate(tr, 5.0)
        end = interpolate(tr, 6.5)
        assert np.allclose(start.offsets_array(),
                           tr.from_spec.offsets_array())
        assert np.allclose(end.offsets_array(), tr.to_spec.offsets_array())

    def test_midpoint_translation(self):
        tr = self._transition()
        mid = interpolate(tr, 5.75)
        slot0 = mid.slot(0).offset.translation
        assert np.allclose(slot0, [1.07735026919, 0.5, 0.0], atol=1e-9)

    def test_out_of_window(self):
        tr = self._transition()
        with pytest.raises(OutOfWindow):
            interpolate(tr, 4.999)
        with pytest.raises(OutOfWindow):
            interpolate(tr, 6.501)

    def test_continuity(self):
        tr = self._transition()
        prev = interpolate(tr, 5.0).offsets_array()
        for k in range(1, 50):
            cur = interpolate(tr, 5.0 + k * 0.03).offsets_array()
            step = np.max(np.linalg.norm(cur - prev, axis=1))
            assert step < 0.05  # O(dt) with dt = 0.03 and ~1 m total travel
            prev = cur

    def test_clearance_validated_on_construction(self):
        a = load_formation({"name": "a", "d_min": 1.8, "slots": [
            {"id": 0, "xyz": [1, 0, 0]},
            {"id": 1, "xyz": [-1, 0, 0]},
        ]})
        b = load_formation({"name": "b", "d_min": 1.8, "slots": [
            {"id": 0, "xyz": [-1, 0.1, 0]},
            {"id": 1, "xyz": [1, -0.1, 0]},
        ]})
        # slots swap sides, passing through each other mid-transition
        with pytest.raises(ConstraintViolation):
            FormationTransition(a, b, start_time=0.0, duration=1.0,
                                slot_mapping={0: 0, 1: 1})


class TestDetachAttach:
    def test_detach_reindexes(self):
        spec = regular_formation(4, 2.0, 0.5)
        out = detach_slot(spec, 1)
        assert [s.slot_id for s in out.slots] == [0, 1, 2]
        assert np.allclose(out.slot(1).offset.translation,
                           spec.slot(2).offset.translation)

    def test_detach_last_slot_fails(self):
        spec = regular_formation(1, 1.0, 0.5)
        with pytest.raises(EmptyFormation):
            detach_slot(spec, 0)

    def test_detach_unknown(self):
        spec = regular_formation(4, 2.0, 0.5)
        with pytest.raises(UnknownSlot):
            detach_slot(spec, 9)

    def test_attach_far_ok(self):
        spec = regular_formation(3, 1.0, 0.5)
        out = attach_slot(spec, Pose(translation=vec3(2.0, 0, 0)))
        assert len(out.slots) == 4
        assert out.slots[-1].slot_id == 3

    def test_attach_occupied_position(self):
        spec = regular_formation(3, 1.0, 0.5)
        with pytest.raises(ConstraintViolation):
            attach_slot(spec, Pose(translation=vec3(1.0, 0, 0)))

    def test_attach_exactly_at_dmin_accepted(self):
        spec = load_formation({"name": "pair", "d_min": 1.0, "slots": [
            {"id": 0, "xyz": [0, 0, 0]},
        ]})
        out = attach_slot(spec, Pose(translation=vec3(1.0, 0, 0)))
        d = np.linalg.norm(out.slot(1).offset.translation
                           - out.slot(0).offset.translation)
        assert d == 1.0

    def test_detach_then_attach_restores_multiset(self):
        spec = regular_formation(5, 2.0, 0.5)
        removed = spec.slot(2).offset
        out = attach_slot(detach_slot(spec, 2), removed)
        original = sorted(map(tuple, spec.offsets_array().round(12)))
        rebuilt = sorted(map(tuple, out.offsets_array().round(12)))
        assert original == rebuilt


@settings(max_examples=60, deadline=None)
@given(
    n=st.integers(min_value=1, max_value=16),
    d_max=st.floats(min_value=0.1, max_value=50.0),
    ratio=st.floats(min_value=0.01, max_value=0.99),
)
def test_constructive_separation_and_cohesion(n, d_max, ratio):
    """Every accepted formation satisfies its own d_min and d_max bounds."""
    d_min = 2.0 * d_max * math.sin(math.pi / n) * ratio if n > 1 else 0.1
    try:
        spec = regular_formation(n, d_max, max(d_min, 1e-6))
    except ConstraintViolation:
        return
    assert spec.min_slot_distance() >= spec.d_min - 1e-12
    for s in spec.slots:
        assert np.linalg.norm(s.offset.translation) <= spec.d_max + 1e-12
