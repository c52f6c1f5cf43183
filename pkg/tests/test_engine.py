import math

import numpy as np
import pytest

from vcflock.engine import (
    AgentModel,
    Attach,
    Detach,
    Morph,
    Pause,
    Resume,
    SetSpeed,
    StartTrajectory,
    SwarmEngine,
    assign_slots,
)
from vcflock.errors import (
    ConstraintViolation,
    CountMismatch,
    SetupConflict,
    UnknownAgent,
)
from vcflock.formation import line_formation, load_formation, regular_formation
from vcflock.kernels import min_pairwise_distance
from vcflock.pose import Pose, vec3
from vcflock.trajectory import TrajectorySpec, plan

TRIANGLE = load_formation({"name": "triangle-vc", "d_min": 1.0, "slots": [
    {"id": 0, "xyz": [1.414, 0, 0]},
    {"id": 1, "xyz": [-0.7, 1, 0]},
    {"id": 2, "xyz": [-0.7, -1, 0]},
]})


def make_engine(formation=TRIANGLE, mode="ideal", at_slots=True, **kw):
    model = AgentModel(mode=mode, k=kw.pop("k", 2.0),
                       v_max_agent=kw.pop("v_max_agent", 10.0))
    traj = kw.pop("traj", plan(TrajectorySpec(
        waypoints=((0, 0, 1), (15, 0, 1)), v_max=0.5, a_max=1.0)))
    vc0 = traj.sample(0.0)
    if at_slots:
        init = np.array([vc0.pose.translation + s.offset.translation
                         for s in formation.slots])
    else:
        init = kw.pop("init")
    events = []
    eng = SwarmEngine(formation, model, init, vc_pose=vc0.pose,
                      on_event=lambda t, k2, d: events.append((t, k2, d)), **kw)
    eng.events = events
    eng.apply_assignment(assign_slots(init, formation, vc0.pose))
    return eng, traj


class TestAssignSlots:
    def test_zero_cost_fixed_point(self):
        formation = regular_formation(4, 2.0, 0.5)
        vc = Pose.identity()
        init = formation.offsets_array()
        mapping = assign_slots(init, formation, vc)
        assert mapping == {0: 0, 1: 1, 2: 2, 3: 3}

    def test_swapped_agents_take_near_slots(self):
        formation = line_formation(2, 1.0, 0.3)
        vc = Pose.identity()
        # agents standing on each other's "index" slot: optimal is to stay
        init = [vec3(0, -0.5, 0), vec3(0, 0.5, 0)]
        mapping = assign_slots(init, formation, vc)
        # slot 0 is (0, +0.5), slot 1 is (0, -0.5): crossing costs 2, staying 0
        assert mapping == {0: 1, 1: 0}
        cost_stay = 0.0
        cost_cross = 2.0
        assert cost_stay < cost_cross

    def test_count_mismatch(self):
        formation = regular_formation(4, 2.0, 0.5)
        with pytest.raises(CountMismatch):
            assign_slots([vec3(0, 0, 0)] * 3, formation, Pose.identity())


class TestSetup:
    def test_already_in_formation_is_instant(self):
        eng, _ = make_engine()
        assert eng.phase == "idle"
        assert eng.t_s == 0.0
        assert eng.tick_index == 0

    def test_straight_line_timing(self):
        formation = load_formation({"name": "solo", "d_min": 0.1, "slots": [
            {"id": 0, "xyz": [0, 0, 0]},
        ]})
        traj = plan(TrajectorySpec(waypoints=((1, 0, 1), (5, 0, 1)), v_max=0.5))
        vc0 = traj.sample(0.0)
        eng = SwarmEngine(formation, AgentModel(mode="ideal", v_max_agent=1.0),
                          [vc0.pose.translation + vec3(-1.0, 0, 0)],
                          vc_pose=vc0.pose)
        eng.apply_assignment({0: 0})
        t_s = eng.run_setup(v_max=0.5)
        # 1 m at 0.5 m/s, arriving within the 0.05 m tolerance
        assert 1.85 <= t_s <= 2.05

    def test_crossing_paths_conflict(self):
        formation = line_formation(2, 1.0, 0.8)
        traj = plan(TrajectorySpec(waypoints=((0, 0, 1), (5, 0, 1)), v_max=0.5))
        vc0 = traj.sample(0.0)
        # agents start mirrored so their straight paths cross at the middle
        init = [vc0.pose.translation + vec3(0, -2.0, 0),
                vc0.pose.translation + vec3(0, 2.0, 0)]
        eng = SwarmEngine(formation, AgentModel(mode="ideal", v_max_agent=1.0),
                          init, vc_pose=vc0.pose)
        eng.apply_assignment({0: 0, 1: 1})  # 0 -> (0, +0.5), 1 -> (0, -0.5)
        with pytest.raises(SetupConflict):
            eng.run_setup(v_max=0.5)


class TestTick:
    def test_ideal_rigid_distances_constant(self):
        eng, traj = make_engine()
        eng.submit(StartTrajectory(traj))
        base = None
        for _ in range(600):
            eng.tick()
            d = np.sort([np.linalg.norm(eng._pos[i] - eng._pos[j])
                         for i in range(3) for j in range(i + 1, 3)])
            if base is None:
                base = d
            assert np.max(np.abs(d - base)) < 1e-9

    def test_open_loop_reference_law(self):
        from vcflock.pose import transform_point
        eng, traj = make_engine()
        eng.submit(StartTrajectory(traj))
        for _ in range(300):
            eng.tick()
        state = eng.snapshot()
        for a in state.agents:
            offset = state.formation.slot(a.slot_id).offset
            expect = transform_point(state.vc.pose, offset.translation)
            assert np.linalg.norm(a.reference.translation - expect) < 1e-12

    def test_lagged_step_response(self):
        formation = load_formation({"name": "solo", "d_min": 0.1, "slots": [
            {"id": 0, "xyz": [0, 0, 0]},
        ]})
        # stationary trajectory holder: start 1 m behind the reference
        traj = plan(TrajectorySpec(waypoints=((1, 0, 1),), v_max=0.5,
                                   yaw_mode="sequence",
                                   yaw_sequence=((100.0, 0.0),),
                                   yaw_rate_max=1.0))
        vc0 = traj.sample(0.0)
        eng = SwarmEngine(formation, AgentModel(mode="lagged", k=2.0,
                                                v_max_agent=100.0),
                          [vc0.pose.translation + vec3(-1.0, 0, 0)],
                          vc_pose=vc0.pose,
                          pos_tolerance=5.0, yaw_tolerance=5.0)
        eng.apply_assignment({0: 0})
        eng.submit(StartTrajectory(traj))
        for _ in range(50):  # 0.5 s at k=2 -> error e^-1
            eng.tick()
        err = np.linalg.norm(eng._pos[0] - eng._ref_pos[0])
        assert err == pytest.approx(math.exp(-1.0), abs=5e-3)

    def test_lagged_steady_state_error(self):
        eng, traj = make_engine(mode="lagged", k=2.0, v_max_agent=5.0)
        eng.submit(StartTrajectory(traj))
        for _ in range(1500):  # deep into the cruise segment
            eng.tick()
        err = np.linalg.norm(eng._pos[0] - eng._ref_pos[0])
        assert abs(err - 0.5 / 2.0) / (0.5 / 2.0) < 0.05

    def test_stationary_trajectory_keeps_state(self):
        eng, _ = make_engine(traj=plan(TrajectorySpec(
            waypoints=((0, 0, 1),), v_max=0.5, yaw_mode="sequence",
            yaw_sequence=((100.0, 0.0),), yaw_rate_max=1.0)))
        before = eng._pos.copy()
        eng.submit(StartTrajectory(eng.trajectory or plan(TrajectorySpec(
            waypoints=((0, 0, 1),), v_max=0.5, yaw_mode="sequence",
            yaw_sequence=((100.0, 0.0),), yaw_rate_max=1.0))))
        t0 = eng.t
        eng.tick()
        assert np.allclose(eng._pos, before, atol=1e-12)
        assert eng.t == pytest.approx(t0 + 0.01)


class TestCommands:
    def test_detach_then_morph_keeps_motion(self):
        square = load_formation({"name": "square", "d_min": 1.5, "slots": [
            {"id": 0, "xyz": [1, 1, 0]},
            {"id": 1, "xyz": [-1, 1, 0]},
            {"id": 2, "xyz": [-1, -1, 0]},
            {"id": 3, "xyz": [1, -1, 0]},
        ]})
        tri = regular_formation(3, 1.1547005383792515, 1.5, name="triangle")
        eng, traj = make_engine(formation=square)
        eng.submit(StartTrajectory(traj))
        for _ in range(200):
            eng.tick()
        r1 = eng.submit(Detach(3))
        r2 = eng.submit(Morph(tri, duration=1.5))
        eng.tick()
        assert r1.status == "accepted"
        assert r2.status == "accepted"
        start_t = eng.t - eng.dt
        speeds = []
        completed = [e for e in eng.events if e[1] == "morph_completed"]
        while not completed:
            eng.tick()
            speeds.append(eng.vc_sample.speed)
            completed = [e for e in eng.events if e[1] == "morph_completed"]
        done_t = completed[0][0]
        assert done_t == pytest.approx(start_t + 1.5, abs=eng.dt + 1e-9)
        assert min(speeds) > 0.4  # cruise never pauses

    def test_morph_reference_continuity(self):
        square = load_formation({"name": "square", "d_min": 1.5, "slots": [
            {"id": 0, "xyz": [1, 1, 0]},
            {"id": 1, "xyz": [-1, 1, 0]},
            {"id": 2, "xyz": [-1, -1, 0]},
            {"id": 3, "xyz": [1, -1, 0]},
        ]})
        tri = regular_formation(3, 1.1547005383792515, 1.5, name="triangle")
        eng, traj = make_engine(formation=square, v_max_agent=10.0)
        eng.submit(StartTrajectory(traj))
        for _ in range(100):
            eng.tick()
        eng.submit(Detach(3))
        eng.submit(Morph(tri, duration=1.5))
        prev = None
        for _ in range(200):
            eng.tick()
            refs = eng._ref_pos[eng.active_mask()]
            if prev is not None:
                jump = np.max(np.linalg.norm(refs - prev, axis=1))
                assert jump <= 10.0 * eng.dt + 1e-9
            prev = refs.copy()

    def test_detach_unknown_agent_rejected(self):
        eng, traj = make_engine()
        eng.submit(StartTrajectory(traj))
        eng.tick()
        receipt = eng.submit(Detach(99))
        eng.tick()
        assert receipt.status == "rejected"
        assert "UnknownAgent" in receipt.reason

    def test_attach_at_occupied_offset_rejected(self):
        eng, traj = make_engine()
        eng.submit(StartTrajectory(traj))
        eng.tick()
        eng.submit(Detach(2))
        eng.tick()
        receipt = eng.submit(Attach(2, TRIANGLE.slot(0).offset))
        eng.tick()
        assert receipt.status == "rejected"
        assert "ConstraintViolation" in receipt.reason

    def test_detach_attach_rejoin(self):
        eng, traj = make_engine(v_max_agent=3.0)
        eng.submit(StartTrajectory(traj))
        for _ in range(100):
            eng.tick()
        eng.submit(Detach(2))
        eng.tick()
        held = eng._pos[2].copy()
        for _ in range(100):
            eng.tick()
        assert np.allclose(eng._pos[2], held, atol=1e-12)  # hovers in place
        receipt = eng.submit(Attach(2, Pose(translation=vec3(-0.7, -1, 0))))
        eng.tick()
        assert receipt.status == "accepted"
        for _ in range(600):
            eng.tick()
        assert not eng._joining[2]
        err = np.linalg.norm(eng._pos[2] - eng._ref_pos[2])
        assert err < 0.06

    def test_morph_count_mismatch(self):
        eng, traj = make_engine()
        eng.submit(StartTrajectory(traj))
        eng.tick()
        receipt = eng.submit(Morph(regular_formation(5, 3.0, 1.0)))
        eng.tick()
        assert receipt.status == "rejected"
        assert "CountMismatch" in receipt.reason

    def test_pause_resume(self):
        eng, traj = make_engine()
        eng.submit(StartTrajectory(traj))
        for _ in range(300):
            eng.tick()
        eng.submit(Pause())
        eng.tick()
        frozen = eng.vc_sample.pose.translation.copy()
        for _ in range(50):
            eng.tick()
            assert np.linalg.norm(eng.vc_sample.twist.linear) == 0.0
        assert np.allclose(eng.vc_sample.pose.translation, frozen, atol=1e-12)
        eng.submit(Resume())
        for _ in range(100):
            eng.tick()
        assert np.linalg.norm(eng.vc_sample.pose.translation - frozen) > 0.05

    def test_set_speed_replans(self):
        eng, traj = make_engine()
        eng.submit(StartTrajectory(traj))
        for _ in range(500):
            eng.tick()
        eng.submit(SetSpeed(1.0))
        eng.tick()
        for _ in range(400):
            eng.tick()
        assert eng.vc_sample.speed == pytest.approx(1.0, abs=1e-9)

    def test_set_speed_rejected_over_global_cap(self):
        eng, traj = make_engine(v_max_global=0.6)
        eng.submit(StartTrajectory(traj))
        eng.tick()
        receipt = eng.submit(SetSpeed(2.0))
        eng.tick()
        assert receipt.status == "rejected"

    def test_commands_apply_in_submission_order(self):
        eng, traj = make_engine()
        r1 = eng.submit(StartTrajectory(traj))
        r2 = eng.submit(Pause())
        r3 = eng.submit(Resume())
        eng.tick()
        assert (r1.status, r2.status, r3.status) == ("accepted",) * 3
        assert not eng._paused


class TestDeterminism:
    def test_identical_runs_bitwise(self):
        def run():
            eng, traj = make_engine(mode="lagged", k=3.0, v_max_agent=2.0)
            eng.submit(StartTrajectory(traj))
            out = []
            for _ in range(500):
                eng.tick()
                out.append(eng._pos.copy())
            return np.array(out)

        a, b = run(), run()
        assert np.array_equal(a, b)

    def test_min_distance_guard_during_morph(self):
        square = load_formation({"name": "square", "d_min": 1.5, "slots": [
            {"id": 0, "xyz": [1, 1, 0]},
            {"id": 1, "xyz": [-1, 1, 0]},
            {"id": 2, "xyz": [-1, -1, 0]},
            {"id": 3, "xyz": [1, -1, 0]},
        ]})
        tri = regular_formation(3, 1.1547005383792515, 1.5, name="triangle")
        eng, traj = make_engine(formation=square)
        eng.submit(StartTrajectory(traj))
        for _ in range(100):
            eng.tick()
        eng.submit(Detach(3))
        eng.submit(Morph(tri, duration=1.5))
        for _ in range(200):
            eng.tick()
            active = eng._pos[eng.active_mask()]
            assert min_pairwise_distance(np.ascontiguousarray(active)) >= 1.5
