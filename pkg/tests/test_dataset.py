import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from prometheus_teleop.dataset import (
    BINS,
    DEFAULT_A_MAX,
    Action,
    CorruptRecord,
    NonPositiveScale,
    Observation,
    OutOfRange,
    SchemaVersionMismatch,
    TooShort,
    Trajectory,
    TrajectoryRecorder,
    TrajectoryStep,
    compute_deltas,
    destandardize_action,
    discretize,
    export_trajectory,
    import_trajectory,
    is_clamped,
    standardize_action,
    trajectories_equal,
)
from prometheus_teleop.geometry import Pose, quat_normalize
from prometheus_teleop.gripper_sim import GraspOutcome

A_MAX = DEFAULT_A_MAX


def make_obs(rng, opening=None):
    opening = float(rng.uniform(0, 85)) if opening is None else opening
    return Observation(
        joints=rng.uniform(-np.pi, np.pi, 6),
        ee_pose=Pose(rng.uniform(-0.5, 0.5, 3), quat_normalize(rng.normal(size=4))),
        gripper_pos_norm=opening / 85.0,
        force_norm=float(rng.uniform(0, 1)),
        opening_mm=opening,
    )


def make_trajectory(rng, n_steps=5):
    rec = TrajectoryRecorder("ep-001", "tomato", a_max=A_MAX)
    for _ in range(n_steps):
        rec.append(make_obs(rng))
    return rec.build(GraspOutcome("success", 2.5, 3))


class TestStandardize:
    def test_zero_maps_to_zero(self):
        assert np.all(standardize_action(np.zeros(7), A_MAX) == 0.0)

    def test_boundary_maps_to_one(self):
        assert np.all(standardize_action(A_MAX, A_MAX) == 1.0)

    def test_fraction(self):
        raw = np.zeros(7)
        raw[0] = 0.03
        scales = np.full(7, 0.1)
        out = standardize_action(raw, scales)
        assert out[0] == pytest.approx(0.3, abs=1e-15)

    def test_clamps_and_flags(self):
        raw = np.zeros(7)
        raw[2] = 0.2  # 4x the joint scale
        out = standardize_action(raw, A_MAX)
        assert out[2] == 1.0
        assert is_clamped(raw, A_MAX)

    def test_round_trip_identity_in_range(self, rng):
        for _ in range(100):
            raw = rng.uniform(-1, 1, 7) * A_MAX
            back = destandardize_action(standardize_action(raw, A_MAX), A_MAX)
            assert np.max(np.abs(back - raw)) <= 1e-15 * np.max(np.abs(raw) + 1)

    def test_non_positive_scale_rejected(self):
        with pytest.raises(NonPositiveScale):
            standardize_action(np.zeros(7), np.zeros(7))


class TestDiscretize:
    def test_bottom_edge(self):
        assert discretize(0.0) == 0

    def test_top_clamp(self):
        assert discretize(1.0) == BINS - 1 == 255

    def test_midpoint(self):
        assert discretize(0.5) == 128

    def test_out_of_range(self):
        with pytest.raises(OutOfRange):
            discretize(-0.01)
        with pytest.raises(OutOfRange):
            discretize(1.01)

    def test_monotone_and_surjective_at_half_bin_resolution(self):
        values = np.arange(0, 513) / 512.0
        bins = [discretize(float(v)) for v in values]
        assert all(b1 <= b2 for b1, b2 in zip(bins, bins[1:]))
        assert set(bins) == set(range(256))

    def test_uniform_bin_widths(self):
        for k in range(256):
            lo, hi = k / 256, (k + 1) / 256 - 1e-12
            assert discretize(lo) == k
            assert discretize(hi) == k


class TestComputeDeltas:
    def test_constant_states_zero_deltas(self):
        states = np.tile(np.linspace(0, 1, 7), (5, 1))
        assert np.all(compute_deltas(states) == 0.0)

    def test_ramp(self):
        states = np.cumsum(np.full((6, 7), 0.01), axis=0)
        deltas = compute_deltas(states)
        assert np.allclose(deltas, 0.01, atol=1e-15)

    def test_telescoping_reconstruction(self, rng):
        states = rng.uniform(-1, 1, (50, 7))
        deltas = compute_deltas(states)
        recon = states[0] + deltas.sum(axis=0)
        assert np.max(np.abs(recon - states[-1])) < 1e-12

    def test_too_short(self):
        with pytest.raises(TooShort):
            compute_deltas(np.zeros((1, 7)))


class TestRecorder:
    def test_actions_are_standardized_deltas(self, rng):
        traj = make_trajectory(rng, n_steps=4)
        raw = traj.raw_states()
        for k in range(3):
            expect = standardize_action(raw[k + 1] - raw[k], A_MAX)
            assert np.array_equal(traj.steps[k].action.values, expect)
        assert traj.steps[-1].action is None

    def test_reconstruction_within_tolerance(self, rng):
        rec = TrajectoryRecorder("ep", "t", a_max=A_MAX)
        base = make_obs(rng, opening=40.0)
        rec.append(base)
        state = base.raw_state()
        for _ in range(20):
            delta = rng.uniform(-0.9, 0.9, 7) * A_MAX
            state = state + delta
            rec.append(
                Observation(
                    joints=state[:6],
                    ee_pose=base.ee_pose,
                    gripper_pos_norm=min(max(state[6] / 85.0, 0), 1),
                    force_norm=0.0,
                    opening_mm=state[6],
                )
            )
        traj = rec.build()
        recon = traj.reconstruct_states()
        assert np.max(np.abs(recon - traj.raw_states())) < 1e-9

    def test_clamped_steps_flagged(self, rng):
        rec = TrajectoryRecorder("ep", "t", a_max=A_MAX)
        obs1 = make_obs(rng, opening=10.0)
        joints2 = obs1.joints.copy()
        joints2[0] += 0.5  # 10x the joint scale
        rec.append(obs1)
        rec.append(
            Observation(
                joints=joints2,
                ee_pose=obs1.ee_pose,
                gripper_pos_norm=obs1.gripper_pos_norm,
                force_norm=obs1.force_norm,
                opening_mm=obs1.opening_mm,
            )
        )
        traj = rec.build()
        assert traj.steps[0].action.clamped


class TestContainer:
    def test_single_state_round_trips(self, rng, tmp_path):
        rec = TrajectoryRecorder("solo", "egg")
        rec.append(make_obs(rng))
        traj = rec.build()
        path = tmp_path / "solo.jsonl"
        export_trajectory(traj, path)
        assert trajectories_equal(import_trajectory(path), traj)

    def test_long_episode_round_trips_exactly(self, rng, tmp_path):
        traj = make_trajectory(rng, n_steps=300)
        traj.object_params = {
            "name": "tomato",
            "free_size": 60.0,
            "stiffness": 0.8,
            "damage_threshold": math.inf,
            "mass": 0.12,
            "friction_mu": 0.6,
        }
        traj.meta = {"seed": 7}
        path = tmp_path / "long.jsonl"
        export_trajectory(traj, path)
        back = import_trajectory(path)
        assert trajectories_equal(back, traj)
        assert math.isinf(back.object_params["damage_threshold"])

    @given(n=st.integers(1, 40), seed=st.integers(0, 2**16))
    @settings(max_examples=25, deadline=None)
    def test_property_round_trip(self, n, seed, tmp_path_factory):
        rng = np.random.default_rng(seed)
        traj = make_trajectory(rng, n_steps=n)
        path = tmp_path_factory.mktemp("ds") / "t.jsonl"
        export_trajectory(traj, path)
        assert trajectories_equal(import_trajectory(path), traj)

    def test_truncated_file_is_corrupt_not_partial(self, rng, tmp_path):
        traj = make_trajectory(rng, n_steps=10)
        path = tmp_path / "t.jsonl"
        export_trajectory(traj, path)
        lines = path.read_text().splitlines()
        (tmp_path / "cut.jsonl").write_text("\n".join(lines[:-3]) + "\n")
        with pytest.raises(CorruptRecord):
            import_trajectory(tmp_path / "cut.jsonl")

    def test_step_count_mismatch_detected(self, rng, tmp_path):
        traj = make_trajectory(rng, n_steps=4)
        path = tmp_path / "t.jsonl"
        export_trajectory(traj, path)
        lines = path.read_text().splitlines()
        del lines[2]
        (tmp_path / "bad.jsonl").write_text("\n".join(lines) + "\n")
        with pytest.raises(CorruptRecord):
            import_trajectory(tmp_path / "bad.jsonl")

    def test_schema_version_mismatch(self, rng, tmp_path):
        traj = make_trajectory(rng, n_steps=2)
        path = tmp_path / "t.jsonl"
        export_trajectory(traj, path)
        lines = path.read_text().splitlines()
        header = json.loads(lines[0])
        header["schema"] = "prometheus-ds/999"
        (tmp_path / "v.jsonl").write_text("\n".join([json.dumps(header)] + lines[1:]) + "\n")
        with pytest.raises(SchemaVersionMismatch):
            import_trajectory(tmp_path / "v.jsonl")

    def test_garbage_line_is_corrupt(self, rng, tmp_path):
        traj = make_trajectory(rng, n_steps=2)
        path = tmp_path / "t.jsonl"
        export_trajectory(traj, path)
        lines = path.read_text().splitlines()
        lines.insert(1, "{not json")
        (tmp_path / "g.jsonl").write_text("\n".join(lines) + "\n")
        with pytest.raises(CorruptRecord):
            import_trajectory(tmp_path / "g.jsonl")


class TestInvariants:
    def test_normalized_fields_validated(self, rng):
        with pytest.raises(ValueError):
            Observation(
                joints=np.zeros(6),
                ee_pose=Pose.identity(),
                gripper_pos_norm=1.2,
                force_norm=0.0,
                opening_mm=100.0,
            )

    def test_action_range_validated(self):
        with pytest.raises(ValueError):
            Action(np.full(7, 1.5))

    def test_recorded_normals_always_in_unit_interval(self, rng):
        traj = make_trajectory(rng, n_steps=30)
        for step in traj.steps:
            assert 0.0 <= step.observation.gripper_pos_norm <= 1.0
            assert 0.0 <= step.observation.force_norm <= 1.0
