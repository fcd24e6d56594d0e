import math

import numpy as np
import pytest

from prometheus_teleop.gripper_sim import (
    DEFAULT_OBJECTS,
    EmptyTrace,
    ForceCappedPolicy,
    GraspOutcome,
    GripperState,
    ObjectModel,
    OutOfPadRange,
    PadMechanism,
    PositionOnlyPolicy,
    classify_outcome,
    contact_step,
    load_object_presets,
    pad_transfer,
    scripted_policy,
    step_opening,
)

MECH = PadMechanism(preload_f=0.5)
TOMATO = DEFAULT_OBJECTS["tomato"]


class TestPadTransfer:
    def test_zero_force(self):
        assert pad_transfer(0.0, 10.0, MECH) == 0.0

    def test_begin_and_end_of_pad_read_identically(self):
        at_begin = pad_transfer(10.0, 0.0, MECH)
        at_end = pad_transfer(10.0, MECH.pad_length, MECH)
        assert at_begin == at_end  # exact equality: uniform transfer by design

    def test_position_independent_everywhere(self, rng):
        for _ in range(50):
            f = float(rng.uniform(0, 30))
            x1, x2 = rng.uniform(0, MECH.pad_length, 2)
            assert pad_transfer(f, float(x1), MECH) == pad_transfer(f, float(x2), MECH)

    def test_preload_subtracted(self):
        assert pad_transfer(MECH.preload_f + 5.0, 1.0, MECH) == pytest.approx(
            5.0, abs=1e-12
        )

    def test_below_preload_reads_zero(self):
        assert pad_transfer(0.3, 1.0, MECH) == 0.0

    def test_contact_off_pad_rejected(self):
        with pytest.raises(OutOfPadRange):
            pad_transfer(1.0, MECH.pad_length + 0.1, MECH)

    def test_deflection_helper(self):
        assert MECH.deflection_mm(1.0) == pytest.approx(
            1.0 / (MECH.spring_k * MECH.spring_count), abs=1e-12
        )


class TestContactStep:
    def test_no_contact_above_free_size(self):
        g = GripperState(opening=70.0, commanded_opening=70.0)
        out, sensor = contact_step(g, TOMATO, 0.01)
        assert out.contact_force == 0.0 and sensor == 0.0

    def test_hooke_force_before_preload(self):
        # 2 mm into a 1 N/mm object => 2 N of contact force
        obj = ObjectModel("block", 60.0, 1.0, math.inf, 0.2, 0.8)
        g = GripperState(opening=58.0, commanded_opening=58.0)
        out, sensor = contact_step(g, obj, 0.01)
        assert out.contact_force == pytest.approx(2.0, abs=1e-12)
        assert sensor == pytest.approx(2.0 - MECH.preload_f, abs=1e-12)

    def test_rigid_object_force_rises_steeply(self):
        obj = ObjectModel("rigid", 60.0, 50.0, math.inf, 0.2, 0.8)
        g = GripperState(opening=61.0, commanded_opening=40.0)
        forces = []
        for _ in range(5):
            g, _ = contact_step(g, obj, 0.01)
            forces.append(g.contact_force)
        diffs = np.diff(forces)
        assert np.all(diffs[1:] >= 50.0 * 1.5 - 1e-9)  # k * speed * dt per tick

    def test_motion_respects_max_speed(self):
        g = GripperState(opening=85.0, commanded_opening=0.0)
        g2 = step_opening(g, 0.01, max_speed=150.0)
        assert g2.opening == pytest.approx(85.0 - 1.5, abs=1e-12)

    def test_opening_never_leaves_stroke(self, rng):
        g = GripperState(opening=40.0, commanded_opening=40.0)
        for _ in range(200):
            g = GripperState(
                opening=g.opening,
                commanded_opening=float(rng.uniform(-50, 150)),
                stroke=g.stroke,
                contact_force=g.contact_force,
            )
            g = step_opening(g, 0.01)
            assert 0.0 <= g.opening <= g.stroke

    def test_continuous_at_free_size(self):
        eps = 1e-9
        below = GripperState(opening=TOMATO.free_size - eps, commanded_opening=TOMATO.free_size - eps)
        out, _ = contact_step(below, TOMATO, 0.01)
        assert out.contact_force < 1e-6


class TestClassifyOutcome:
    def test_damage_on_threshold_exceeded(self):
        # fragile preset: 15 N peak is ~3x the required force and crosses 5 N
        obj = ObjectModel("fragile", 50.0, 1.0, 5.0, 0.3, 0.5)
        trace = [(0.0, 60.0, False), (15.0, 45.0, False), (15.0, 45.0, True)]
        out = classify_outcome(trace, obj)
        assert out.label == "damage"
        assert out.peak_force == 15.0

    def test_slip_when_holding_force_too_low(self):
        trace = [(0.5, 58.0, False), (0.5, 58.0, True), (0.5, 58.0, True)]
        out = classify_outcome(trace, TOMATO)
        assert out.label == "slip"
        assert out.at_step == 1

    def test_success_between_thresholds(self):
        f = 1.1 * TOMATO.min_holding_force
        trace = [(f, 55.0, False), (f, 55.0, True), (f, 55.0, True)]
        assert classify_outcome(trace, TOMATO).label == "success"

    def test_empty_trace_rejected(self):
        with pytest.raises(EmptyTrace):
            classify_outcome([], TOMATO)

    def test_raising_threshold_never_creates_damage(self, rng):
        trace = [(float(f), 50.0, i > 5) for i, f in enumerate(rng.uniform(0, 10, 20))]
        lower = ObjectModel("a", 60.0, 1.0, 4.0, 0.2, 0.6)
        higher = ObjectModel("a", 60.0, 1.0, 12.0, 0.2, 0.6)
        if classify_outcome(trace, lower).label != "damage":
            assert classify_outcome(trace, higher).label != "damage"

    def test_deterministic(self, rng):
        trace = [(float(f), 50.0, i > 3) for i, f in enumerate(rng.uniform(0, 6, 10))]
        a = classify_outcome(trace, TOMATO)
        b = classify_outcome(trace, TOMATO)
        assert a == b


class TestPolicies:
    def test_position_only_ignores_force(self):
        pol = PositionOnlyPolicy(TOMATO, squeeze_mm=15.0)
        g = GripperState(opening=85.0, commanded_opening=85.0)
        assert pol.target_opening(g, 0.0) == TOMATO.free_size - 15.0
        assert pol.target_opening(g, 0.99) == TOMATO.free_size - 15.0

    def test_force_capped_holds_at_cap(self):
        pol = ForceCappedPolicy(TOMATO, f_max=20.0)
        g = GripperState(opening=59.0, commanded_opening=0.0)
        assert pol.target_opening(g, pol.cap / 2) == 0.0
        assert not pol.settled(g, pol.cap / 2)
        held = pol.target_opening(g, pol.cap)
        assert held == 59.0
        assert pol.settled(g, pol.cap)
        # stays held afterwards even if the reading falls
        assert pol.target_opening(g, 0.0) == 59.0

    def test_default_cap_margin_above_min_holding(self):
        pol = ForceCappedPolicy(TOMATO, f_max=20.0)
        assert pol.cap == pytest.approx(1.1 * TOMATO.min_holding_force / 20.0, abs=1e-12)

    def test_factory_rejects_unknown_kind(self):
        with pytest.raises(ValueError):
            scripted_policy("bare_hands", TOMATO)


class TestPresets:
    def test_defaults_sane(self):
        assert set(DEFAULT_OBJECTS) == {"tomato", "shampoo", "toothpaste", "egg"}
        assert math.isinf(DEFAULT_OBJECTS["shampoo"].damage_threshold)

    def test_presets_file_round_trip(self, tmp_path):
        path = tmp_path / "objects.cfg"
        path.write_text(
            "[sponge]\nfree_size = 40\nstiffness = 0.1\ndamage_threshold = inf\n"
            "mass = 0.02\nfriction_mu = 0.9\n"
        )
        objs = load_object_presets(path)
        assert objs["sponge"].stiffness == 0.1
        assert math.isinf(objs["sponge"].damage_threshold)

    def test_packaged_presets_match_defaults(self):
        from importlib import resources

        src = resources.files("prometheus_teleop").joinpath("data/objects.cfg")
        with resources.as_file(src) as path:
            objs = load_object_presets(path)
        assert objs == DEFAULT_OBJECTS

    def test_invariants_enforced(self):
        with pytest.raises(ValueError):
            ObjectModel("bad", -1.0, 1.0, 5.0, 0.1, 0.5)
        with pytest.raises(ValueError):
            ObjectModel("bad", 10.0, 1.0, 5.0, 0.1, 2.5)
        with pytest.raises(ValueError):
            GripperState(opening=90.0, commanded_opening=10.0, stroke=85.0)
