"""Cross-backend agreement between the compiled kernels and the pure fallback."""
import numpy as np
import pytest

from prometheus_teleop import _kernels
from prometheus_teleop._kernels import pure

compiled = pytest.importorskip(
    "prometheus_teleop._kernels._core", reason="compiled kernels not built"
)

from conftest import random_joints


def test_selected_backend_reported():
    assert _kernels.BACKEND in ("compiled", "pure")


def test_fk_frames_agree(dh, rng):
    for q in random_joints(rng, 50):
        a = pure.fk_frames(q, dh.a, dh.d, dh.alpha, dh.theta_offset)
        b = compiled.fk_frames(q, dh.a, dh.d, dh.alpha, dh.theta_offset)
        assert a.shape == b.shape == (7, 4, 4)
        assert np.max(np.abs(a - b)) < 1e-14


def test_ik_candidates_agree(dh, rng):
    args = (dh.d[0], dh.a[1], dh.a[2], dh.d[3], dh.d[4], dh.d[5])
    for q in random_joints(rng, 50):
        T = pure.fk_frames(q, dh.a, dh.d, dh.alpha, dh.theta_offset)[6]
        ca, sa = pure.ik_candidates(T, *args)
        cb, sb = compiled.ik_candidates(T, *args)
        assert sa == sb
        assert ca.shape == cb.shape
        assert np.max(np.abs(ca - cb)) < 1e-9


def test_ik_candidates_unreachable_agree(dh):
    args = (dh.d[0], dh.a[1], dh.a[2], dh.d[3], dh.d[4], dh.d[5])
    T = np.eye(4)
    T[:3, 3] = [5.0, 5.0, 5.0]
    ca, sa = pure.ik_candidates(T, *args)
    cb, sb = compiled.ik_candidates(T, *args)
    assert len(ca) == len(cb) == 0
    assert sa == sb


def test_crc_agrees_on_random_buffers(rng):
    for n in (0, 1, 7, 64, 1000):
        data = bytes(rng.integers(0, 256, n, dtype=np.uint8))
        assert pure.crc16_ccitt_false(data) == compiled.crc16_ccitt_false(data)


def test_backend_env_override(monkeypatch):
    import importlib

    import prometheus_teleop._kernels as k

    monkeypatch.setenv("PROMETHEUS_KERNELS", "pure")
    reloaded = importlib.reload(k)
    try:
        assert reloaded.BACKEND == "pure"
    finally:
        monkeypatch.delenv("PROMETHEUS_KERNELS")
        importlib.reload(k)
