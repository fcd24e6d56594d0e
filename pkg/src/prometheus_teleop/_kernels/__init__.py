"""Kernel backend selection.

The compiled Cython module is preferred when present; the pure numpy
fallback is always available. Set PROMETHEUS_KERNELS=pure to force the
fallback (useful for benchmarking and debugging).
"""
import os

from . import pure

if os.environ.get("PROMETHEUS_KERNELS", "").lower() == "pure":
    _impl = pure
    BACKEND = "pure"
else:
    try:
        from . import _core as _impl  # type: ignore[attr-defined]

        BACKEND = "compiled"
    except ImportError:
        _impl = pure
        BACKEND = "pure"

fk_frames = _impl.fk_frames
ik_candidates = _impl.ik_candidates
crc16_ccitt_false = _impl.crc16_ccitt_false

__all__ = ["BACKEND", "fk_frames", "ik_candidates", "crc16_ccitt_false", "pure"]
