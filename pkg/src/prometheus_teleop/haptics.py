"""Force-sensing and feedback chain.

Models the sensing path from pad contact force to the normalized reading the
recorder stores, and the reaction-torque command driving the two-stick
controller: FSR force→resistance, the op-amp current-to-voltage linearization
stage V_OUT = V_REF · (−R_G / R_FS), normalization to [0, 1], gain-resistor
selection, and the equal-and-opposite stick torques.

The FSR is modeled with conductance proportional to force, which is exactly
what makes the transimpedance stage force-linear. An open circuit (no
contact) is represented as infinite resistance.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

OPEN_CIRCUIT = math.inf


class NegativeForce(ValueError):
    pass


class NonPositiveResistance(ValueError):
    pass


class OverRange(ValueError):
    """Voltage beyond the full-scale reading (outside tolerance)."""


class OutOfRange(ValueError):
    """Normalized force input outside [0, 1]."""


@dataclass(frozen=True)
class FsrModel:
    """Force sensor: full-compression resistance r_fs (Ω), full-scale force f_max (N).

    Defaults are configurable stand-ins; the sensor's datasheet curve is not
    modeled beyond the first-order conductance law.
    """

    r_fs: float = 1000.0
    f_max: float = 20.0

    def __post_init__(self):
        if self.r_fs <= 0 or self.f_max <= 0:
            raise ValueError("r_fs and f_max must be positive")


@dataclass(frozen=True)
class LinearizerConfig:
    """Current-to-voltage stage: reference voltage v_ref (V), gain resistor r_g (Ω)."""

    v_ref: float = 3.3
    r_g: float = 1000.0

    def __post_init__(self):
        if self.v_ref <= 0 or self.r_g <= 0:
            raise ValueError("v_ref and r_g must be positive")


@dataclass(frozen=True)
class ForceSample:
    """One contact reading: sensor force (N), stage output (V), normalized [0,1]."""

    force_n: float
    v_out: float
    normalized: float

    def __post_init__(self):
        if not 0.0 <= self.normalized <= 1.0:
            raise ValueError(f"normalized reading {self.normalized!r} outside [0, 1]")
        if self.force_n < 0:
            raise ValueError("sensor force must be non-negative")


@dataclass(frozen=True)
class TorqueCommand:
    """Stick torques (N·m). The sticks react against each other, so they sum to zero."""

    stick_a: float
    stick_b: float

    def __post_init__(self):
        if abs(self.stick_a + self.stick_b) > 1e-12:
            raise ValueError("stick torques must sum to zero")


def force_to_resistance(f: float, m: FsrModel) -> float:
    """FSR resistance at force f: R = r_fs·f_max/f, saturating at r_fs.

    Zero force is an open circuit (math.inf).
    """
    if f < 0:
        raise NegativeForce(f"force {f!r} N is negative")
    if f == 0:
        return OPEN_CIRCUIT
    if f >= m.f_max:
        return m.r_fs
    return m.r_fs * m.f_max / f


def linearize(r: float, cfg: LinearizerConfig) -> float:
    """Stage output V_OUT = −v_ref·r_g/r. Open circuit reads 0 V."""
    if r == OPEN_CIRCUIT:
        return 0.0
    if r <= 0:
        raise NonPositiveResistance(f"resistance {r!r} Ω must be positive")
    return -cfg.v_ref * cfg.r_g / r


def v_fullscale(cfg: LinearizerConfig, m: FsrModel) -> float:
    """|V_OUT| at full compression (r = r_fs)."""
    return cfg.v_ref * cfg.r_g / m.r_fs


def normalize_force(v_out: float, cfg: LinearizerConfig, m: FsrModel) -> float:
    """Map stage output to [0, 1]: |v_out| / full-scale, clamped.

    The whole chain is linear, so normalize(linearize(force_to_resistance(f)))
    equals min(f/f_max, 1).
    """
    fs = v_fullscale(cfg, m)
    if abs(v_out) > fs * (1.0 + 1e-9):
        raise OverRange(f"|{v_out!r}| V exceeds full scale {fs!r} V")
    return min(max(abs(v_out) / fs, 0.0), 1.0)


def sense(f: float, cfg: LinearizerConfig, m: FsrModel) -> ForceSample:
    """Run a sensor force through the full chain and bundle the readings."""
    v = linearize(force_to_resistance(f, m), cfg)
    return ForceSample(force_n=f, v_out=v, normalized=normalize_force(v, cfg, m))


def select_gain_resistor(m: FsrModel, v_target: float, v_ref: float = 3.3) -> float:
    """Gain resistor making full compression read v_target volts: r_g = v_target·r_fs/v_ref.

    This is how different sensors (different r_fs) are matched to the same
    output range.
    """
    if v_target <= 0:
        raise ValueError("target voltage must be positive")
    return v_target * m.r_fs / v_ref


def feedback_torque(normalized_force: float, k_t: float) -> TorqueCommand:
    """Reaction-torque command: lever gets k_t·force, motor body the opposite."""
    if not 0.0 <= normalized_force <= 1.0:
        raise OutOfRange(f"normalized force {normalized_force!r} outside [0, 1]")
    torque = k_t * normalized_force
    return TorqueCommand(stick_a=torque, stick_b=-torque)


@dataclass(frozen=True)
class HapticsParams:
    """Bundle of the configurable sensing/feedback constants."""

    linearizer: LinearizerConfig = LinearizerConfig()
    fsr: FsrModel = FsrModel()
    k_t: float = 0.2  # N·m at full-scale force

    def sample(self, sensor_force: float) -> ForceSample:
        return sense(sensor_force, self.linearizer, self.fsr)

    def torque(self, normalized: float) -> TorqueCommand:
        return feedback_torque(normalized, self.k_t)


def load_haptics_config(path) -> HapticsParams:
    """Read 'key = value' lines: v_ref, r_g, r_fs, f_max, k_t (all optional)."""
    values = {}
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"expected 'key = value', got: {line!r}")
            key, _, val = line.partition("=")
            values[key.strip()] = float(val.strip())
    unknown = set(values) - {"v_ref", "r_g", "r_fs", "f_max", "k_t"}
    if unknown:
        raise ValueError(f"unknown haptics config keys: {sorted(unknown)}")
    return HapticsParams(
        linearizer=LinearizerConfig(
            v_ref=values.get("v_ref", 3.3), r_g=values.get("r_g", 1000.0)
        ),
        fsr=FsrModel(r_fs=values.get("r_fs", 1000.0), f_max=values.get("f_max", 20.0)),
        k_t=values.get("k_t", 0.2),
    )
