"""Application configuration.

One INI file can override server timing, haptics constants, gripper/pad
dimensions, recording scales, and point at external DH-table / object-preset
files. Every key is optional; missing keys keep their defaults. The
PROMETHEUS_CONFIG environment variable names the default config path.
"""
from __future__ import annotations

import configparser
import os
from dataclasses import dataclass, field, replace

import numpy as np

from .gripper_sim import PadMechanism, load_object_presets
from .haptics import FsrModel, HapticsParams, LinearizerConfig
from .kinematics import DHTable
from .teleop_server import RigParams, ServerConfig

CONFIG_ENV_VAR = "PROMETHEUS_CONFIG"


@dataclass(frozen=True)
class AppConfig:
    server: ServerConfig = ServerConfig()
    rig: RigParams = field(default_factory=RigParams)


def _get(parser, section, key, cast, default):
    if parser.has_option(section, key):
        return cast(parser.get(section, key))
    return default


def load_app_config(path=None, mode: str = "scripted") -> AppConfig:
    """Compose the app config from defaults, the env-var file, or an explicit path."""
    if path is None:
        path = os.environ.get(CONFIG_ENV_VAR)
    if path is None:
        return AppConfig(server=ServerConfig(mode=mode))

    parser = configparser.ConfigParser()
    with open(path, "r", encoding="utf-8") as fh:
        parser.read_file(fh)

    server = ServerConfig(
        control_hz=_get(parser, "server", "control_hz", float, 100.0),
        record_decimation=_get(parser, "server", "record_decimation", int, 10),
        max_joint_vel=_get(parser, "server", "max_joint_vel", float, 1.0),
        workspace_radius=_get(parser, "server", "workspace_radius", float, 0.30),
        mode=_get(parser, "server", "mode", str, mode),
        publish_decimation=_get(parser, "server", "publish_decimation", int, 2),
        max_ticks=_get(parser, "server", "max_ticks", int, 6000),
    )

    haptics = HapticsParams(
        linearizer=LinearizerConfig(
            v_ref=_get(parser, "haptics", "v_ref", float, 3.3),
            r_g=_get(parser, "haptics", "r_g", float, 1000.0),
        ),
        fsr=FsrModel(
            r_fs=_get(parser, "haptics", "r_fs", float, 1000.0),
            f_max=_get(parser, "haptics", "f_max", float, 20.0),
        ),
        k_t=_get(parser, "haptics", "k_t", float, 0.2),
    )

    mech = PadMechanism(
        spring_k=_get(parser, "pad", "spring_k", float, 0.25),
        spring_count=_get(parser, "pad", "spring_count", int, 2),
        preload_f=_get(parser, "pad", "preload_f", float, 0.5),
        pad_length=_get(parser, "pad", "pad_length", float, 90.0),
    )

    rig = RigParams(haptics=haptics, mech=mech)
    rig = replace(
        rig,
        stroke=_get(parser, "gripper", "stroke", float, rig.stroke),
        gripper_speed=_get(parser, "gripper", "max_speed", float, rig.gripper_speed),
        a_max=np.array(
            [_get(parser, "recording", "a_max_joint", float, 0.05)] * 6
            + [_get(parser, "recording", "a_max_gripper", float, 5.0)]
        ),
        input_scale=np.array(
            [
                _get(parser, "input", "scale_x", float, 1.0),
                _get(parser, "input", "scale_y", float, 1.0),
                _get(parser, "input", "scale_z", float, 1.0),
            ]
        ),
    )

    if parser.has_option("kinematics", "dh_table"):
        rig = replace(rig, dh=DHTable.load(parser.get("kinematics", "dh_table")))
    if parser.has_option("objects", "presets"):
        presets = load_object_presets(parser.get("objects", "presets"))
        rig = replace(rig, objects={**rig.objects, **presets})

    return AppConfig(server=server, rig=rig)
