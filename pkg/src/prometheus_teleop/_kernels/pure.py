"""Pure-Python/numpy implementations of the hot kernels.

This is the fallback backend; `prometheus_teleop._kernels` prefers the
compiled Cython module with these exact signatures and semantics.
"""
from __future__ import annotations

import numpy as np


def dh_matrix(theta: float, a: float, d: float, alpha: float) -> np.ndarray:
    ct, st = np.cos(theta), np.sin(theta)
    ca, sa = np.cos(alpha), np.sin(alpha)
    return np.array([
        [ct, -st * ca, st * sa, a * ct],
        [st, ct * ca, -ct * sa, a * st],
        [0.0, sa, ca, d],
        [0.0, 0.0, 0.0, 1.0],
    ])


def fk_frames(q, a, d, alpha, theta_offset) -> np.ndarray:
    """Cumulative DH frames: (7,4,4) array, frames[0] = identity, frames[6] = tool."""
    frames = np.empty((7, 4, 4))
    frames[0] = np.eye(4)
    T = np.eye(4)
    for i in range(6):
        T = T @ dh_matrix(q[i] + theta_offset[i], a[i], d[i], alpha[i])
        frames[i + 1] = T
    return frames


def _wrap(x):
    return (x + np.pi) % (2.0 * np.pi) - np.pi


def ik_candidates(T06, d1, a2, a3, d4, d5, d6):
    """Closed-form joint candidates for a UR-pattern arm reaching pose T06.

    Enumerates the discrete branches (shoulder ±, wrist ±, elbow ±) in a
    fixed order. Angles are full DH angles (offsets not yet removed), wrapped
    to (-π, π]. Returns (candidates (n,6) array, singular-branch count).
    Branches whose wrist angle has |sin q5| below the cutoff are counted and
    skipped rather than returned.
    """
    out = []
    n_singular = 0
    T06 = np.asarray(T06, dtype=float)
    p05 = T06 @ np.array([0.0, 0.0, -d6, 1.0])
    radial = np.hypot(p05[0], p05[1])
    if radial < abs(d4) or not np.isfinite(radial):
        return np.zeros((0, 6)), 0
    psi = np.arctan2(p05[1], p05[0])
    phi = np.arccos(min(1.0, max(-1.0, d4 / radial)))
    for q1 in (psi + phi + np.pi / 2, psi - phi + np.pi / 2):
        T10 = np.linalg.inv(dh_matrix(q1, 0.0, d1, np.pi / 2))
        T16 = T10 @ T06
        c5 = (T16[2, 3] - d4) / d6
        if abs(c5) > 1.0 + 1e-9:
            continue
        c5 = min(1.0, max(-1.0, c5))
        for q5 in (np.arccos(c5), -np.arccos(c5)):
            s5 = np.sin(q5)
            if abs(s5) < 1e-6:
                n_singular += 1
                continue
            T61 = np.linalg.inv(T16)
            q6 = np.arctan2(-T61[1, 2] / s5, T61[0, 2] / s5)
            T45 = dh_matrix(q5, 0.0, d5, -np.pi / 2)
            T56 = dh_matrix(q6, 0.0, d6, 0.0)
            T14 = T16 @ np.linalg.inv(T45 @ T56)
            p13 = (T14 @ np.array([0.0, -d4, 0.0, 1.0]))[:3]
            reach = np.linalg.norm(p13)
            c3 = (reach * reach - a2 * a2 - a3 * a3) / (2.0 * a2 * a3)
            if abs(c3) > 1.0 + 1e-9:
                continue
            c3 = min(1.0, max(-1.0, c3))
            for q3 in (np.arccos(c3), -np.arccos(c3)):
                q2 = -np.arctan2(p13[1], -p13[0]) + np.arcsin(a3 * np.sin(q3) / reach)
                T12 = dh_matrix(q2, a2, 0.0, 0.0)
                T23 = dh_matrix(q3, a3, 0.0, 0.0)
                T34 = np.linalg.inv(T23) @ np.linalg.inv(T12) @ T14
                q4 = np.arctan2(T34[1, 0], T34[0, 0])
                out.append(_wrap(np.array([q1, q2, q3, q4, q5, q6])))
    if not out:
        return np.zeros((0, 6)), n_singular
    return np.stack(out), n_singular


def crc16_ccitt_false(data: bytes, crc: int = 0xFFFF) -> int:
    """CRC-16/CCITT-FALSE via a 256-entry table: poly 0x1021, init 0xFFFF,

    no reflection, no final xor.
    """
    table = _CRC_TABLE
    for b in data:
        crc = ((crc << 8) & 0xFFFF) ^ table[((crc >> 8) ^ b) & 0xFF]
    return crc


def _build_crc_table():
    table = []
    for byte in range(256):
        crc = byte << 8
        for _ in range(8):
            crc = ((crc << 1) ^ 0x1021) if crc & 0x8000 else (crc << 1)
            crc &= 0xFFFF
        table.append(crc)
    return tuple(table)


_CRC_TABLE = _build_crc_table()
