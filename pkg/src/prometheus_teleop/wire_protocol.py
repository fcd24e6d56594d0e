"""Bit-exact framing for the board links (sensor↔motor, motor↔host).

Frame layout: 0xAA sync | msg_type | length | payload | crc16, where the
big-endian CRC-16/CCITT-FALSE covers msg_type‖length‖payload. Payload
integers are little-endian. The format is the external interface and is
carried over any reliable byte stream.
"""
from __future__ import annotations

import struct
from dataclasses import dataclass
from typing import List, Tuple, Union

from ._kernels import crc16_ccitt_false

SYNC = 0xAA
MAX_PAYLOAD = 64

TYPE_FORCE_REPORT = 0x01
TYPE_TORQUE_COMMAND = 0x02
TYPE_ENCODER_REPORT = 0x03
TYPE_HOST_TELEMETRY = 0x04


class PayloadTooLarge(ValueError):
    pass


def crc16(data: bytes) -> int:
    """CRC-16/CCITT-FALSE: poly 0x1021, init 0xFFFF, no reflection, no xor-out."""
    return crc16_ccitt_false(bytes(data))


@dataclass(frozen=True)
class ForceReport:
    """Sensor board → motor board: raw linearizer output in millivolts."""

    raw_mV: int
    seq: int

    _STRUCT = struct.Struct("<iH")
    TYPE = TYPE_FORCE_REPORT

    def pack(self) -> bytes:
        return self._STRUCT.pack(self.raw_mV, self.seq)

    @classmethod
    def unpack(cls, payload: bytes) -> "ForceReport":
        return cls(*cls._STRUCT.unpack(payload))


@dataclass(frozen=True)
class TorqueCommand:
    """Motor board ← host (or internal): stick torque in milli-newton-meters."""

    torque_mNm: int

    _STRUCT = struct.Struct("<i")
    TYPE = TYPE_TORQUE_COMMAND

    def pack(self) -> bytes:
        return self._STRUCT.pack(self.torque_mNm)

    @classmethod
    def unpack(cls, payload: bytes) -> "TorqueCommand":
        return cls(*cls._STRUCT.unpack(payload))


@dataclass(frozen=True)
class EncoderReport:
    """Motor board → host: lever encoder position in ticks."""

    pos_ticks: int
    seq: int

    _STRUCT = struct.Struct("<iH")
    TYPE = TYPE_ENCODER_REPORT

    def pack(self) -> bytes:
        return self._STRUCT.pack(self.pos_ticks, self.seq)

    @classmethod
    def unpack(cls, payload: bytes) -> "EncoderReport":
        return cls(*cls._STRUCT.unpack(payload))


@dataclass(frozen=True)
class HostTelemetry:
    """Motor board → host: fixed-point normalized force (0–1000 ‰) plus encoder."""

    force_norm_milli: int
    encoder_ticks: int
    seq: int

    _STRUCT = struct.Struct("<HiH")
    TYPE = TYPE_HOST_TELEMETRY

    def __post_init__(self):
        if not 0 <= self.force_norm_milli <= 1000:
            raise ValueError(
                f"force_norm_milli {self.force_norm_milli!r} outside 0..1000"
            )

    def pack(self) -> bytes:
        return self._STRUCT.pack(self.force_norm_milli, self.encoder_ticks, self.seq)

    @classmethod
    def unpack(cls, payload: bytes) -> "HostTelemetry":
        return cls(*cls._STRUCT.unpack(payload))


MessageBody = Union[ForceReport, TorqueCommand, EncoderReport, HostTelemetry]

_BODY_TYPES = {
    TYPE_FORCE_REPORT: ForceReport,
    TYPE_TORQUE_COMMAND: TorqueCommand,
    TYPE_ENCODER_REPORT: EncoderReport,
    TYPE_HOST_TELEMETRY: HostTelemetry,
}


def encode(body: MessageBody) -> bytes:
    """Frame a message body: sync‖type‖len‖payload‖crc16 (CRC big-endian)."""
    payload = body.pack()
    if len(payload) > MAX_PAYLOAD:
        raise PayloadTooLarge(f"payload of {len(payload)} bytes exceeds {MAX_PAYLOAD}")
    head = bytes([body.TYPE, len(payload)])
    crc = crc16(head + payload)
    return bytes([SYNC]) + head + payload + crc.to_bytes(2, "big")


@dataclass(frozen=True)
class ParseError:
    """In-band parse failure: kind is 'bad_length', 'bad_crc', 'unknown_type'
    or 'bad_value' (CRC-valid frame whose fields violate an invariant)."""

    kind: str
    detail: str = ""


def decode(frame: bytes) -> MessageBody:
    """Decode exactly one well-formed frame (raises ValueError otherwise)."""
    parser = FrameParser()
    bodies, errors = parser.feed(frame)
    if errors or len(bodies) != 1 or parser.pending():
        raise ValueError(f"not a single valid frame (errors={errors!r})")
    return bodies[0]


class FrameParser:
    """Incremental resynchronizing parser over arbitrary chunk boundaries.

    Scans for the sync byte, validates length and CRC, and emits bodies in
    stream order. Invalid frames are reported in-band and scanning resumes at
    the next candidate sync byte, so the emitted sequence is invariant under
    re-chunking. Memory stays bounded by one maximum frame plus the current
    chunk.
    """

    def __init__(self):
        self._buf = bytearray()

    def pending(self) -> int:
        """Bytes currently buffered (waiting for more input)."""
        return len(self._buf)

    def feed(self, chunk: bytes) -> Tuple[List[MessageBody], List[ParseError]]:
        self._buf.extend(chunk)
        bodies: List[MessageBody] = []
        errors: List[ParseError] = []
        buf = self._buf
        start = 0
        while True:
            sync = buf.find(SYNC, start)
            if sync < 0:
                start = len(buf)
                break
            if sync + 3 > len(buf):
                start = sync
                break
            msg_type = buf[sync + 1]
            length = buf[sync + 2]
            if length > MAX_PAYLOAD:
                errors.append(ParseError("bad_length", f"length byte {length}"))
                start = sync + 1
                continue
            end = sync + 3 + length + 2
            if end > len(buf):
                start = sync
                break
            body_bytes = bytes(buf[sync + 1 : sync + 3 + length])
            got_crc = int.from_bytes(buf[sync + 3 + length : end], "big")
            if crc16(body_bytes) != got_crc:
                errors.append(ParseError("bad_crc"))
                start = sync + 1
                continue
            cls = _BODY_TYPES.get(msg_type)
            if cls is None:
                errors.append(ParseError("unknown_type", f"type 0x{msg_type:02x}"))
                start = end
                continue
            payload = body_bytes[2:]
            if len(payload) != cls._STRUCT.size:
                errors.append(
                    ParseError("bad_length", f"{cls.__name__} payload {len(payload)}B")
                )
                start = end
                continue
            try:
                bodies.append(cls.unpack(payload))
            except ValueError as exc:
                errors.append(ParseError("bad_value", str(exc)))
            start = end
        del buf[:start]
        return bodies, errors
