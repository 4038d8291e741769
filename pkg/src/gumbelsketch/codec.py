"""Bit-exact binary serialization of sketches.

Layout (all little-endian, documented in FORMAT.md):

    magic "GMBL" | version u8 | variant u8 | k u32 | seed u64 | encoding u8
    registers (k * 8 bytes IEEE-754 f64, or k signed bytes)
    CRC-32C u32 over every preceding byte

The byte sequence is fixed by this spec, not by host endianness, so shards
produced on different machines merge deterministically.
"""
from __future__ import annotations

import struct

import numpy as np

from .sketch import ContinuousSketch, DiscreteSketch, SketchConfig, Variant

__all__ = [
    "BadMagicError",
    "ChecksumError",
    "CodecError",
    "LengthMismatchError",
    "UnsupportedVersionError",
    "crc32c",
    "deserialize",
    "serialize",
]

MAGIC = b"GMBL"
VERSION = 1
ENCODING_F64 = 0
ENCODING_I8 = 1

_HEADER = struct.Struct("<4sBBIQB")
_CRC = struct.Struct("<I")


class CodecError(ValueError):
    """Malformed or inconsistent sketch bytes."""


class BadMagicError(CodecError):
    pass


class UnsupportedVersionError(CodecError):
    pass


class LengthMismatchError(CodecError):
    pass


class ChecksumError(CodecError):
    pass


def _crc_table():
    table = []
    for i in range(256):
        c = i
        for _ in range(8):
            c = (c >> 1) ^ 0x82F63B78 if c & 1 else c >> 1
        table.append(c)
    return table


_CRC_TABLE = _crc_table()


def crc32c(data: bytes, crc: int = 0) -> int:
    """CRC-32C (Castagnoli); crc32c(b"123456789") == 0xE3069283."""
    crc ^= 0xFFFFFFFF
    for byte in data:
        crc = (crc >> 8) ^ _CRC_TABLE[(crc ^ byte) & 0xFF]
    return crc ^ 0xFFFFFFFF


def serialize(sketch) -> bytes:
    """Sketch to bytes; deserialize(serialize(s)) reproduces s exactly."""
    config = sketch.config
    if isinstance(sketch, DiscreteSketch):
        encoding = ENCODING_I8
        payload = sketch.registers.tobytes()
    elif isinstance(sketch, ContinuousSketch):
        encoding = ENCODING_F64
        payload = sketch.registers.astype("<f8").tobytes()
    else:
        raise TypeError(f"cannot serialize {type(sketch).__name__}")
    head = _HEADER.pack(MAGIC, VERSION, int(config.variant), config.k, config.seed, encoding)
    body = head + payload
    return body + _CRC.pack(crc32c(body))


def deserialize(data: bytes) -> ContinuousSketch | DiscreteSketch:
    """Bytes to sketch, rejecting corrupt or inconsistent input.

    Distinct errors: BadMagicError, UnsupportedVersionError,
    LengthMismatchError (wrong payload size), ChecksumError.
    """
    data = bytes(data)
    if len(data) >= 4 and data[:4] != MAGIC:
        raise BadMagicError(f"bad magic {data[:4]!r}")
    if len(data) < _HEADER.size + _CRC.size:
        raise LengthMismatchError(f"{len(data)} bytes is shorter than any valid sketch")
    magic, version, variant_code, k, seed, encoding = _HEADER.unpack_from(data)
    if version != VERSION:
        raise UnsupportedVersionError(f"format version {version} not supported")
    try:
        variant = Variant(variant_code)
    except ValueError:
        raise CodecError(f"unknown variant code {variant_code}") from None
    if k < 1:
        raise CodecError("register count must be positive")
    expected_encoding = ENCODING_I8 if variant is Variant.DISCRETIZED else ENCODING_F64
    if encoding not in (ENCODING_F64, ENCODING_I8):
        raise CodecError(f"unknown register encoding {encoding}")
    if encoding != expected_encoding:
        raise CodecError(
            f"variant {variant.name} cannot use register encoding {encoding}"
        )
    width = 1 if encoding == ENCODING_I8 else 8
    expected = _HEADER.size + k * width + _CRC.size
    if len(data) != expected:
        raise LengthMismatchError(f"expected {expected} bytes, got {len(data)}")
    body, crc_bytes = data[: -_CRC.size], data[-_CRC.size :]
    if crc32c(body) != _CRC.unpack(crc_bytes)[0]:
        raise ChecksumError("CRC-32C mismatch: sketch bytes are corrupt")
    payload = body[_HEADER.size :]
    config = SketchConfig(k=k, seed=seed, variant=variant)
    if variant is Variant.DISCRETIZED:
        registers = np.frombuffer(payload, dtype=np.int8)
        try:
            return DiscreteSketch(config, registers=registers)
        except ValueError as exc:
            raise CodecError(str(exc)) from None
    registers = np.frombuffer(payload, dtype="<f8").astype(np.float64)
    return ContinuousSketch(config, registers=registers)
