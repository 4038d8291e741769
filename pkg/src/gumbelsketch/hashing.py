"""Deterministic, seeded randomness for the sketches.

Every random quantity the estimators consume comes from two stages:

1. a canonical 64-bit item digest — XXH64 with seed 0 over the item's bytes;
2. a keyed SplitMix64 finalizer over that digest, with per-purpose keys
   derived from the sketch seed through four domain-tagged streams (value
   lanes, bucket routing, register initialization, register shifts).

The construction is part of the serialized-sketch contract: two machines
holding the same bytes must produce the same estimates.  FORMAT.md documents
it bit-exactly and must track any change here.

Scalar entry points use plain Python integers (wraparound via masking);
the ``*_array`` variants run the identical integer arithmetic on numpy
uint64 arrays for bulk ingestion, and tests pin them to each other.
"""
from __future__ import annotations

import struct

import numpy as np
import xxhash

__all__ = [
    "MASK64",
    "bucket_init_uniform",
    "bucket_of",
    "bucket_shift",
    "buckets_from_digests",
    "digest",
    "digest_indices",
    "encode_index",
    "hash_to_unit",
    "init_uniforms",
    "mix64",
    "shifts",
    "unit_from_digest",
    "unit_from_u64",
]

MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15

# Domain tags (ASCII names, zero padded to 8 bytes) keep the derived key
# streams independent of each other for any fixed seed.
TAG_VALUE = 0x76616C7565000000  # "value"
TAG_BUCKET = 0x6275636B65740000  # "bucket"
TAG_INIT = 0x696E697400000000  # "init"
TAG_SHIFT = 0x7368696674000000  # "shift"

_SCALE = 2.0**-53
_TINY = 2.0**-54

# XXH64 primes, used by the vectorized 8-byte digest path.
_XP1 = 0x9E3779B185EBCA87
_XP2 = 0xC2B2AE3D27D4EB4F
_XP3 = 0x165667B19E3779F9
_XP4 = 0x85EBCA77C2B2AE63
_XP5 = 0x27D4EB2F165667C5


def mix64(x: int) -> int:
    """SplitMix64 finalizer: an avalanching bijection on 64-bit words."""
    x &= MASK64
    x ^= x >> 30
    x = (x * 0xBF58476D1CE4E5B9) & MASK64
    x ^= x >> 27
    x = (x * 0x94D049BB133111EB) & MASK64
    x ^= x >> 31
    return x


def mix64_array(x: np.ndarray) -> np.ndarray:
    """Elementwise mix64 over a uint64 array (identical bits to mix64)."""
    x = np.array(x, dtype=np.uint64, copy=True)
    x ^= x >> np.uint64(30)
    x *= np.uint64(0xBF58476D1CE4E5B9)
    x ^= x >> np.uint64(27)
    x *= np.uint64(0x94D049BB133111EB)
    x ^= x >> np.uint64(31)
    return x


def derive_key(seed: int, tag: int, index: int) -> int:
    """Key ``index`` of the seed's stream for domain ``tag``."""
    base = mix64((seed & MASK64) ^ tag)
    return mix64((base + (index + 1) * _GOLDEN) & MASK64)


def _derive_keys(seed: int, tag: int, count: int) -> np.ndarray:
    base = mix64((seed & MASK64) ^ tag)
    idx = np.arange(1, count + 1, dtype=np.uint64) * np.uint64(_GOLDEN)
    return mix64_array(idx + np.uint64(base))


def unit_from_u64(h: int) -> float:
    """Top 53 bits of h scaled into (0, 1); an all-zero draw maps to 2**-54."""
    m = h >> 11
    return m * _SCALE if m else _TINY


def units_from_u64_array(h: np.ndarray) -> np.ndarray:
    u = (h >> np.uint64(11)).astype(np.float64) * _SCALE
    return np.where(u == 0.0, _TINY, u)


# -- item digests -----------------------------------------------------------


def digest(item: bytes) -> int:
    """Canonical 64-bit digest of an item's bytes (XXH64, seed 0)."""
    return xxhash.xxh64_intdigest(item)


def encode_index(value: int) -> bytes:
    """Byte identity of a synthetic integer item: 8-byte little-endian."""
    return struct.pack("<Q", value)


def digest_indices(values) -> np.ndarray:
    """Vectorized ``digest(encode_index(v))`` for an array of indices.

    Runs XXH64's short-input path on the 8-byte little-endian encodings;
    pinned bit-exactly against the reference implementation in tests.
    """
    x = np.ascontiguousarray(values, dtype=np.uint64)
    p1 = np.uint64(_XP1)
    k1 = x * np.uint64(_XP2)
    k1 = (k1 << np.uint64(31)) | (k1 >> np.uint64(33))
    k1 *= p1
    h = np.uint64((_XP5 + 8) & MASK64) ^ k1
    h = ((h << np.uint64(27)) | (h >> np.uint64(37))) * p1 + np.uint64(_XP4)
    h ^= h >> np.uint64(33)
    h *= np.uint64(_XP2)
    h ^= h >> np.uint64(29)
    h *= np.uint64(_XP3)
    h ^= h >> np.uint64(32)
    return h


# -- per-item randomness ----------------------------------------------------


def unit_from_digest(d: int, seed: int, lane: int) -> float:
    """Uniform (0, 1) draw for a digest on one value lane."""
    return unit_from_u64(mix64(d ^ derive_key(seed, TAG_VALUE, lane)))


def hash_to_unit(item: bytes, seed: int, lane: int) -> float:
    """Per-lane uniform in (0, 1) for an item; lanes behave independently."""
    if lane < 0:
        raise ValueError("lane must be nonnegative")
    return unit_from_digest(digest(item), seed, lane)


def bucket_from_digest(d: int, k: int, seed: int) -> int:
    """Bucket in [0, k) for a digest (multiply-high range reduction)."""
    if k < 1:
        raise ValueError("k must be positive")
    h = mix64(d ^ derive_key(seed, TAG_BUCKET, 0))
    return (h * k) >> 64


def bucket_of(item: bytes, k: int, seed: int) -> int:
    """Bucket in [0, k) for an item, independent of the value lanes."""
    return bucket_from_digest(digest(item), k, seed)


def units_from_digests(d: np.ndarray, seed: int, lane: int) -> np.ndarray:
    """Vectorized unit_from_digest over a digest array."""
    key = np.uint64(derive_key(seed, TAG_VALUE, lane))
    return units_from_u64_array(mix64_array(d ^ key))


def buckets_from_digests(d: np.ndarray, k: int, seed: int) -> np.ndarray:
    """Vectorized bucket_from_digest over a digest array."""
    if k < 1:
        raise ValueError("k must be positive")
    h = mix64_array(d ^ np.uint64(derive_key(seed, TAG_BUCKET, 0)))
    return mulhi(h, k)


def mulhi(h: np.ndarray, k: int) -> np.ndarray:
    # (h * k) >> 64 without 128-bit support; exact for k < 2**32.
    k64 = np.uint64(k)
    lo = (h & np.uint64(0xFFFFFFFF)) * k64
    hi = (h >> np.uint64(32)) * k64
    return ((hi + (lo >> np.uint64(32))) >> np.uint64(32)).astype(np.int64)


def value_keys(seed: int, lanes: int) -> np.ndarray:
    """Keys for value lanes 0..lanes-1, as uint64."""
    return _derive_keys(seed, TAG_VALUE, lanes)


# -- per-register randomness -------------------------------------------------


def bucket_init_uniform(i: int, seed: int) -> float:
    """Initialization uniform for register i: a fixed function of (i, seed),
    so independently constructed sketches with equal config agree exactly."""
    return unit_from_u64(derive_key(seed, TAG_INIT, i))


def init_uniforms(k: int, seed: int) -> np.ndarray:
    """Initialization uniforms for registers 0..k-1."""
    return units_from_u64_array(_derive_keys(seed, TAG_INIT, k))


def bucket_shift(i: int, seed: int) -> float:
    """Rounding shift c_i in [0, 1) for register i."""
    return (derive_key(seed, TAG_SHIFT, i) >> 11) * _SCALE


def shifts(k: int, seed: int) -> np.ndarray:
    """Rounding shifts for registers 0..k-1."""
    return (_derive_keys(seed, TAG_SHIFT, k) >> np.uint64(11)).astype(np.float64) * _SCALE
