"""Streaming distinct-count sketches with max-stable registers.

Three variants share one update currency, the 64-bit item digest:

* ``FULL_REPLICATION`` — every update touches all k real registers; O(k) per
  item, the analytically simplest variant and a handy oracle for the others.
* ``STOCHASTIC_AVERAGING`` — each item is routed to one bucket, O(1) per
  item; registers are pre-seeded with one draw each so untouched buckets
  still carry valid samples.
* ``DISCRETIZED`` — stochastic averaging with per-register shift-rounding,
  so registers fit in saturating signed bytes.

Registers only ever grow, so repeated items are free, stream order is
irrelevant, and the register-wise maximum of two same-config sketches equals
the sketch of the concatenated streams (``merge``).

Every register write goes through one scalar transform
(``_register_value``), and bulk ingestion picks per-register 64-bit hash
winners before transforming.  The unit-interval map and the log-log
transform are both monotone in the hash word, so sequential and bulk
construction produce bit-identical registers.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from . import gumbel, hashing

__all__ = [
    "ContinuousSketch",
    "DiscreteSketch",
    "EmptySketchError",
    "Estimate",
    "Estimator",
    "IncompatibleSketchError",
    "REGISTER_MAX",
    "REGISTER_MIN",
    "SketchConfig",
    "Variant",
    "merge",
    "new",
    "round_registers",
    "shift_round",
]


class Variant(enum.IntEnum):
    """Sketch update/estimation scheme; the integer value is the wire code."""

    FULL_REPLICATION = 0
    STOCHASTIC_AVERAGING = 1
    DISCRETIZED = 2


class Estimator(enum.Enum):
    GEOMETRIC = "geometric"
    HARMONIC = "harmonic"


# Saturation range of the discretized registers.  The top end covers
# cardinalities far beyond 2**64 (registers concentrate near ln n); the
# bottom end truncates a doubly-exponential tail that is never reached in
# practice.  128 states, so a register is exactly one signed byte.
REGISTER_MIN = -32
REGISTER_MAX = 95

# Relative-standard-error constants, as multiples of k**-0.5.
GEOMETRIC_RSE = math.pi / math.sqrt(6.0)
GEOMETRIC_RSE_DISCRETE = math.sqrt(math.pi**2 / 6 + 0.25)
HARMONIC_RSE = 1.0
HARMONIC_RSE_DISCRETE = math.sqrt(2.0 / (math.e - 1.0))

# Shift-rounding moves each register down by a U[0,1) amount, which scales
# exp(-register) by a factor with mean e - 1.  Dividing the exponential mean
# by this moment makes the discrete harmonic estimator agree with the
# continuous one in expectation (and exactly on unrounded input).
SHIFT_EXP_MOMENT = math.e - 1.0

# Additive constant of the alternative "offset" form of the discrete
# harmonic estimator: Z = k / (offset + mean(exp(-register))) - 1.  Biased
# upward once n >> k; see README for the comparison.
HARMONIC_OFFSET = 0.5


class EmptySketchError(ValueError):
    """Estimate requested from a full-replication sketch with no updates."""


class IncompatibleSketchError(ValueError):
    """Merge attempted across different configs."""


@dataclass(frozen=True)
class SketchConfig:
    """Parameters that define sketch identity and merge compatibility."""

    k: int
    seed: int = 0
    variant: Variant = Variant.DISCRETIZED

    def __post_init__(self):
        if not isinstance(self.k, int) or self.k < 1:
            raise ValueError("k must be a positive integer")
        if self.k > 0xFFFFFFFF:
            raise ValueError("k must fit in 32 bits")
        if not isinstance(self.seed, int) or not 0 <= self.seed <= hashing.MASK64:
            raise ValueError("seed must be a 64-bit unsigned integer")
        object.__setattr__(self, "variant", Variant(self.variant))


@dataclass(frozen=True)
class Estimate:
    """Point estimate plus the analytic relative standard error for its
    (estimator, variant, k) combination."""

    value: float
    predicted_rse: float
    estimator: Estimator


def shift_round(x: float, c: float) -> float:
    """floor(x + c) - c: snap x down onto the lattice of integers minus c.

    The result lies in (x - 1, x] and the map commutes with max.
    """
    return math.floor(x + c) - c


def _register_value(h: int) -> float:
    """Canonical register draw for a keyed 64-bit hash; monotone in h."""
    return float(gumbel.sample_from_uniform(hashing.unit_from_u64(h), 0.0))


def _initial_values(config: SketchConfig) -> np.ndarray:
    u = hashing.init_uniforms(config.k, config.seed)
    return np.asarray(gumbel.sample_from_uniform(u, 0.0), dtype=np.float64)


class ContinuousSketch:
    """Real-valued registers for the full-replication and bucket-routed
    variants.

    A fresh full-replication sketch holds -inf sentinels (no draw seen yet);
    a fresh bucket-routed sketch holds one deterministic draw per register.
    Instances are single-writer; share work across threads by building
    per-thread sketches with equal config and merging.
    """

    __slots__ = ("config", "registers", "_bucket_key", "_value_key0", "_lane_keys")

    def __init__(self, config: SketchConfig, registers: np.ndarray | None = None):
        if config.variant is Variant.DISCRETIZED:
            raise ValueError("use DiscreteSketch for the discretized variant")
        self.config = config
        if registers is None:
            if config.variant is Variant.FULL_REPLICATION:
                registers = np.full(config.k, -np.inf)
            else:
                registers = _initial_values(config)
        else:
            registers = np.array(registers, dtype=np.float64, copy=True)
            if registers.shape != (config.k,):
                raise ValueError("registers must be a length-k vector")
        self.registers = registers
        self._bucket_key = hashing.derive_key(config.seed, hashing.TAG_BUCKET, 0)
        self._value_key0 = hashing.derive_key(config.seed, hashing.TAG_VALUE, 0)
        self._lane_keys = (
            hashing.value_keys(config.seed, config.k)
            if config.variant is Variant.FULL_REPLICATION
            else None
        )

    def __eq__(self, other):
        return (
            isinstance(other, ContinuousSketch)
            and self.config == other.config
            and np.array_equal(self.registers, other.registers)
        )

    def __repr__(self):
        return f"ContinuousSketch(k={self.config.k}, variant={self.config.variant.name})"

    def update(self, item: bytes) -> None:
        """Fold one item into the sketch; repeats never change the state."""
        self.update_digest(hashing.digest(item))

    def update_many(self, items) -> int:
        """Fold an iterable of byte items; returns the number consumed."""
        count = 0
        for item in items:
            self.update_digest(hashing.digest(item))
            count += 1
        return count

    def update_digest(self, d: int) -> None:
        reg = self.registers
        if self.config.variant is Variant.FULL_REPLICATION:
            hs = hashing.mix64_array(np.uint64(d & hashing.MASK64) ^ self._lane_keys)
            # vectorized prescreen: only lanes whose draw could beat the
            # register get the canonical scalar transform.  The margin
            # dwarfs any scalar/vector log rounding gap, so skipped lanes
            # are provably non-winners and registers stay bit-exact.
            approx = -np.log(-np.log(hashing.units_from_u64_array(hs)))
            for i in np.flatnonzero(approx > reg - 1e-9).tolist():
                v = _register_value(int(hs[i]))
                if v > reg[i]:
                    reg[i] = v
        else:
            h = hashing.mix64(d ^ self._bucket_key)
            b = (h * self.config.k) >> 64
            v = _register_value(hashing.mix64(d ^ self._value_key0))
            if v > reg[b]:
                reg[b] = v

    def update_digests(self, digests: np.ndarray) -> None:
        """Bulk ingestion; bit-identical to sequential update_digest calls."""
        d = np.ascontiguousarray(digests, dtype=np.uint64)
        if d.size == 0:
            return
        k = self.config.k
        reg = self.registers
        if self.config.variant is Variant.FULL_REPLICATION:
            winners = np.zeros(k, dtype=np.uint64)
            step = max(1, (1 << 22) // k)
            for s in range(0, d.size, step):
                block = hashing.mix64_array(d[s : s + step, None] ^ self._lane_keys[None, :])
                np.maximum(winners, block.max(axis=0), out=winners)
            for i, h in enumerate(winners.tolist()):
                v = _register_value(h)
                if v > reg[i]:
                    reg[i] = v
        else:
            b = hashing.mulhi(hashing.mix64_array(d ^ np.uint64(self._bucket_key)), k)
            hv = hashing.mix64_array(d ^ np.uint64(self._value_key0))
            winners = np.zeros(k, dtype=np.uint64)
            np.maximum.at(winners, b, hv)
            touched = np.flatnonzero(np.bincount(b, minlength=k))
            for i in touched.tolist():
                v = _register_value(int(winners[i]))
                if v > reg[i]:
                    reg[i] = v

    def _require_nonempty(self):
        if self.config.variant is Variant.FULL_REPLICATION and np.isneginf(self.registers).any():
            raise EmptySketchError(
                "full-replication sketch has unset registers; feed at least one item"
            )

    def geometric_estimate(self) -> Estimate:
        """Exponential of the mean register, centered by the Gumbel mean."""
        self._require_nonempty()
        k = self.config.k
        z = math.exp(-gumbel.EULER_GAMMA + float(self.registers.mean()))
        if self.config.variant is Variant.STOCHASTIC_AVERAGING:
            z *= k
        return Estimate(z, GEOMETRIC_RSE / math.sqrt(k), Estimator.GEOMETRIC)

    def harmonic_estimate(self) -> Estimate:
        """Reciprocal of the summed exp(-register) mass.

        The bucket-routed form subtracts the one pre-seeded draw per
        register, so its output is clamped at 0 for tiny streams.
        """
        self._require_nonempty()
        k = self.config.k
        total = float(np.exp(-self.registers).sum())
        if self.config.variant is Variant.FULL_REPLICATION:
            z = k / total
        else:
            z = max(k * k / total - 1.0, 0.0)
        return Estimate(z, HARMONIC_RSE / math.sqrt(k), Estimator.HARMONIC)


class DiscreteSketch:
    """Bucket-routed sketch whose registers are shift-rounded onto integers.

    Register i stores the byte m_i; the represented value is m_i - c_i with
    c_i the register's deterministic shift in [0, 1).  Running it beside a
    bucket-routed ContinuousSketch with the same config keeps the exact
    invariant m_i == floor(X_i + c_i) (within the saturation range), because
    shift-rounding commutes with max.
    """

    __slots__ = ("config", "registers", "_shifts", "_bucket_key", "_value_key0")

    def __init__(self, config: SketchConfig, registers: np.ndarray | None = None):
        if config.variant is not Variant.DISCRETIZED:
            raise ValueError("DiscreteSketch requires the discretized variant")
        self.config = config
        self._shifts = hashing.shifts(config.k, config.seed)
        if registers is None:
            m = np.floor(_initial_values(config) + self._shifts)
            registers = np.clip(m, REGISTER_MIN, REGISTER_MAX).astype(np.int8)
        else:
            registers = np.array(registers, dtype=np.int8, copy=True)
            if registers.shape != (config.k,):
                raise ValueError("registers must be a length-k vector")
            if registers.min() < REGISTER_MIN or registers.max() > REGISTER_MAX:
                raise ValueError(
                    f"register bytes must lie in [{REGISTER_MIN}, {REGISTER_MAX}]"
                )
        self.registers = registers
        self._bucket_key = hashing.derive_key(config.seed, hashing.TAG_BUCKET, 0)
        self._value_key0 = hashing.derive_key(config.seed, hashing.TAG_VALUE, 0)

    def __eq__(self, other):
        return (
            isinstance(other, DiscreteSketch)
            and self.config == other.config
            and np.array_equal(self.registers, other.registers)
        )

    def __repr__(self):
        return f"DiscreteSketch(k={self.config.k})"

    def values(self) -> np.ndarray:
        """Represented register values: stored byte minus the shift."""
        return self.registers.astype(np.float64) - self._shifts

    def shifts(self) -> np.ndarray:
        """Per-register rounding shifts (derived from the seed, not stored)."""
        return self._shifts.copy()

    def update(self, item: bytes) -> None:
        """Fold one item into the sketch; repeats never change the state."""
        self.update_digest(hashing.digest(item))

    def update_many(self, items) -> int:
        count = 0
        for item in items:
            self.update_digest(hashing.digest(item))
            count += 1
        return count

    def update_digest(self, d: int) -> None:
        h = hashing.mix64(d ^ self._bucket_key)
        b = (h * self.config.k) >> 64
        v = _register_value(hashing.mix64(d ^ self._value_key0))
        self._raise_register(b, v)

    def _raise_register(self, b: int, v: float) -> None:
        m = math.floor(v + self._shifts[b])
        if m > REGISTER_MAX:
            m = REGISTER_MAX
        elif m < REGISTER_MIN:
            m = REGISTER_MIN
        if m > self.registers[b]:
            self.registers[b] = m

    def update_digests(self, digests: np.ndarray) -> None:
        """Bulk ingestion; bit-identical to sequential update_digest calls."""
        d = np.ascontiguousarray(digests, dtype=np.uint64)
        if d.size == 0:
            return
        k = self.config.k
        b = hashing.mulhi(hashing.mix64_array(d ^ np.uint64(self._bucket_key)), k)
        hv = hashing.mix64_array(d ^ np.uint64(self._value_key0))
        winners = np.zeros(k, dtype=np.uint64)
        np.maximum.at(winners, b, hv)
        touched = np.flatnonzero(np.bincount(b, minlength=k))
        for i in touched.tolist():
            self._raise_register(i, _register_value(int(winners[i])))

    def geometric_estimate(self) -> Estimate:
        """Exponential of the mean represented value, with the half-unit
        rounding bias added back."""
        k = self.config.k
        z = k * math.exp(-gumbel.EULER_GAMMA + 0.5 + float(self.values().mean()))
        return Estimate(z, GEOMETRIC_RSE_DISCRETE / math.sqrt(k), Estimator.GEOMETRIC)

    def harmonic_estimate(self, mode: str = "moment") -> Estimate:
        """Reciprocal-of-exponential-mass estimate from rounded registers.

        ``mode="moment"`` (default) divides the mean of exp(-value) by the
        shift-rounding moment e - 1, which matches the continuous
        bucket-routed estimator exactly on unrounded input.  ``mode="offset"``
        computes k / (HARMONIC_OFFSET + mean) - 1 instead; its output drifts
        to about 2k for n >> k, so it is kept only for comparison runs.
        """
        k = self.config.k
        mean_exp = float(np.exp(-self.values()).mean())
        if mode == "moment":
            z = k / (mean_exp / SHIFT_EXP_MOMENT) - 1.0
        elif mode == "offset":
            z = k / (HARMONIC_OFFSET + mean_exp) - 1.0
        else:
            raise ValueError("mode must be 'moment' or 'offset'")
        return Estimate(max(z, 0.0), HARMONIC_RSE_DISCRETE / math.sqrt(k), Estimator.HARMONIC)


def new(config: SketchConfig):
    """Fresh sketch in the configured variant's deterministic initial state."""
    if config.variant is Variant.DISCRETIZED:
        return DiscreteSketch(config)
    return ContinuousSketch(config)


def merge(a, b):
    """Register-wise maximum of two same-config sketches.

    Equivalent (bit-exactly) to sketching the union of the two streams;
    associative, commutative, and idempotent.
    """
    if type(a) is not type(b) or a.config != b.config:
        raise IncompatibleSketchError(
            f"cannot merge {a!r} with {b!r}: configs must be identical"
        )
    return type(a)(a.config, registers=np.maximum(a.registers, b.registers))


def round_registers(sketch: ContinuousSketch, eps: float) -> ContinuousSketch:
    """New sketch with every finite register snapped to the nearest multiple
    of eps; the geometric estimate moves by a factor within exp(±eps)."""
    if not isinstance(sketch, ContinuousSketch):
        raise TypeError("round_registers applies to continuous sketches")
    if not eps > 0.0:
        raise ValueError("eps must be positive")
    reg = sketch.registers.copy()
    finite = np.isfinite(reg)
    reg[finite] = np.round(reg[finite] / eps) * eps
    return ContinuousSketch(sketch.config, registers=reg)
