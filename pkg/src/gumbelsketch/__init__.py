"""Mergeable distinct-count sketches with max-stable real or integer
registers, plus the statistical validation harness behind them."""

from .codec import (
    BadMagicError,
    ChecksumError,
    CodecError,
    LengthMismatchError,
    UnsupportedVersionError,
    deserialize,
    serialize,
)
from .gumbel import EULER_GAMMA, cdf, pdf, quantile, sample_from_uniform
from .sketch import (
    ContinuousSketch,
    DiscreteSketch,
    EmptySketchError,
    Estimate,
    Estimator,
    IncompatibleSketchError,
    SketchConfig,
    Variant,
    merge,
    new,
    round_registers,
    shift_round,
)

__version__ = "0.1.0"

__all__ = [
    "BadMagicError",
    "ChecksumError",
    "CodecError",
    "ContinuousSketch",
    "DiscreteSketch",
    "EULER_GAMMA",
    "EmptySketchError",
    "Estimate",
    "Estimator",
    "IncompatibleSketchError",
    "LengthMismatchError",
    "SketchConfig",
    "UnsupportedVersionError",
    "Variant",
    "cdf",
    "deserialize",
    "merge",
    "new",
    "pdf",
    "quantile",
    "round_registers",
    "sample_from_uniform",
    "serialize",
    "shift_round",
    "__version__",
]
