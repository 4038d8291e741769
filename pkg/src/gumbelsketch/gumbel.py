"""Unit-scale Gumbel distribution: CDF, density, quantile, inverse-CDF sampling.

All functions accept scalars or numpy arrays and broadcast like ufuncs.  The
location parameter ``mu`` selects Gumbel(mu); the scale is fixed at 1, which
is the only member of the family the sketches need.
"""
from __future__ import annotations

import math

import numpy as np

__all__ = [
    "EULER_GAMMA",
    "VARIANCE",
    "cdf",
    "pdf",
    "quantile",
    "sample_from_uniform",
]

# Mean of Gumbel(0), and its variance pi^2/6, as correctly rounded doubles.
EULER_GAMMA = 0.5772156649015329
VARIANCE = math.pi**2 / 6


def cdf(x, mu=0.0):
    """P(X <= x) for X ~ Gumbel(mu): exp(-exp(-(x - mu)))."""
    z = np.subtract(x, mu, dtype=np.float64)
    return np.exp(-np.exp(-z))


def pdf(x, mu=0.0):
    """Density of Gumbel(mu): exp(-exp(-(x - mu))) * exp(-(x - mu))."""
    z = np.subtract(x, mu, dtype=np.float64)
    t = np.exp(-z)
    return np.exp(-t) * t


def _from_unit(t, mu, what):
    t = np.asarray(t, dtype=np.float64)
    if np.any(t <= 0.0) or np.any(t >= 1.0):
        raise ValueError(f"{what} must lie strictly inside (0, 1)")
    out = -np.log(-np.log(t)) + mu
    return out[()] if out.ndim == 0 else out


def sample_from_uniform(t, mu=0.0):
    """Map a uniform (0, 1) draw to a Gumbel(mu) draw: -ln(-ln t) + mu.

    Raises ValueError when t touches 0 or 1; that signals a broken
    unit-interval source upstream.  Every double strictly below 1 is at most
    1 - 2**-53, so the transform stays finite on the whole valid domain.
    """
    return _from_unit(t, mu, "uniform draw")


def quantile(p, mu=0.0):
    """Inverse CDF of Gumbel(mu); algebraically the same map as sampling."""
    return _from_unit(p, mu, "probability")
