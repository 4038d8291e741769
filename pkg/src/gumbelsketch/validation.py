"""Numerical verification harness for the estimator's statistical claims.

Three layers:

* exact combinatorial oracles for the bucket-count statistics that drive the
  bucket-routed estimators (exhaustive enumeration of multinomial outcomes),
  with the matching closed forms and bounds;
* Monte Carlo twins of the same statistics, plus goodness-of-fit machinery
  (one-sample Kolmogorov-Smirnov) for the max-stability property;
* end-to-end estimator experiments measuring empirical relative standard
  error and coverage against the analytic bounds, and the acceptance-check
  battery the CLI ``validate`` command runs.

All randomness is driven by explicit seeds so that every check is
deterministic; statistical pass levels are fixed at the 1% point.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import product

import numpy as np

from . import codec, gumbel, hashing
from .sketch import (
    REGISTER_MAX,
    REGISTER_MIN,
    ContinuousSketch,
    DiscreteSketch,
    Estimator,
    SketchConfig,
    Variant,
    merge,
    new,
    round_registers,
)

__all__ = [
    "CalibrationResult",
    "CheckRow",
    "ExperimentReport",
    "MultinomialOracle",
    "MultinomialStats",
    "TailCheck",
    "acceptance_checks",
    "expected_reciprocal_sum",
    "fit_harmonic_offset",
    "ks_critical_value",
    "ks_statistic",
    "log_sum_tail_check",
    "max_stability_ks",
    "pair_reciprocal_bound",
    "reciprocal_sum_variance_bound",
    "run_estimator_experiment",
]

DEFAULT_SEED = 271828

EXHAUSTIVE_STATE_LIMIT = 10**7

_TAG_TRIALS = 0x747269616C730000  # "trials"
_TINY = 2.0**-54


# -- closed forms and bounds for bucket-count statistics ---------------------
#
# Route n items uniformly into k buckets and let n_i be the per-bucket
# distinct counts.  The statistics below control the bucket-routed harmonic
# estimator: the "reciprocal sum" sum_i 1/(n_i + 1) is exactly the expected
# exp(-register) mass, the "pair reciprocal sum" sum_i 2/((n_i+1)(n_i+2))
# dominates its conditional variance, and the "log sum" sum_i ln(n_i + 1)
# controls the geometric estimator's exponent.


def expected_reciprocal_sum(n: int, k: int) -> float:
    """Exact E[sum_i 1/(n_i + 1)] = k^2/(n+1) * (1 - (1 - 1/k)^(n+1))."""
    if n < 0 or k < 1:
        raise ValueError("need n >= 0 and k >= 1")
    return k * k / (n + 1) * (1.0 - (1.0 - 1.0 / k) ** (n + 1))


def pair_reciprocal_bound(n: int, k: int) -> float:
    """Upper bound 2k^3/(n+1)^2 for E[sum_i 2/((n_i+1)(n_i+2))]."""
    if n < 0 or k < 1:
        raise ValueError("need n >= 0 and k >= 1")
    return 2.0 * k**3 / (n + 1) ** 2


def reciprocal_sum_variance_bound(n: int, k: int) -> float:
    """Upper bound k^3/(n+1)^2 + 2(1-1/k)^(n+1) * k^4/(n+1)^2 for
    Var[sum_i 1/(n_i + 1)]."""
    if n < 0 or k < 1:
        raise ValueError("need n >= 0 and k >= 1")
    decay = (1.0 - 1.0 / k) ** (n + 1)
    return k**3 / (n + 1) ** 2 + 2.0 * decay * k**4 / (n + 1) ** 2


@dataclass(frozen=True)
class MultinomialStats:
    """Summary statistics of the per-bucket count vector.

    ``total_probability`` is the enumerated mass (exactly 1 up to float
    rounding) in exhaustive mode and 1.0 by construction in Monte Carlo mode.
    """

    total_probability: float
    mean_reciprocal_sum: float
    mean_pair_reciprocal_sum: float
    var_reciprocal_sum: float
    mean_product_reciprocal: float


def _compositions(n: int, k: int):
    """All count vectors (n_1..n_k) with sum n."""
    comp = [n] + [0] * (k - 1)
    while True:
        yield tuple(comp)
        for i in range(k - 2, -1, -1):
            if comp[i]:
                break
        else:
            return
        comp[i] -= 1
        spill = sum(comp[i + 1 :]) + 1
        for j in range(i + 1, k):
            comp[j] = 0
        comp[i + 1] = spill


class MultinomialOracle:
    """Bucket-count statistics for n items routed uniformly into k buckets.

    Exhaustive mode (``trials=None``) enumerates every outcome with exact
    multinomial probabilities and is guarded by k**n <= 10**7 assignment
    states.  Monte Carlo mode samples ``trials`` count vectors.
    """

    def __init__(self, n: int, k: int, trials: int | None = None, seed: int = DEFAULT_SEED):
        if n < 0 or k < 1:
            raise ValueError("need n >= 0 and k >= 1")
        if trials is None:
            if k**n > EXHAUSTIVE_STATE_LIMIT:
                raise ValueError(
                    f"exhaustive mode needs k**n <= {EXHAUSTIVE_STATE_LIMIT}; "
                    f"got {k}**{n}"
                )
            # enumeration walks C(n+k-1, k-1) count vectors of length k
            if math.comb(n + k - 1, k - 1) * k > 2 * 10**7:
                raise ValueError("exhaustive enumeration would be too large")
        elif trials < 1:
            raise ValueError("trials must be positive")
        self.n = n
        self.k = k
        self.trials = trials
        self.seed = seed

    # exhaustive internals ---------------------------------------------------

    def _enumerate(self):
        n, k = self.n, self.k
        n_fact = math.factorial(n)
        scale = k**n
        probs, recips, pairs, prods, logs = [], [], [], [], []
        for counts in _compositions(n, k):
            coef = n_fact
            for c in counts:
                coef //= math.factorial(c)
            probs.append(coef / scale)
            recips.append(sum(1.0 / (c + 1) for c in counts))
            pairs.append(sum(2.0 / ((c + 1) * (c + 2)) for c in counts))
            prod = 1.0
            for c in counts:
                prod /= c + 1
            prods.append(prod)
            logs.append(sum(math.log(c + 1) for c in counts))
        return (
            np.array(probs),
            np.array(recips),
            np.array(pairs),
            np.array(prods),
            np.array(logs),
        )

    # Monte Carlo internals --------------------------------------------------

    def _sample_stats(self):
        rng = np.random.default_rng(self.seed)
        pvals = np.full(self.k, 1.0 / self.k)
        remaining = self.trials
        s_v = s_v2 = s_w = s_prod = 0.0
        chunk_size = max(1, min(self.trials, (1 << 22) // self.k))
        while remaining:
            m = min(chunk_size, remaining)
            counts = rng.multinomial(self.n, pvals, size=m).astype(np.float64)
            recip = 1.0 / (counts + 1.0)
            v = recip.sum(axis=1)
            s_v += v.sum()
            s_v2 += (v * v).sum()
            s_w += (2.0 * recip / (counts + 2.0)).sum()
            s_prod += recip.prod(axis=1).sum()
            remaining -= m
        t = self.trials
        mean_v = s_v / t
        return MultinomialStats(
            total_probability=1.0,
            mean_reciprocal_sum=mean_v,
            mean_pair_reciprocal_sum=s_w / t,
            var_reciprocal_sum=s_v2 / t - mean_v * mean_v,
            mean_product_reciprocal=s_prod / t,
        )

    def stats(self) -> MultinomialStats:
        if self.trials is not None:
            return self._sample_stats()
        probs, recips, pairs, prods, _ = self._enumerate()
        mean_v = float(probs @ recips)
        return MultinomialStats(
            total_probability=float(probs.sum()),
            mean_reciprocal_sum=mean_v,
            mean_pair_reciprocal_sum=float(probs @ pairs),
            var_reciprocal_sum=float(probs @ (recips * recips)) - mean_v * mean_v,
            mean_product_reciprocal=float(probs @ prods),
        )

    def log_sum_tail(self, threshold: float) -> float:
        """P[sum_i ln(n_i + 1) < threshold], exact or sampled per mode."""
        if self.trials is None:
            probs, _, _, _, logs = self._enumerate()
            return float(probs[logs < threshold].sum())
        rng = np.random.default_rng(self.seed)
        pvals = np.full(self.k, 1.0 / self.k)
        remaining = self.trials
        hits = 0
        chunk_size = max(1, min(self.trials, (1 << 22) // self.k))
        while remaining:
            m = min(chunk_size, remaining)
            counts = rng.multinomial(self.n, pvals, size=m)
            y = np.log(counts + 1.0).sum(axis=1)
            hits += int((y < threshold).sum())
            remaining -= m
        return hits / self.trials


@dataclass(frozen=True)
class TailCheck:
    """Observed left-tail mass of the log sum against its analytic guarantee,
    plus the exponential-moment comparison backing it."""

    failure_probability: float
    failure_bound: float
    mean_product_reciprocal: float
    product_bound: float
    exact_product: bool


def log_sum_tail_check(
    n: int, k: int, t: float, trials: int = 10**5, seed: int = DEFAULT_SEED
) -> TailCheck:
    """Check that sum_i ln(n_i+1) >= k ln(n/k) - t except with probability
    <= e^-t, and that E[prod_i 1/(n_i+1)] <= (k/n)^k."""
    if not (n >= k >= 1):
        raise ValueError("need n >= k >= 1")
    if not t > 0:
        raise ValueError("t must be positive")
    threshold = k * math.log(n / k) - t
    failure = MultinomialOracle(n, k, trials=trials, seed=seed).log_sum_tail(threshold)
    exact = k**n <= EXHAUSTIVE_STATE_LIMIT
    oracle = MultinomialOracle(n, k, trials=None if exact else trials, seed=seed)
    mean_prod = oracle.stats().mean_product_reciprocal
    return TailCheck(
        failure_probability=failure,
        failure_bound=math.exp(-t),
        mean_product_reciprocal=mean_prod,
        product_bound=(k / n) ** k,
        exact_product=exact,
    )


# -- goodness of fit ----------------------------------------------------------


def ks_statistic(samples, cdf_fn) -> float:
    """One-sample Kolmogorov-Smirnov distance between samples and a CDF."""
    x = np.sort(np.asarray(samples, dtype=np.float64))
    f = np.asarray(cdf_fn(x), dtype=np.float64)
    n = x.size
    if n == 0:
        raise ValueError("need at least one sample")
    i = np.arange(1, n + 1, dtype=np.float64)
    return float(np.maximum(f - (i - 1.0) / n, i / n - f).max())


def ks_critical_value(samples: int, alpha: float = 0.01) -> float:
    """Asymptotic one-sample KS critical value at level alpha."""
    return math.sqrt(0.5 * math.log(2.0 / alpha)) / math.sqrt(samples)


def _open_uniforms(rng: np.random.Generator, shape) -> np.ndarray:
    # rng.random covers [0, 1); nudge exact zeros into the open interval.
    u = rng.random(shape)
    if (u == 0.0).any():
        u = np.where(u == 0.0, _TINY, u)
    return u


def max_stability_ks(
    n: int, samples: int, seed: int = DEFAULT_SEED, location: float | None = None
) -> float:
    """KS distance between maxima of n unit-Gumbel draws and Gumbel(ln n).

    ``location`` overrides the reference location, e.g. for negative
    controls; the default ln n is the max-stability prediction.
    """
    if n < 1:
        raise ValueError("n must be positive")
    if samples < 1000:
        raise ValueError("need at least 1000 samples")
    rng = np.random.default_rng(seed)
    maxima = np.empty(samples)
    pos = 0
    chunk = max(1, (1 << 23) // n)
    while pos < samples:
        m = min(chunk, samples - pos)
        draws = gumbel.sample_from_uniform(_open_uniforms(rng, (m, n)), 0.0)
        maxima[pos : pos + m] = draws.max(axis=1)
        pos += m
    loc = math.log(n) if location is None else location
    return ks_statistic(maxima, lambda x: gumbel.cdf(x, loc))


# -- estimator experiments -----------------------------------------------------


@dataclass(frozen=True)
class ExperimentReport:
    """Outcome of repeated sketch builds over n distinct synthetic items."""

    variant: Variant
    estimator: Estimator
    n: int
    k: int
    trials: int
    seed: int
    empirical_rse: float
    coverage_fraction: float
    bound_value: float

    def as_dict(self) -> dict:
        return {
            "variant": self.variant.name.lower(),
            "estimator": self.estimator.value,
            "n": self.n,
            "k": self.k,
            "trials": self.trials,
            "seed": self.seed,
            "empirical_rse": self.empirical_rse,
            "coverage_fraction": self.coverage_fraction,
            "bound_value": self.bound_value,
        }


def trial_seed(seed: int, index: int) -> int:
    """Deterministic per-trial sketch seed schedule."""
    return hashing.derive_key(seed, _TAG_TRIALS, index)


def _build_sketch(variant: Variant, k: int, seed: int, digests: np.ndarray):
    sk = new(SketchConfig(k=k, seed=seed, variant=variant))
    sk.update_digests(digests)
    return sk


def _estimate_value(sk, estimator: Estimator) -> float:
    if estimator is Estimator.GEOMETRIC:
        return sk.geometric_estimate().value
    return sk.harmonic_estimate().value


def experiment_bound(estimator: Estimator, n: int, k: int) -> float:
    """Leading-term error bound the experiments score coverage against."""
    scale = math.pi if estimator is Estimator.GEOMETRIC else 2.0
    return scale * n / math.sqrt(k)


def run_estimator_experiment(
    variant: Variant,
    estimator: Estimator,
    n: int,
    k: int,
    trials: int,
    seed: int = DEFAULT_SEED,
) -> ExperimentReport:
    """Build ``trials`` sketches over the same n distinct items with distinct
    seeds; report the empirical relative standard error and the fraction of
    trials landing within the analytic leading-term bound."""
    if trials < 30:
        raise ValueError("need at least 30 trials")
    if n < 1 or k < 1:
        raise ValueError("need n >= 1 and k >= 1")
    digests = hashing.digest_indices(np.arange(n, dtype=np.uint64))
    estimates = np.empty(trials)
    for t in range(trials):
        sk = _build_sketch(variant, k, trial_seed(seed, t), digests)
        estimates[t] = _estimate_value(sk, estimator)
    bound = experiment_bound(estimator, n, k)
    rel_err = estimates / n - 1.0
    return ExperimentReport(
        variant=variant,
        estimator=estimator,
        n=n,
        k=k,
        trials=trials,
        seed=seed,
        empirical_rse=float(np.sqrt(np.mean(rel_err * rel_err))),
        coverage_fraction=float(np.mean(np.abs(estimates - n) <= bound)),
        bound_value=bound,
    )


# -- harmonic-offset calibration ----------------------------------------------


@dataclass(frozen=True)
class CalibrationResult:
    """Fitted additive offset for the offset-form discrete harmonic
    estimator, with a confidence interval for the fit."""

    offset: float
    ci_low: float
    ci_high: float
    k: int
    n: int
    trials: int


def fit_harmonic_offset(
    k: int,
    n: int,
    trials: int,
    seed: int = DEFAULT_SEED,
    variant: Variant = Variant.DISCRETIZED,
) -> CalibrationResult:
    """Fit the additive constant a in Z = k/(a + mean(exp(-value))) - 1 that
    makes the median estimate hit n.

    On unrounded (bucket-routed continuous) input the fit sits at ~0,
    recovering the plain harmonic form.  On rounded registers the fit lands
    near (2 - e) * k / (n + 1): it shrinks with n, which is the quantitative
    sign that no constant additive offset can de-bias the offset form; the
    moment-rescaled estimator is the principled fix.
    """
    if variant is Variant.FULL_REPLICATION:
        raise ValueError("offset calibration applies to bucket-routed variants")
    if n < 10 * k:
        raise ValueError("need n >= 10k for a stable fit")
    if trials < 30:
        raise ValueError("need at least 30 trials")
    digests = hashing.digest_indices(np.arange(n, dtype=np.uint64))
    fits = np.empty(trials)
    for t in range(trials):
        sk = _build_sketch(variant, k, trial_seed(seed, t), digests)
        reg = sk.values() if isinstance(sk, DiscreteSketch) else sk.registers
        mean_exp = float(np.exp(-reg).mean())
        fits[t] = k / (n + 1.0) - mean_exp
    offset = float(np.median(fits))
    # normal-theory CI of the median
    half = 1.96 * 1.2533 * float(np.std(fits, ddof=1)) / math.sqrt(trials)
    return CalibrationResult(
        offset=offset,
        ci_low=offset - half,
        ci_high=offset + half,
        k=k,
        n=n,
        trials=trials,
    )


# -- acceptance battery ---------------------------------------------------------


@dataclass(frozen=True)
class CheckRow:
    """One observable scored against one target."""

    experiment: str
    parameter: str
    observed: float
    target: float
    comparator: str  # "<=" or ">="
    passed: bool


def _row(experiment: str, parameter: str, observed: float, target: float, comparator: str) -> CheckRow:
    if comparator == "<=":
        ok = observed <= target
    elif comparator == ">=":
        ok = observed >= target
    else:
        raise ValueError(f"unknown comparator {comparator!r}")
    return CheckRow(experiment, parameter, float(observed), float(target), comparator, ok)


def check_enumeration_exact(max_n: int = 8, max_k: int = 4) -> list[CheckRow]:
    """Exhaustive-grid identities: probability mass 1 and the reciprocal-sum
    mean equal to its closed form, both to 1e-12."""
    mass_err = 0.0
    mean_err = 0.0
    for n, k in product(range(max_n + 1), range(1, max_k + 1)):
        stats = MultinomialOracle(n, k).stats()
        mass_err = max(mass_err, abs(stats.total_probability - 1.0))
        mean_err = max(mean_err, abs(stats.mean_reciprocal_sum - expected_reciprocal_sum(n, k)))
    return [
        _row("enumeration", "probability-mass-error", mass_err, 1e-12, "<="),
        _row("enumeration", "reciprocal-sum-mean-error", mean_err, 1e-12, "<="),
    ]


def check_moment_bounds(
    mc_trials: int = 10**6,
    seed: int = DEFAULT_SEED,
    max_n: int = 8,
    max_k: int = 4,
    mc_points: tuple = ((100, 10), (1000, 32)),
) -> list[CheckRow]:
    """Bound inequalities on the exhaustive grid and at Monte Carlo scale."""
    pair_ratio = var_ratio = prod_ratio = 0.0
    for n, k in product(range(max_n + 1), range(1, max_k + 1)):
        stats = MultinomialOracle(n, k).stats()
        pair_ratio = max(pair_ratio, stats.mean_pair_reciprocal_sum / pair_reciprocal_bound(n, k))
        var_ratio = max(var_ratio, stats.var_reciprocal_sum / reciprocal_sum_variance_bound(n, k))
        if n >= k:
            prod_ratio = max(prod_ratio, stats.mean_product_reciprocal / (k / n) ** k)
    rows = [
        _row("exhaustive-bounds", "pair-reciprocal-ratio", pair_ratio, 1.0, "<="),
        _row("exhaustive-bounds", "reciprocal-variance-ratio", var_ratio, 1.0, "<="),
        _row("exhaustive-bounds", "product-reciprocal-ratio", prod_ratio, 1.0, "<="),
    ]
    for n, k in mc_points:
        stats = MultinomialOracle(n, k, trials=mc_trials, seed=seed).stats()
        tag = f"mc-bounds-n{n}-k{k}"
        rows.append(
            _row(tag, "pair-reciprocal-ratio",
                 stats.mean_pair_reciprocal_sum / pair_reciprocal_bound(n, k), 1.0, "<=")
        )
        rows.append(
            _row(tag, "reciprocal-variance-ratio",
                 stats.var_reciprocal_sum / reciprocal_sum_variance_bound(n, k), 1.0, "<=")
        )
        rows.append(
            _row(tag, "product-reciprocal-ratio",
                 stats.mean_product_reciprocal / (k / n) ** k, 1.0, "<=")
        )
    return rows


def check_max_stability(
    samples: int = 10**5, seed: int = DEFAULT_SEED, sizes: tuple = (2, 8, 64)
) -> list[CheckRow]:
    """Maxima of n unit-Gumbel draws match Gumbel(ln n) at the 1% KS level;
    a deliberately wrong location must fail the same test."""
    crit = ks_critical_value(samples, alpha=0.01)
    rows = [
        _row(
            "max-stability",
            f"ks-n{n}",
            # independent draw streams per n, so one unlucky block cannot
            # leak across rows
            max_stability_ks(n, samples, seed=trial_seed(seed, n)),
            crit,
            "<=",
        )
        for n in sizes
    ]
    n = sizes[-1]
    wrong = max_stability_ks(n, samples, seed=trial_seed(seed, n), location=math.log(2 * n))
    rows.append(_row("max-stability", f"ks-negative-control-n{n}", wrong, crit, ">="))
    return rows


def check_bucket_routing(
    n: int = 10**6, k: int = 1024, trials: int = 200, seed: int = DEFAULT_SEED
) -> list[CheckRow]:
    """Bucket-routed estimator accuracy: geometric coverage and RSE window,
    harmonic coverage and RSE window, and the harmonic advantage."""
    geo = run_estimator_experiment(Variant.STOCHASTIC_AVERAGING, Estimator.GEOMETRIC, n, k, trials, seed)
    har = run_estimator_experiment(Variant.STOCHASTIC_AVERAGING, Estimator.HARMONIC, n, k, trials, seed)
    rk = math.sqrt(k)
    return [
        _row("sa-geometric", "coverage", geo.coverage_fraction, 2.0 / 3.0, ">="),
        _row("sa-geometric", "normalized-rse-low", geo.empirical_rse * rk, 1.09, ">="),
        _row("sa-geometric", "normalized-rse-high", geo.empirical_rse * rk, 1.47, "<="),
        _row("sa-harmonic", "normalized-rse-low", har.empirical_rse * rk, 0.85, ">="),
        _row("sa-harmonic", "normalized-rse-high", har.empirical_rse * rk, 1.15, "<="),
        _row("sa-harmonic", "coverage", har.coverage_fraction, 3.0 / 4.0, ">="),
        _row("sa-harmonic", "rse-ratio-vs-geometric", har.empirical_rse / geo.empirical_rse, 0.9, "<="),
    ]


def check_full_replication(
    n: int = 10**3, k: int = 256, trials: int = 200, seed: int = DEFAULT_SEED
) -> list[CheckRow]:
    """Full-replication estimator coverage at desk scale."""
    geo = run_estimator_experiment(Variant.FULL_REPLICATION, Estimator.GEOMETRIC, n, k, trials, seed)
    har = run_estimator_experiment(Variant.FULL_REPLICATION, Estimator.HARMONIC, n, k, trials, seed)
    return [
        _row("full-geometric", "coverage", geo.coverage_fraction, 5.0 / 6.0, ">="),
        _row("full-harmonic", "coverage", har.coverage_fraction, 3.0 / 4.0, ">="),
    ]


def check_discretization(
    n: int = 10**5,
    k: int = 1024,
    trials: int = 200,
    seed: int = DEFAULT_SEED,
    stepwise_items: int = 10**5,
) -> list[CheckRow]:
    """Twin continuous/discrete runs: the register invariant
    m_i == floor(X_i + c_i) must hold exactly, and rounding must cost at
    most 15% extra geometric RSE."""
    cfg_c = SketchConfig(k=k, seed=seed, variant=Variant.STOCHASTIC_AVERAGING)
    cfg_d = SketchConfig(k=k, seed=seed, variant=Variant.DISCRETIZED)
    cont = ContinuousSketch(cfg_c)
    disc = DiscreteSketch(cfg_d)
    shifts = disc.shifts()
    violations = int((disc.registers != np.floor(cont.registers + shifts)).sum())
    for i in range(stepwise_items):
        d = hashing.digest(hashing.encode_index(i))
        cont.update_digest(d)
        disc.update_digest(d)
        b = hashing.bucket_from_digest(d, k, seed)
        if disc.registers[b] != math.floor(cont.registers[b] + shifts[b]):
            violations += 1
    violations += int((disc.registers != np.floor(cont.registers + shifts)).sum())

    digests = hashing.digest_indices(np.arange(n, dtype=np.uint64))
    err_c = np.empty(trials)
    err_d = np.empty(trials)
    final_mismatches = 0
    for t in range(trials):
        s = trial_seed(seed, t)
        c = _build_sketch(Variant.STOCHASTIC_AVERAGING, k, s, digests)
        dsk = _build_sketch(Variant.DISCRETIZED, k, s, digests)
        twin = np.clip(np.floor(c.registers + dsk.shifts()), REGISTER_MIN, REGISTER_MAX).astype(np.int8)
        if not np.array_equal(twin, dsk.registers):
            final_mismatches += 1
        err_c[t] = c.geometric_estimate().value / n - 1.0
        err_d[t] = dsk.geometric_estimate().value / n - 1.0
    rse_c = float(np.sqrt(np.mean(err_c * err_c)))
    rse_d = float(np.sqrt(np.mean(err_d * err_d)))
    return [
        _row("twin", "stepwise-invariant-violations", violations, 0, "<="),
        _row("twin", "final-state-mismatching-trials", final_mismatches, 0, "<="),
        _row("twin", "geometric-rse-ratio", rse_d / rse_c, 1.15, "<="),
    ]


def check_rounding_distortion(
    sketches: int = 100,
    eps_values: tuple = (0.01, 0.1),
    seed: int = DEFAULT_SEED,
    k: int = 64,
) -> list[CheckRow]:
    """Snapping registers to an eps lattice moves log-estimates by <= eps."""
    rng = np.random.default_rng(seed)
    rows = []
    for eps in eps_values:
        worst = 0.0
        for t in range(sketches):
            variant = Variant.FULL_REPLICATION if t % 2 else Variant.STOCHASTIC_AVERAGING
            n_items = int(rng.integers(50, 3000))
            ids = rng.integers(0, hashing.MASK64, size=n_items, dtype=np.uint64)
            sk = _build_sketch(variant, k, trial_seed(seed, t), hashing.digest_indices(ids))
            z = sk.geometric_estimate().value
            z_rounded = round_registers(sk, eps).geometric_estimate().value
            worst = max(worst, abs(math.log(z_rounded) - math.log(z)))
        rows.append(_row("rounding", f"max-log-distortion-eps{eps}", worst, eps, "<="))
    return rows


def check_merge_exactness(
    pairs: int = 100, seed: int = DEFAULT_SEED, k: int = 64
) -> list[CheckRow]:
    """Merging sketches of two streams must equal sketching their union,
    bit-exactly, across variants; serialized forms must round-trip and
    reject corruption."""
    rng = np.random.default_rng(seed)
    variants = [Variant.FULL_REPLICATION, Variant.STOCHASTIC_AVERAGING, Variant.DISCRETIZED]
    estimate_mismatches = register_mismatches = roundtrip_mismatches = corruption_missed = 0
    for t in range(pairs):
        variant = variants[t % 3]
        size_a = int(rng.integers(100, 800))
        size_b = int(rng.integers(100, 800))
        pool = rng.integers(0, hashing.MASK64, size=size_a + size_b, dtype=np.uint64)
        a_ids = pool[:size_a]
        # overlap: b reuses a random slice of a's items
        take = int(rng.integers(0, size_a))
        b_ids = np.concatenate([pool[size_a : size_a + size_b - take], a_ids[:take]])
        union_ids = np.union1d(a_ids, b_ids)
        s = trial_seed(seed, t)
        sk_a = _build_sketch(variant, k, s, hashing.digest_indices(a_ids))
        sk_b = _build_sketch(variant, k, s, hashing.digest_indices(b_ids))
        sk_u = _build_sketch(variant, k, s, hashing.digest_indices(union_ids))
        merged = merge(sk_a, sk_b)
        if not np.array_equal(merged.registers, sk_u.registers):
            register_mismatches += 1
        if (
            merged.geometric_estimate().value != sk_u.geometric_estimate().value
            or merged.harmonic_estimate().value != sk_u.harmonic_estimate().value
        ):
            estimate_mismatches += 1
        blob = codec.serialize(merged)
        if codec.deserialize(blob) != merged:
            roundtrip_mismatches += 1
        corrupted = bytearray(blob)
        corrupted[20] ^= 0x01  # inside the register payload
        try:
            codec.deserialize(bytes(corrupted))
            corruption_missed += 1
        except codec.ChecksumError:
            pass
    return [
        _row("merge", "register-mismatches", register_mismatches, 0, "<="),
        _row("merge", "estimate-mismatches", estimate_mismatches, 0, "<="),
        _row("codec", "roundtrip-mismatches", roundtrip_mismatches, 0, "<="),
        _row("codec", "corruption-missed", corruption_missed, 0, "<="),
    ]


def acceptance_checks(
    *,
    mc_trials: int = 10**6,
    ks_samples: int = 10**5,
    sa_n: int = 10**6,
    sa_k: int = 1024,
    trials: int = 200,
    full_n: int = 10**3,
    full_k: int = 256,
    twin_n: int = 10**5,
    twin_k: int = 1024,
    stepwise_items: int = 10**5,
    rounding_sketches: int = 100,
    merge_pairs: int = 100,
    seed: int = DEFAULT_SEED,
) -> list[CheckRow]:
    """Run the full check battery; every row must pass at default budgets."""
    rows: list[CheckRow] = []
    rows += check_enumeration_exact()
    rows += check_moment_bounds(mc_trials=mc_trials, seed=seed)
    rows += check_max_stability(samples=ks_samples, seed=seed)
    rows += check_bucket_routing(n=sa_n, k=sa_k, trials=trials, seed=seed)
    rows += check_full_replication(n=full_n, k=full_k, trials=trials, seed=seed)
    rows += check_discretization(
        n=twin_n, k=twin_k, trials=trials, seed=seed, stepwise_items=stepwise_items
    )
    rows += check_rounding_distortion(sketches=rounding_sketches, seed=seed)
    rows += check_merge_exactness(pairs=merge_pairs, seed=seed)
    return rows
