"""Minimum inter-port distance under uniform random placement.

The planar law is the Rayleigh approximation obtained by treating the number
of close pairs as Poisson; the linear law is the exact order-statistics
result on an interval. :func:`sample_min_distances` provides the Monte Carlo
side used to validate both.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Literal

import numpy as np

from .errors import DomainError
from .geometry import Aperture

# Trials are drawn in fixed-size blocks, each with its own stream derived
# from (seed, block index). The block size is part of the reproducibility
# contract: changing it changes the sampled values.
BLOCK_TRIALS = 1024
# Upper bound on float64 elements held by one pairwise-distance chunk.
_CHUNK_ELEMENTS = 1 << 22


@dataclass(frozen=True)
class SpacingLaw:
    """Rayleigh law of the minimum distance among ``m`` points in ``area``."""

    m: int
    area: float

    def __post_init__(self):
        if int(self.m) != self.m or self.m < 2:
            raise DomainError(f"need at least two ports, got m={self.m}")
        if not self.area > 0:
            raise DomainError(f"area must be positive, got {self.area}")

    @property
    def pairs(self) -> int:
        return self.m * (self.m - 1) // 2

    @property
    def alpha(self) -> float:
        """Coefficient of ``r**2`` in the expected close-pair count."""
        return self.m * (self.m - 1) * math.pi / (2.0 * self.area)

    @property
    def sigma_r(self) -> float:
        return math.sqrt(self.area / (self.m * (self.m - 1) * math.pi))

    def expected_close_pairs(self, r):
        return self.alpha * np.square(r)


def _check_radius(r):
    arr = np.asarray(r, dtype=float)
    if np.any(arr < 0) or np.any(np.isnan(arr)):
        raise DomainError("distance must be non-negative")
    return arr


def _scalar_or_array(value, like):
    return float(value) if np.ndim(like) == 0 else value


def ccdf(law: SpacingLaw, r):
    """``P(R_min > r) = exp(-alpha r^2)``; accepts scalars or arrays."""
    arr = _check_radius(r)
    return _scalar_or_array(np.exp(-law.alpha * arr * arr), r)


def cdf(law: SpacingLaw, r):
    arr = _check_radius(r)
    return _scalar_or_array(-np.expm1(-law.alpha * arr * arr), r)


def pdf(law: SpacingLaw, r):
    arr = _check_radius(r)
    a = law.alpha
    return _scalar_or_array(2.0 * a * arr * np.exp(-a * arr * arr), r)


def mean_min_distance(law: SpacingLaw) -> float:
    return 0.5 * math.sqrt(2.0 * law.area / (law.m * (law.m - 1)))


def var_min_distance(law: SpacingLaw) -> float:
    return (4.0 - math.pi) * law.area / (2.0 * math.pi * law.m * (law.m - 1))


def dmin_guideline(m: int, area: float, epsilon: float) -> float:
    """Largest ``d_min`` whose collision probability stays at most ``epsilon``.

    Under the Rayleigh law, ``P(R_min <= d) <= epsilon`` holds exactly up to
    ``d = sqrt(-2 A ln(1 - epsilon) / (M (M - 1) pi))``.
    """
    if not 0.0 < epsilon < 1.0:
        raise DomainError(f"epsilon must lie in (0, 1), got {epsilon}")
    law = SpacingLaw(m, area)
    return math.sqrt(-2.0 * area * math.log1p(-epsilon) / (law.m * (law.m - 1) * math.pi))


def linear_exact_ccdf(m: int, w_max: float, delta):
    """Exact ``P(min gap > delta)`` for ``m`` uniform points on ``[0, w_max]``.

    Total function of ``delta >= 0``: beyond the support end
    ``w_max / (m - 1)`` the probability is 0.
    """
    if m < 2:
        raise DomainError(f"need at least two ports, got m={m}")
    if not w_max > 0:
        raise DomainError(f"w_max must be positive, got {w_max}")
    arr = _check_radius(delta)
    base = np.clip(1.0 - (m - 1) * arr / w_max, 0.0, None)
    return _scalar_or_array(base**m, delta)


def linear_mean_min_gap(m: int, w_max: float) -> float:
    return w_max / (m * m - 1)


@dataclass(frozen=True, eq=False)
class MinDistanceSample:
    """Monte Carlo minimum pairwise distances, one value per trial in trial order."""

    trials: int
    values: np.ndarray
    seed: int

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float)
        if vals.shape != (self.trials,):
            raise ValueError(f"expected {self.trials} values, got shape {vals.shape}")
        if np.any(vals < 0):
            raise ValueError("minimum distances cannot be negative")
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)

    def mean(self) -> float:
        return float(self.values.mean())

    def var(self) -> float:
        return float(self.values.var())

    def empirical_ccdf(self, r) -> np.ndarray:
        """Fraction of trials with minimum distance strictly above ``r``."""
        s = np.sort(self.values)
        idx = np.searchsorted(s, np.asarray(r, dtype=float), side="right")
        return 1.0 - idx / self.trials


def _block_rng(seed: int, block: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(block,)))


def _planar_block(rng, n, m, wx, wy) -> np.ndarray:
    # Draw all coordinates up front so the stream does not depend on chunking.
    x = rng.uniform(0.0, wx, size=(n, m))
    y = rng.uniform(0.0, wy, size=(n, m))
    i, j = np.triu_indices(m, 1)
    out = np.empty(n)
    step = max(1, _CHUNK_ELEMENTS // len(i))
    for lo in range(0, n, step):
        hi = min(n, lo + step)
        xs, ys = x[lo:hi], y[lo:hi]
        d2 = (xs[:, i] - xs[:, j]) ** 2 + (ys[:, i] - ys[:, j]) ** 2
        out[lo:hi] = np.sqrt(d2.min(axis=1))
    return out


def _linear_block(rng, n, m, w) -> np.ndarray:
    x = np.sort(rng.uniform(0.0, w, size=(n, m)), axis=1)
    return np.diff(x, axis=1).min(axis=1)


def sample_min_distances(
    m: int,
    aperture: Aperture,
    trials: int,
    seed: int,
    dimension: Literal["planar", "linear"] = "planar",
    threads: int = 1,
) -> MinDistanceSample:
    """Minimum pairwise distance of ``m`` i.i.d. uniform ports, per trial.

    Planar trials place ports in the aperture rectangle; linear trials place
    them on ``[0, aperture.width_x]``. No spacing constraint is imposed. The
    result depends only on ``(m, aperture, trials, seed, dimension)``; the
    ``threads`` count changes speed, never values.
    """
    if m < 2:
        raise DomainError(f"need at least two ports, got m={m}")
    if trials < 1:
        raise DomainError(f"need at least one trial, got {trials}")
    if dimension not in ("planar", "linear"):
        raise ValueError(f"unknown dimension {dimension!r}")

    n_blocks = -(-trials // BLOCK_TRIALS)

    def run(block: int) -> np.ndarray:
        n = min(BLOCK_TRIALS, trials - block * BLOCK_TRIALS)
        rng = _block_rng(seed, block)
        if dimension == "planar":
            return _planar_block(rng, n, m, aperture.width_x, aperture.width_y)
        return _linear_block(rng, n, m, aperture.width_x)

    if threads == 1 or n_blocks == 1:
        parts = [run(b) for b in range(n_blocks)]
    else:
        with ThreadPoolExecutor(max_workers=threads or None) as pool:
            parts = list(pool.map(run, range(n_blocks)))
    return MinDistanceSample(trials, np.concatenate(parts), seed)


def ks_distance(sample: MinDistanceSample, law: SpacingLaw) -> float:
    """One-sample Kolmogorov-Smirnov statistic against the law's CDF."""
    s = np.sort(np.asarray(sample.values, dtype=float))
    n = len(s)
    if n == 0:
        raise DomainError("KS distance of an empty sample")
    f = cdf(law, s)
    above = np.arange(1, n + 1) / n - f
    below = f - np.arange(n) / n
    return float(max(above.max(), below.max()))
