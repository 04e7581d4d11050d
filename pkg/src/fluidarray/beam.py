"""Steered array factor over the direction-cosine plane and peak sidelobe level."""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .crb import SourceDirection
from .errors import NoSidelobeError

MAINLOBE_THRESHOLD = 0.5  # -3 dB
DB_FLOOR = -30.0
# Power differences below this count as flat when tracing the main-lobe basin;
# cos^2 + sin^2 is only 1 to within a few ulp.
PLATEAU_TOL = 1e-12


def _points(layout) -> np.ndarray:
    return np.asarray(getattr(layout, "positions", layout), dtype=float)


def array_factor(layout, u, v, u0: float, v0: float):
    """Normalized power ``|mean_m exp(j 2 pi [x_m (u - u0) + y_m (v - v0)])|^2``.

    ``u`` and ``v`` broadcast against each other; the result lies in [0, 1].
    """
    pts = _points(layout)
    du = np.asarray(u, dtype=float) - u0
    dv = np.asarray(v, dtype=float) - v0
    re = np.zeros(np.broadcast(du, dv).shape)
    im = np.zeros_like(re)
    for x, y in pts:
        phase = 2.0 * math.pi * (x * du + y * dv)
        re += np.cos(phase)
        im += np.sin(phase)
    m = len(pts)
    power = (re * re + im * im) / (m * m)
    return float(power) if power.ndim == 0 else power


@dataclass(frozen=True, eq=False)
class BeamMap:
    """Array-factor power on a uniform ``n_uv x n_uv`` grid over ``[-1, 1]^2``.

    ``power[i, j]`` is evaluated at ``(u_values[i], v_values[j])``; cells
    outside the unit disk hold NaN.
    """

    grid_size: int
    u_values: np.ndarray
    v_values: np.ndarray
    power: np.ndarray
    steer: tuple[float, float]

    @property
    def valid(self) -> np.ndarray:
        return ~np.isnan(self.power)

    def steer_cell(self) -> tuple[int, int]:
        u0, v0 = self.steer
        return (
            int(np.argmin(np.abs(self.u_values - u0))),
            int(np.argmin(np.abs(self.v_values - v0))),
        )

    def db(self, floor: float | None = DB_FLOOR) -> np.ndarray:
        with np.errstate(divide="ignore"):
            out = 10.0 * np.log10(self.power)
        if floor is not None:
            out = np.where(np.isnan(out), out, np.maximum(out, floor))
        return out


def beam_map(layout, direction: SourceDirection, n_uv: int = 301, threads: int = 1) -> BeamMap:
    if n_uv < 3:
        raise ValueError(f"n_uv must be at least 3, got {n_uv}")
    grid = np.linspace(-1.0, 1.0, n_uv)
    u0, v0 = direction.u, direction.v
    visible = grid[:, None] ** 2 + grid[None, :] ** 2 <= 1.0

    def rows(lo, hi):
        return array_factor(layout, grid[lo:hi, None], grid[None, :], u0, v0)

    if threads == 1:
        power = rows(0, n_uv)
    else:
        # Row blocks are evaluated independently, so results do not depend on
        # how the grid is partitioned.
        bounds = np.linspace(0, n_uv, 17).astype(int)
        with ThreadPoolExecutor(max_workers=threads or None) as pool:
            parts = list(pool.map(lambda b: rows(*b), zip(bounds[:-1], bounds[1:])))
        power = np.vstack([p for p in parts if p.size])
    power = np.where(visible, power, np.nan)
    for arr in (grid, power):
        arr.setflags(write=False)
    return BeamMap(n_uv, grid, grid, power, (u0, v0))


_NEIGHBOURS = ((1, 0), (-1, 0), (0, 1), (0, -1))


def _shift(a: np.ndarray, di: int, dj: int, fill) -> np.ndarray:
    """``out[i, j] = a[i - di, j - dj]``, padding with ``fill``."""
    out = np.full_like(a, fill)
    n0, n1 = a.shape
    out[max(di, 0):n0 + min(di, 0), max(dj, 0):n1 + min(dj, 0)] = a[
        max(-di, 0):n0 + min(-di, 0), max(-dj, 0):n1 + min(-dj, 0)
    ]
    return out


def _climb(power: np.ndarray, valid: np.ndarray, start: tuple[int, int]) -> tuple[int, int]:
    i, j = start
    n0, n1 = power.shape
    while True:
        best = (power[i, j], i, j)
        for di, dj in _NEIGHBOURS:
            a, b = i + di, j + dj
            if 0 <= a < n0 and 0 <= b < n1 and valid[a, b] and power[a, b] > best[0]:
                best = (power[a, b], a, b)
        if best[1:] == (i, j):
            return i, j
        i, j = best[1], best[2]


def mainlobe_mask(bmap: BeamMap, method: str = "basin",
                  threshold: float = MAINLOBE_THRESHOLD) -> np.ndarray:
    """Boolean mask of the main-lobe cells.

    ``"basin"``: climb from the steer cell to its local peak, then take every
    valid cell reachable from the peak through 4-neighbour steps that never
    increase in power. Everything outside the basin is bounded by a local
    maximum, so the largest outside value is a genuine sidelobe peak.

    ``"threshold"``: the 4-connected region of valid cells with power at or
    above ``threshold`` that holds the steer cell. Its complement contains
    the main beam's own skirt, so the resulting PSL never drops below
    ``10 log10(threshold)``.
    """
    valid = bmap.valid
    power = np.where(valid, bmap.power, -1.0)
    if method == "threshold":
        labels, _ = ndimage.label(valid & (power >= threshold))
        label = labels[bmap.steer_cell()]
        if label == 0:
            raise ValueError("steer cell is not part of any above-threshold region")
        return labels == label
    if method != "basin":
        raise ValueError(f"unknown main-lobe method {method!r}")
    region = np.zeros(power.shape, dtype=bool)
    region[_climb(power, valid, bmap.steer_cell())] = True
    while True:
        grown = region.copy()
        for di, dj in _NEIGHBOURS:
            from_in = _shift(region, di, dj, False)
            from_power = _shift(power, di, dj, -1.0)
            grown |= from_in & valid & (power <= from_power + PLATEAU_TOL)
        if np.array_equal(grown, region):
            return region
        region = grown


def psl_db(bmap: BeamMap, method: str = "basin") -> float:
    """Peak sidelobe level in dB relative to the main-lobe peak.

    Raises:
        NoSidelobeError: the main lobe covers every visible cell.
    """
    mask = mainlobe_mask(bmap, method)
    rest = bmap.valid & ~mask
    if not rest.any():
        raise NoSidelobeError("main lobe covers the whole visible region")
    peak = np.max(bmap.power[mask])
    side = np.max(bmap.power[rest])
    if side <= 0.0:
        return -math.inf
    return float(10.0 * math.log10(side / peak))
