"""Port placement: candidate grid, regularized greedy selection, baselines."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import InfeasiblePlacementError
from .geometry import (
    GEOMETRY_TOL,
    Aperture,
    PortLayout,
    ScatterAccumulator,
    det_with_candidates,
    inertia_matrix,
)

# Scores within this relative distance of the stage maximum count as ties;
# the earliest candidate in canonical order wins among them.
TIE_REL_TOL = 1e-10
REJECTION_BUDGET = 100_000


@dataclass(frozen=True)
class PlacementConfig:
    m: int
    aperture: Aperture
    grid_spacing: float
    d_min: float
    beta0: float = 0.0

    def __post_init__(self):
        if self.m < 4:
            raise ValueError(f"need m >= 4 (corners are pinned), got {self.m}")
        if not self.grid_spacing > 0:
            raise ValueError(f"grid spacing must be positive, got {self.grid_spacing}")
        if self.d_min < 0:
            raise ValueError(f"d_min must be non-negative, got {self.d_min}")
        if self.grid_spacing > self.d_min + GEOMETRY_TOL:
            raise ValueError(
                f"grid spacing {self.grid_spacing} exceeds d_min {self.d_min}"
            )
        if self.beta0 < 0:
            raise ValueError(f"beta0 must be non-negative, got {self.beta0}")


@dataclass(frozen=True, eq=False)
class CandidateSet:
    points: np.ndarray

    @property
    def count(self) -> int:
        return len(self.points)


@dataclass(frozen=True)
class GreedyStage:
    """Bookkeeping for one greedy stage, kept for verification."""

    stage: int
    n_feasible: int
    chosen: tuple[float, float]
    score: float
    det_incremental: float
    min_dist_sq: float


@dataclass(frozen=True, eq=False)
class GreedyResult:
    layout: PortLayout
    beta: float
    stages: list[GreedyStage] = field(default_factory=list)
    evaluations: int = 0


def _grid_axis(width: float, step: float) -> np.ndarray:
    n = int(math.floor(width / step + GEOMETRY_TOL))
    # Rounding snaps i * step onto the decimal grid, e.g. 3 * 0.1 -> 0.3.
    return np.round(np.arange(n + 1) * step, 12)


def _far_enough(points: np.ndarray, anchors: np.ndarray, d_min: float) -> np.ndarray:
    d2 = (points[:, None, 0] - anchors[None, :, 0]) ** 2 + (
        points[:, None, 1] - anchors[None, :, 1]
    ) ** 2
    limit = max(d_min - GEOMETRY_TOL, 0.0) ** 2
    return np.all(d2 >= limit, axis=1)


def generate_candidates(cfg: PlacementConfig) -> CandidateSet:
    """Admissible grid points ordered by x, then y.

    Raises:
        InfeasiblePlacementError: no grid point is at least ``d_min`` from
            every corner.
    """
    xs = _grid_axis(cfg.aperture.width_x, cfg.grid_spacing)
    ys = _grid_axis(cfg.aperture.width_y, cfg.grid_spacing)
    gx, gy = np.meshgrid(xs, ys, indexing="ij")
    grid = np.column_stack([gx.ravel(), gy.ravel()])
    corners = cfg.aperture.corners()
    is_corner = np.zeros(len(grid), dtype=bool)
    for c in corners:
        is_corner |= np.all(np.abs(grid - c) <= GEOMETRY_TOL, axis=1)
    keep = ~is_corner & _far_enough(grid, corners, cfg.d_min)
    points = grid[keep]
    if len(points) == 0:
        raise InfeasiblePlacementError(
            f"no admissible candidate for d_min={cfg.d_min} in "
            f"{cfg.aperture.width_x} x {cfg.aperture.width_y}"
        )
    points.setflags(write=False)
    return CandidateSet(points)


def beta_from_beta0(cfg: PlacementConfig) -> float:
    """Self-normalized diversity weight ``beta0 * det(corners) / area``."""
    corner_det = inertia_matrix(cfg.aperture.corners()).det
    return cfg.beta0 * corner_det / cfg.aperture.area()


def _first_max(scores: np.ndarray) -> int:
    best = scores.max()
    tol = TIE_REL_TOL * max(abs(best), 1.0)
    return int(np.flatnonzero(scores >= best - tol)[0])


def greedy_trace(cfg: PlacementConfig) -> GreedyResult:
    """Regularized greedy selection with full per-stage bookkeeping.

    Each stage adds the feasible candidate maximizing
    ``det(inertia(S + g)) + beta * min_s |g - s|^2``; the determinant term
    comes from running sums in O(1) per candidate.

    Raises:
        InfeasiblePlacementError: a stage has no candidate at least ``d_min``
            from every placed port.
    """
    candidates = generate_candidates(cfg).points
    beta = beta_from_beta0(cfg)
    corners = cfg.aperture.corners()
    chosen = [tuple(c) for c in corners]
    acc = ScatterAccumulator.from_points(corners)
    available = np.ones(len(candidates), dtype=bool)
    # Squared distance from every candidate to its nearest placed port.
    nearest_sq = ((candidates[:, None, :] - corners[None, :, :]) ** 2).sum(axis=2).min(axis=1)
    limit_sq = max(cfg.d_min - GEOMETRY_TOL, 0.0) ** 2
    stages = []
    evaluations = 0
    for k in range(1, cfg.m - 4 + 1):
        feasible = available & (nearest_sq >= limit_sq)
        idx = np.flatnonzero(feasible)
        if len(idx) == 0:
            raise InfeasiblePlacementError(
                f"stage {k}: no feasible candidate with {len(chosen)} ports placed",
                stage=k,
                placed=len(chosen),
            )
        pts = candidates[idx]
        dets = det_with_candidates(acc, pts)
        scores = dets + beta * nearest_sq[idx] if beta else dets
        evaluations += len(idx)
        best = _first_max(scores)
        g = pts[best]
        acc = acc.add(g)
        stages.append(
            GreedyStage(
                stage=k,
                n_feasible=len(idx),
                chosen=(float(g[0]), float(g[1])),
                score=float(scores[best]),
                det_incremental=float(dets[best]),
                min_dist_sq=float(nearest_sq[idx[best]]),
            )
        )
        chosen.append((float(g[0]), float(g[1])))
        available[idx[best]] = False
        nearest_sq = np.minimum(nearest_sq, ((candidates - g) ** 2).sum(axis=1))
    layout = PortLayout(cfg.aperture, np.array(chosen), d_min=cfg.d_min)
    return GreedyResult(layout, beta, stages, evaluations)


def greedy_select(cfg: PlacementConfig) -> PortLayout:
    return greedy_trace(cfg).layout


def grid_shape(m: int, aperture: Aperture) -> tuple[int, int]:
    """Grid dimensions ``(Mx, My)`` for the uniform baseline.

    Only shapes whose column count tracks the aperture aspect to within one
    element, ``|Mx - My * Wx / Wy| <= 1``, are considered. Among those the
    smallest product ``>= m`` wins, then the aspect closest to ``Wx / Wy``,
    then the larger ``Mx``.
    """
    ratio = aperture.width_x / aperture.width_y
    best = None
    for my in range(2, m + 1):
        lo = max(2, math.ceil(my * ratio - 1 - 1e-12))
        hi = math.floor(my * ratio + 1 + 1e-12)
        for mx in range(lo, hi + 1):
            if mx * my < m:
                continue
            key = (mx * my, round(abs(math.log((mx / my) / ratio)), 12), -mx)
            if best is None or key < best[0]:
                best = (key, (mx, my))
        if best is not None and 2 * my > best[0][0]:
            break
    return best[1]


def uniform_grid_baseline(m: int, aperture: Aperture) -> PortLayout:
    """Regular ``Mx x My`` grid spanning the aperture, thinned to ``m`` ports.

    Excess ports are removed closest-to-center first (ties: smaller x, then
    smaller y); corners are never removed. Corners come first in the layout,
    the remaining ports follow in x-then-y order.
    """
    if m < 4:
        raise ValueError(f"need m >= 4, got {m}")
    mx, my = grid_shape(m, aperture)
    xs = np.linspace(0.0, aperture.width_x, mx)
    ys = np.linspace(0.0, aperture.width_y, my)
    gx, gy = np.meshgrid(xs, ys, indexing="ij")
    pts = np.column_stack([gx.ravel(), gy.ravel()])
    corners = aperture.corners()
    is_corner = np.zeros(len(pts), dtype=bool)
    for c in corners:
        is_corner |= np.all(pts == c, axis=1)
    free = pts[~is_corner]
    excess = mx * my - m
    if excess:
        center = np.array([aperture.width_x / 2, aperture.width_y / 2])
        dist = np.round(np.hypot(*(free - center).T), 12)
        order = np.lexsort((free[:, 1], free[:, 0], dist))
        keep = np.ones(len(free), dtype=bool)
        keep[order[:excess]] = False
        free = free[keep]
    return PortLayout.cornered(aperture, free)


def random_baseline(m: int, aperture: Aperture, d_min: float, seed) -> PortLayout:
    """Corners plus ``m - 4`` uniform ports placed by rejection sampling.

    ``seed`` may be an int or a :class:`numpy.random.SeedSequence`.

    Raises:
        InfeasiblePlacementError: a port exhausted its retry budget.
    """
    if m < 4:
        raise ValueError(f"need m >= 4, got {m}")
    corners = aperture.corners()
    if m == 4:
        return PortLayout.cornered(aperture)
    rng = np.random.default_rng(seed)
    placed = np.empty((m, 2))
    placed[:4] = corners
    d2_min = d_min * d_min
    for k in range(4, m):
        for _ in range(REJECTION_BUDGET):
            p = rng.uniform((0.0, 0.0), (aperture.width_x, aperture.width_y))
            d2 = ((placed[:k] - p) ** 2).sum(axis=1)
            if d2.min() >= d2_min:
                placed[k] = p
                break
        else:
            raise InfeasiblePlacementError(
                f"rejection sampling exhausted {REJECTION_BUDGET} draws for port {k + 1}",
                stage=k - 3,
                placed=k,
            )
    return PortLayout(aperture, placed, d_min=d_min)


def count_interior_ports(layout: PortLayout, aperture: Aperture, margin: float) -> int:
    """Ports strictly more than ``margin`` away from every aperture edge."""
    if margin < 0:
        raise ValueError(f"margin must be non-negative, got {margin}")
    x, y = layout.x, layout.y
    inside = (
        (x > margin + GEOMETRY_TOL)
        & (x < aperture.width_x - margin - GEOMETRY_TOL)
        & (y > margin + GEOMETRY_TOL)
        & (y < aperture.width_y - margin - GEOMETRY_TOL)
    )
    return int(inside.sum())
