"""Port layouts, apertures and the geometric inertia matrix.

All lengths are in wavelengths. A layout is an immutable ``(M, 2)`` array of
port coordinates tied to the rectangular aperture ``[0, Wx] x [0, Wy]`` that
contains it.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .errors import EmptyAccumulatorError

# Slack for comparisons against aperture edges and d_min, in wavelengths.
# Grid coordinates such as 18 * 0.1 are not exactly representable.
GEOMETRY_TOL = 1e-9


@dataclass(frozen=True)
class Aperture:
    """Rectangular placement region of size ``width_x`` by ``width_y``."""

    width_x: float
    width_y: float

    def __post_init__(self):
        if not (self.width_x > 0 and self.width_y > 0):
            raise ValueError(
                f"aperture widths must be positive, got ({self.width_x}, {self.width_y})"
            )

    def area(self) -> float:
        return self.width_x * self.width_y

    def corners(self) -> np.ndarray:
        """The four vertices in pinned order: origin, +x, +y, far corner."""
        wx, wy = self.width_x, self.width_y
        return np.array([[0.0, 0.0], [wx, 0.0], [0.0, wy], [wx, wy]])

    def contains(self, points, tol: float = GEOMETRY_TOL) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        return (
            (pts[:, 0] >= -tol)
            & (pts[:, 0] <= self.width_x + tol)
            & (pts[:, 1] >= -tol)
            & (pts[:, 1] <= self.width_y + tol)
        )


def pairwise_min_distance(points) -> float:
    """Smallest Euclidean distance over all pairs; ``inf`` for fewer than 2 points."""
    pts = np.asarray(points, dtype=float)
    if len(pts) < 2:
        return math.inf
    i, j = np.triu_indices(len(pts), 1)
    d2 = (pts[i, 0] - pts[j, 0]) ** 2 + (pts[i, 1] - pts[j, 1]) ** 2
    return float(np.sqrt(d2.min()))


@dataclass(frozen=True, eq=False)
class PortLayout:
    """Ordered port positions inside an aperture.

    Args:
        aperture: the owning aperture; every port must lie inside it.
        positions: ``(M, 2)`` array-like of ``(x, y)`` pairs, ``M >= 1``.
        d_min: if given, every pairwise distance must be at least ``d_min``.
    """

    aperture: Aperture
    positions: np.ndarray
    d_min: float | None = field(default=None)

    def __post_init__(self):
        pos = np.array(self.positions, dtype=float)
        if pos.ndim != 2 or pos.shape[1] != 2:
            raise ValueError(f"positions must have shape (M, 2), got {pos.shape}")
        if len(pos) == 0:
            raise ValueError("a layout needs at least one port")
        if not np.all(np.isfinite(pos)):
            raise ValueError("port coordinates must be finite")
        outside = ~self.aperture.contains(pos)
        if outside.any():
            k = int(np.flatnonzero(outside)[0])
            raise ValueError(f"port {k} at {tuple(pos[k])} lies outside the aperture")
        if self.d_min is not None and len(pos) > 1:
            closest = pairwise_min_distance(pos)
            if closest < self.d_min - GEOMETRY_TOL:
                raise ValueError(
                    f"ports violate the spacing constraint: {closest:.6g} < d_min={self.d_min}"
                )
        pos.setflags(write=False)
        object.__setattr__(self, "positions", pos)

    @classmethod
    def cornered(cls, aperture: Aperture, free_points=(), d_min=None) -> "PortLayout":
        """Layout whose first four ports are the aperture vertices."""
        free = np.asarray(free_points, dtype=float).reshape(-1, 2)
        return cls(aperture, np.vstack([aperture.corners(), free]), d_min=d_min)

    @property
    def m(self) -> int:
        return len(self.positions)

    @property
    def x(self) -> np.ndarray:
        return self.positions[:, 0]

    @property
    def y(self) -> np.ndarray:
        return self.positions[:, 1]

    def __len__(self):
        return self.m

    def __eq__(self, other):
        if not isinstance(other, PortLayout):
            return NotImplemented
        return self.aperture == other.aperture and np.array_equal(
            self.positions, other.positions
        )

    def translated(self, shift) -> np.ndarray:
        """Shifted coordinates (not a layout: the result may leave the aperture)."""
        return self.positions + np.asarray(shift, dtype=float)

    def to_dict(self) -> dict:
        return {
            "wx": self.aperture.width_x,
            "wy": self.aperture.width_y,
            "ports": [[float(x), float(y)] for x, y in self.positions],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "PortLayout":
        try:
            aperture = Aperture(float(data["wx"]), float(data["wy"]))
            ports = data["ports"]
        except (KeyError, TypeError) as exc:
            raise ValueError(f"malformed layout document: {exc}") from exc
        return cls(aperture, np.asarray(ports, dtype=float).reshape(-1, 2))

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, text: str) -> "PortLayout":
        return cls.from_dict(json.loads(text))


@dataclass(frozen=True)
class InertiaMatrix:
    """Symmetric 2x2 centered scatter matrix ``[[l_qq, l_qr], [l_qr, l_rr]]``."""

    l_qq: float
    l_rr: float
    l_qr: float

    @property
    def det(self) -> float:
        return self.l_qq * self.l_rr - self.l_qr**2

    @property
    def trace(self) -> float:
        return self.l_qq + self.l_rr

    def as_array(self) -> np.ndarray:
        return np.array([[self.l_qq, self.l_qr], [self.l_qr, self.l_rr]])

    def is_singular(self, rel_tol: float = 1e-12) -> bool:
        """Scale-free collinearity test ``det <= rel_tol * trace**2``."""
        return self.det <= rel_tol * self.trace**2


def _as_points(layout) -> np.ndarray:
    pts = layout.positions if isinstance(layout, PortLayout) else layout
    pts = np.asarray(pts, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != 2:
        raise ValueError(f"expected (M, 2) coordinates, got shape {pts.shape}")
    return pts


def rotate_coordinates(layout, phi: float) -> np.ndarray:
    """Project ports onto the azimuth direction and its perpendicular.

    Returns an ``(M, 2)`` array of ``(q, r)`` with ``q = x cos(phi) + y sin(phi)``
    and ``r = -x sin(phi) + y cos(phi)``, in port order.
    """
    pts = _as_points(layout)
    c, s = math.cos(phi), math.sin(phi)
    q = pts[:, 0] * c + pts[:, 1] * s
    r = -pts[:, 0] * s + pts[:, 1] * c
    return np.column_stack([q, r])


def inertia_matrix(layout, phi: float = 0.0) -> InertiaMatrix:
    """Centered second-order statistics of the rotated port coordinates.

    Accepts a :class:`PortLayout` or a raw ``(M, 2)`` array. A single port
    gives the zero matrix.
    """
    qr = rotate_coordinates(layout, phi)
    if len(qr) == 0:
        raise ValueError("inertia of an empty point set is undefined")
    dq = qr[:, 0] - qr[:, 0].mean()
    dr = qr[:, 1] - qr[:, 1].mean()
    return InertiaMatrix(float(dq @ dq), float(dr @ dr), float(dq @ dr))


def det_trace(inertia: InertiaMatrix) -> tuple[float, float]:
    return inertia.det, inertia.trace


@dataclass(frozen=True)
class ScatterAccumulator:
    """Running sums of a growing point set.

    The inertia determinant of the accumulated points can be read off the
    sums in constant time (see :func:`det_from_sums`), which is what makes
    each greedy candidate evaluation O(1).
    """

    s_xx: float = 0.0
    s_yy: float = 0.0
    s_xy: float = 0.0
    s_x: float = 0.0
    s_y: float = 0.0
    count: int = 0

    @classmethod
    def from_points(cls, points: Iterable[Sequence[float]]) -> "ScatterAccumulator":
        acc = cls()
        for p in points:
            acc = accumulator_add(acc, p)
        return acc

    def add(self, point) -> "ScatterAccumulator":
        return accumulator_add(self, point)

    def det(self) -> float:
        return det_from_sums(self)


def accumulator_add(acc: ScatterAccumulator, p) -> ScatterAccumulator:
    x, y = float(p[0]), float(p[1])
    return ScatterAccumulator(
        s_xx=acc.s_xx + x * x,
        s_yy=acc.s_yy + y * y,
        s_xy=acc.s_xy + x * y,
        s_x=acc.s_x + x,
        s_y=acc.s_y + y,
        count=acc.count + 1,
    )


def det_from_sums(acc: ScatterAccumulator) -> float:
    if acc.count == 0:
        raise EmptyAccumulatorError("determinant of an empty accumulator")
    n = acc.count
    lxx = acc.s_xx - acc.s_x**2 / n
    lyy = acc.s_yy - acc.s_y**2 / n
    lxy = acc.s_xy - acc.s_x * acc.s_y / n
    return lxx * lyy - lxy**2


def det_with_candidates(acc: ScatterAccumulator, candidates) -> np.ndarray:
    """Determinant of ``acc`` plus each candidate point, vectorised over candidates."""
    g = np.asarray(candidates, dtype=float).reshape(-1, 2)
    gx, gy = g[:, 0], g[:, 1]
    n = acc.count + 1
    sx = acc.s_x + gx
    sy = acc.s_y + gy
    lxx = (acc.s_xx + gx * gx) - sx**2 / n
    lyy = (acc.s_yy + gy * gy) - sy**2 / n
    lxy = (acc.s_xy + gx * gy) - sx * sy / n
    return lxx * lyy - lxy**2
