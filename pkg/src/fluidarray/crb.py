"""Steering vectors, Fisher information and Cramer-Rao bounds for (theta, phi).

The closed form expresses the 2x2 FIM through the inertia matrix of the
azimuth-rotated port coordinates. :func:`fim_numeric_oracle` assembles the
same matrix from the Slepian-Bangs quadratic forms without any of that
simplification, so the two can be checked against each other.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Literal

import numpy as np

from .errors import SingularFisherError
from .geometry import InertiaMatrix, inertia_matrix

SINGULAR_REL_TOL = 1e-12
FD_STEP = 1e-6


@dataclass(frozen=True)
class SourceDirection:
    """Far-field direction: elevation ``theta`` from broadside, azimuth ``phi`` (radians)."""

    theta: float
    phi: float

    @classmethod
    def from_degrees(cls, theta_deg: float, phi_deg: float) -> "SourceDirection":
        return cls(math.radians(theta_deg), math.radians(phi_deg))

    @property
    def u(self) -> float:
        return math.sin(self.theta) * math.cos(self.phi)

    @property
    def v(self) -> float:
        return math.sin(self.theta) * math.sin(self.phi)


@dataclass(frozen=True)
class ObservationSpec:
    """Snapshot count and linear per-port SNR ``P_s / sigma_n^2``."""

    snapshots: int
    snr_linear: float

    def __post_init__(self):
        if self.snapshots < 1:
            raise ValueError(f"need at least one snapshot, got {self.snapshots}")
        if not self.snr_linear > 0:
            raise ValueError(f"SNR must be positive, got {self.snr_linear}")

    @classmethod
    def from_db(cls, snapshots: int, snr_db: float) -> "ObservationSpec":
        return cls(snapshots, 10.0 ** (snr_db / 10.0))

    @property
    def gain(self) -> float:
        """Common FIM prefactor ``8 pi^2 T SNR``."""
        return 8.0 * math.pi**2 * self.snapshots * self.snr_linear


@dataclass(frozen=True)
class CrbResult:
    crb_theta: float
    crb_phi: float
    j_tt: float
    j_pp: float
    j_tp: float
    det_inertia: float
    inertia: InertiaMatrix

    @property
    def fim(self) -> np.ndarray:
        return np.array([[self.j_tt, self.j_tp], [self.j_tp, self.j_pp]])


def _points(layout) -> np.ndarray:
    return np.asarray(getattr(layout, "positions", layout), dtype=float)


def steering_vector(layout, direction: SourceDirection) -> np.ndarray:
    """Unit-modulus phase response ``exp(-j 2 pi (x u + y v))`` per port."""
    pts = _points(layout)
    phase = -2.0 * math.pi * (pts[:, 0] * direction.u + pts[:, 1] * direction.v)
    return np.exp(1j * phase)


def fim_entries(inertia: InertiaMatrix, theta: float, obs: ObservationSpec):
    c, s = math.cos(theta), math.sin(theta)
    g = obs.gain
    return g * c * c * inertia.l_qq, g * s * s * inertia.l_rr, g * c * s * inertia.l_qr


def fim_closed_form(layout, direction: SourceDirection, obs: ObservationSpec) -> CrbResult:
    """Closed-form FIM and the two angle CRBs.

    Raises:
        SingularFisherError: the rotated ports are collinear, or ``theta`` sits
            at broadside (azimuth unidentifiable) or endfire (elevation
            unidentifiable).
    """
    inertia = inertia_matrix(layout, direction.phi)
    det_l = inertia.det
    if inertia.is_singular(SINGULAR_REL_TOL):
        raise SingularFisherError(
            f"collinear port projection: det={det_l:.3e}, trace={inertia.trace:.3e}"
        )
    c2 = math.cos(direction.theta) ** 2
    s2 = math.sin(direction.theta) ** 2
    if s2 <= SINGULAR_REL_TOL:
        raise SingularFisherError("azimuth is unidentifiable at broadside (sin(theta) = 0)")
    if c2 <= SINGULAR_REL_TOL:
        raise SingularFisherError("elevation is unidentifiable at endfire (cos(theta) = 0)")
    j_tt, j_pp, j_tp = fim_entries(inertia, direction.theta, obs)
    crb_theta = inertia.l_rr / (obs.gain * c2 * det_l)
    crb_phi = inertia.l_qq / (obs.gain * s2 * det_l)
    return CrbResult(crb_theta, crb_phi, j_tt, j_pp, j_tp, det_l, inertia)


def crb_1d_reduction(positions_x, theta: float, obs: ObservationSpec) -> float:
    """Single-parameter elevation CRB of a linear array laid along x (phi = 0)."""
    x = np.asarray(positions_x, dtype=float)
    if len(x) < 2 or np.all(x == x[0]):
        raise SingularFisherError("need at least two distinct positions")
    c2 = math.cos(theta) ** 2
    if c2 <= SINGULAR_REL_TOL:
        raise SingularFisherError("elevation is unidentifiable at endfire (cos(theta) = 0)")
    dx = x - x.mean()
    return 1.0 / (obs.gain * c2 * float(dx @ dx))


def steering_derivatives(layout, direction: SourceDirection, mode="analytic_derivative",
                         step=FD_STEP):
    """Partial derivatives of the steering vector w.r.t. theta and phi."""
    if mode == "analytic_derivative":
        a = steering_vector(layout, direction)
        qr = _rotated(layout, direction.phi)
        da_t = -2j * math.pi * math.cos(direction.theta) * qr[:, 0] * a
        da_p = -2j * math.pi * math.sin(direction.theta) * qr[:, 1] * a
        return da_t, da_p
    if mode == "finite_difference":
        t, p = direction.theta, direction.phi
        da_t = (
            steering_vector(layout, SourceDirection(t + step, p))
            - steering_vector(layout, SourceDirection(t - step, p))
        ) / (2.0 * step)
        da_p = (
            steering_vector(layout, SourceDirection(t, p + step))
            - steering_vector(layout, SourceDirection(t, p - step))
        ) / (2.0 * step)
        return da_t, da_p
    raise ValueError(f"unknown derivative mode {mode!r}")


def _rotated(layout, phi):
    pts = _points(layout)
    c, s = math.cos(phi), math.sin(phi)
    return np.column_stack([pts[:, 0] * c + pts[:, 1] * s, -pts[:, 0] * s + pts[:, 1] * c])


def fim_numeric_oracle(
    layout,
    direction: SourceDirection,
    obs: ObservationSpec,
    mode: Literal["analytic_derivative", "finite_difference"] = "analytic_derivative",
    step: float = FD_STEP,
) -> np.ndarray:
    """Slepian-Bangs FIM ``2 T SNR Re{da_i^H P_perp da_j}`` assembled numerically.

    Builds the full ``M x M`` projector onto the orthogonal complement of the
    steering vector. May return a singular matrix.
    """
    a = steering_vector(layout, direction)
    m = len(a)
    proj = np.eye(m) - np.outer(a, a.conj()) / np.vdot(a, a).real
    da_t, da_p = steering_derivatives(layout, direction, mode, step)
    d = np.column_stack([da_t, da_p])
    quad = d.conj().T @ proj @ d
    return 2.0 * obs.snapshots * obs.snr_linear * quad.real
