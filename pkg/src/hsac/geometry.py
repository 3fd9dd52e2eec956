"""Relative engagement geometry and the normalized 11-entry observation.

All angles share one line-of-sight vector, pointing from the own aircraft to
the opponent. ATA is measured from the own velocity to that vector and AA
from the opponent velocity to it, so a tail chase gives ATA = AA = 0.
Projected angles are signed with the right-hand rule about +Z (XOY plane)
and +X (YOZ plane).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .dynamics import AircraftParams, UcavState

TWO_PI = 2.0 * math.pi
_EPS = 1e-9

OBS_FIELDS: tuple[str, ...] = (
    "ata_xoy",
    "ata_yoz",
    "aa_xoy",
    "aa_yoz",
    "mu",
    "d_los",
    "v",
    "gamma",
    "v_opp",
    "alpha",
    "h",
)
OBS_DIM = len(OBS_FIELDS)


class DegenerateGeometry(ValueError):
    """Line of sight or a projected vector has zero length."""


@dataclass(frozen=True)
class RelativeGeometry:
    ata: float
    aa: float
    ata_xoy: float
    ata_yoz: float
    aa_xoy: float
    aa_yoz: float
    d_los: float
    degenerate: bool = False

    @property
    def phi(self) -> tuple[float, float, float, float]:
        return (self.ata_xoy, self.ata_yoz, self.aa_xoy, self.aa_yoz)


def angle_between(a, b) -> float:
    """Unsigned angle in [0, pi]; robust near 0 and pi."""
    ax, ay, az = a
    bx, by, bz = b
    cx, cy, cz = ay * bz - az * by, az * bx - ax * bz, ax * by - ay * bx
    return math.atan2(math.sqrt(cx * cx + cy * cy + cz * cz), ax * bx + ay * by + az * bz)


def _signed_planar(a1: float, a2: float, b1: float, b2: float) -> float | None:
    """Signed angle from (a1, a2) to (b1, b2); None when either is ~zero."""
    if math.hypot(a1, a2) < _EPS or math.hypot(b1, b2) < _EPS:
        return None
    ang = math.atan2(a1 * b2 - a2 * b1, a1 * b1 + a2 * b2)
    return math.pi if ang == -math.pi else ang


def relative_geometry(own: UcavState, opp: UcavState, strict: bool = False) -> RelativeGeometry:
    """Engagement angles of ``opp`` as seen from ``own``.

    Degenerate plane projections get angle 0 and set ``degenerate``;
    with ``strict=True`` they raise :class:`DegenerateGeometry` instead.
    """
    los = (opp.x - own.x, opp.y - own.y, opp.z - own.z)
    d_los = math.sqrt(los[0] ** 2 + los[1] ** 2 + los[2] ** 2)
    if d_los == 0.0:
        raise DegenerateGeometry("aircraft positions coincide")
    v_own = own.velocity
    v_opp = opp.velocity

    degenerate = False
    projected = []
    for vel in (v_own, v_opp):
        # XOY drops z (normal +Z), YOZ drops x (normal +X)
        for i, j in ((0, 1), (1, 2)):
            ang = _signed_planar(vel[i], vel[j], los[i], los[j])
            if ang is None:
                if strict:
                    raise DegenerateGeometry("zero-length projection")
                degenerate = True
                ang = 0.0
            projected.append(ang)

    return RelativeGeometry(
        ata=angle_between(v_own, los),
        aa=angle_between(v_opp, los),
        ata_xoy=projected[0],
        ata_yoz=projected[1],
        aa_xoy=projected[2],
        aa_yoz=projected[3],
        d_los=d_los,
        degenerate=degenerate,
    )


def observation_from(
    geo: RelativeGeometry, own: UcavState, opp: UcavState, params: AircraftParams, d_norm: float
) -> np.ndarray:
    v_span = params.v_max - params.v_min
    return np.array(
        [
            geo.ata_xoy / TWO_PI,
            geo.ata_yoz / TWO_PI,
            geo.aa_xoy / TWO_PI,
            geo.aa_yoz / TWO_PI,
            own.mu / TWO_PI,
            geo.d_los / d_norm,
            own.v / v_span,
            own.gamma / TWO_PI,
            opp.v / v_span,
            own.alpha / (params.alpha_max - params.alpha_min),
            own.h / (params.h_max - params.h_min),
        ]
    )


def observe(own: UcavState, opp: UcavState, params: AircraftParams, d_norm: float = 10_000.0) -> np.ndarray:
    """Normalized observation of the own aircraft (role-relative)."""
    return observation_from(relative_geometry(own, opp), own, opp, params, d_norm)
