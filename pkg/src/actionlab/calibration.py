"""Double-slit calibration of the phase scale eta.

Two ideal paths through slits separated by d, screen at distance D, beam
momentum p: at screen position y the action difference is p d y / D, so
constructive interference repeats every Delta_y = 2 pi D / (eta p d).
Measuring fringe spacings across geometries therefore pins eta; the
identification with 1/hbar is the empirical content, and de Broglie's
lambda = 2 pi / (eta p) follows.

Far-field formulas only; no finite-slit wave optics.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

DEFAULT_FAR_FIELD_RATIO = 100.0


@dataclass(frozen=True)
class SlitGeometry:
    """Beam momentum, slit separation, and screen distance of one setup."""

    momentum: float
    separation: float
    screen_distance: float
    far_field_min_ratio: float = DEFAULT_FAR_FIELD_RATIO

    def __post_init__(self):
        for name in ("momentum", "separation", "screen_distance"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")

    @property
    def far_field(self) -> bool:
        return self.screen_distance / self.separation >= self.far_field_min_ratio


def action_difference(y: float, geom: SlitGeometry) -> float:
    """Two-path action difference p d y / D at screen position y."""
    if not geom.far_field:
        raise ValueError(
            f"far-field violated: D/d = {geom.screen_distance / geom.separation:.3g} "
            f"< {geom.far_field_min_ratio:g}")
    return geom.momentum * geom.separation * y / geom.screen_distance


def fringe_spacing(geom: SlitGeometry, eta: float) -> float:
    """Spacing between constructive maxima: 2 pi D / (eta p d)."""
    if eta <= 0:
        raise ValueError(f"eta must be positive, got {eta}")
    return 2 * math.pi * geom.screen_distance / (eta * geom.momentum * geom.separation)


def constructive_positions(geom: SlitGeometry, eta: float, orders: Iterable[int]):
    """Screen positions y_n = 2 pi n D / (eta p d) of the maxima."""
    dy = fringe_spacing(geom, eta)
    return [n * dy for n in orders]


def infer_eta(measurements: Sequence[tuple[float, float, float, float]]) -> tuple[float, float]:
    """Per-measurement eta = 2 pi D / (p d Delta_y); returns (mean, max relative spread).

    Each measurement is (p, d, D, Delta_y). A small spread across
    geometries is the universality check; inconsistent data simply yield a
    large spread, no exception.
    """
    if not measurements:
        raise ValueError("no measurements")
    etas = []
    for p, d, big_d, dy in measurements:
        if min(p, d, big_d, dy) <= 0:
            raise ValueError("measurements must be positive")
        etas.append(2 * math.pi * big_d / (p * d * dy))
    mean = sum(etas) / len(etas)
    spread = max(abs(e - mean) for e in etas) / mean
    return mean, spread


def de_broglie(p: float, eta: float) -> float:
    """Matter wavelength 2 pi / (eta p); equals h / p once eta = 1 / hbar."""
    if p <= 0 or eta <= 0:
        raise ValueError("momentum and eta must be positive")
    return 2 * math.pi / (eta * p)
