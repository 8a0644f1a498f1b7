"""Closed-form spectra and essential-spectrum thresholds used as oracles."""
from __future__ import annotations

import math
from dataclasses import dataclass

from .geometry import SQRT2, DomainKind, normalize_sector

PI2 = math.pi ** 2


def square_spectrum_halfwidth(w: float, count: int) -> list[float]:
    """First ``count`` Neumann eigenvalues of the square ``(-w, w)^2``.

    Values are ``pi^2 (m^2 + n^2) / (2w)^2`` for ``m, n >= 0``, repeated with
    their lattice multiplicity.
    """
    if count < 1:
        raise ValueError("count must be >= 1")
    levels = sorted(m * m + n * n for m in range(count) for n in range(count))
    return [PI2 * q / (2 * w) ** 2 for q in levels[:count]]


def square_neumann_spectrum(d: float, count: int) -> list[float]:
    """Neumann spectrum of the square of side ``sqrt(2) d``: ``pi^2 (m^2+n^2) / (2 d^2)``."""
    return square_spectrum_halfwidth(d / SQRT2, count)


def strip_threshold(width: float) -> float:
    """Lowest transverse Dirichlet mode ``pi^2 / width^2`` of an infinite strip."""
    if not width > 0:
        raise ValueError("width must be positive")
    return PI2 / width ** 2


def cross_threshold(d_e: float) -> float:
    """Bottom of the essential spectrum of the diagonal cross built from ``d_e``."""
    return strip_threshold(SQRT2 * d_e)


def snapped_cross_threshold(half_width: float) -> float:
    """Threshold of an axis cross (or its arms) whose strips have half-width ``half_width``."""
    return strip_threshold(2 * half_width)


def sector_threshold(sector: str, d: float) -> float:
    """Essential-spectrum threshold of the pair Hamiltonian in one exchange sector."""
    if normalize_sector(sector) == "antisymmetric":
        return 2 * PI2 / d ** 2
    return PI2 / (2 * d ** 2)


@dataclass(frozen=True)
class ThresholdCatalog:
    d: float

    @property
    def pair_full_and_symmetric(self) -> float:
        return sector_threshold("full", self.d)

    @property
    def pair_antisymmetric(self) -> float:
        return sector_threshold("antisymmetric", self.d)

    @property
    def arms_infimum(self) -> float:
        return strip_threshold(SQRT2 * self.d)

    def cross(self, d_e: float) -> float:
        return cross_threshold(d_e)


def threshold_for(spec) -> float:
    """Reference threshold matching the geometry that ``spec`` actually meshes."""
    if spec.kind is DomainKind.PAIR:
        return sector_threshold(spec.sector, spec.d)
    if spec.kind is DomainKind.CROSS_DIAGONAL:
        return cross_threshold(spec.d)
    # square: first positive Neumann level, which equals the cross threshold
    return snapped_cross_threshold(spec.half_width)
