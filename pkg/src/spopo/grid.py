"""Discretized wavelength axis shared by all spectral objects.

Everything spectral in this package (kernels, supermodes, local-oscillator
shapes) lives on a common uniform grid of wavelengths.  Functions sampled on
the grid are normalized in the L2 sense, i.e. ``sum(f**2) * spacing == 1``,
so that discrete inner products ``sum(f * g) * spacing`` approximate the
continuum overlap integrals.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import GridMismatchError

#: FWHM of a Gaussian divided by its standard deviation.
SQRT_8LN2 = math.sqrt(8.0 * math.log(2.0))

_UNIFORMITY_RTOL = 1e-9


def fwhm_to_sigma(fwhm: float) -> float:
    """Standard deviation of a Gaussian with the given full width at half maximum."""
    if fwhm <= 0:
        raise ValueError(f"FWHM must be positive, got {fwhm}")
    return fwhm / SQRT_8LN2


def sigma_to_fwhm(sigma: float) -> float:
    """Full width at half maximum of a Gaussian with the given standard deviation."""
    if sigma <= 0:
        raise ValueError(f"sigma must be positive, got {sigma}")
    return sigma * SQRT_8LN2


@dataclass(frozen=True)
class FrequencyGrid:
    """Uniform wavelength grid, symmetric about a center wavelength.

    Parameters
    ----------
    center_nm:
        Center wavelength in nanometers.
    points_nm:
        Strictly increasing, uniformly spaced wavelengths in nanometers.
        The array is made read-only on construction.
    """

    center_nm: float
    points_nm: np.ndarray = field(repr=False)

    def __post_init__(self):
        pts = np.asarray(self.points_nm, dtype=float)
        if pts.ndim != 1 or pts.size < 2:
            raise ValueError("grid needs at least two points")
        steps = np.diff(pts)
        if np.any(steps <= 0):
            raise ValueError("grid points must be strictly increasing")
        mean_step = float(steps.mean())
        if np.max(np.abs(steps - mean_step)) > _UNIFORMITY_RTOL * abs(mean_step):
            raise ValueError("grid spacing is not uniform to 1 part in 1e9")
        pts = pts.copy()
        pts.setflags(write=False)
        object.__setattr__(self, "points_nm", pts)

    @classmethod
    def centered(
        cls,
        center_nm: float = 1035.0,
        span_nm: float = 120.0,
        n_points: int = 1024,
    ) -> "FrequencyGrid":
        """Build a grid of ``n_points`` wavelengths covering ``span_nm``
        symmetrically around ``center_nm``."""
        if span_nm <= 0:
            raise ValueError(f"span must be positive, got {span_nm}")
        if n_points < 2:
            raise ValueError(f"need at least 2 points, got {n_points}")
        pts = np.linspace(center_nm - span_nm / 2.0, center_nm + span_nm / 2.0, n_points)
        return cls(center_nm=center_nm, points_nm=pts)

    @property
    def n_points(self) -> int:
        return int(self.points_nm.size)

    @property
    def span_nm(self) -> float:
        return float(self.points_nm[-1] - self.points_nm[0])

    @property
    def spacing_nm(self) -> float:
        return self.span_nm / (self.n_points - 1)

    def detunings_nm(self) -> np.ndarray:
        """Signed offsets of each grid point from the center wavelength."""
        return self.points_nm - self.center_nm

    def matches(self, other: "FrequencyGrid") -> bool:
        return (
            self.n_points == other.n_points
            and self.center_nm == other.center_nm
            and np.array_equal(self.points_nm, other.points_nm)
        )

    def require_same(self, other: "FrequencyGrid", what: str) -> None:
        if not self.matches(other):
            raise GridMismatchError(f"{what} must share the same frequency grid")

    def __eq__(self, other):
        if not isinstance(other, FrequencyGrid):
            return NotImplemented
        return self.matches(other)

    def __hash__(self):
        return hash((self.center_nm, self.n_points, float(self.points_nm[0]), float(self.points_nm[-1])))
