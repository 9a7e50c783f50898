"""Cavity and homodyne-detection parameter budgets.

Pure derived quantities over two immutable value types: the ring cavity
(free spectral range, finesse, linewidth, escape efficiency, dispersion
balance) and the detection chain (total homodyne efficiency).  The finesse
uses the low-loss approximation ``F = 2 pi / delta`` where ``delta`` is the
total round-trip power loss; it is only meaningful for ``delta`` well below
one, and the functions refuse to evaluate outside ``0 < delta < 1``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .errors import CavityModelError

#: Speed of light in vacuum, m/s.
C_M_PER_S = 299_792_458.0


@dataclass(frozen=True)
class CavityParams:
    """Ring-cavity parameters.

    ``gdd_fs2`` lists labeled group-delay-dispersion contributions in fs^2
    (crystal, air path, chirped mirrors, ...); their sum is the residual
    dispersion per round trip.
    """

    length_m: float = 3.23
    r_input: float = 0.99
    r_output: float = 0.81
    intracavity_loss: float = 0.06
    gdd_fs2: tuple[tuple[str, float], ...] = field(
        default=(("crystal", 850.0), ("air", 50.0), ("chirped_mirror", -900.0))
    )

    def __post_init__(self):
        if self.length_m <= 0:
            raise ValueError(f"cavity length must be positive, got {self.length_m}")
        for name, r in (("r_input", self.r_input), ("r_output", self.r_output)):
            if not 0.0 < r <= 1.0:
                raise ValueError(f"{name} must be in (0, 1], got {r}")
        if not 0.0 <= self.intracavity_loss < 1.0:
            raise ValueError(f"intracavity_loss must be in [0, 1), got {self.intracavity_loss}")
        object.__setattr__(self, "gdd_fs2", tuple((str(k), float(v)) for k, v in self.gdd_fs2))

    @property
    def round_trip_loss(self) -> float:
        """Total round-trip power loss: coupler transmissions plus internal loss."""
        return (1.0 - self.r_input) + (1.0 - self.r_output) + self.intracavity_loss


def _checked_loss(cavity: CavityParams) -> float:
    delta = cavity.round_trip_loss
    if delta <= 0.0:
        raise CavityModelError("lossless cavity: finesse is unbounded in this model")
    if delta >= 1.0:
        raise CavityModelError(
            f"round-trip loss {delta:g} >= 1; the low-loss finesse model does not apply"
        )
    return delta


def free_spectral_range_mhz(cavity: CavityParams) -> float:
    """c / round-trip length, in MHz."""
    return C_M_PER_S / cavity.length_m / 1e6


def finesse(cavity: CavityParams) -> float:
    """Low-loss finesse, 2 pi over the total round-trip power loss."""
    return 2.0 * math.pi / _checked_loss(cavity)


def cavity_bandwidth_fwhm_mhz(cavity: CavityParams) -> float:
    """Full width at half maximum of the cavity Lorentzian: FSR / finesse."""
    return free_spectral_range_mhz(cavity) / finesse(cavity)


def escape_efficiency(cavity: CavityParams) -> float:
    """Fraction of the round-trip loss that exits through the output coupler.

    Equals 1 exactly when the output coupler is the only loss channel; any
    internal loss or input-coupler transmission lowers it.
    """
    return (1.0 - cavity.r_output) / _checked_loss(cavity)


def gdd_residual_fs2(cavity: CavityParams) -> float:
    """Net round-trip group-delay dispersion in fs^2.

    Uses ``math.fsum``, so the result is independent of the order of the
    contribution list.
    """
    return math.fsum(v for _, v in cavity.gdd_fs2)


@dataclass(frozen=True)
class DetectionBudget:
    """Multiplicative homodyne-detection efficiency budget.

    ``visibility`` is the interference visibility; it enters the total
    efficiency squared.  ``eta_bkg`` lumps electronic and common-mode
    background noise into an equivalent efficiency.
    """

    eta_pd: float = 0.87
    eta_opt: float = 0.99
    visibility: float = 0.947
    eta_bkg: float = 0.96

    def __post_init__(self):
        for name in ("eta_pd", "eta_opt", "visibility", "eta_bkg"):
            v = getattr(self, name)
            if not 0.0 < v <= 1.0:
                raise ValueError(f"{name} must be in (0, 1], got {v}")


def total_efficiency(budget: DetectionBudget) -> float:
    """Total homodyne efficiency: eta_pd * eta_opt * visibility**2 * eta_bkg."""
    return budget.eta_pd * budget.eta_opt * budget.visibility**2 * budget.eta_bkg
