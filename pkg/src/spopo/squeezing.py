"""Per-supermode squeezing at the source output, local-oscillator projection,
and the detection-efficiency correction.

Conventions: quadrature variances are in shot-noise units (vacuum = 1) and
decibel values are ``10 * log10(variance)``.  The quadrature angle ``theta``
is measured from the squeezed quadrature of the fundamental mode, so
``theta = 0`` reads out squeezing and ``theta = pi/2`` anti-squeezing.

Each supermode ``k`` couples to the pump through ``x_k = gain_k * sqrt(P)``
with ``P`` the pump power normalized to threshold, and its output variances
follow the below-threshold optical-parametric-oscillator input-output form

    squeezed_k     = 1 - eta_esc * 4 x_k / ((1 + x_k)**2 + W**2)
    antisqueezed_k = 1 + eta_esc * 4 x_k / ((1 - x_k)**2 + W**2)

where ``eta_esc`` is the cavity escape efficiency and ``W`` is the analysis
frequency in units of the cavity half-linewidth.  A shaped local oscillator
measures the gain-weighted mix of these variances plus vacuum for the
unprojected remainder.

All functions here are pure and all types immutable, so scans may be
evaluated concurrently; results are returned in input order regardless.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .cavity import CavityParams, DetectionBudget, cavity_bandwidth_fwhm_mhz, escape_efficiency, total_efficiency
from .errors import AboveThresholdError, InversionError
from .grid import FrequencyGrid, fwhm_to_sigma
from .supermodes import SupermodeBasis

_NORM_ATOL = 1e-9
_PROJECTION_SLACK = 1e-9


@dataclass(frozen=True)
class PumpSetting:
    """Pump power and oscillation threshold, both in mW.

    Only the below-threshold regime is modeled: ``power_mw < threshold_mw``.
    """

    power_mw: float
    threshold_mw: float

    def __post_init__(self):
        if self.threshold_mw <= 0:
            raise ValueError(f"threshold must be positive, got {self.threshold_mw}")
        if self.power_mw < 0:
            raise ValueError(f"pump power must be non-negative, got {self.power_mw}")
        if self.power_mw >= self.threshold_mw:
            raise AboveThresholdError(
                f"pump {self.power_mw} mW is at or above threshold {self.threshold_mw} mW"
            )

    @property
    def normalized(self) -> float:
        """Pump power as a fraction of threshold, in [0, 1)."""
        return self.power_mw / self.threshold_mw

    @classmethod
    def from_normalized(cls, p: float) -> "PumpSetting":
        """Pump setting specified directly by its threshold-normalized power."""
        return cls(power_mw=p, threshold_mw=1.0)


@dataclass(frozen=True)
class LOSpectrum:
    """Local-oscillator spectral amplitude on a grid.

    ``amplitude`` has unit L2 norm; ``phase`` is radians per grid point (flat
    zero throughout this package).  ``fwhm_nm`` records the intensity FWHM
    when the shape came from :func:`gaussian_lo`, else ``None``.
    """

    grid: FrequencyGrid
    amplitude: np.ndarray = field(repr=False)
    fwhm_nm: float | None = None
    phase: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        amp = np.asarray(self.amplitude, dtype=float)
        if amp.shape != (self.grid.n_points,):
            raise ValueError("amplitude must have one value per grid point")
        norm = math.sqrt(float(np.sum(amp * amp)) * self.grid.spacing_nm)
        if abs(norm - 1.0) > _NORM_ATOL:
            raise ValueError(f"amplitude must have unit L2 norm, got {norm!r}")
        amp = amp.copy()
        amp.setflags(write=False)
        object.__setattr__(self, "amplitude", amp)
        phase = self.phase
        phase = np.zeros(self.grid.n_points) if phase is None else np.asarray(phase, dtype=float)
        if phase.shape != (self.grid.n_points,):
            raise ValueError("phase must have one value per grid point")
        phase = phase.copy()
        phase.setflags(write=False)
        object.__setattr__(self, "phase", phase)


def gaussian_lo(grid: FrequencyGrid, fwhm_nm: float, center_nm: float | None = None) -> LOSpectrum:
    """Gaussian local oscillator whose intensity profile has the given FWHM.

    The amplitude is ``exp(-d**2 / (4 sigma**2))`` with
    ``sigma = fwhm / sqrt(8 ln 2)``, normalized to unit L2 norm; flat phase.
    """
    sigma = fwhm_to_sigma(fwhm_nm)
    center = grid.center_nm if center_nm is None else center_nm
    d = grid.points_nm - center
    amp = np.exp(-(d * d) / (4.0 * sigma * sigma))
    amp /= math.sqrt(float(np.sum(amp * amp)) * grid.spacing_nm)
    return LOSpectrum(grid=grid, amplitude=amp, fwhm_nm=fwhm_nm)


@dataclass(frozen=True)
class ModeProjection:
    """Overlaps of a local oscillator with the supermodes up to the cutoff.

    ``weights[k] = overlaps[k]**2`` and ``residual = 1 - sum(weights)`` is
    the unprojected fraction, measured as vacuum.
    """

    overlaps: np.ndarray = field(repr=False)
    weights: np.ndarray = field(repr=False)
    residual: float

    def __post_init__(self):
        ov = np.asarray(self.overlaps, dtype=float)
        wt = np.asarray(self.weights, dtype=float)
        if ov.shape != wt.shape or ov.ndim != 1:
            raise ValueError("overlaps and weights must be 1-D arrays of equal length")
        if np.any(wt < -_PROJECTION_SLACK) or np.any(wt > 1.0 + _PROJECTION_SLACK):
            raise ValueError("projection weights must lie in [0, 1]")
        total = float(wt.sum())
        if total > 1.0 + _PROJECTION_SLACK:
            raise ValueError(f"projection weights sum to {total!r} > 1")
        if self.residual < -_PROJECTION_SLACK:
            raise ValueError(f"projection residual {self.residual!r} is negative")
        for name, arr in (("overlaps", ov), ("weights", wt)):
            arr = arr.copy()
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def n_modes(self) -> int:
        return int(self.overlaps.size)


@dataclass(frozen=True)
class VariancePair:
    """Squeezed / anti-squeezed variance pair of one mode, shot noise = 1."""

    squeezed: float
    antisqueezed: float

    def __post_init__(self):
        if not 0.0 < self.squeezed <= 1.0 + 1e-12:
            raise ValueError(f"squeezed variance must be in (0, 1], got {self.squeezed}")
        if self.antisqueezed < 1.0 - 1e-12:
            raise ValueError(f"anti-squeezed variance must be >= 1, got {self.antisqueezed}")


def _normalized_sideband(cavity: CavityParams, analysis_freq_mhz: float) -> float:
    """Analysis frequency in units of the cavity half-linewidth."""
    if analysis_freq_mhz < 0:
        raise ValueError(f"analysis frequency must be non-negative, got {analysis_freq_mhz}")
    return 2.0 * analysis_freq_mhz / cavity_bandwidth_fwhm_mhz(cavity)


def mode_variances(
    k: int,
    basis: SupermodeBasis,
    pump: PumpSetting,
    cavity: CavityParams,
    analysis_freq_mhz: float = 0.5,
) -> VariancePair:
    """Output variances of supermode ``k`` at the given pump and sideband."""
    if not 0 <= k <= basis.cutoff:
        raise ValueError(f"mode index {k} beyond basis cutoff {basis.cutoff}")
    eta = escape_efficiency(cavity)
    w2 = _normalized_sideband(cavity, analysis_freq_mhz) ** 2
    x = basis.gains[k] * math.sqrt(pump.normalized)
    drive = 4.0 * x
    return VariancePair(
        squeezed=1.0 - eta * drive / ((1.0 + x) ** 2 + w2),
        antisqueezed=1.0 + eta * drive / ((1.0 - x) ** 2 + w2),
    )


def per_mode_variances(
    basis: SupermodeBasis,
    pump: PumpSetting,
    cavity: CavityParams,
    analysis_freq_mhz: float = 0.5,
) -> list[VariancePair]:
    """Variance pairs for every mode up to the basis cutoff (inclusive)."""
    eta = escape_efficiency(cavity)
    w2 = _normalized_sideband(cavity, analysis_freq_mhz) ** 2
    x = basis.gains[: basis.cutoff + 1] * math.sqrt(pump.normalized)
    drive = 4.0 * x
    sq = 1.0 - eta * drive / ((1.0 + x) ** 2 + w2)
    anti = 1.0 + eta * drive / ((1.0 - x) ** 2 + w2)
    return [VariancePair(float(s), float(a)) for s, a in zip(sq, anti)]


def parametric_gain(pump: PumpSetting) -> float:
    """Classical parametric amplification factor, 1 / (1 - sqrt(P))**2."""
    return 1.0 / (1.0 - math.sqrt(pump.normalized)) ** 2


def project_lo(lo: LOSpectrum, basis: SupermodeBasis, n_modes: int | None = None) -> ModeProjection:
    """Discrete overlaps of the local oscillator with the first ``n_modes``
    supermodes (default: through the basis cutoff).

    The overlap is the grid inner product ``sum(lo * psi_k) * spacing``.
    """
    lo.grid.require_same(basis.grid, "local oscillator and supermode basis")
    n = basis.cutoff + 1 if n_modes is None else n_modes
    if not 1 <= n <= basis.n_modes:
        raise ValueError(f"n_modes must be in [1, {basis.n_modes}], got {n}")
    overlaps = (basis.modes[:n] @ lo.amplitude) * basis.grid.spacing_nm
    weights = overlaps**2
    # round-off guard: a perfectly matched LO can land at 1 + few*eps
    total = float(weights.sum())
    if 1.0 < total <= 1.0 + _PROJECTION_SLACK:
        weights = weights / total
        total = 1.0
    return ModeProjection(overlaps=overlaps, weights=weights, residual=1.0 - total)


def spopo_variance(
    theta: float,
    projection: ModeProjection,
    per_mode: list[VariancePair] | tuple[VariancePair, ...],
) -> float:
    """Source-output quadrature variance at angle ``theta``.

    Gain-weighted sum of the projected per-mode variances plus vacuum noise
    for the unprojected residual; ``theta = 0`` is the squeezed quadrature.
    """
    if len(per_mode) != projection.n_modes:
        raise ValueError(
            f"need one variance pair per projected mode: "
            f"{len(per_mode)} pairs vs {projection.n_modes} overlaps"
        )
    c2 = math.cos(theta) ** 2
    s2 = math.sin(theta) ** 2
    mix = np.array([vp.squeezed * c2 + vp.antisqueezed * s2 for vp in per_mode])
    return float(np.dot(projection.weights, mix) + projection.residual)


def detected_variance(sigma2_spopo, eta_hom: float):
    """Variance after the detection chain: ``1 - eta_hom * (1 - sigma2)``.

    Accepts scalars or arrays; vacuum is a fixed point for any efficiency.
    """
    sigma2_spopo = np.asarray(sigma2_spopo, dtype=float)
    if np.any(sigma2_spopo <= 0):
        raise ValueError("variance must be positive")
    if not 0.0 < eta_hom <= 1.0:
        raise ValueError(f"eta_hom must be in (0, 1], got {eta_hom}")
    out = 1.0 - eta_hom * (1.0 - sigma2_spopo)
    return float(out) if out.ndim == 0 else out


def infer_output_variance(sigma2_detected, eta_hom: float):
    """Exact inverse of :func:`detected_variance`.

    Raises :class:`~spopo.errors.InversionError` when the inversion lands at
    a non-positive variance, i.e. the detected value is below the floor
    ``1 - eta_hom`` that the efficiency model permits.
    """
    sigma2_detected = np.asarray(sigma2_detected, dtype=float)
    if not 0.0 < eta_hom <= 1.0:
        raise ValueError(f"eta_hom must be in (0, 1], got {eta_hom}")
    out = 1.0 - (1.0 - sigma2_detected) / eta_hom
    if np.any(out <= 0):
        raise InversionError(
            f"detected variance {float(np.min(sigma2_detected)):g} is inconsistent "
            f"with efficiency {eta_hom:g} (inferred source variance <= 0)"
        )
    return float(out) if out.ndim == 0 else out


def db(variance):
    """Variance in decibels relative to shot noise: 10 log10(variance)."""
    variance = np.asarray(variance, dtype=float)
    if np.any(variance <= 0):
        raise ValueError("variance must be positive for a dB conversion")
    out = 10.0 * np.log10(variance)
    return float(out) if out.ndim == 0 else out


def db_inv(decibels):
    """Inverse of :func:`db`."""
    decibels = np.asarray(decibels, dtype=float)
    out = 10.0 ** (decibels / 10.0)
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class ScanCurve:
    """Detected squeezing/anti-squeezing levels along a scan axis."""

    x: np.ndarray = field(repr=False)
    squeezing_db: np.ndarray = field(repr=False)
    antisqueezing_db: np.ndarray = field(repr=False)
    x_label: str = "x"

    def __post_init__(self):
        for name in ("x", "squeezing_db", "antisqueezing_db"):
            arr = np.asarray(getattr(self, name), dtype=float).copy()
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        if not (self.x.size == self.squeezing_db.size == self.antisqueezing_db.size):
            raise ValueError("scan columns must have equal length")


def detected_quadrature_pair(
    projection: ModeProjection,
    per_mode: list[VariancePair],
    eta_hom: float,
) -> tuple[float, float]:
    """Detected (squeezed, anti-squeezed) variances for one operating point."""
    sq = detected_variance(spopo_variance(0.0, projection, per_mode), eta_hom)
    anti = detected_variance(spopo_variance(math.pi / 2.0, projection, per_mode), eta_hom)
    return sq, anti


def scan_pump(
    p_values,
    lo: LOSpectrum,
    basis: SupermodeBasis,
    cavity: CavityParams,
    budget: DetectionBudget,
    analysis_freq_mhz: float = 0.5,
) -> ScanCurve:
    """Detected squeezing and anti-squeezing versus normalized pump power."""
    p_values = np.asarray(p_values, dtype=float)
    if np.any(p_values < 0) or np.any(p_values >= 1):
        raise AboveThresholdError("pump scan values must lie in [0, 1)")
    eta_hom = total_efficiency(budget)
    projection = project_lo(lo, basis)
    sq_db = np.empty(p_values.size)
    anti_db = np.empty(p_values.size)
    for i, p in enumerate(p_values):
        pairs = per_mode_variances(basis, PumpSetting.from_normalized(p), cavity, analysis_freq_mhz)
        sq, anti = detected_quadrature_pair(projection, pairs, eta_hom)
        sq_db[i] = db(sq)
        anti_db[i] = db(anti)
    return ScanCurve(x=p_values, squeezing_db=sq_db, antisqueezing_db=anti_db, x_label="pump_norm")


def scan_lo_width(
    widths_nm,
    pump: PumpSetting,
    basis: SupermodeBasis,
    cavity: CavityParams,
    budget: DetectionBudget,
    analysis_freq_mhz: float = 0.5,
) -> ScanCurve:
    """Detected squeezing and anti-squeezing versus Gaussian LO width."""
    widths_nm = np.asarray(widths_nm, dtype=float)
    if np.any(widths_nm <= 0):
        raise ValueError("LO widths must be positive")
    eta_hom = total_efficiency(budget)
    pairs = per_mode_variances(basis, pump, cavity, analysis_freq_mhz)
    sq_db = np.empty(widths_nm.size)
    anti_db = np.empty(widths_nm.size)
    for i, width in enumerate(widths_nm):
        projection = project_lo(gaussian_lo(basis.grid, float(width)), basis)
        sq, anti = detected_quadrature_pair(projection, pairs, eta_hom)
        sq_db[i] = db(sq)
        anti_db[i] = db(anti)
    return ScanCurve(x=widths_nm, squeezing_db=sq_db, antisqueezing_db=anti_db, x_label="lo_fwhm_nm")
