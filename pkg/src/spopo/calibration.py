"""Calibration of the two free model parameters.

Two knobs are not fixed by directly measured quantities and are fitted once,
then frozen into the default configuration:

* the phase-matching envelope width, chosen so the fundamental supermode has
  a target spectral width;
* the intracavity loss, chosen so the detected squeezing at the reference
  operating point matches the measured level.

Everything else in the default configuration is a directly specified number.
"""

from __future__ import annotations

import math

from scipy.optimize import brentq

from .cavity import CavityParams, DetectionBudget, total_efficiency
from .grid import FrequencyGrid, fwhm_to_sigma, sigma_to_fwhm
from .squeezing import (
    PumpSetting,
    db,
    detected_quadrature_pair,
    gaussian_lo,
    per_mode_variances,
    project_lo,
)
from .supermodes import build_kernel, decompose, mode_fwhm, schmidt_mode_scale


def analytic_phasematch_for_mode_fwhm(pump_fwhm_nm: float, mode_fwhm_nm: float) -> float:
    """Closed-form phase-matching FWHM giving the requested fundamental-mode
    intensity FWHM.

    The fundamental mode is a Gaussian of scale ``w = sqrt(sigma_p sigma_m)``
    whose intensity FWHM is ``2 sqrt(ln 2) w``; solving for the
    phase-matching width collapses to ``2 * mode_fwhm**2 / pump_fwhm``.
    """
    if pump_fwhm_nm <= 0 or mode_fwhm_nm <= 0:
        raise ValueError("widths must be positive")
    w = mode_fwhm_nm / (2.0 * math.sqrt(math.log(2.0)))
    sigma_m = w * w / fwhm_to_sigma(pump_fwhm_nm)
    return sigma_to_fwhm(sigma_m)


def calibrate_phasematch_fwhm(
    pump_fwhm_nm: float,
    target_mode_fwhm_nm: float,
    grid: FrequencyGrid,
    rel_bracket: float = 0.2,
    xtol: float = 1e-9,
) -> float:
    """Root-find the phase-matching width against the numerical pipeline.

    Runs the full kernel build + decomposition and adjusts the phase-matching
    FWHM until the measured fundamental-mode FWHM hits the target.  The
    closed form of :func:`analytic_phasematch_for_mode_fwhm` centers the
    bracket; agreement between the two is a pipeline self-check.
    """
    guess = analytic_phasematch_for_mode_fwhm(pump_fwhm_nm, target_mode_fwhm_nm)

    def miss(pm_fwhm: float) -> float:
        basis = decompose(build_kernel(grid, pump_fwhm_nm, pm_fwhm), k_max=2, gain_floor=0.0)
        return mode_fwhm(basis, 0) - target_mode_fwhm_nm

    lo = guess * (1.0 - rel_bracket)
    hi = guess * (1.0 + rel_bracket)
    return float(brentq(miss, lo, hi, xtol=xtol))


def calibrate_intracavity_loss(
    target_detected_db: float,
    p_norm: float,
    lo_fwhm_nm: float,
    basis,
    cavity_template: CavityParams,
    budget: DetectionBudget,
    analysis_freq_mhz: float = 0.5,
    bracket: tuple[float, float] = (1e-6, 0.15),
    xtol: float = 1e-12,
) -> float:
    """Intracavity loss that reproduces a target detected squeezing level.

    The loss moves both the escape efficiency and the cavity linewidth (and
    with it the normalized analysis frequency); both effects are kept in the
    loop.  All other cavity fields come from ``cavity_template``.
    """
    eta_hom = total_efficiency(budget)
    lo = gaussian_lo(basis.grid, lo_fwhm_nm)
    projection = project_lo(lo, basis)
    pump = PumpSetting.from_normalized(p_norm)

    def miss(loss: float) -> float:
        cavity = CavityParams(
            length_m=cavity_template.length_m,
            r_input=cavity_template.r_input,
            r_output=cavity_template.r_output,
            intracavity_loss=loss,
            gdd_fs2=cavity_template.gdd_fs2,
        )
        pairs = per_mode_variances(basis, pump, cavity, analysis_freq_mhz)
        detected_sq, _ = detected_quadrature_pair(projection, pairs, eta_hom)
        return db(detected_sq) - target_detected_db

    return float(brentq(miss, bracket[0], bracket[1], xtol=xtol))


def schmidt_fundamental_fwhm(pump_fwhm_nm: float, phasematch_fwhm_nm: float) -> float:
    """Intensity FWHM of the fundamental supermode, in closed form."""
    return 2.0 * math.sqrt(math.log(2.0)) * schmidt_mode_scale(pump_fwhm_nm, phasematch_fwhm_nm)
