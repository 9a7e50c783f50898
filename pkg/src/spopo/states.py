"""Squeezed-thermal state model, phase-scan distortion, curve fitting, and
Wigner-function evaluation.

A squeezed-thermal state is parameterized by the mean thermal photon number
``n_th`` and the squeezing parameter ``r``; its quadrature variance at local
oscillator phase ``theta`` (shot noise = 1) is

    sigma2(theta) = (1 + 2 n_th) * (exp(-2 r) cos(theta)**2
                                    + exp(+2 r) sin(theta)**2).

Real phase scans are not perfectly linear; the small quadratic distortion is
modeled as ``theta -> theta + alpha * theta**2``.  The fit recovers
``(n_th, r)`` together with the phase offset and, optionally, ``alpha``
from a measured variance-versus-phase curve.

State reconstruction here is parametric: the Wigner function is evaluated
from the fitted Gaussian model rather than obtained by tomographic back
projection (full tomography is out of scope for this package).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize

from .errors import FitError

_FLAT_CURVE_ATOL = 1e-9
_THETA0_STARTS = (0.0, math.pi / 4.0, math.pi / 2.0, 3.0 * math.pi / 4.0)


@dataclass(frozen=True)
class SqueezedThermalState:
    """Gaussian state with thermal occupation ``n_th`` and squeezing ``r``."""

    n_th: float
    r: float

    def __post_init__(self):
        if self.n_th < 0:
            raise ValueError(f"n_th must be non-negative, got {self.n_th}")
        if self.r < 0:
            raise ValueError(f"r must be non-negative, got {self.r}")

    @property
    def purity(self) -> float:
        return 1.0 / (1.0 + 2.0 * self.n_th)


@dataclass(frozen=True)
class PhaseScanModel:
    """Mapping from nominal scan phase to the actual interferometer phase.

    ``phi(theta) = theta0 + rate * theta + alpha * theta**2``; ``rate`` is
    radians of actual phase per radian of nominal scan phase (1 for an ideal
    linear scan), ``alpha`` the quadratic distortion coefficient.
    """

    theta0: float = 0.0
    rate: float = 1.0
    alpha: float = 0.0

    def __post_init__(self):
        if self.rate <= 0:
            raise ValueError(f"scan rate must be positive, got {self.rate}")


def apply_phase_distortion(theta, scan: PhaseScanModel):
    """Quadratic scan distortion: ``theta + alpha * theta**2``.

    Monotone on [0, 2 pi] whenever ``|alpha| <= 1 / (4 pi)``.
    """
    theta = np.asarray(theta, dtype=float)
    out = theta + scan.alpha * theta * theta
    return float(out) if out.ndim == 0 else out


def st_variance(state: SqueezedThermalState, theta):
    """Quadrature variance of the state at phase ``theta`` (shot noise = 1)."""
    theta = np.asarray(theta, dtype=float)
    boost = 1.0 + 2.0 * state.n_th
    c = np.cos(theta)
    s = np.sin(theta)
    out = boost * (math.exp(-2.0 * state.r) * c * c + math.exp(2.0 * state.r) * s * s)
    return float(out) if out.ndim == 0 else out


def minimum_variance(state: SqueezedThermalState) -> float:
    """Smallest quadrature variance, attained at theta = 0."""
    return (1.0 + 2.0 * state.n_th) * math.exp(-2.0 * state.r)


def purity(state: SqueezedThermalState) -> float:
    """State purity, 1 / (1 + 2 n_th); squeezing does not affect it."""
    return state.purity


def nonclassical_depth(state: SqueezedThermalState) -> float:
    """Nonclassicality measure ``max(0, (1 - sigma2_min) / 2)``.

    Positive exactly when some quadrature dips below the vacuum level, zero
    for vacuum and for any thermal (unsqueezed) state.
    """
    return max(0.0, (1.0 - minimum_variance(state)) / 2.0)


def wigner(state: SqueezedThermalState, x, p):
    """Wigner density of the state at quadrature point(s) ``(x, p)``.

    Gaussian with variances ``sigma_x**2 = (1 + 2 n_th) exp(-2 r)`` and
    ``sigma_p**2 = (1 + 2 n_th) exp(+2 r)``, matching the shot-noise-1
    convention of :func:`st_variance` (the phase-space marginals reproduce
    the quadrature variances).  Broadcasts over array inputs.
    """
    x = np.asarray(x, dtype=float)
    p = np.asarray(p, dtype=float)
    sx2 = (1.0 + 2.0 * state.n_th) * math.exp(-2.0 * state.r)
    sp2 = (1.0 + 2.0 * state.n_th) * math.exp(2.0 * state.r)
    out = np.exp(-(x * x) / (2.0 * sx2) - (p * p) / (2.0 * sp2)) / (
        2.0 * math.pi * math.sqrt(sx2 * sp2)
    )
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class VarianceCurve:
    """Measured (or synthetic) quadrature variance versus scan phase.

    ``weights`` are optional per-point statistical weights for fitting.
    """

    thetas: np.ndarray = field(repr=False)
    variances: np.ndarray = field(repr=False)
    weights: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        th = np.asarray(self.thetas, dtype=float).copy()
        v = np.asarray(self.variances, dtype=float).copy()
        if th.ndim != 1 or th.shape != v.shape:
            raise ValueError("thetas and variances must be 1-D arrays of equal length")
        # zero is admitted so that degenerate (constant) traces can be
        # represented; dB conversion and fitting reject it downstream
        if np.any(v < 0):
            raise ValueError("variances must be non-negative")
        th.setflags(write=False)
        v.setflags(write=False)
        object.__setattr__(self, "thetas", th)
        object.__setattr__(self, "variances", v)
        if self.weights is not None:
            w = np.asarray(self.weights, dtype=float).copy()
            if w.shape != th.shape:
                raise ValueError("weights must match the curve length")
            if np.any(w < 0):
                raise ValueError("weights must be non-negative")
            w.setflags(write=False)
            object.__setattr__(self, "weights", w)

    @property
    def span(self) -> float:
        return float(self.thetas.max() - self.thetas.min())


@dataclass(frozen=True)
class FitResult:
    """Outcome of :func:`fit_squeezed_thermal`.

    ``residual`` is the mean weighted squared error of the best model;
    ``degenerate`` marks a flat input curve resolved without optimization.
    """

    state: SqueezedThermalState
    scan: PhaseScanModel
    residual: float
    degenerate: bool = False


def _fit_weights(curve: VarianceCurve, weighting: str) -> np.ndarray:
    if curve.weights is not None:
        return curve.weights
    if weighting == "uniform":
        return np.ones_like(curve.variances)
    if weighting == "chi2":
        # variance of a window-variance estimate scales like 2 sigma**4 / N;
        # the window count is a common factor and drops out of the weights
        return 1.0 / (2.0 * curve.variances**2)
    raise ValueError(f"unknown weighting {weighting!r} (use 'uniform' or 'chi2')")


def fit_squeezed_thermal(
    curve: VarianceCurve,
    fit_alpha: bool = True,
    fit_rate: bool = False,
    weighting: str = "uniform",
) -> FitResult:
    """Least-squares fit of the squeezed-thermal model to a variance curve.

    Minimizes the mean weighted squared error between the curve and
    ``st_variance(state, theta0 + rate * theta + alpha * theta**2)`` with a
    derivative-free simplex search, multi-started over phase offsets
    {0, pi/4, pi/2, 3pi/4}.  ``rate`` stays fixed at 1 unless ``fit_rate``.

    The curve must span at least one pi-period of phase and hold at least 50
    points.  A flat curve is degenerate for this model: the thermal number is
    read off the mean, ``r = 0``, and the result is flagged.

    Raises :class:`~spopo.errors.FitError` (carrying the best residual) when
    no start converges.
    """
    if curve.span < math.pi - 1e-9:
        raise ValueError(
            f"curve spans {curve.span:.3f} rad; at least one pi-period is required"
        )
    if curve.thetas.size < 50:
        raise ValueError(f"need at least 50 points to fit, got {curve.thetas.size}")

    v = curve.variances
    if v.max() - v.min() <= _FLAT_CURVE_ATOL * max(1.0, v.mean()):
        n_th = max(0.0, (float(v.mean()) - 1.0) / 2.0)
        state = SqueezedThermalState(n_th=n_th, r=0.0)
        resid = float(np.mean((st_variance(state, curve.thetas) - v) ** 2))
        return FitResult(state=state, scan=PhaseScanModel(), residual=resid, degenerate=True)

    weights = _fit_weights(curve, weighting)
    thetas = curve.thetas

    mn, mx = float(v.min()), float(v.max())
    n0 = max(0.0, (math.sqrt(mn * mx) - 1.0) / 2.0)
    r0 = max(0.0, math.log(mx / mn) / 4.0)

    def objective(params: np.ndarray) -> float:
        n_th, r, theta0 = params[0], params[1], params[2]
        i = 3
        alpha = params[i] if fit_alpha else 0.0
        i += fit_alpha
        rate = params[i] if fit_rate else 1.0
        phi = theta0 + rate * thetas + alpha * thetas * thetas
        boost = 1.0 + 2.0 * n_th
        model = boost * (
            math.exp(-2.0 * r) * np.cos(phi) ** 2 + math.exp(2.0 * r) * np.sin(phi) ** 2
        )
        return float(np.mean(weights * (model - v) ** 2))

    bounds = [(0.0, 50.0), (0.0, 10.0), (-math.pi, 2.0 * math.pi)]
    if fit_alpha:
        bounds.append((-0.5, 0.5))
    if fit_rate:
        bounds.append((1.0 / 16.0, 16.0))

    best = None
    for theta0_start in _THETA0_STARTS:
        x0 = [n0, r0, theta0_start]
        if fit_alpha:
            x0.append(0.0)
        if fit_rate:
            x0.append(1.0)
        res = minimize(
            objective,
            np.asarray(x0),
            method="Nelder-Mead",
            bounds=bounds,
            options={"xatol": 1e-10, "fatol": 1e-14, "maxiter": 20000, "maxfev": 20000},
        )
        if not np.isfinite(res.fun):
            continue
        if best is None or res.fun < best.fun:
            best = res
    if best is None:
        raise FitError("fit failed from every phase-offset start")

    # one polish pass from the winner tightens the simplex around the optimum
    best = minimize(
        objective,
        best.x,
        method="Nelder-Mead",
        bounds=bounds,
        options={"xatol": 1e-10, "fatol": 1e-14, "maxiter": 20000, "maxfev": 20000},
    )
    if not (np.isfinite(best.fun) and best.success):
        raise FitError("fit did not converge", best_residual=float(best.fun))

    params = best.x
    alpha = float(params[3]) if fit_alpha else 0.0
    rate = float(params[3 + fit_alpha]) if fit_rate else 1.0
    return FitResult(
        state=SqueezedThermalState(n_th=float(params[0]), r=float(params[1])),
        scan=PhaseScanModel(theta0=float(params[2]), rate=rate, alpha=alpha),
        residual=float(best.fun),
    )
