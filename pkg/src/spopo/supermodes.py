"""Joint-spectral gain kernel of a pulsed parametric oscillator and its
supermode decomposition.

Below threshold, the gain medium couples pairs of signal wavelengths placed
symmetrically about the carrier.  On a discrete grid that coupling is a real
symmetric matrix; its singular value decomposition yields an orthonormal
family of spectral supermodes together with a descending ladder of gains,
normalized here so the fundamental mode has gain 1.  Each supermode is an
independently squeezed degree of freedom, so this basis is what every
downstream squeezing computation consumes.

The kernel model is a product of two Gaussians, one in the sum of the
detunings (the pump spectral envelope) and one in their difference (the
phase-matching acceptance).  That choice is deliberate: it admits an exact
closed-form decomposition into Hermite-Gauss modes with geometrically
decaying gains (see :func:`analytic_basis`), which serves as an independent
oracle for the numerical path.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DecompositionError, GridSupportError
from .grid import FrequencyGrid, fwhm_to_sigma

_SYMMETRY_RTOL = 1e-12
_FROBENIUS_RTOL = 1e-12
_ORTHONORMALITY_ATOL = 1e-9
_GAIN_ATOL = 1e-12

#: Modes with gain below this fraction of the fundamental contribute
#: squeezing indistinguishable from vacuum at realistic pump levels.
DEFAULT_GAIN_FLOOR = 1e-3
DEFAULT_K_MAX = 81


def hermite_functions(k_max: int, u: np.ndarray) -> np.ndarray:
    """Orthonormal Hermite functions phi_0 .. phi_{k_max} evaluated at ``u``.

    Uses the stable two-term recurrence

        phi_0(u)     = pi**-1/4 * exp(-u**2 / 2)
        phi_1(u)     = sqrt(2) * u * phi_0(u)
        phi_{k+1}(u) = sqrt(2/(k+1)) * u * phi_k(u) - sqrt(k/(k+1)) * phi_{k-1}(u)

    which, unlike evaluating raw Hermite polynomials, does not overflow for
    large ``k``.  Returns an array of shape ``(k_max + 1, len(u))``.
    """
    if k_max < 0:
        raise ValueError("k_max must be non-negative")
    u = np.asarray(u, dtype=float)
    out = np.empty((k_max + 1, u.size))
    out[0] = np.pi ** -0.25 * np.exp(-0.5 * u * u)
    if k_max >= 1:
        out[1] = math.sqrt(2.0) * u * out[0]
    for k in range(1, k_max):
        out[k + 1] = math.sqrt(2.0 / (k + 1)) * u * out[k] - math.sqrt(k / (k + 1)) * out[k - 1]
    return out


def schmidt_mode_scale(pump_fwhm_nm: float, phasematch_fwhm_nm: float) -> float:
    """Width parameter ``w`` of the Hermite-Gauss supermode family.

    For the double-Gaussian kernel the fundamental mode is a Gaussian
    ``exp(-x**2 / (2 w**2))`` with ``w = sqrt(sigma_p * sigma_m)``, the
    geometric mean of the pump and phase-matching intensity widths.
    """
    return math.sqrt(fwhm_to_sigma(pump_fwhm_nm) * fwhm_to_sigma(phasematch_fwhm_nm))


def schmidt_gain_ratio(pump_fwhm_nm: float, phasematch_fwhm_nm: float) -> float:
    """Geometric ratio ``mu`` of successive supermode gains.

    ``mu = |sigma_p - sigma_m| / (sigma_p + sigma_m)``; equal envelope widths
    give ``mu = 0`` (a single-mode, rank-1 kernel).
    """
    sp = fwhm_to_sigma(pump_fwhm_nm)
    sm = fwhm_to_sigma(phasematch_fwhm_nm)
    return abs(sp - sm) / (sp + sm)


def _fix_sign(vec: np.ndarray) -> np.ndarray:
    """Flip ``vec`` so its value at the (first) point of maximum magnitude is
    positive.  Ties within 1e-8 of the maximum resolve to the leftmost point,
    which keeps the convention stable against round-off in symmetric modes."""
    mag = np.abs(vec)
    idx = int(np.argmax(mag >= (1.0 - 1e-8) * mag.max()))
    return -vec if vec[idx] < 0 else vec


def _require_support(grid: FrequencyGrid, fwhm_nm: float, label: str) -> float:
    """Check the grid spans at least six standard deviations of a Gaussian
    envelope; returns the envelope sigma."""
    sigma = fwhm_to_sigma(fwhm_nm)
    if grid.span_nm < 6.0 * sigma:
        raise GridSupportError(
            f"grid span {grid.span_nm:g} nm is narrower than 6 sigma "
            f"({6.0 * sigma:g} nm) of the {label} envelope"
        )
    return sigma


@dataclass(frozen=True)
class JointSpectralKernel:
    """Two-wavelength gain kernel sampled on a grid.

    ``matrix[i, j]`` couples grid wavelengths ``i`` and ``j``; it is symmetric
    to within 1e-12 (relative) and normalized to unit Frobenius norm.
    Immutable after construction.
    """

    grid: FrequencyGrid
    matrix: np.ndarray = field(repr=False)
    pump_fwhm_nm: float
    phasematch_fwhm_nm: float

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=float)
        n = self.grid.n_points
        if m.shape != (n, n):
            raise ValueError(f"kernel matrix must be {n}x{n}, got {m.shape}")
        scale = np.abs(m).max()
        if scale == 0:
            raise ValueError("kernel matrix is identically zero")
        if np.abs(m - m.T).max() > _SYMMETRY_RTOL * scale:
            raise ValueError("kernel matrix is not symmetric to 1e-12 relative")
        fro = float(np.linalg.norm(m))
        if abs(fro - 1.0) > _FROBENIUS_RTOL:
            raise ValueError(f"kernel matrix must have unit Frobenius norm, got {fro!r}")
        m = m.copy()
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)


def build_kernel(
    grid: FrequencyGrid,
    pump_fwhm_nm: float,
    phasematch_fwhm_nm: float,
) -> JointSpectralKernel:
    """Sample the double-Gaussian gain kernel on ``grid``.

    With detunings ``d_i = lambda_i - center`` and intensity-profile widths
    ``sigma = FWHM / sqrt(8 ln 2)`` the kernel is

        K(d1, d2) = exp(-(d1 + d2)**2 / (4 sigma_p**2))
                  * exp(-(d1 - d2)**2 / (4 sigma_m**2))

    normalized to unit Frobenius norm.  The grid must span at least six
    standard deviations of each envelope; violating that raises
    :class:`~spopo.errors.GridSupportError` naming the offending envelope.
    """
    _require_support(grid, pump_fwhm_nm, "pump")
    _require_support(grid, phasematch_fwhm_nm, "phase-matching")
    sp = fwhm_to_sigma(pump_fwhm_nm)
    sm = fwhm_to_sigma(phasematch_fwhm_nm)
    d = grid.detunings_nm()
    total = d[:, None] + d[None, :]
    diff = d[:, None] - d[None, :]
    m = np.exp(-(total * total) / (4.0 * sp * sp)) * np.exp(-(diff * diff) / (4.0 * sm * sm))
    m /= np.linalg.norm(m)
    return JointSpectralKernel(
        grid=grid, matrix=m, pump_fwhm_nm=pump_fwhm_nm, phasematch_fwhm_nm=phasematch_fwhm_nm
    )


@dataclass(frozen=True)
class SupermodeBasis:
    """Orthonormal supermodes with normalized gains.

    Attributes
    ----------
    grid:
        Wavelength grid the modes are sampled on.
    modes:
        Array of shape ``(n_modes, n_points)``; row ``k`` is mode ``k`` with
        unit L2 norm on the grid and a positive peak (sign convention).
    gains:
        Normalized gains, ``gains[0] == 1`` and non-increasing.
    cutoff:
        Index of the last mode whose gain reaches the gain floor; modes
        beyond it are treated as vacuum by consumers.
    singular_values:
        Full spectrum of raw singular values of the source kernel when the
        basis came from a numerical decomposition, else ``None``.  Because
        the kernel is Frobenius-normalized these satisfy ``sum(s**2) == 1``.
    """

    grid: FrequencyGrid
    modes: np.ndarray = field(repr=False)
    gains: np.ndarray = field(repr=False)
    cutoff: int
    singular_values: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        modes = np.asarray(self.modes, dtype=float)
        gains = np.asarray(self.gains, dtype=float)
        if modes.ndim != 2 or modes.shape[1] != self.grid.n_points:
            raise ValueError("modes must be a (n_modes, n_points) array on the grid")
        if gains.shape != (modes.shape[0],):
            raise ValueError("one gain per mode required")
        if abs(gains[0] - 1.0) > _GAIN_ATOL:
            raise ValueError("gains must be normalized so the fundamental gain is 1")
        if np.any(np.diff(gains) > _GAIN_ATOL) or np.any(gains < -_GAIN_ATOL):
            raise ValueError("gains must be non-increasing and non-negative")
        if not 0 <= self.cutoff < modes.shape[0]:
            raise ValueError("cutoff must index an existing mode")
        gram = (modes @ modes.T) * self.grid.spacing_nm
        if np.abs(gram - np.eye(modes.shape[0])).max() > _ORTHONORMALITY_ATOL:
            raise ValueError("modes are not orthonormal to 1e-9")
        modes = modes.copy()
        modes.setflags(write=False)
        gains = gains.copy()
        gains.setflags(write=False)
        object.__setattr__(self, "modes", modes)
        object.__setattr__(self, "gains", gains)
        if self.singular_values is not None:
            sv = np.asarray(self.singular_values, dtype=float).copy()
            sv.setflags(write=False)
            object.__setattr__(self, "singular_values", sv)

    @property
    def n_modes(self) -> int:
        return int(self.modes.shape[0])


def _cutoff_index(gains: np.ndarray, gain_floor: float) -> int:
    above = np.nonzero(gains >= gain_floor)[0]
    # gains[0] == 1 and gain_floor < 1, so the set is never empty
    return int(above[-1])


def decompose(
    kernel: JointSpectralKernel,
    k_max: int = DEFAULT_K_MAX,
    gain_floor: float = DEFAULT_GAIN_FLOOR,
) -> SupermodeBasis:
    """Singular value decomposition of the kernel into a supermode basis.

    Keeps the ``k_max`` leading singular vectors as modes (converted to unit
    L2 norm on the grid, peak-positive) and normalizes the singular values so
    the leading gain is 1.  The cutoff index is the last mode with gain at
    least ``gain_floor``.

    Raises
    ------
    ValueError
        If ``k_max`` exceeds the grid size or ``gain_floor`` is not in [0, 1).
    DecompositionError
        If the SVD does not converge or fails the residual verification
        ``|K v_k - s_k u_k| <= 1e-8`` for a kept mode.
    """
    n = kernel.grid.n_points
    if not 1 <= k_max <= n:
        raise ValueError(f"k_max must be in [1, {n}], got {k_max}")
    if not 0.0 <= gain_floor < 1.0:
        raise ValueError(f"gain_floor must be in [0, 1), got {gain_floor}")
    try:
        u, s, vh = np.linalg.svd(kernel.matrix)
    except np.linalg.LinAlgError as exc:  # pragma: no cover - LAPACK failure
        raise DecompositionError(f"SVD did not converge: {exc}") from exc

    residual = max(
        float(np.linalg.norm(kernel.matrix @ vh[k] - s[k] * u[:, k])) for k in range(k_max)
    )
    if residual > 1e-8:
        raise DecompositionError(
            f"decomposition failed verification, residual norm {residual:.3e}"
        )

    spacing = kernel.grid.spacing_nm
    modes = np.array([_fix_sign(u[:, k]) / math.sqrt(spacing) for k in range(k_max)])
    gains = s[:k_max] / s[0]
    gains[0] = 1.0
    return SupermodeBasis(
        grid=kernel.grid,
        modes=modes,
        gains=gains,
        cutoff=_cutoff_index(gains, gain_floor),
        singular_values=s,
    )


def analytic_basis(
    pump_fwhm_nm: float,
    phasematch_fwhm_nm: float,
    grid: FrequencyGrid,
    k_max: int = DEFAULT_K_MAX,
    gain_floor: float = DEFAULT_GAIN_FLOOR,
) -> SupermodeBasis:
    """Closed-form supermode basis of the double-Gaussian kernel.

    Independent oracle for :func:`decompose`; no linear algebra involved.

    Derivation.  Write the kernel with ``a = 1/(4 sigma_p**2)`` and
    ``b = 1/(4 sigma_m**2)``:

        K(x, y) = exp(-(a + b)(x**2 + y**2) + 2 (b - a) x y).

    Mehler's expansion for the orthonormal Hermite functions phi_k,

        sum_k rho**k phi_k(u) phi_k(v)
            = (pi (1 - rho**2))**-1/2
              * exp(-(u**2 + v**2)(1 + rho**2) / (2 (1 - rho**2))
                    + 2 u v rho / (1 - rho**2)),

    matches K after the substitution ``u = x / w`` exactly when

        rho = (sqrt(b) - sqrt(a)) / (sqrt(b) + sqrt(a))
            = (sigma_p - sigma_m) / (sigma_p + sigma_m),
        w   = sqrt(sigma_p * sigma_m),

    giving  K(x, y) = sqrt(pi) w sqrt(1 - rho**2)
                      * sum_k rho**k psi_k(x) psi_k(y)
    with unit-norm modes ``psi_k(x) = phi_k(x / w) / sqrt(w)``.  The singular
    values are proportional to ``|rho|**k``, so the normalized gains form the
    geometric sequence ``mu**k`` with ``mu = |rho|`` (the sign of ``rho**k``
    belongs to the right singular vectors and does not affect gains).

    Sampled modes are renormalized to unit discrete L2 norm and carry the
    same peak-positive sign convention as :func:`decompose`.
    """
    if not 1 <= k_max <= grid.n_points:
        raise ValueError(f"k_max must be in [1, {grid.n_points}], got {k_max}")
    if not 0.0 <= gain_floor < 1.0:
        raise ValueError(f"gain_floor must be in [0, 1), got {gain_floor}")
    _require_support(grid, pump_fwhm_nm, "pump")
    _require_support(grid, phasematch_fwhm_nm, "phase-matching")

    w = schmidt_mode_scale(pump_fwhm_nm, phasematch_fwhm_nm)
    mu = schmidt_gain_ratio(pump_fwhm_nm, phasematch_fwhm_nm)
    spacing = grid.spacing_nm

    modes = hermite_functions(k_max - 1, grid.detunings_nm() / w) / math.sqrt(w)
    norms = np.sqrt(np.sum(modes * modes, axis=1) * spacing)
    modes = np.array([_fix_sign(m / nk) for m, nk in zip(modes, norms)])
    gains = mu ** np.arange(k_max, dtype=float)
    return SupermodeBasis(
        grid=grid,
        modes=modes,
        gains=gains,
        cutoff=_cutoff_index(gains, gain_floor),
        singular_values=None,
    )


def _half_crossings(x: np.ndarray, y: np.ndarray) -> float:
    """Width between the half-maximum crossings nearest the (unique) peak of
    ``y``, located by linear interpolation between grid points."""
    peak = int(np.argmax(y))
    half = y[peak] / 2.0
    i = peak
    while i > 0 and y[i - 1] >= half:
        i -= 1
    if i == 0:
        raise ValueError("half-maximum crossing falls outside the grid on the left")
    left = x[i - 1] + (x[i] - x[i - 1]) * (half - y[i - 1]) / (y[i] - y[i - 1])
    i = peak
    n = y.size
    while i < n - 1 and y[i + 1] >= half:
        i += 1
    if i == n - 1:
        raise ValueError("half-maximum crossing falls outside the grid on the right")
    right = x[i] + (x[i + 1] - x[i]) * (half - y[i]) / (y[i + 1] - y[i])
    return float(right - left)


def _intensity_envelope(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Upper envelope of an oscillatory profile: linear interpolation through
    its local maxima (endpoints included as anchors)."""
    interior = np.nonzero((y[1:-1] >= y[:-2]) & (y[1:-1] >= y[2:]))[0] + 1
    anchors = np.unique(np.concatenate(([0], interior, [y.size - 1])))
    return np.interp(x, x[anchors], y[anchors])


def mode_fwhm(basis: SupermodeBasis, k: int, envelope: bool = False) -> float:
    """Full width at half maximum of the intensity profile of mode ``k``.

    The fundamental mode is single-lobed and has a well-defined width.  For
    multi-lobed modes a plain FWHM is ill-defined and raises ``ValueError``
    unless ``envelope=True``, in which case the width of the intensity
    envelope (linear interpolation through the lobe maxima) is returned.
    """
    if not 0 <= k < basis.n_modes:
        raise ValueError(f"mode index {k} outside basis of {basis.n_modes} modes")
    x = basis.grid.points_nm
    intensity = basis.modes[k] ** 2
    n_lobes = _count_lobes(intensity)
    if n_lobes > 1 and not envelope:
        raise ValueError(
            f"mode {k} has {n_lobes} lobes; its FWHM is ill-defined "
            "(pass envelope=True for the envelope width)"
        )
    profile = _intensity_envelope(x, intensity) if envelope and n_lobes > 1 else intensity
    return _half_crossings(x, profile)


def _count_lobes(intensity: np.ndarray, rel_floor: float = 1e-6) -> int:
    floor = rel_floor * intensity.max()
    peaks = (intensity[1:-1] > intensity[:-2]) & (intensity[1:-1] >= intensity[2:])
    return int(np.count_nonzero(peaks & (intensity[1:-1] > floor)))
