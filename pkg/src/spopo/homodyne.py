"""Phase-scanned homodyne trace synthesis and variance estimation.

Synthesis draws each sample independently from a zero-mean Gaussian whose
variance follows a supplied phase-to-variance model along a linear phase ramp
(with optional quadratic distortion).  This white-noise approximation is the
key modeling simplification: the detection band is orders of magnitude faster
than the phase scan, so filtered-noise correlations between samples are
neglected.

Estimation slices a trace into windows (non-overlapping by default), computes
a numerically stable streaming variance per window, and optionally normalizes
by a vacuum (shot-noise) calibration.  Extremum extraction smooths with a
3-point median and refines with a local parabola before converting to dB.

Trace file format (little-endian, 64-byte header + float32 samples):

    offset  size  field
    ------  ----  -----------------------------------------------
       0      8   magic ``b"SPOPOTRC"``
       8      4   format version (uint32, currently 1)
      12      4   averaging window in samples (uint32)
      16      8   sample rate in Sa/s (float64)
      24      8   number of samples (uint64)
      32      8   RNG seed (uint64)
      40      8   scan span in rad (float64)
      48      8   quadratic phase distortion alpha (float64)
      56      8   shot-noise calibration variance (float64, NaN if absent)

The nominal phase of sample ``i`` is ``scan_span * i / n_samples``; a phase
offset is not stored (version 1 assumes it is zero and fits recover it).
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Callable

import numpy as np

from .errors import TraceFormatError
from .output import atomic_write_bytes, atomic_write_text
from .states import PhaseScanModel, VarianceCurve, apply_phase_distortion

TRACE_MAGIC = b"SPOPOTRC"
TRACE_VERSION = 1
_HEADER = struct.Struct("<8sIIdQQddd")
assert _HEADER.size == 64

#: Additive constant (golden-ratio increment) used to derive the companion
#: vacuum-trace seed from a signal seed; distinct seeds give independent
#: generator streams.
VACUUM_SEED_INCREMENT = 0x9E3779B97F4A7C15

_SYNTH_CHUNK = 1 << 18


def vacuum_seed_for(seed: int) -> int:
    """Deterministic companion seed for the vacuum calibration trace."""
    return (int(seed) + VACUUM_SEED_INCREMENT) % (1 << 64)


@dataclass(frozen=True)
class AcquisitionSpec:
    """Sampling parameters of one phase-scanned acquisition."""

    sample_rate: float = 20e6
    n_samples: int = 2_000_000
    scan_span: float = 2.0 * math.pi
    window: int = 20_000
    rng_seed: int = 0x53504F50

    def __post_init__(self):
        if self.sample_rate <= 0:
            raise ValueError(f"sample rate must be positive, got {self.sample_rate}")
        if self.window < 2:
            raise ValueError(f"window must hold at least 2 samples, got {self.window}")
        if self.n_samples < self.window:
            raise ValueError(
                f"trace of {self.n_samples} samples is shorter than window {self.window}"
            )
        if not 0 <= int(self.rng_seed) < (1 << 64):
            raise ValueError("rng_seed must fit in 64 bits")

    @property
    def duration_s(self) -> float:
        return self.n_samples / self.sample_rate


@dataclass(frozen=True)
class HomodyneTrace:
    """Sampled quadrature stream.

    Samples are stored as float32 (raw acquisition units); statistics are
    accumulated in float64.  ``shot_calibration`` is the variance of a
    companion vacuum trace in the same raw units, when available.
    ``scan_alpha`` records the quadratic phase distortion used at synthesis.
    """

    spec: AcquisitionSpec
    samples: np.ndarray = field(repr=False)
    shot_calibration: float | None = None
    scan_alpha: float = 0.0

    def __post_init__(self):
        s = np.asarray(self.samples)
        if s.shape != (self.spec.n_samples,):
            raise ValueError(
                f"expected {self.spec.n_samples} samples, got array of shape {s.shape}"
            )
        s = np.ascontiguousarray(s, dtype=np.float32)
        s.setflags(write=False)
        object.__setattr__(self, "samples", s)
        if self.shot_calibration is not None and self.shot_calibration <= 0:
            raise ValueError("shot calibration variance must be positive")


def synthesize_trace(
    state_model: Callable[[np.ndarray], np.ndarray],
    scan: PhaseScanModel,
    spec: AcquisitionSpec,
) -> HomodyneTrace:
    """Draw a phase-scanned trace from a variance model.

    Sample ``i`` is Gaussian with variance ``state_model(phi_i)`` where
    ``phi_i = theta_i + alpha * theta_i**2`` and
    ``theta_i = scan_span * i / n_samples + theta0``.  The ramp slope comes
    from the acquisition's ``scan_span``; the scan model's ``rate`` field is
    an analysis-side parameter and plays no role here.

    Generation is chunked, with one spawned generator substream per chunk, so
    the output is bit-identical for a given seed regardless of how chunks
    would be scheduled.
    """
    n = spec.n_samples
    samples = np.empty(n, dtype=np.float32)
    children = np.random.SeedSequence(spec.rng_seed).spawn(-(-n // _SYNTH_CHUNK))
    for c, child in enumerate(children):
        start = c * _SYNTH_CHUNK
        stop = min(n, start + _SYNTH_CHUNK)
        idx = np.arange(start, stop, dtype=float)
        theta = spec.scan_span * idx / n + scan.theta0
        var = np.asarray(state_model(apply_phase_distortion(theta, scan)), dtype=float)
        if np.any(var <= 0):
            raise ValueError("state model must be positive over the whole scan")
        gauss = np.random.default_rng(child).standard_normal(stop - start)
        samples[start:stop] = gauss * np.sqrt(var)
    return HomodyneTrace(spec=spec, samples=samples, scan_alpha=scan.alpha)


def shot_noise_trace(spec: AcquisitionSpec) -> HomodyneTrace:
    """Unit-variance vacuum trace for shot-noise calibration.

    Uses the generator stream of ``spec.rng_seed``; callers pairing it with a
    signal trace should give it its own seed (see :func:`vacuum_seed_for`).
    The measured whole-trace variance is recorded as the trace's own
    ``shot_calibration``.
    """
    trace = synthesize_trace(lambda theta: np.ones_like(theta), PhaseScanModel(), spec)
    return replace(trace, shot_calibration=streaming_variance(trace.samples))


def _merge_blocks(
    count: float, mean: np.ndarray, m2: np.ndarray, block: np.ndarray
) -> tuple[float, np.ndarray, np.ndarray]:
    """Combine running (count, mean, M2) with one data block (per row)."""
    nb = block.shape[-1]
    mb = block.mean(axis=-1)
    m2b = np.sum((block - mb[..., None]) ** 2, axis=-1)
    total = count + nb
    delta = mb - mean
    mean = mean + delta * (nb / total)
    m2 = m2 + m2b + delta * delta * (count * nb / total)
    return total, mean, m2


def _streaming_mean_m2(x: np.ndarray, block: int = 4096) -> tuple[float, np.ndarray, np.ndarray]:
    """Single pass over the last axis of ``x`` in blocks, merging partial
    (mean, M2) pairs with the numerically stable parallel update.  Data are
    pre-shifted by their first value (variance is shift-invariant), and no
    sum-of-squares minus squared-sum difference is ever formed, so neither
    large offsets nor long traces cause catastrophic cancellation; constant
    input yields an exact zero."""
    x = np.asarray(x)
    lead = x.shape[:-1]
    shift = np.asarray(x[..., 0], dtype=np.float64)
    count = 0.0
    mean = np.zeros(lead)
    m2 = np.zeros(lead)
    for j in range(0, x.shape[-1], block):
        chunk = x[..., j : j + block].astype(np.float64) - shift[..., None]
        count, mean, m2 = _merge_blocks(count, mean, m2, chunk)
    return count, mean + shift, m2


def streaming_variance(x: np.ndarray, ddof: int = 1) -> float:
    """Numerically stable streaming variance of a 1-D sample array."""
    x = np.asarray(x)
    if x.ndim != 1 or x.size < 2:
        raise ValueError("need a 1-D array with at least two samples")
    count, _, m2 = _streaming_mean_m2(x)
    return float(m2 / (count - ddof))


def moving_variance(
    trace: HomodyneTrace,
    stride: int | None = None,
    normalize: bool | None = None,
) -> VarianceCurve:
    """Windowed variance estimates along a trace.

    Windows have ``trace.spec.window`` samples and advance by ``stride``
    (default: the window length, i.e. non-overlapping windows, which keeps
    the resulting points statistically independent).  Each point is assigned
    the nominal scan phase at its window center.

    ``normalize=None`` normalizes by ``shot_calibration`` when present;
    ``normalize=True`` requires it and raises ``ValueError`` if missing.
    """
    spec = trace.spec
    w = spec.window
    if stride is None:
        stride = w
    if stride < 1:
        raise ValueError(f"stride must be at least 1, got {stride}")
    if normalize is None:
        normalize = trace.shot_calibration is not None
    if normalize and trace.shot_calibration is None:
        raise ValueError("normalization requested but the trace has no shot calibration")

    starts = np.arange(0, spec.n_samples - w + 1, stride)
    if stride == w:
        usable = starts.size * w
        windows = trace.samples[:usable].reshape(starts.size, w)
        count, _, m2 = _streaming_mean_m2(windows)
        variances = m2 / (count - 1.0)
    else:
        variances = np.empty(starts.size)
        for i, s in enumerate(starts):
            variances[i] = streaming_variance(trace.samples[s : s + w])
    if normalize:
        variances = variances / trace.shot_calibration

    centers = starts + (w - 1) / 2.0
    thetas = spec.scan_span * centers / spec.n_samples
    return VarianceCurve(thetas=thetas, variances=variances)


class ExtremaResult(tuple):
    """(squeezing_db, antisqueezing_db, theta_min) of a variance curve."""

    __slots__ = ()

    def __new__(cls, squeezing_db: float, antisqueezing_db: float, theta_min: float):
        return super().__new__(cls, (squeezing_db, antisqueezing_db, theta_min))

    squeezing_db = property(lambda self: self[0])
    antisqueezing_db = property(lambda self: self[1])
    theta_min = property(lambda self: self[2])


def _median3(y: np.ndarray) -> np.ndarray:
    padded = np.concatenate(([y[0]], y, [y[-1]]))
    return np.median(np.stack([padded[:-2], padded[1:-1], padded[2:]]), axis=0)


def _pick_extremum_index(smooth: np.ndarray, raw: np.ndarray, want_min: bool) -> int:
    """Index of the smoothed extremum; exact ties (the median copies
    neighbor values at V-shaped extrema) are broken by the raw value, which
    keeps the choice symmetric under curve reversal."""
    target = smooth.min() if want_min else smooth.max()
    tied = np.nonzero(smooth == target)[0]
    if tied.size == 1:
        return int(tied[0])
    return int(tied[np.argmin(raw[tied])] if want_min else tied[np.argmax(raw[tied])])


def _parabolic_extremum(
    x: np.ndarray, y: np.ndarray, i: int, want_min: bool, half_width: int = 2
) -> tuple[float, float]:
    """Refine the extremum near index ``i`` with a least-squares parabola
    over up to ``2 * half_width + 1`` neighbors; falls back to the raw point
    when the local fit has the wrong curvature or too few points."""
    lo = max(0, i - half_width)
    hi = min(y.size, i + half_width + 1)
    if hi - lo < 3:
        return float(y[i]), float(x[i])
    xs = x[lo:hi] - x[i]
    a, b, c = np.polyfit(xs, y[lo:hi], 2)
    if (want_min and a <= 0) or (not want_min and a >= 0):
        return float(y[i]), float(x[i])
    vx = -b / (2.0 * a)
    if not xs[0] <= vx <= xs[-1]:
        return float(y[i]), float(x[i])
    vy = float(np.polyval([a, b, c], vx))
    if vy <= 0:
        return float(y[i]), float(x[i])
    return vy, float(x[i] + vx)


def extract_extrema(curve: VarianceCurve) -> ExtremaResult:
    """Squeezing and anti-squeezing levels (dB) of a variance curve.

    Applies a 3-point median to suppress single-point outliers, locates the
    global minimum and maximum of the smoothed curve, and refines each with a
    local parabola before converting to dB.  The curve must span at least one
    pi-period so that both extrema are actually visited.
    """
    if curve.span < math.pi - 1e-9:
        raise ValueError(
            f"curve spans {curve.span:.3f} rad; need at least one pi-period of phase"
        )
    smooth = _median3(curve.variances)
    imin = _pick_extremum_index(smooth, curve.variances, want_min=True)
    imax = _pick_extremum_index(smooth, curve.variances, want_min=False)
    vmin, theta_min = _parabolic_extremum(curve.thetas, smooth, imin, want_min=True)
    vmax, _ = _parabolic_extremum(curve.thetas, smooth, imax, want_min=False)
    if vmin <= 0:
        raise ValueError("variance curve touches zero; extrema have no dB representation")
    return ExtremaResult(
        squeezing_db=10.0 * math.log10(vmin),
        antisqueezing_db=10.0 * math.log10(vmax),
        theta_min=theta_min,
    )


def write_trace(trace: HomodyneTrace, path: str | Path) -> None:
    """Serialize a trace in the binary format documented in this module."""
    spec = trace.spec
    shot = math.nan if trace.shot_calibration is None else float(trace.shot_calibration)
    header = _HEADER.pack(
        TRACE_MAGIC,
        TRACE_VERSION,
        spec.window,
        float(spec.sample_rate),
        spec.n_samples,
        int(spec.rng_seed),
        float(spec.scan_span),
        float(trace.scan_alpha),
        shot,
    )
    payload = header + np.ascontiguousarray(trace.samples, dtype="<f4").tobytes()
    atomic_write_bytes(Path(path), payload)


def read_trace(path: str | Path) -> HomodyneTrace:
    """Load a trace file, validating the header field by field.

    Raises :class:`~spopo.errors.TraceFormatError` with the byte offset of
    the first problem encountered.
    """
    raw = Path(path).read_bytes()
    if len(raw) < _HEADER.size:
        raise TraceFormatError(
            f"file holds {len(raw)} bytes, shorter than the {_HEADER.size}-byte header",
            byte_offset=len(raw),
        )
    magic, version, window, rate, n_samples, seed, span, alpha, shot = _HEADER.unpack_from(raw)
    if magic != TRACE_MAGIC:
        raise TraceFormatError(f"bad magic {magic!r}, expected {TRACE_MAGIC!r}", byte_offset=0)
    if version != TRACE_VERSION:
        raise TraceFormatError(f"unsupported format version {version}", byte_offset=8)
    if window < 2:
        raise TraceFormatError(f"window {window} below the 2-sample minimum", byte_offset=12)
    if not rate > 0:
        raise TraceFormatError(f"non-positive sample rate {rate!r}", byte_offset=16)
    expected = _HEADER.size + 4 * n_samples
    if len(raw) != expected:
        raise TraceFormatError(
            f"header promises {n_samples} samples ({expected} bytes total) "
            f"but the file holds {len(raw)} bytes",
            byte_offset=_HEADER.size,
        )
    if n_samples < window:
        raise TraceFormatError(
            f"{n_samples} samples is shorter than the window {window}", byte_offset=24
        )
    samples = np.frombuffer(raw, dtype="<f4", offset=_HEADER.size)
    spec = AcquisitionSpec(
        sample_rate=rate, n_samples=int(n_samples), scan_span=span, window=int(window),
        rng_seed=int(seed),
    )
    return HomodyneTrace(
        spec=spec,
        samples=samples,
        shot_calibration=None if math.isnan(shot) else shot,
        scan_alpha=alpha,
    )


def trace_to_csv(trace: HomodyneTrace, path: str | Path) -> None:
    """Plain-text export, one ``time_s,sample`` row per sample."""
    t = np.arange(trace.spec.n_samples) / trace.spec.sample_rate
    lines = ["time_s,sample"]
    lines.extend(f"{ti:.9e},{si:.7e}" for ti, si in zip(t, trace.samples))
    atomic_write_text(Path(path), "\n".join(lines) + "\n")
