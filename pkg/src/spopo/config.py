"""Experiment configuration: defaults, INI parsing, serialization, builders.

The configuration is a plain INI file with one section per subsystem.  Every
key has a default, so partial files are fine; unknown sections or keys are
rejected by name.  ``parse -> serialize -> parse`` is idempotent.

The two calibrated constants frozen here are the only fitted numbers in the
default configuration; everything else is a directly specified parameter.
"""

from __future__ import annotations

import configparser
import hashlib
import io
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Callable

import numpy as np

from .cavity import CavityParams, DetectionBudget, total_efficiency
from .errors import ConfigError
from .grid import FrequencyGrid
from .homodyne import AcquisitionSpec
from .squeezing import LOSpectrum, PumpSetting, detected_variance, gaussian_lo
from .states import PhaseScanModel, SqueezedThermalState, st_variance
from .supermodes import SupermodeBasis, build_kernel, decompose

__version__ = "0.1.0"

#: Phase-matching envelope width (intensity FWHM, nm).  Calibrated so the
#: fundamental supermode of the default kernel has a 4.4 nm intensity FWHM at
#: the 1.0 nm pump width; equals the closed form 2 * 4.4**2 / 1.0 (see
#: calibration.analytic_phasematch_for_mode_fwhm).
CALIBRATED_PHASEMATCH_FWHM_NM = 38.72

#: Intracavity round-trip loss.  Calibrated (calibration.calibrate_intracavity_loss)
#: so the default configuration detects -3.3 dB of squeezing at 0.3 of
#: threshold with the 3.0 nm local oscillator.
CALIBRATED_INTRACAVITY_LOSS = 0.033243254782892

DEFAULT_SEED = 0x53504F50


@dataclass(frozen=True)
class GridSettings:
    center_nm: float = 1035.0
    span_nm: float = 120.0
    n_points: int = 1024


@dataclass(frozen=True)
class PumpSettings:
    power_mw: float = 40.0
    threshold_mw: float = 400.0 / 3.0
    fwhm_nm: float = 1.0


@dataclass(frozen=True)
class LOSettings:
    center_nm: float = 1035.0
    fwhm_nm: float = 3.0
    projection_widths_nm: tuple[float, ...] = (1.0, 2.0, 3.0)


@dataclass(frozen=True)
class ModelSettings:
    analysis_freq_mhz: float = 0.5
    k_max: int = 81
    gain_floor: float = 1e-3
    phasematch_fwhm_nm: float = CALIBRATED_PHASEMATCH_FWHM_NM


@dataclass(frozen=True)
class StateSettings:
    n_th: float = 0.20
    r: float = 0.83


@dataclass(frozen=True)
class ScanRampSettings:
    """Phase ramp applied while a trace is acquired."""

    theta0_rad: float = 0.0
    alpha: float = 1.25e-2


@dataclass(frozen=True)
class ExperimentConfig:
    grid: GridSettings = GridSettings()
    cavity: CavityParams = CavityParams(intracavity_loss=CALIBRATED_INTRACAVITY_LOSS)
    detection: DetectionBudget = DetectionBudget()
    pump: PumpSettings = PumpSettings()
    lo: LOSettings = LOSettings()
    model: ModelSettings = ModelSettings()
    state: StateSettings = StateSettings()
    acquisition: AcquisitionSpec = AcquisitionSpec(rng_seed=DEFAULT_SEED)
    ramp: ScanRampSettings = ScanRampSettings()


def default_config() -> ExperimentConfig:
    return ExperimentConfig()


def with_seed(config: ExperimentConfig, seed: int) -> ExperimentConfig:
    return replace(config, acquisition=replace(config.acquisition, rng_seed=seed))


# ---------------------------------------------------------------------------
# builders: turn the configuration into live objects


def make_grid(config: ExperimentConfig) -> FrequencyGrid:
    g = config.grid
    return FrequencyGrid.centered(g.center_nm, g.span_nm, g.n_points)


def make_basis(config: ExperimentConfig, grid: FrequencyGrid | None = None) -> SupermodeBasis:
    grid = make_grid(config) if grid is None else grid
    kernel = build_kernel(grid, config.pump.fwhm_nm, config.model.phasematch_fwhm_nm)
    return decompose(kernel, k_max=config.model.k_max, gain_floor=config.model.gain_floor)


def make_lo(
    config: ExperimentConfig, grid: FrequencyGrid, fwhm_nm: float | None = None
) -> LOSpectrum:
    return gaussian_lo(grid, config.lo.fwhm_nm if fwhm_nm is None else fwhm_nm,
                       center_nm=config.lo.center_nm)


def make_pump(config: ExperimentConfig) -> PumpSetting:
    return PumpSetting(power_mw=config.pump.power_mw, threshold_mw=config.pump.threshold_mw)


def make_state(config: ExperimentConfig) -> SqueezedThermalState:
    return SqueezedThermalState(n_th=config.state.n_th, r=config.state.r)


def make_phase_scan(config: ExperimentConfig) -> PhaseScanModel:
    return PhaseScanModel(theta0=config.ramp.theta0_rad, rate=1.0, alpha=config.ramp.alpha)


def detected_trace_model(config: ExperimentConfig) -> Callable[[np.ndarray], np.ndarray]:
    """Phase-to-variance model of the configured state as seen by the
    detector: the squeezed-thermal variance pushed through the efficiency
    correction."""
    state = make_state(config)
    eta_hom = total_efficiency(config.detection)
    return lambda theta: detected_variance(st_variance(state, theta), eta_hom)


# ---------------------------------------------------------------------------
# INI parsing / serialization

_GETTERS: dict[str, dict[str, str]] = {
    "grid": {"center_nm": "float", "span_nm": "float", "n_points": "int"},
    "cavity": {
        "length_m": "float",
        "r_input": "float",
        "r_output": "float",
        "intracavity_loss": "float",
        "gdd_fs2": "gdd",
    },
    "detection": {
        "eta_pd": "float",
        "eta_opt": "float",
        "visibility": "float",
        "eta_bkg": "float",
    },
    "pump": {"power_mw": "float", "threshold_mw": "float", "fwhm_nm": "float"},
    "lo": {"center_nm": "float", "fwhm_nm": "float", "projection_widths_nm": "floats"},
    "model": {
        "analysis_freq_mhz": "float",
        "k_max": "int",
        "gain_floor": "float",
        "phasematch_fwhm_nm": "float",
    },
    "state": {"n_th": "float", "r": "float"},
    "acquisition": {
        "sample_rate_sa_s": "float",
        "n_samples": "int",
        "scan_span_rad": "float",
        "window": "int",
        "rng_seed": "int",
        "theta0_rad": "float",
        "alpha": "float",
    },
}


def _parse_gdd(text: str, context: str) -> tuple[tuple[str, float], ...]:
    items = []
    for chunk in text.split(","):
        chunk = chunk.strip()
        if not chunk:
            continue
        if ":" not in chunk:
            raise ConfigError(f"{context}: expected 'label: value' entries, got {chunk!r}")
        label, value = chunk.split(":", 1)
        try:
            items.append((label.strip(), float(value)))
        except ValueError as exc:
            raise ConfigError(f"{context}: bad number in {chunk!r}") from exc
    return tuple(items)


def _parse_floats(text: str, context: str) -> tuple[float, ...]:
    try:
        return tuple(float(v) for v in text.split(",") if v.strip())
    except ValueError as exc:
        raise ConfigError(f"{context}: expected a comma-separated list of numbers") from exc


def parse_config_text(text: str, source: str = "<string>") -> ExperimentConfig:
    cp = configparser.ConfigParser(interpolation=None)
    try:
        cp.read_string(text, source=source)
    except configparser.Error as exc:
        raise ConfigError(f"{source}: {exc}") from exc

    values: dict[str, dict[str, object]] = {}
    for section in cp.sections():
        if section not in _GETTERS:
            raise ConfigError(f"{source}: unknown section [{section}]")
        known = _GETTERS[section]
        values[section] = {}
        for key, raw in cp.items(section):
            if key not in known:
                raise ConfigError(f"{source}: unknown key '{key}' in section [{section}]")
            context = f"{source}: [{section}] {key}"
            kind = known[key]
            try:
                if kind == "float":
                    values[section][key] = float(raw)
                elif kind == "int":
                    values[section][key] = int(raw, 0)
                elif kind == "gdd":
                    values[section][key] = _parse_gdd(raw, context)
                elif kind == "floats":
                    values[section][key] = _parse_floats(raw, context)
            except ConfigError:
                raise
            except ValueError as exc:
                raise ConfigError(f"{context}: {exc}") from exc

    def section(name: str) -> dict:
        return values.get(name, {})

    base = default_config()
    try:
        acq = section("acquisition")
        acq_fields = {
            "sample_rate": acq.get("sample_rate_sa_s", base.acquisition.sample_rate),
            "n_samples": acq.get("n_samples", base.acquisition.n_samples),
            "scan_span": acq.get("scan_span_rad", base.acquisition.scan_span),
            "window": acq.get("window", base.acquisition.window),
            "rng_seed": acq.get("rng_seed", base.acquisition.rng_seed),
        }
        ramp_fields = {
            "theta0_rad": acq.get("theta0_rad", base.ramp.theta0_rad),
            "alpha": acq.get("alpha", base.ramp.alpha),
        }
        return ExperimentConfig(
            grid=replace(base.grid, **section("grid")),
            cavity=replace(base.cavity, **section("cavity")),
            detection=replace(base.detection, **section("detection")),
            pump=replace(base.pump, **section("pump")),
            lo=replace(base.lo, **section("lo")),
            model=replace(base.model, **section("model")),
            state=replace(base.state, **section("state")),
            acquisition=AcquisitionSpec(**acq_fields),
            ramp=ScanRampSettings(**ramp_fields),
        )
    except ValueError as exc:
        raise ConfigError(f"{source}: {exc}") from exc


def parse_config(path: str | Path) -> ExperimentConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return parse_config_text(text, source=str(path))


def serialize_config(config: ExperimentConfig) -> str:
    cp = configparser.ConfigParser(interpolation=None)
    cp["grid"] = {
        "center_nm": repr(config.grid.center_nm),
        "span_nm": repr(config.grid.span_nm),
        "n_points": str(config.grid.n_points),
    }
    cp["cavity"] = {
        "length_m": repr(config.cavity.length_m),
        "r_input": repr(config.cavity.r_input),
        "r_output": repr(config.cavity.r_output),
        "intracavity_loss": repr(config.cavity.intracavity_loss),
        "gdd_fs2": ", ".join(f"{k}: {v:g}" for k, v in config.cavity.gdd_fs2),
    }
    cp["detection"] = {
        "eta_pd": repr(config.detection.eta_pd),
        "eta_opt": repr(config.detection.eta_opt),
        "visibility": repr(config.detection.visibility),
        "eta_bkg": repr(config.detection.eta_bkg),
    }
    cp["pump"] = {
        "power_mw": repr(config.pump.power_mw),
        "threshold_mw": repr(config.pump.threshold_mw),
        "fwhm_nm": repr(config.pump.fwhm_nm),
    }
    cp["lo"] = {
        "center_nm": repr(config.lo.center_nm),
        "fwhm_nm": repr(config.lo.fwhm_nm),
        "projection_widths_nm": ", ".join(repr(w) for w in config.lo.projection_widths_nm),
    }
    cp["model"] = {
        "analysis_freq_mhz": repr(config.model.analysis_freq_mhz),
        "k_max": str(config.model.k_max),
        "gain_floor": repr(config.model.gain_floor),
        "phasematch_fwhm_nm": repr(config.model.phasematch_fwhm_nm),
    }
    cp["state"] = {"n_th": repr(config.state.n_th), "r": repr(config.state.r)}
    cp["acquisition"] = {
        "sample_rate_sa_s": repr(config.acquisition.sample_rate),
        "n_samples": str(config.acquisition.n_samples),
        "scan_span_rad": repr(config.acquisition.scan_span),
        "window": str(config.acquisition.window),
        "rng_seed": str(config.acquisition.rng_seed),
        "theta0_rad": repr(config.ramp.theta0_rad),
        "alpha": repr(config.ramp.alpha),
    }
    buf = io.StringIO()
    cp.write(buf)
    return buf.getvalue()


def config_sha256(config: ExperimentConfig) -> str:
    """Short content hash of the canonical serialization, for provenance."""
    return hashlib.sha256(serialize_config(config).encode()).hexdigest()[:12]
