"""Below-threshold synchronously pumped OPO toolkit.

Numerical model of a pulsed, cavity-enhanced squeezed-light source:
joint-spectral kernel and supermode decomposition, cavity and detection
efficiency budgets, per-mode squeezing combined against a shaped local
oscillator, squeezed-thermal state analysis, and synthesis plus estimation
of phase-scanned homodyne traces.
"""

from .calibration import (
    analytic_phasematch_for_mode_fwhm,
    calibrate_intracavity_loss,
    calibrate_phasematch_fwhm,
    schmidt_fundamental_fwhm,
)
from .cavity import (
    C_M_PER_S,
    CavityParams,
    DetectionBudget,
    cavity_bandwidth_fwhm_mhz,
    escape_efficiency,
    finesse,
    free_spectral_range_mhz,
    gdd_residual_fs2,
    total_efficiency,
)
from .config import (
    ExperimentConfig,
    config_sha256,
    default_config,
    parse_config,
    parse_config_text,
    serialize_config,
)
from .errors import (
    AboveThresholdError,
    CavityModelError,
    ConfigError,
    DecompositionError,
    FitError,
    GridMismatchError,
    GridSupportError,
    InversionError,
    SpopoError,
    TraceFormatError,
)
from .grid import SQRT_8LN2, FrequencyGrid, fwhm_to_sigma, sigma_to_fwhm
from .homodyne import (
    AcquisitionSpec,
    ExtremaResult,
    HomodyneTrace,
    extract_extrema,
    moving_variance,
    read_trace,
    shot_noise_trace,
    streaming_variance,
    synthesize_trace,
    trace_to_csv,
    vacuum_seed_for,
    write_trace,
)
from .squeezing import (
    LOSpectrum,
    ModeProjection,
    PumpSetting,
    ScanCurve,
    VariancePair,
    db,
    db_inv,
    detected_variance,
    gaussian_lo,
    infer_output_variance,
    mode_variances,
    parametric_gain,
    per_mode_variances,
    project_lo,
    scan_lo_width,
    scan_pump,
    spopo_variance,
)
from .states import (
    FitResult,
    PhaseScanModel,
    SqueezedThermalState,
    VarianceCurve,
    apply_phase_distortion,
    fit_squeezed_thermal,
    minimum_variance,
    nonclassical_depth,
    purity,
    st_variance,
    wigner,
)
from .supermodes import (
    JointSpectralKernel,
    SupermodeBasis,
    analytic_basis,
    build_kernel,
    decompose,
    hermite_functions,
    mode_fwhm,
    schmidt_gain_ratio,
    schmidt_mode_scale,
)

__version__ = "0.1.0"
