"""Per-mode squeezing, LO projection, the efficiency correction, and scans."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.special import gammaln

from spopo.cavity import DetectionBudget, total_efficiency
from spopo.config import make_lo, make_pump
from spopo.errors import AboveThresholdError, GridMismatchError, InversionError
from spopo.grid import FrequencyGrid, fwhm_to_sigma
from spopo.squeezing import (
    LOSpectrum,
    PumpSetting,
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
from spopo.supermodes import analytic_basis, schmidt_mode_scale

variances = st.floats(min_value=1e-3, max_value=1e3)
etas = st.floats(min_value=0.05, max_value=1.0)


def analytic_even_weight(lo_fwhm, mode_scale, m):
    """Closed-form |overlap|^2 of a centered Gaussian LO with even mode 2m.

    With amplitude widths s (LO) and w (modes), the overlap of a unit-norm
    Gaussian with the Hermite-Gauss ladder is

        |M_{2m}|^2 = 2sw/(s^2+w^2) * C(2m, m)/4^m * tau^{2m},
        tau = (w^2 - s^2)/(w^2 + s^2),

    and zero for odd modes by parity; the total over all m sums to one.
    """
    s = math.sqrt(2.0) * fwhm_to_sigma(lo_fwhm)
    w = mode_scale
    tau = (w * w - s * s) / (w * w + s * s)
    binom = math.exp(gammaln(2 * m + 1) - 2 * m * math.log(2.0) - 2 * gammaln(m + 1))
    return 2 * s * w / (s * s + w * w) * binom * tau ** (2 * m)


class TestModeVariances:
    def test_no_pump_gives_vacuum_for_every_mode(self, calibrated_basis, measured_cavity):
        pump = PumpSetting.from_normalized(0.0)
        for k in (0, 5, 40):
            pair = mode_variances(k, calibrated_basis, pump, measured_cavity)
            assert pair.squeezed == 1.0
            assert pair.antisqueezed == 1.0

    def test_uncoupled_mode_stays_at_vacuum(self, default_grid, measured_cavity):
        basis = analytic_basis(1.0, 1.0, default_grid, k_max=3, gain_floor=0.0)
        pair = mode_variances(2, basis, PumpSetting.from_normalized(0.5), measured_cavity)
        assert pair.squeezed == pytest.approx(1.0, abs=1e-12)
        assert pair.antisqueezed == pytest.approx(1.0, abs=1e-12)

    def test_fundamental_pair_at_reference_point(self, calibrated_basis, measured_cavity):
        # frozen from a direct evaluation of the closed form with
        # x = sqrt(0.3), eta_esc = 0.19/0.26, sideband = 1 MHz / 3.8407 MHz
        pair = mode_variances(
            0, calibrated_basis, PumpSetting.from_normalized(0.3), measured_cavity, 0.5
        )
        assert pair.squeezed == pytest.approx(0.35002792154258955, rel=1e-12)
        assert pair.antisqueezed == pytest.approx(6.878667529799962, rel=1e-12)

    def test_uncertainty_product_at_least_one(self, calibrated_basis, measured_cavity):
        for p in (0.05, 0.3, 0.7, 0.95):
            pairs = per_mode_variances(
                calibrated_basis, PumpSetting.from_normalized(p), measured_cavity
            )
            for pair in pairs:
                assert pair.squeezed * pair.antisqueezed >= 1.0 - 1e-12

    def test_above_threshold_rejected(self):
        with pytest.raises(AboveThresholdError):
            PumpSetting.from_normalized(1.0)
        with pytest.raises(AboveThresholdError):
            PumpSetting(power_mw=140.0, threshold_mw=133.0)


class TestParametricGain:
    def test_reference_operating_point(self):
        assert parametric_gain(PumpSetting.from_normalized(0.3)) == pytest.approx(
            4.888663500021085, rel=1e-12
        )

    def test_no_pump_no_gain(self):
        assert parametric_gain(PumpSetting.from_normalized(0.0)) == 1.0

    def test_quarter_threshold_gives_gain_four(self):
        assert parametric_gain(PumpSetting.from_normalized(0.25)) == pytest.approx(4.0, rel=1e-12)


class TestProjection:
    def test_lo_equal_to_fundamental_projects_entirely(self, calibrated_basis):
        lo = LOSpectrum(grid=calibrated_basis.grid, amplitude=calibrated_basis.modes[0])
        proj = project_lo(lo, calibrated_basis)
        assert proj.overlaps[0] == pytest.approx(1.0, abs=1e-9)
        assert np.abs(proj.overlaps[1:]).max() < 1e-9

    def test_odd_modes_vanish_by_parity(self, calibrated_basis):
        proj = project_lo(gaussian_lo(calibrated_basis.grid, 2.0), calibrated_basis)
        assert np.abs(proj.weights[1::2]).max() < 1e-9

    def test_wider_lo_overlaps_fundamental_better(self, calibrated_basis):
        w = {}
        for fwhm in (1.0, 2.0, 3.0):
            proj = project_lo(gaussian_lo(calibrated_basis.grid, fwhm), calibrated_basis)
            w[fwhm] = proj.weights[0]
        assert w[3.0] > w[2.0] > w[1.0]

    @pytest.mark.parametrize("fwhm", [1.0, 2.0, 3.0])
    def test_weights_match_closed_form(self, calibrated_basis, fwhm):
        proj = project_lo(gaussian_lo(calibrated_basis.grid, fwhm), calibrated_basis)
        w = schmidt_mode_scale(1.0, 38.72)
        for m in range(12):
            expected = analytic_even_weight(fwhm, w, m)
            assert proj.weights[2 * m] == pytest.approx(expected, abs=1e-9, rel=1e-6)

    def test_weight_sum_bounded_by_one(self, calibrated_basis):
        for fwhm in (0.2, 0.7, 1.5, 3.0, 6.0):
            proj = project_lo(gaussian_lo(calibrated_basis.grid, fwhm), calibrated_basis)
            assert proj.weights.sum() <= 1.0 + 1e-9
            assert proj.residual >= -1e-9

    def test_grid_mismatch_rejected(self, calibrated_basis):
        other = FrequencyGrid.centered(span_nm=100.0, n_points=256)
        with pytest.raises(GridMismatchError):
            project_lo(gaussian_lo(other, 2.0), calibrated_basis)


class TestSpopoVariance:
    def test_vacuum_closure(self, calibrated_basis, measured_cavity):
        proj = project_lo(gaussian_lo(calibrated_basis.grid, 2.0), calibrated_basis)
        pairs = per_mode_variances(
            calibrated_basis, PumpSetting.from_normalized(0.0), measured_cavity
        )
        for theta in np.linspace(0, math.pi, 7):
            assert spopo_variance(theta, proj, pairs) == pytest.approx(1.0, abs=1e-9)

    def test_single_mode_reduction(self, default_grid, measured_cavity):
        basis = analytic_basis(1.0, 1.0, default_grid, k_max=1, gain_floor=0.0)
        lo = LOSpectrum(grid=default_grid, amplitude=basis.modes[0])
        proj = project_lo(lo, basis)
        pairs = per_mode_variances(basis, PumpSetting.from_normalized(0.3), measured_cavity)
        assert spopo_variance(0.0, proj, pairs) == pytest.approx(pairs[0].squeezed, abs=1e-9)
        assert spopo_variance(math.pi / 2, proj, pairs) == pytest.approx(
            pairs[0].antisqueezed, abs=1e-8
        )

    def test_interpolates_between_per_mode_extremes_and_vacuum(
        self, calibrated_basis, measured_cavity
    ):
        proj = project_lo(gaussian_lo(calibrated_basis.grid, 1.5), calibrated_basis)
        pairs = per_mode_variances(
            calibrated_basis, PumpSetting.from_normalized(0.4), measured_cavity
        )
        lower = min(min(p.squeezed for p in pairs), 1.0)
        upper = max(max(p.antisqueezed for p in pairs), 1.0)
        for theta in np.linspace(0, 2 * math.pi, 17):
            v = spopo_variance(theta, proj, pairs)
            assert lower - 1e-12 <= v <= upper + 1e-12

    def test_length_mismatch_rejected(self, calibrated_basis, measured_cavity):
        proj = project_lo(gaussian_lo(calibrated_basis.grid, 2.0), calibrated_basis)
        pairs = per_mode_variances(
            calibrated_basis, PumpSetting.from_normalized(0.3), measured_cavity
        )
        with pytest.raises(ValueError, match="pairs"):
            spopo_variance(0.0, proj, pairs[:-1])

    def test_unprojected_lo_is_pure_vacuum_at_any_pump(self, calibrated_basis, measured_cavity):
        n = calibrated_basis.cutoff + 1
        from spopo.squeezing import ModeProjection

        proj = ModeProjection(overlaps=np.zeros(n), weights=np.zeros(n), residual=1.0)
        for p in (0.0, 0.5, 0.9):
            pairs = per_mode_variances(
                calibrated_basis, PumpSetting.from_normalized(p), measured_cavity
            )
            assert spopo_variance(0.3, proj, pairs) == 1.0


class TestEfficiencyCorrection:
    def test_reference_output_maps_to_detected_level(self):
        sigma2 = db_inv(-5.7)
        assert sigma2 == pytest.approx(0.2691534803926916, rel=1e-12)
        assert db(detected_variance(sigma2, 0.742)) == pytest.approx(-3.394, abs=0.001)

    def test_unit_efficiency_is_identity(self):
        for v in (0.2, 1.0, 3.7):
            assert detected_variance(v, 1.0) == pytest.approx(v, rel=1e-15)

    def test_vacuum_is_a_fixed_point(self):
        for eta in (0.3, 0.742, 1.0):
            assert detected_variance(1.0, eta) == 1.0
            assert infer_output_variance(1.0, eta) == 1.0

    def test_round_trip_is_identity(self):
        rng = np.random.default_rng(1)
        for _ in range(100):
            eta = rng.uniform(0.3, 1.0)
            v = rng.uniform(1.0 - eta + 1e-3 / eta, 8.0)
            assert infer_output_variance(detected_variance(v, eta), eta) == pytest.approx(
                v, abs=1e-12
            )

    @given(st.floats(min_value=0.01, max_value=8.0), etas)
    @settings(max_examples=200)
    def test_contraction_toward_vacuum(self, v, eta):
        assert abs(1.0 - detected_variance(v, eta)) <= abs(1.0 - v) + 1e-15

    def test_impossible_inversion_flagged(self):
        with pytest.raises(InversionError):
            infer_output_variance(0.2, 0.742)


class TestDecibels:
    def test_anchor_values(self):
        assert db(1.0) == 0.0
        assert db(0.2691534803926916) == pytest.approx(-5.7, abs=1e-9)

    @given(variances)
    @settings(max_examples=200)
    def test_round_trip(self, v):
        assert db_inv(db(v)) == pytest.approx(v, rel=1e-12)

    def test_non_positive_variance_rejected(self):
        with pytest.raises(ValueError):
            db(0.0)
        with pytest.raises(ValueError):
            db(-1.0)


@pytest.fixture(scope="module")
def scan_setup(default_cfg, calibrated_basis):
    lo = make_lo(default_cfg, calibrated_basis.grid)
    return default_cfg, calibrated_basis, lo


class TestScans:
    def test_pump_scan_vacuum_endpoint_and_monotonic_shape(self, scan_setup):
        cfg, basis, lo = scan_setup
        curve = scan_pump(
            np.linspace(0.0, 0.5, 11), lo, basis, cfg.cavity, cfg.detection,
            cfg.model.analysis_freq_mhz,
        )
        assert curve.squeezing_db[0] == pytest.approx(0.0, abs=1e-9)
        assert curve.antisqueezing_db[0] == pytest.approx(0.0, abs=1e-9)
        assert np.all(np.diff(curve.squeezing_db) < 0)
        assert np.all(np.diff(curve.antisqueezing_db) > 0)
        assert np.all(np.abs(curve.antisqueezing_db) >= np.abs(curve.squeezing_db) - 1e-12)

    def test_pump_scan_reference_point(self, scan_setup):
        cfg, basis, lo = scan_setup
        curve = scan_pump(
            [0.3], lo, basis, cfg.cavity, cfg.detection, cfg.model.analysis_freq_mhz
        )
        assert curve.squeezing_db[0] == pytest.approx(-3.3, abs=0.01)

    def test_lo_scan_grows_with_width(self, scan_setup):
        cfg, basis, _ = scan_setup
        widths = np.linspace(0.2, 3.0, 15)
        curve = scan_lo_width(
            widths, make_pump(cfg), basis, cfg.cavity, cfg.detection,
            cfg.model.analysis_freq_mhz,
        )
        assert np.all(np.diff(curve.squeezing_db) < 0)
        assert np.all(np.diff(curve.antisqueezing_db) > 0)

    def test_lo_scan_single_mode_reduction(self, measured_cavity):
        # rank-1 basis: a LO matching the lone mode reproduces its variances
        grid = FrequencyGrid.centered(span_nm=40.0, n_points=512)
        basis = analytic_basis(1.5, 1.5, grid, k_max=1, gain_floor=0.0)
        pump = PumpSetting.from_normalized(0.3)
        budget = DetectionBudget(1.0, 1.0, 1.0, 1.0)
        # an LO whose intensity FWHM equals the mode's (2 sqrt(ln 2) w) has
        # the same amplitude profile as the mode itself
        w = schmidt_mode_scale(1.5, 1.5)
        match_fwhm = 2.0 * math.sqrt(math.log(2.0)) * w
        curve = scan_lo_width([match_fwhm], pump, basis, measured_cavity, budget)
        pair = per_mode_variances(basis, pump, measured_cavity)[0]
        assert curve.squeezing_db[0] == pytest.approx(db(pair.squeezed), abs=1e-6)
        assert curve.antisqueezing_db[0] == pytest.approx(db(pair.antisqueezed), abs=1e-6)

    def test_cutoff_stability_forty_to_eighty(self, default_cfg, default_grid):
        from spopo.supermodes import build_kernel, decompose

        kernel = build_kernel(default_grid, default_cfg.pump.fwhm_nm,
                              default_cfg.model.phasematch_fwhm_nm)
        eta_hom = total_efficiency(default_cfg.detection)
        pump = make_pump(default_cfg)
        levels = {}
        for k_max in (41, 81):
            basis = decompose(kernel, k_max=k_max, gain_floor=0.0)
            lo = gaussian_lo(basis.grid, 1.0)
            proj = project_lo(lo, basis)
            pairs = per_mode_variances(basis, pump, default_cfg.cavity,
                                       default_cfg.model.analysis_freq_mhz)
            levels[k_max] = db(detected_variance(spopo_variance(0.0, proj, pairs), eta_hom))
        assert abs(levels[81] - levels[41]) < 0.01

    def test_scan_rejects_pump_at_threshold(self, scan_setup):
        cfg, basis, lo = scan_setup
        with pytest.raises(AboveThresholdError):
            scan_pump([0.5, 1.0], lo, basis, cfg.cavity, cfg.detection)
