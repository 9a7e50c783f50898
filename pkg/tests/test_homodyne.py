"""Trace synthesis, windowed variance estimation, extrema, and file format."""

import math
from dataclasses import replace

import numpy as np
import pytest

from spopo.cavity import DetectionBudget, total_efficiency
from spopo.errors import TraceFormatError
from spopo.homodyne import (
    AcquisitionSpec,
    HomodyneTrace,
    TRACE_MAGIC,
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
from spopo.squeezing import detected_variance
from spopo.states import PhaseScanModel, SqueezedThermalState, VarianceCurve, st_variance

REF_STATE = SqueezedThermalState(n_th=0.20, r=0.83)
FULL_SPEC = AcquisitionSpec()  # 2e6 samples at 20 MSa/s, 2e4-sample window
SMALL_SPEC = AcquisitionSpec(n_samples=100_000, window=1_000, rng_seed=17)


def vacuum_model(theta):
    return np.ones_like(np.asarray(theta, dtype=float))


class TestSynthesis:
    def test_fixed_seed_is_bit_identical(self):
        scan = PhaseScanModel(alpha=1e-2)
        a = synthesize_trace(lambda t: st_variance(REF_STATE, t), scan, SMALL_SPEC)
        b = synthesize_trace(lambda t: st_variance(REF_STATE, t), scan, SMALL_SPEC)
        assert np.array_equal(a.samples, b.samples)

    def test_vacuum_trace_variance_within_statistical_bound(self):
        # sd of a variance estimate is sqrt(2/n); 3 sigma at n = 2e6 is 0.3%
        trace = synthesize_trace(vacuum_model, PhaseScanModel(), FULL_SPEC)
        assert streaming_variance(trace.samples) == pytest.approx(1.0, abs=3e-3)

    def test_different_seeds_are_uncorrelated(self):
        a = synthesize_trace(vacuum_model, PhaseScanModel(), SMALL_SPEC)
        b = synthesize_trace(vacuum_model, PhaseScanModel(), replace(SMALL_SPEC, rng_seed=18))
        corr = np.corrcoef(a.samples.astype(float), b.samples.astype(float))[0, 1]
        assert abs(corr) < 3.0 / math.sqrt(SMALL_SPEC.n_samples)

    def test_vacuum_companion_seed_is_deterministic_and_distinct(self):
        assert vacuum_seed_for(7) == vacuum_seed_for(7)
        assert vacuum_seed_for(7) != 7
        assert 0 <= vacuum_seed_for((1 << 64) - 1) < (1 << 64)

    def test_non_positive_model_rejected(self):
        with pytest.raises(ValueError, match="positive"):
            synthesize_trace(lambda t: np.zeros_like(t), PhaseScanModel(), SMALL_SPEC)

    def test_shot_noise_trace_records_its_own_calibration(self):
        vac = shot_noise_trace(SMALL_SPEC)
        assert vac.shot_calibration == pytest.approx(
            streaming_variance(vac.samples), rel=1e-12
        )


class TestStreamingVariance:
    def test_matches_numpy_on_random_data(self):
        x = np.random.default_rng(0).normal(5.0, 2.0, 30_001)
        assert streaming_variance(x) == pytest.approx(np.var(x, ddof=1), rel=1e-12)

    def test_stable_under_huge_offset(self):
        # the naive sum-of-squares formula loses all precision here
        rng = np.random.default_rng(1)
        x = rng.standard_normal(100_000) + 1e8
        assert streaming_variance(x) == pytest.approx(np.var(x, ddof=1), rel=1e-9)

    def test_constant_input_gives_zero(self):
        assert streaming_variance(np.full(5_000, 3.7)) == 0.0


class TestMovingVariance:
    def test_constant_trace_gives_zero_everywhere(self):
        spec = AcquisitionSpec(n_samples=10_000, window=500, rng_seed=1)
        trace = HomodyneTrace(spec=spec, samples=np.full(10_000, 2.5, dtype=np.float32))
        curve = moving_variance(trace)
        assert np.all(curve.variances == 0.0)

    def test_unit_gaussian_points_scatter_as_expected(self):
        # per-window sd is sqrt(2/(window-1)) ~ 1%; all 100 points should sit
        # within ~5 sigma and their scatter should match the prediction
        trace = synthesize_trace(vacuum_model, PhaseScanModel(), FULL_SPEC)
        curve = moving_variance(trace)
        assert curve.thetas.size == 100
        assert np.abs(curve.variances - 1.0).max() < 0.05
        assert 0.0077 < np.std(curve.variances, ddof=1) < 0.0123

    def test_normalization_by_shot_calibration(self):
        trace = synthesize_trace(vacuum_model, PhaseScanModel(), SMALL_SPEC)
        scaled = HomodyneTrace(
            spec=SMALL_SPEC, samples=2.0 * trace.samples, shot_calibration=4.0
        )
        raw = moving_variance(trace, normalize=False)
        normalized = moving_variance(scaled)
        np.testing.assert_allclose(normalized.variances, raw.variances, rtol=1e-12)

    def test_common_scale_cancels_exactly(self):
        trace = synthesize_trace(vacuum_model, PhaseScanModel(), SMALL_SPEC)
        base = replace(trace, shot_calibration=1.1)
        scaled = HomodyneTrace(
            spec=SMALL_SPEC, samples=8.0 * trace.samples, shot_calibration=8.0**2 * 1.1
        )
        np.testing.assert_allclose(
            moving_variance(scaled).variances, moving_variance(base).variances, rtol=1e-12
        )

    def test_normalization_without_calibration_rejected(self):
        trace = synthesize_trace(vacuum_model, PhaseScanModel(), SMALL_SPEC)
        with pytest.raises(ValueError, match="calibration"):
            moving_variance(trace, normalize=True)

    def test_overlapping_stride_doubles_point_count(self):
        trace = synthesize_trace(vacuum_model, PhaseScanModel(), SMALL_SPEC)
        full = moving_variance(trace)
        dense = moving_variance(trace, stride=SMALL_SPEC.window // 2)
        assert dense.thetas.size == 2 * full.thetas.size - 1
        np.testing.assert_allclose(dense.variances[::2], full.variances, rtol=1e-12)

    def test_thetas_are_window_centers(self):
        spec = AcquisitionSpec(n_samples=8_000, window=2_000, rng_seed=2)
        trace = synthesize_trace(vacuum_model, PhaseScanModel(), spec)
        curve = moving_variance(trace)
        expected = spec.scan_span * (np.arange(4) * 2_000 + 999.5) / 8_000
        np.testing.assert_allclose(curve.thetas, expected, rtol=1e-12)


class TestExtrema:
    def test_noiseless_model_curve_recovers_exact_levels(self):
        thetas = np.linspace(0.0, 2 * math.pi, 200, endpoint=False)
        curve = VarianceCurve(thetas=thetas, variances=st_variance(REF_STATE, thetas))
        ex = extract_extrema(curve)
        assert ex.squeezing_db == pytest.approx(-5.748, abs=0.01)
        assert ex.antisqueezing_db == pytest.approx(8.671, abs=0.01)
        assert min(abs(ex.theta_min % math.pi), math.pi - abs(ex.theta_min % math.pi)) < 0.05

    def test_reversal_leaves_levels_unchanged(self):
        # an inclusive-endpoint grid maps onto itself under theta -> span - theta
        thetas = np.linspace(0.0, 2 * math.pi, 151)
        values = st_variance(REF_STATE, thetas + 0.4)
        fwd = extract_extrema(VarianceCurve(thetas=thetas, variances=values))
        rev = extract_extrema(VarianceCurve(thetas=thetas, variances=values[::-1]))
        assert rev.squeezing_db == pytest.approx(fwd.squeezing_db, abs=1e-6)
        assert rev.antisqueezing_db == pytest.approx(fwd.antisqueezing_db, abs=1e-6)

    def test_vacuum_curve_sits_near_zero_db(self):
        # the minimum of 100 windowed estimates (sd 1% each, 3-point median
        # smoothed, parabola refined) has expectation about -0.07 dB with
        # spread ~0.02 dB; 0.15 dB is a conservative statistical envelope
        vac = shot_noise_trace(FULL_SPEC)
        trace = replace(vac, shot_calibration=vac.shot_calibration)
        ex = extract_extrema(moving_variance(trace))
        assert abs(ex.squeezing_db) < 0.15
        assert abs(ex.antisqueezing_db) < 0.15

    def test_short_span_rejected(self):
        thetas = np.linspace(0.0, 2.0, 60)
        curve = VarianceCurve(thetas=thetas, variances=np.ones(60) * 1.1)
        with pytest.raises(ValueError, match="pi-period"):
            extract_extrema(curve)


class TestEndToEnd:
    def test_detected_levels_recovered_within_a_fifth_of_a_db(self):
        budget = DetectionBudget()
        eta = total_efficiency(budget)
        model = lambda t: detected_variance(st_variance(REF_STATE, t), eta)
        scan = PhaseScanModel(alpha=1.25e-2)
        trace = synthesize_trace(model, scan, FULL_SPEC)
        vacuum = shot_noise_trace(replace(FULL_SPEC, rng_seed=vacuum_seed_for(FULL_SPEC.rng_seed)))
        trace = replace(trace, shot_calibration=vacuum.shot_calibration)
        ex = extract_extrema(moving_variance(trace))
        assert ex.squeezing_db == pytest.approx(10 * math.log10(model(0.0)), abs=0.2)
        assert ex.antisqueezing_db == pytest.approx(
            10 * math.log10(model(math.pi / 2)), abs=0.2
        )


class TestTraceFile:
    def test_round_trip_is_bit_exact(self, tmp_path):
        trace = synthesize_trace(vacuum_model, PhaseScanModel(alpha=2e-3), SMALL_SPEC)
        trace = replace(trace, shot_calibration=1.003)
        path = tmp_path / "trace.spopotrc"
        write_trace(trace, path)
        loaded = read_trace(path)
        assert loaded.spec == trace.spec
        assert loaded.scan_alpha == trace.scan_alpha
        assert loaded.shot_calibration == trace.shot_calibration
        assert np.array_equal(loaded.samples, trace.samples)
        second = tmp_path / "again.spopotrc"
        write_trace(loaded, second)
        assert path.read_bytes() == second.read_bytes()

    def test_header_starts_with_magic(self, tmp_path):
        trace = synthesize_trace(vacuum_model, PhaseScanModel(), SMALL_SPEC)
        path = tmp_path / "t.spopotrc"
        write_trace(trace, path)
        assert path.read_bytes()[:8] == TRACE_MAGIC

    def test_missing_calibration_round_trips_as_none(self, tmp_path):
        trace = synthesize_trace(vacuum_model, PhaseScanModel(), SMALL_SPEC)
        path = tmp_path / "t.spopotrc"
        write_trace(trace, path)
        assert read_trace(path).shot_calibration is None

    def test_truncated_file_reports_offset(self, tmp_path):
        path = tmp_path / "short.spopotrc"
        path.write_bytes(b"SPOPOTRC" + b"\0" * 10)
        with pytest.raises(TraceFormatError) as err:
            read_trace(path)
        assert err.value.byte_offset == 18

    def test_bad_magic_reports_offset_zero(self, tmp_path):
        trace = synthesize_trace(vacuum_model, PhaseScanModel(), SMALL_SPEC)
        path = tmp_path / "t.spopotrc"
        write_trace(trace, path)
        data = bytearray(path.read_bytes())
        data[:8] = b"NOTATRCE"
        path.write_bytes(bytes(data))
        with pytest.raises(TraceFormatError) as err:
            read_trace(path)
        assert err.value.byte_offset == 0

    def test_payload_size_mismatch_detected(self, tmp_path):
        trace = synthesize_trace(vacuum_model, PhaseScanModel(), SMALL_SPEC)
        path = tmp_path / "t.spopotrc"
        write_trace(trace, path)
        path.write_bytes(path.read_bytes()[:-4])
        with pytest.raises(TraceFormatError, match="holds"):
            read_trace(path)

    def test_csv_export_shape(self, tmp_path):
        spec = AcquisitionSpec(n_samples=50, window=10, rng_seed=3)
        trace = synthesize_trace(vacuum_model, PhaseScanModel(), spec)
        path = tmp_path / "t.csv"
        trace_to_csv(trace, path)
        lines = path.read_text().strip().splitlines()
        assert lines[0] == "time_s,sample"
        assert len(lines) == 51
        t1 = float(lines[2].split(",")[0])
        assert t1 == pytest.approx(1.0 / spec.sample_rate, rel=1e-9)
