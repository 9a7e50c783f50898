"""Cavity-derived quantities and the detection-efficiency budget."""

import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from spopo.cavity import (
    CavityParams,
    DetectionBudget,
    cavity_bandwidth_fwhm_mhz,
    escape_efficiency,
    finesse,
    free_spectral_range_mhz,
    gdd_residual_fs2,
    total_efficiency,
)
from spopo.errors import CavityModelError

efficiencies = st.floats(min_value=0.01, max_value=1.0, allow_nan=False)


class TestFreeSpectralRange:
    def test_reference_cavity_length(self):
        cavity = CavityParams(length_m=3.23)
        assert free_spectral_range_mhz(cavity) == pytest.approx(92.8150024767802, abs=1e-9)

    def test_three_meter_cavity_is_one_hundred_mhz(self):
        assert free_spectral_range_mhz(CavityParams(length_m=2.998)) == pytest.approx(
            100.0, rel=1e-3
        )

    def test_halving_length_doubles_fsr(self):
        full = free_spectral_range_mhz(CavityParams(length_m=3.0))
        half = free_spectral_range_mhz(CavityParams(length_m=1.5))
        assert half == pytest.approx(2.0 * full, rel=1e-12)


class TestFinesse:
    def test_measured_loss_budget(self, measured_cavity):
        # delta = 0.01 + 0.19 + 0.06 = 0.26
        assert finesse(measured_cavity) == pytest.approx(2 * math.pi / 0.26, rel=1e-12)
        assert finesse(measured_cavity) == pytest.approx(24.1, abs=0.1)

    def test_output_coupler_only(self):
        cavity = CavityParams(r_input=1.0, r_output=0.81, intracavity_loss=0.0)
        assert finesse(cavity) == pytest.approx(2 * math.pi / 0.19, rel=1e-12)

    def test_monotone_divergence_as_loss_vanishes(self):
        losses = [0.2, 0.1, 0.05, 0.01, 0.001]
        values = [
            finesse(CavityParams(r_input=1.0, r_output=1.0, intracavity_loss=d)) for d in losses
        ]
        assert all(b > a for a, b in zip(values, values[1:]))

    def test_lossless_cavity_rejected(self):
        with pytest.raises(CavityModelError):
            finesse(CavityParams(r_input=1.0, r_output=1.0, intracavity_loss=0.0))

    def test_overdamped_cavity_rejected(self):
        with pytest.raises(CavityModelError):
            finesse(CavityParams(r_input=0.5, r_output=0.3, intracavity_loss=0.5))


class TestBandwidth:
    def test_reference_linewidth(self, measured_cavity):
        assert cavity_bandwidth_fwhm_mhz(measured_cavity) == pytest.approx(3.84, abs=0.01)

    def test_finesse_times_bandwidth_is_fsr(self, measured_cavity):
        product = finesse(measured_cavity) * cavity_bandwidth_fwhm_mhz(measured_cavity)
        assert product == pytest.approx(free_spectral_range_mhz(measured_cavity), rel=1e-12)

    def test_detection_band_sits_inside_the_linewidth(self, measured_cavity):
        assert 0.6 < cavity_bandwidth_fwhm_mhz(measured_cavity) / 2.0

    def test_doubling_finesse_halves_bandwidth(self):
        narrow = CavityParams(r_input=1.0, r_output=1.0, intracavity_loss=0.1)
        wide = CavityParams(r_input=1.0, r_output=1.0, intracavity_loss=0.2)
        assert cavity_bandwidth_fwhm_mhz(wide) == pytest.approx(
            2.0 * cavity_bandwidth_fwhm_mhz(narrow), rel=1e-12
        )


class TestEscapeEfficiency:
    def test_measured_loss_budget(self, measured_cavity):
        assert escape_efficiency(measured_cavity) == pytest.approx(0.19 / 0.26, rel=1e-12)

    def test_unity_when_output_coupler_is_the_only_loss(self):
        cavity = CavityParams(r_input=1.0, r_output=0.81, intracavity_loss=0.0)
        assert escape_efficiency(cavity) == 1.0

    def test_strictly_decreasing_in_internal_loss(self):
        values = [
            escape_efficiency(CavityParams(intracavity_loss=d)) for d in (0.0, 0.02, 0.05, 0.1)
        ]
        assert all(b < a for a, b in zip(values, values[1:]))

    def test_bounded_by_unity(self):
        for loss in (0.0, 0.01, 0.3):
            cavity = CavityParams(intracavity_loss=loss)
            assert 0.0 < escape_efficiency(cavity) <= 1.0


class TestGddResidual:
    def test_compensated_budget_sums_to_zero(self):
        cavity = CavityParams(
            gdd_fs2=(("crystal", 850.0), ("air", 50.0), ("chirped_mirror", -900.0))
        )
        assert gdd_residual_fs2(cavity) == 0.0

    def test_empty_list_is_zero(self):
        assert gdd_residual_fs2(CavityParams(gdd_fs2=())) == 0.0

    def test_single_entry_is_identity(self):
        assert gdd_residual_fs2(CavityParams(gdd_fs2=(("crystal", 850.0),))) == 850.0

    def test_permutation_invariant(self):
        entries = [("a", 0.1), ("b", 1e16), ("c", -1e16), ("d", -0.3), ("e", 0.2)]
        base = gdd_residual_fs2(CavityParams(gdd_fs2=tuple(entries)))
        assert gdd_residual_fs2(CavityParams(gdd_fs2=tuple(reversed(entries)))) == base
        rotated = entries[2:] + entries[:2]
        assert gdd_residual_fs2(CavityParams(gdd_fs2=tuple(rotated))) == base


class TestDetectionBudget:
    def test_reference_budget(self):
        budget = DetectionBudget(eta_pd=0.87, eta_opt=0.99, visibility=0.947, eta_bkg=0.96)
        assert total_efficiency(budget) == pytest.approx(0.742, abs=0.002)
        assert total_efficiency(budget) == pytest.approx(0.7415247280319998, rel=1e-12)

    def test_perfect_chain_is_unity(self):
        assert total_efficiency(DetectionBudget(1.0, 1.0, 1.0, 1.0)) == 1.0

    def test_visibility_enters_squared(self):
        lossy = total_efficiency(DetectionBudget(1.0, 1.0, 0.94, 1.0))
        assert lossy == pytest.approx(0.94**2, rel=1e-12)

    @given(efficiencies, efficiencies, efficiencies, efficiencies)
    def test_total_never_exceeds_any_single_contribution(self, pd, opt, vis, bkg):
        budget = DetectionBudget(eta_pd=pd, eta_opt=opt, visibility=vis, eta_bkg=bkg)
        assert total_efficiency(budget) <= min(pd, opt, vis**2, bkg) + 1e-15

    def test_out_of_range_fields_rejected(self):
        with pytest.raises(ValueError):
            DetectionBudget(eta_pd=0.0)
        with pytest.raises(ValueError):
            DetectionBudget(visibility=1.2)
