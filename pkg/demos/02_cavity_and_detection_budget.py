#!/usr/bin/env python3
"""Cavity numbers and the homodyne efficiency chain.

A 3.23 m ring cavity is synchronous with a 93 MHz pulse train; with a 99%
input coupler, 81% output coupler, and 6% internal loss its finesse comes
out near 24 and its linewidth near 3.9 MHz.  The detection chain multiplies
four efficiencies into eta_hom ~ 0.74, which maps squeezing levels between
the source output and the detector.
"""

from spopo import (
    CavityParams,
    DetectionBudget,
    cavity_bandwidth_fwhm_mhz,
    db,
    db_inv,
    detected_variance,
    escape_efficiency,
    finesse,
    free_spectral_range_mhz,
    gdd_residual_fs2,
    infer_output_variance,
    total_efficiency,
)

cavity = CavityParams(
    length_m=3.23,
    r_input=0.99,
    r_output=0.81,
    intracavity_loss=0.06,
    gdd_fs2=(("crystal", 850.0), ("air", 50.0), ("chirped_mirror", -900.0)),
)

print("cavity")
print(f"  free spectral range   = {free_spectral_range_mhz(cavity):8.3f} MHz")
print(f"  finesse               = {finesse(cavity):8.3f}")
print(f"  linewidth (FWHM)      = {cavity_bandwidth_fwhm_mhz(cavity):8.3f} MHz")
print(f"  escape efficiency     = {escape_efficiency(cavity):8.4f}")
print(f"  residual dispersion   = {gdd_residual_fs2(cavity):8.1f} fs^2")

budget = DetectionBudget(eta_pd=0.87, eta_opt=0.99, visibility=0.947, eta_bkg=0.96)
eta = total_efficiency(budget)
print("\ndetection chain")
print(f"  photodiodes           = {budget.eta_pd:.3f}")
print(f"  optical path          = {budget.eta_opt:.3f}")
print(f"  visibility (squared)  = {budget.visibility:.3f} ({budget.visibility**2:.4f})")
print(f"  background            = {budget.eta_bkg:.3f}")
print(f"  total eta_hom         = {eta:.4f}")

print("\nsource output -> detected mapping")
for out_db in (-2.0, -4.0, -5.7, -8.0):
    det = db(detected_variance(db_inv(out_db), eta))
    print(f"  {out_db:+5.1f} dB at the source  ->  {det:+6.2f} dB detected")

det_db = -3.3
inferred = db(infer_output_variance(db_inv(det_db), eta))
print(f"\nmeasuring {det_db:+.1f} dB implies {inferred:+.2f} dB at the source output")
