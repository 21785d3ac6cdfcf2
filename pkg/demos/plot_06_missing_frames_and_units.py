"""
Gaps, intensity gradients and physical units
============================================

Dropped frames are flagged and the pairs that touch them are skipped.
A smooth intensity ramp across the frame (like limb darkening) only
reweights the fit.  Speeds are converted to km/s at the end.
"""

from specflow import apply_gradient, compare_fields, estimate, mark_missing
from specflow.cube import blank_missing, ramp_profile
from specflow.experiments import advected_cube
from specflow.metrics import speed_histogram

cube, truth = advected_cube(frames=40, substeps=1)
full, _ = estimate(cube, 4)

gappy = blank_missing(mark_missing(cube, [7, 19, 31]))
skipped, _ = estimate(gappy, 4, missing="skip")
raw, _ = estimate(gappy, 4, missing="include")
print(f"3 of 40 frames blank, skipped: change {compare_fields(skipped, full, 32).relative_error:.1e}")
print(f"3 of 40 frames blank, used as data: change {compare_fields(raw, full, 32).relative_error:.1%}")

ramped, _ = estimate(apply_gradient(cube, ramp_profile(256, 256, 0.5, 1.5)), 4)
print(f"+-50% intensity ramp: error {compare_fields(ramped, truth, 32).relative_error:.3%} "
      f"vs {compare_fields(full, truth, 32).relative_error:.3%} without")

# 0.16 arcsec pixels on the Sun (~116 km) every 30 s
km_per_ppf = 116.0 / 30.0
h = speed_histogram(full, bin_width=0.05, unit_scale=km_per_ppf, exclude_border=32)
print("speeds (km/s): rms {rms_speed:.3f}, median {median_speed:.3f}, max {max_speed:.3f}".format(**h.summary()))
