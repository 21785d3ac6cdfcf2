"""
Noise and the number of modes
=============================

With noisy data, more modes buy resolution at the cost of fitting noise.
The cube is scaled so that the RMS time derivative is 700 counts, then
Gaussian noise of increasing strength is added.
"""

from specflow import add_gaussian_noise, compare_fields, estimate
from specflow.experiments import noisy_base
from specflow.metrics import chi_rms

cube, truth = noisy_base(chi0_target=700.0)
print(f"RMS(I_t) at v = 0: {chi_rms(cube):.1f} counts/frame")

print("\nsigma   error (n=4)")
for sigma in (0, 100, 200, 400):
    fit, _ = estimate(add_gaussian_noise(cube, sigma, seed=5), 4)
    print(f"{sigma:5d}   {compare_fields(fit, truth, 32).relative_error:.2%}")

# fixed noisy data, growing truncation: the truth only needs n = 4
noisy = add_gaussian_noise(cube, 400, seed=5)
print("\nmodes   error (sigma=400)")
for n in (4, 8, 16):
    fit, _ = estimate(noisy, n)
    print(f"{n:5d}   {compare_fields(fit, truth, 32).relative_error:.2%}")
