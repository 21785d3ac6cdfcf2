"""
Error at the frame edges
========================

A hexagonal cell flow is not periodic on the frame, so a periodic
Fourier fit cannot match it at the edges.  The error is confined to a
strip about half a wavelength of the highest mode wide.
"""

import numpy as np

from specflow.experiments import gibbs

r = gibbs(n_modes=8, wavelength=80.0)
profile = np.array(r["profile"])

print(f"edge peak {r['edge_peak']:.4f} px/frame, "
      f"peak beyond {r['distance']:.0f} px {r['interior_peak']:.4f} (ratio {r['ratio']:.2f})")

# a coarse text plot of |v_true - v_fit| along the middle row
scale = 50 / profile.max()
for x in range(0, profile.size, 8):
    print(f"{x:4d} {'#' * int(round(profile[x] * scale))}")
