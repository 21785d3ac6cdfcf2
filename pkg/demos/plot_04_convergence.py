"""
Averaging down oscillations
===========================

Intensity oscillations that do not move with the flow bias short
estimates.  Longer windows average them out.  Here two plane waves
running in opposite directions (10% of the texture RMS) are added to
an advected cube, and estimates from windows of N frames are compared
with the estimate from the final 40 frames.
"""

import numpy as np

from specflow.experiments import convergence

r = convergence()
for n, d in zip(r["windows"], r["distance"]):
    print(f"N = {n:2d}: RMS distance to reference {d:.2e} px/frame")
print(f"log-log slope {r['slope']:.2f}  (1/sqrt(N) is -0.5, 1/N is -1)")
