"""How forecast error scales with the offset k and the order m on a smooth signal.

Run: python3 demos/error_bounds.py
"""

import numpy as np

from featcast import AnalyticTrajectory, verify_error_bound

# 32 sines with spread phases, so no single anchor is special.
traj = AnalyticTrajectory.sinusoid(phase=2 * np.pi * np.arange(32) / 32, shape=(32,))

print(" N     m   k      error        bound        ok")
for n in (0.5, 0.1):
    for m in (0, 1, 2, 3):
        for frac in (0.25, 0.75):
            r = verify_error_bound(traj, n, m, frac * n)
            print(f"{n:<5} {m:>2} {frac * n:5.3f}  {r.empirical_error:.4e}  {r.bound_value:.4e}  {r.satisfied}")

# Doubling the offset multiplies the error by roughly 2**(m+1) once the leading term dominates.
for m in (1, 2):
    e1 = verify_error_bound(traj, 0.1, m, 1.0).empirical_error
    e2 = verify_error_bound(traj, 0.1, m, 2.0).empirical_error
    print(f"m={m}: error(k=2)/error(k=1) = {e2 / e1:.2f}")
