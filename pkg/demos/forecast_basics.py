"""Forecasting a feature from cached finite differences.

Run: python3 demos/forecast_basics.py
"""

import numpy as np

from featcast import TaylorCache, binomial_difference, linear_predict

# A scalar feature sampled every N=2 steps while the sampler walks t downward.
f = lambda t: 0.5 * t**2 - t + 3.0
n = 2
cache = TaylorCache(order_m=2, interval_n=n)
for t in (4.0, 2.0, 0.0):
    cache.update([f(t)], t)

print("cached differences:", [float(d.data[0]) for d in cache.diffs])
history = [[f(4.0)], [f(2.0)], [f(0.0)]]  # oldest first
print("same via binomial sums:", [float(binomial_difference(history[2 - i:], i).data[0]) for i in range(3)])

# Forecast k steps past the last activation (the feature at t - k).
for k in (1, 2):
    taylor = float(cache.predict(k).data[0])
    newton = float(cache.predict(k, form="newton").data[0])
    print(f"k={k}: truth {f(-k):.4f}  taylor {taylor:.4f}  newton {newton:.4f}")

# Order 1 is plain linear extrapolation, bit for bit.
c1 = TaylorCache(1, n).update([f(2.0)], 2.0).update([f(0.0)], 0.0)
print("order 1 == linear formula:", c1.predict(1) == linear_predict([f(0.0)], [f(2.0)], n, 1))

# Order 0 just reuses the last feature.
c0 = TaylorCache(0, n).update(np.array([1.5]), 0.0)
print("order 0 reuse:", float(c0.predict(3).data[0]))
