"""Renyi differences across alpha and their limits at alpha -> 1 and alpha -> infinity.

Run with ``python3 demos/alpha_limits.py``.
"""

import numpy as np

from recoverability.verify import DEFAULT_ALPHAS, build_instance, check_limits

rng = np.random.default_rng(7)
inst = build_instance("dilated", None, rng)
rep = check_limits(inst, DEFAULT_ALPHAS + (1000.0, 10000.0))

print(f"{'alpha':>8s}  {'Delta~_alpha':>14s}")
for a, v in zip(rep.alphas, rep.values):
    print(f"{a:8g}  {v:14.9f}")
print(f"Delta                       {rep.delta:.9f}")
print(f"Richardson estimate at 1    {rep.extrapolated:.9f} (error {rep.limit_error:.1e})")
print(f"-ln F at alpha 1/2 mismatch {rep.half_identity_error:.1e}")
print(f"D_max(rho || R(N(rho)))     {rep.dmax:.9f}")
print(f"largest alpha {rep.dmax_alpha:g}: error {rep.dmax_error:.2e}")
print(f"1/alpha-eliminated estimate {rep.dmax_extrapolated:.9f}")

# the gap to D_max shrinks like c / alpha
for a in (20.0, 200.0, 1000.0, 10000.0):
    gap = rep.dmax - rep.values[rep.alphas.index(a)]
    print(f"alpha={a:7g}  gap={gap:.4e}  alpha*gap={a * gap:.4f}")
