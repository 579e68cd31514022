"""Lower and upper bounds on random instances, with the witness rotation recorded.

Run with ``python3 demos/bounds_campaign.py``.
"""

import numpy as np

from recoverability.verify import TSearchConfig, check_lower, check_upper, run_trial

cfg = TSearchConfig(t_range=10.0, coarse_points=401)

for case in ("generic", "ssa", "holevo", "sequential"):
    reps = [run_trial(case, seed=1, trial=k, cfg=cfg)[1] for k in range(20)]
    verdicts = [r.verdict for r in reps]
    slack = min(r.deficit for r in reps)
    t0 = sum(bool(r.details.get("t0_witness")) for r in reps)
    print(f"{case:10s} pass={verdicts.count('pass'):2d}/20 min deficit={slack:.3e} t=0 witness={t0}/20")

# one positive definite instance with a unitary dilation: both sides of Delta
inst, rep = run_trial("dilated", seed=1, trial=0, cfg=cfg)
low = check_lower(inst, cfg)
up = check_upper(inst, cfg)
print(f"dilated: -ln F = {low.bound:.6f} <= Delta = {up.delta:.6f} <= D_max = {up.bound:.6f}")

# the objective along t for the lower bound
ts, vals = np.array(low.samples).T
print(f"fidelity over t in [-10, 10]: min {vals.min():.6f}, max {vals.max():.6f} at t={low.witness_t:.4f}")
