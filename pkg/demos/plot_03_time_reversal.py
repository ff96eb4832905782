"""
Running the clock backwards
===========================

Halfway through, flip the sign of kappa.  The noise keeps going forward, but
the ensemble should still come back to the initial coherent state.  The
control run skips the flip and stays collapsed.
"""

import os

from gaugekerr import ExperimentConfig
from gaugekerr.harness import run_reversal

traj = int(os.environ.get("GAUGEKERR_DEMO_TRAJ", 2000))
cfg = ExperimentConfig(trajectories=traj, dt_tau=5e-4, record_every=200)

for negate in (True, False):
    rec = run_reversal(cfg, negate=negate)
    res = rec.metadata["result"]
    label = "reversed" if negate else "control "
    zs = "  ".join(f"{k}: z={c['z']:+.1f}" for k, c in res["checks"].items())
    print(f"{label}  {zs}  -> {res['verdict']}")
