"""
A mole of photons
=================

At n_bar = 6e23 the lab-frame phase spins far too fast to follow, so the run
uses the rotating frame and the adaptive gauge.  The envelope collapses like
exp(-2 pi^2 tau^2) and comes back after the reversal.
"""

import math
import os
from dataclasses import replace

from gaugekerr.harness import PRESETS, run_avogadro

traj = int(os.environ.get("GAUGEKERR_DEMO_TRAJ", 5000))
cfg = replace(PRESETS["mole"], trajectories=traj, record_every=100)
rec = run_avogadro(cfg)
root = math.sqrt(cfg.n_bar)

print(f"gauge at tau=0: {rec.metadata['gauge_at_tau0']:.3f}")
for row, exact in zip(rec.rows, rec.metadata["oracle"]["exact"]):
    print(f"tau={row['tau']:.1f}  |<a>|/sqrt(n)={row['env_mean'] / root:7.4f} +/- {row['env_err'] / root:.4f}"
          f"   exact {exact / root:.4f}")
print(rec.metadata["result"]["verdict"], f"healthy fraction {rec.metadata['healthy_fraction']:.3f}")
