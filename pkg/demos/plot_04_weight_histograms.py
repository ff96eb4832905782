"""
Where the weight goes
=====================

The reversed ensemble reproduces the initial moments, but the trajectories
themselves do not return.  log10|alpha Omega| starts as a delta function and
keeps spreading out.
"""

import os

from gaugekerr import ExperimentConfig
from gaugekerr.harness import run_histograms

traj = int(os.environ.get("GAUGEKERR_DEMO_TRAJ", 2000))
cfg = ExperimentConfig(trajectories=traj, dt_tau=5e-4)
out = run_histograms(cfg, [0.0, 0.5, 1.0])

for protocol, snaps in out.items():
    print(protocol)
    for tau, hist, _ in snaps:
        occ = hist.occupied()
        lo, hi = hist.bin_edges[occ[0]], hist.bin_edges[occ[-1] + 1]
        print(f"  tau={tau:.1f}: {len(occ):4d} bins, log10|alpha Omega| in [{lo:.1f}, {hi:.1f}]")

# crude text plot of the final reversed histogram
_, hist, _ = out["reversed"][-1]
step = max(1, len(hist.counts) // 30)
for i in range(0, len(hist.counts), step):
    c = hist.counts[i:i + step].sum()
    print(f"{hist.bin_edges[i]:6.1f} {'#' * int(60 * c / traj)}")
