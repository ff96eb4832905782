"""
A forward gauge-P run
=====================

Evolve a coherent state with stochastic trajectories and compare the
ensemble quadrature with the exact curve.  Small by default; set
GAUGEKERR_DEMO_TRAJ to go bigger.
"""

import os

from gaugekerr import ExperimentConfig
from gaugekerr.harness import oracle_agreement, simulate

traj = int(os.environ.get("GAUGEKERR_DEMO_TRAJ", 2000))
cfg = ExperimentConfig(trajectories=traj, dt_tau=5e-4, record_every=100)

_, record = simulate(cfg)
agree = oracle_agreement(record, cfg)
for row, exact in zip(record.rows, agree["exact"]):
    print(f"tau={row['tau']:.2f}  X={row['X_mean']:8.3f} +/- {row['X_err']:.3f}   exact {exact:8.3f}")
print(f"{agree['fraction_within_3sigma']:.0%} within 3 sigma")
