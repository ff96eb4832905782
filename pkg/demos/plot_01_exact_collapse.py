"""
Exact collapse and revival
==========================

The Kerr oscillator has a closed-form mean amplitude.  Here we print it on a
coarse grid and check it against the brute-force number-basis sum.
"""

import math

import numpy as np

from gaugekerr.oracle import closed_form_mean_a, fock_coherent, fock_evolve_mean_a, timescales

n_bar = 100.0
ts = timescales(n_bar)
print(f"n_bar={n_bar:g}: oscillation {ts.tau_osc:g}, collapse {ts.tau_coll:g}, revival {ts.tau_rev:g} (tau units)")

# tau -> kappa t with kappa = 1
tau = np.linspace(0, 1, 11)
kt = 2 * math.pi * tau / math.sqrt(n_bar)
a = closed_form_mean_a(n_bar, 1.0, kt)

state = fock_coherent(n_bar)
for t, k, val in zip(tau, kt, a):
    ref = fock_evolve_mean_a(state, 1.0, k)
    print(f"tau={t:4.1f}  |<a>|={abs(val):10.3e}   number basis differs by {abs(val - ref):.1e}")

# the revival: everything comes back at kappa t = 2 pi
print("revival:", closed_form_mean_a(n_bar, 1.0, 2 * math.pi))
