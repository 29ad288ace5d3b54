"""
Tracking a lunar halo orbit
===========================

Truth follows a halo orbit with a maneuver at every apolune to stay on
it. Each orbit brings one range, range-rate and angles measurement taken
from the lunar north pole at perilune. Maneuvers are unknown to the
filters, which cover them with process noise.
"""

import numpy as np

from filterlab.harness import NrhoExperiment, run_nrho_experiment

cfg = NrhoExperiment(orbits=3, trials=1, particles=30, initial="halo")
res = run_nrho_experiment(cfg)

tr = res.truth
print("perilune epochs (days):", np.round(tr.epochs / 86400, 3))
print("perilune radius (km):  ", np.round(np.linalg.norm(tr.states[:, :3], axis=1) / 1e3, 1))
print("maneuvers (m/s):       ", [float(np.linalg.norm(dv)) for _, dv in tr.maneuvers])

for name, errs in res.errors.items():
    print(f"{name:9s} position error per epoch (m): {np.round(errs[0, :, 0], 2)}")
print("\n".join(res.events) or "no divergence events")
