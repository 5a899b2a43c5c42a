"""How the reflection-state distribution changes with rho.

At rho = 0 the node spreads probability over states that the energy detector
can tell apart.  As rho grows it shifts mass toward the state that helps the
primary link most, and at rho = 1 it collapses onto that single state.

    python demos/distribution.py
"""
import numpy as np

from riscatter.config import ExperimentConfig
from riscatter.experiments import realization_channels
from riscatter.region import rate_region

cfg = ExperimentConfig(n_antennas=1, n_nodes=1, order=4, spreading=100, seed=3)
rhos = (0.0, 0.25, 0.5, 0.75, 0.9, 1.0)
res = rate_region(realization_channels(cfg, 0), cfg, rhos)

np.set_printoptions(precision=3, suppress=True)
for p in res.points:
    print(f"rho={p.rho:4.2f}  p={p.state.dists[0]}")
