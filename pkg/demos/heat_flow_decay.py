"""
Entropy decay and Wasserstein contraction along the heat flow
=============================================================
"""

import numpy as np

from curvlab import log_mean, phi_alpha
from curvlab.heatflow import entropy_decay_check, heat_flow, wasserstein_contraction_check
from curvlab.models import hardcore

inst = hardcore([(0, 1), (1, 2)], 0.4)  # hardcore gas on a 3-site path
chain = inst.chain
rng = np.random.default_rng(1)
rho0 = rng.dirichlet(np.ones(chain.n)) / chain.measure

times = np.linspace(0, 2, 9)
trace = heat_flow(chain, rho0, times, phi_alpha(1.0), p=1)
for t, h, w in zip(trace.times, trace.entropies, trace.wasserstein):
    print(f"t={t:.2f}  H={h:.5f}  W_1={w:.5f}")

K = inst.theorem_K(log_mean())
print("decay at 2K:", entropy_decay_check(chain, phi_alpha(1.0), 2 * K, rho0, times[1:]))
print("contraction at coarse bound:",
      wasserstein_contraction_check(chain, 1, inst.coarse_bound, times=(0.1, 0.5, 1.0)))
