"""
Coarse Ricci curvature: discrete vs continuous time
===================================================

Exact transport by linear programming on a Bernoulli-Laplace chain.
"""

import math

from curvlab.chain import build_generator
from curvlab.coarse import (compare_dc_cc, k_cc_inf, k_cc_p, neighbor_pairs, semigroup_kccp,
                            short_time_kernel, wasserstein_p)
from curvlab.models import bernoulli_laplace

import numpy as np

inst = bernoulli_laplace(4, 2)
L = build_generator(inst.chain)
x, y = neighbor_pairs(L)[0]
print("pair", (x, y))

for p in (1, 2):
    print(f"K_cc,{p} = {k_cc_p(L, x, y, p):.6f}   via semigroup: {semigroup_kccp(L, x, y, p):.6f}")
print("K_cc,inf =", k_cc_inf(L, x, y))

# discrete time on the uniformized kernel, rescaled by the rate
lam = float(-np.diag(L).min())
P = short_time_kernel(L, 1 / lam)
print(compare_dc_cc(P, lam, x, y, p=1))

# transport itself: a point mass against a split mass on a path
d = np.array([[0, 1, 2], [1, 0, 1], [2, 1, 0]], float)
res = wasserstein_p([1, 0, 0], [0, 0.5, 0.5], d, p=1)
print("W_1 =", res.value, "dual gap", res.dual_gap)
print("W_2 =", wasserstein_p([1, 0, 0], [0, 0.5, 0.5], d, p=2).value, "vs", math.sqrt(2.5))
