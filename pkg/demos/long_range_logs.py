"""
A 1/|x| tail and its logarithms
===============================

For ``V11 = 1/(1 + |x|)`` the binding energy behaves like
``2 m eps^2 log^2 eps`` only in a very slow sense.  The ratio of the
computed binding energy to that law stays near 1/4 for every eps a desk
computation can reach; the gap is a log-log correction, since
``kappa ~ 2 m eps log(1/kappa)`` rather than ``2 m eps |log eps|``.

Run: ``python3 demos/long_range_logs.py`` (about 30 s).
"""

import math

import numpy as np

from gapspectra import GridSpec, make_builtin, schrodinger_ground_state, solve_minmax

m = 1.0
V = make_builtin("coulomb_tail")


def v11(x):
    return 1.0 / (1.0 + np.abs(x))


def self_consistent_kappa(eps, steps=60):
    """Fixed point of ``kappa = 2 m eps log(1/kappa)``."""
    k = eps
    for _ in range(steps):
        k = 2 * m * eps * math.log(1 / k)
    return k


# %%
# Min-max level, Schrodinger comparison and the crude law.
print(f"{'eps':>6} {'gamma1':>12} {'lambdaS':>13} {'ratio':>7} {'self-consistent':>16}")
for eps in (0.05, 0.02, 0.01):
    g1 = solve_minmax(V, m, eps, GridSpec(2000.0, 300)).gamma1
    lam = schrodinger_ground_state(v11, m, eps, GridSpec(2000.0, 400000), breakpoints=(0.0,))
    law = 2 * m * eps**2 * math.log(eps) ** 2
    kappa = self_consistent_kappa(eps)
    print(f"{eps:6.3f} {g1:12.9f} {lam:13.6e} {(m - g1) / law:7.4f} "
          f"{kappa**2 / (2 * m) / law:16.4f}")

# %%
# The crude model misses an O(1) constant inside the logarithm, but it drifts
# the same way and shows how slowly the ratio approaches 1.
for eps in (1e-4, 1e-8, 1e-16, 1e-32, 1e-64):
    kappa = self_consistent_kappa(eps)
    print(f"eps = {eps:.0e}: ratio ~ {kappa**2 / (4 * m * m * eps**2 * math.log(eps) ** 2):.3f}")
