"""
Square well: one eigenvalue, three solvers
==========================================

``V = diag(1, 0)`` on ``[-1/2, 1/2]`` pulls a single eigenvalue out of the
upper threshold.  We locate it with the Birman-Schwinger characteristic
function, the staggered grid and the min-max levels, then compare with the
three-term expansion.

Run: ``python3 demos/square_well_three_ways.py`` (about 15 s).
"""

from gapspectra import (GridSpec, compute_moments, dirac_eigen_in_gap, find_bound_state,
                        make_builtin, predict_dirac_second_order, solve_minmax)

m = 1.0
V = make_builtin("square_well", [1.0])
mom = compute_moments(V, m)
print("U11 =", mom.U[0, 0].real, "  L11 =", mom.limit_plus[0, 0].real)

# %%
# Each row: the three solvers and the distance of the BS root from the
# two- and three-term expansions.  The last two columns shrink like eps^3
# and eps^4.
print(f"{'eps':>6} {'z_BS':>14} {'grid-BS':>10} {'minmax-BS':>10} {'r2':>10} {'r3':>10}")
for eps in (0.2, 0.1, 0.05):
    z_bs = find_bound_state(V, m, eps).z.real
    z_grid = dirac_eigen_in_gap(V, m, eps, GridSpec(200.0, 40000), window=(0.0, m - 1e-9))[0].z.real
    g1 = solve_minmax(V, m, eps, GridSpec(200.0, 200)).gamma1
    p = predict_dirac_second_order(mom, m, eps)
    r2 = abs(z_bs - p.evaluate(max_power=2).real)
    r3 = abs(z_bs - p.value.real)
    print(f"{eps:6.3f} {z_bs:14.10f} {z_grid - z_bs:10.1e} {g1 - z_bs:10.1e} {r2:10.2e} {r3:10.2e}")

# %%
# Dividing the three-term residual by eps^4 shows a settled constant.
for eps in (0.1, 0.05, 0.025):
    z = find_bound_state(V, m, eps).z.real
    c = (z - predict_dirac_second_order(mom, m, eps).value.real) / eps**4
    print(f"eps = {eps:5.3f}: (z - three-term)/eps^4 = {c:+.4f}")
