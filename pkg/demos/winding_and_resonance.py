"""
Counting zeros and following one onto the second sheet
======================================================

An attractive Gaussian has exactly one zero of the characteristic function
in the right half-disc; flipping the sign moves it across the imaginary
axis, where it becomes a resonance.

Run: ``python3 demos/winding_and_resonance.py`` (about two minutes).
"""

from gapspectra import (compute_moments, count_zeros_halfdisc, find_bound_state,
                        find_resonance, make_builtin, scale)

m = 1.0
V = make_builtin("gaussian", [1.0])
mom = compute_moments(V, m)
U, L = mom.U[0, 0].real, mom.limit_plus[0, 0].real

for eps in (0.2, 0.1, 0.05):
    n_plus = count_zeros_halfdisc(V, m, eps)
    n_minus = count_zeros_halfdisc(scale(V, -1.0), m, eps)
    b = find_bound_state(V, m, eps)
    r = find_resonance(scale(V, -1.0), m, eps)
    print(f"eps = {eps:4.2f}: zeros(+V) = {n_plus}, zeros(-V) = {n_minus}, "
          f"kappa_bound = {b.kappa.real:+.6f}, kappa_res = {r.kappa.real:+.6f}")
    # to second order the two kappas are mirror images: +-eps m U + eps^2 m L
    print(f"{'':13}expansion: {eps * m * U + eps**2 * m * L:+.6f}, "
          f"{-eps * m * U + eps**2 * m * L:+.6f}")
