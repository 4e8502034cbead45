import numpy as np
import pytest

from gapspectra.birman_schwinger import (BirmanSchwinger, QuadratureSpec, assemble,
                                         characteristic_g, count_zeros_halfdisc,
                                         find_bound_state, find_resonance, winding_number)
from gapspectra.moments import compute_U
from gapspectra.potentials import ParameterError, make_builtin, scale, zero_potential
from gapspectra.resolvent import KappaZ

WELL = make_builtin("square_well", [1.0])


@pytest.mark.parametrize("eps,z", [(0.2, 0.98245334), (0.1, 0.99532004),
                                   (0.05, 0.99879084)])
def test_square_well_roots(eps, z):
    root = find_bound_state(WELL, 1.0, eps)
    assert root.z.real == pytest.approx(z, abs=1e-8)
    assert abs(root.kappa.imag) < 1e-12
    assert root.residual <= 1e-10 * max(1, abs(root.kappa))


def test_root_stable_under_panel_doubling():
    coarse = find_bound_state(WELL, 1.0, 0.1, quad=QuadratureSpec(panels=2))
    fine = find_bound_state(WELL, 1.0, 0.1, quad=QuadratureSpec(panels=4))
    assert abs(coarse.z - fine.z) < 1e-12


def test_characteristic_function_at_root_vanishes():
    root = find_bound_state(WELL, 1.0, 0.1)
    sys = assemble(WELL, KappaZ.from_kappa(root.kappa, 1.0))
    assert abs(characteristic_g(sys, 0.1)) < 1e-10
    # the rank-one (regular) part leaves a compact operator of modest norm
    assert 0 < sys.hs_norm < 10


def test_no_root_for_zero_or_repulsive():
    assert find_bound_state(zero_potential(), 1.0, 0.1) is None
    assert find_bound_state(scale(WELL, -1.0), 1.0, 0.1) is None


def test_lower_threshold_mirrors_upper():
    V = make_builtin("square_well", [1.0], matrix=np.diag([0.0, -1.0]))
    low = find_bound_state(V, 1.0, 0.1, threshold="minus_m")
    up = find_bound_state(WELL, 1.0, 0.1)
    assert low.z == pytest.approx(-up.z, abs=1e-12)
    assert find_bound_state(V, 1.0, 0.1, threshold="plus_m") is None


def test_winding_verified_root():
    root = find_bound_state(WELL, 1.0, 0.1, check_winding=True)
    assert root.winding_checked


@pytest.mark.parametrize("eps", [0.05, 0.2])
def test_halfdisc_counts(eps):
    bs = BirmanSchwinger(WELL, 1.0)
    assert count_zeros_halfdisc(WELL, 1.0, eps, _bs=bs) == 1
    assert count_zeros_halfdisc(scale(WELL, -1.0), 1.0, eps) == 0


def test_winding_number_of_polynomial():
    # z^2 - 0.25 has two zeros inside the unit square centred at 0
    def seg(a, b):
        return lambda t: a + (b - a) * t

    corners = [-1 - 1j, 1 - 1j, 1 + 1j, -1 + 1j, -1 - 1j]
    segs = [seg(a, b) for a, b in zip(corners, corners[1:])]
    assert winding_number(lambda z: z * z - 0.25, segs) == 2
    assert winding_number(lambda z: z - 3.0, segs) == 0


def test_non_hermitian_root_is_complex():
    V = make_builtin("custom_matrix", [-0.5, 0.5, 1, 1, 0, 0, 0, 0, 0, 0])
    root = find_bound_state(V, 1.0, 0.05)
    assert abs(root.z.imag) > 1e-4
    # leading order kappa = eps m U11
    assert abs(root.kappa - 0.05 * (1 + 1j)) < 0.05**2


def test_resonance_of_repulsive_gaussian():
    V = scale(make_builtin("gaussian", [1.0]), -1.0)
    res = find_resonance(V, 1.0, 0.1)
    U = compute_U(V)[0, 0]
    assert res.sheet == "second" and res.kappa.real < 0
    assert abs(res.kappa - 0.1 * U) < 0.05
    # attractive potentials have a bound state, not a resonance
    assert find_resonance(make_builtin("gaussian", [1.0]), 1.0, 0.1) is None


def test_resonance_needs_fast_decay():
    with pytest.raises(ParameterError):
        find_resonance(scale(make_builtin("coulomb_tail"), -1.0), 1.0, 0.1)
