import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from gapspectra.potentials import (Decay, ParameterError, add, check_hypotheses, factorize,
                                   from_csv, from_function, make_builtin, scale,
                                   sigma1_conjugate, sup_norm, zero_potential)

finite = st.floats(-3, 3, allow_nan=False)


def test_square_well_values():
    V = make_builtin("square_well", [1.0])
    assert np.allclose(V(0.2), [[1, 0], [0, 0]])
    assert np.allclose(V(0.7), 0)
    assert V.breakpoints == (-0.5, 0.5)
    assert V.hermitian and V.support_radius == 0.5


def test_array_call_shape():
    V = make_builtin("gaussian", [1.0])
    assert V(np.linspace(-1, 1, 7)).shape == (7, 2, 2)
    assert V(np.zeros((3, 4))).shape == (3, 4, 2, 2)


@pytest.mark.parametrize("family,params", [
    ("square_well", []), ("square_well", [-1.0]), ("gaussian", [0.0]),
    ("coulomb_tail", [1.0, 2.0]), ("two_bump", [1.0]), ("custom_matrix", [0, 1, 1]),
    ("custom_matrix", [1, 0] + [0] * 8), ("helix", [1.0]),
])
def test_bad_parameters_rejected(family, params):
    with pytest.raises(ParameterError):
        make_builtin(family, params)


def test_custom_matrix_complex_is_not_hermitian():
    V = make_builtin("custom_matrix", [-0.5, 0.5, 1, 1, 0, 0, 0, 0, 0, 0])
    assert not V.hermitian
    assert V(0.0)[0, 0] == 1 + 1j


def test_block_sum_example():
    V = add(make_builtin("custom_matrix", [0, 1, 1, 0, 0, 0, 0, 0, 0, 0]),
            make_builtin("custom_matrix", [1, 2, 0, 0, 0, 0, 1, 0, 0, 0]))
    assert V(0.5)[0, 0] == 1 and V(1.5)[1, 0] == 1
    assert V.breakpoints == (0.0, 1.0, 2.0)


@settings(max_examples=60, deadline=None)
@given(st.lists(finite, min_size=8, max_size=8), st.floats(-2, 2))
def test_factorisation_reproduces_V(entries, x):
    vals = np.array(entries)
    P = (vals[0::2] + 1j * vals[1::2]).reshape(2, 2)
    V = make_builtin("gaussian", [1.0], matrix=P)
    A, B = factorize(V).both(np.array([x]))
    assert np.allclose(B[0] @ A[0], V(x), atol=1e-12)


def test_factorisation_of_hermitian_positive_is_symmetric():
    V = make_builtin("square_well", [1.0])
    fac = factorize(V)
    assert np.allclose(fac.A(0.0), fac.Bstar(0.0))


def test_decay_tail_and_radius():
    d = Decay("exponential", 2.0)
    # both sides, weight (1 + |x|^0) = 2
    assert d.tail(1.0) == pytest.approx(2 * 2 * math.exp(-2) / 2, rel=1e-8)
    R = d.truncation_radius(1e-12)
    assert d.tail(R) <= 1e-12
    poly = Decay("polynomial", 1.0)
    with pytest.raises(ParameterError):
        poly.truncation_radius(1e-8, k=0)


def test_coulomb_tail_metadata():
    V = make_builtin("coulomb_tail")
    assert V.finite_moments < 0
    assert V(3.0)[0, 0] == pytest.approx(0.25)
    cut = make_builtin("coulomb_tail", [5.0])
    assert cut.finite_moments > 2


def test_sigma1_conjugate_swaps_entries():
    V = make_builtin("custom_matrix", [0, 1, 1, 0, 2, 0, 3, 0, 4, 0])
    W = sigma1_conjugate(V)
    assert np.allclose(W(0.5), [[4, 3], [2, 1]])
    assert np.allclose(sigma1_conjugate(V, negate=True)(0.5), -W(0.5))


def test_scale_and_sup_norm():
    V = scale(make_builtin("square_well", [1.0]), -2.0)
    assert V(0.0)[0, 0] == -2
    assert sup_norm(V) == pytest.approx(2.0)
    g = from_function(lambda x: np.exp(-x**2)[:, None, None] * np.eye(2),
                      Decay("gaussian", 1.0), 10)
    assert g.hermitian
    assert sup_norm(g) == pytest.approx(1.0, abs=1e-6)


def test_csv_round_trip(tmp_path):
    xs = np.linspace(-1, 1, 21)
    rows = np.zeros((21, 9))
    rows[:, 0] = xs
    rows[:, 1] = 1 - xs**2
    path = tmp_path / "v.csv"
    np.savetxt(path, rows, delimiter=",", header="x,v11_re,v11_im,v12_re,v12_im,"
               "v21_re,v21_im,v22_re,v22_im", comments="")
    V = from_csv(path)
    assert V.hermitian
    assert V(0.05)[0, 0].real == pytest.approx(1 - 0.05**2, abs=5e-3)
    assert V(1.5)[0, 0] == 0


def test_zero_potential():
    V = zero_potential()
    assert np.all(V(np.linspace(-1, 1, 5)) == 0)
    assert sup_norm(V) == 0


def test_hypotheses_second_order():
    assert check_hypotheses(make_builtin("square_well", [1.0]), "thm_second_order").passed
    assert check_hypotheses(make_builtin("gaussian", [1.0]), "thm_second_order").passed
    rep = check_hypotheses(make_builtin("coulomb_tail"), "thm_second_order")
    assert not rep.passed
    assert rep.checks[0].witness is not None


def test_hypotheses_long_range_and_comparison():
    V = make_builtin("coulomb_tail")
    assert check_hypotheses(V, "thm_long_range").passed
    assert check_hypotheses(V, "prop_comparison").passed
    nh = make_builtin("custom_matrix", [-0.5, 0.5, 1, 1, 0, 0, 0, 0, 0, 0])
    rep = check_hypotheses(nh, "prop_comparison")
    assert not rep.passed and not rep.checks[0].passed
    with pytest.raises(ParameterError):
        check_hypotheses(V, "theorem_9")
