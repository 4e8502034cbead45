import math

import numpy as np
import pytest

from gapspectra.moments import (MomentError, compute_F, compute_limit_moment, compute_moments,
                                compute_sch_cross, compute_sgn_part, compute_U, moment_norms,
                                upsilon)
from gapspectra.potentials import add, make_builtin


@pytest.fixture(scope="module")
def well():
    return make_builtin("square_well", [1.0])


def test_upsilon():
    assert np.allclose(upsilon(2.0, "plus"), np.diag([4, 0]))
    assert np.allclose(upsilon(2.0, "minus"), np.diag([0, -4]))


def test_square_well_moments(well):
    assert np.allclose(compute_U(well), np.diag([1, 0]), atol=1e-12)
    F = compute_F(well, 1.0, "plus")
    # -m int int |x-y| over the unit square = -1/3
    assert F[0, 0] == pytest.approx(-1 / 3, abs=1e-10)
    assert compute_sch_cross(well) == pytest.approx(1 / 3, abs=1e-10)


def test_gaussian_cross_term():
    G = make_builtin("gaussian", [1.0])
    assert compute_U(G)[0, 0] == pytest.approx(math.sqrt(math.pi), abs=1e-10)
    # int int e^{-x^2}|x-y|e^{-y^2} = sqrt(2 pi)
    assert compute_sch_cross(G).real == pytest.approx(math.sqrt(2 * math.pi), abs=1e-9)


def test_diagonal_potentials_have_no_sgn_part(well):
    V = make_builtin("gaussian", [0.7], matrix=np.diag([1.0, -0.4]))
    for P in (well, V):
        assert np.max(np.abs(compute_sgn_part(P))) < 1e-10


def test_limit_moment_matches_F_on_diagonal():
    V = make_builtin("gaussian", [1.0], matrix=np.diag([1.0, 0.5]))
    m = 1.3
    Lp, Fp = compute_limit_moment(V, m, "plus"), compute_F(V, m, "plus")
    Lm, Fm = compute_limit_moment(V, m, "minus"), compute_F(V, m, "minus")
    assert Lp[0, 0] == pytest.approx(Fp[0, 0], abs=1e-10)
    assert Lm[1, 1] == pytest.approx(-Fm[1, 1], abs=1e-10)


def test_off_diagonal_block_example():
    V = add(make_builtin("custom_matrix", [0, 1, 1, 0, 0, 0, 0, 0, 0, 0]),
            make_builtin("custom_matrix", [1, 2, 0, 0, 0, 0, 1, 0, 0, 0]))
    F = compute_F(V, 1.0, "plus")
    L = compute_limit_moment(V, 1.0, "plus")
    # sgn part: int_0^1 int_1^2 sgn(x-y) (i s2)_12 V21 = -1; |x-y| part: -1/3
    assert F[0, 0] == pytest.approx(-4 / 3, abs=1e-10)
    assert L[0, 0] == pytest.approx(1 / 2 - 1 / 3, abs=1e-10)


def test_long_range_moments_refused():
    C = make_builtin("coulomb_tail")
    with pytest.raises(MomentError):
        compute_F(C, 1.0)
    with pytest.raises(MomentError):
        compute_U(C)
    norms = moment_norms(C)
    assert all(math.isinf(norms[k]) for k in (0, 1, 2))


def test_moment_set(well):
    ms = compute_moments(well, 1.0)
    d = ms.as_dict()
    assert d["U"][0][0] == [pytest.approx(1.0), 0.0]
    assert ms.moment_norms[1] == pytest.approx(1 + 0.25, abs=1e-8)
    assert ms.sch_cross == pytest.approx(1 / 3, abs=1e-10)
