"""Moment matrices of a potential.

``U = int V`` and the double integrals

    F^(+-) = int int V(x) [sgn(x-y) i sigma_2 - |x-y|/2 Upsilon_+-] V(y) dx dy,
    Upsilon_+- = m (sigma_3 +- 1),

together with the "limit" matrices obtained by sandwiching the kappa -> 0
limit of the regular resolvent part,

    L^(+) = int int V(x) [-sgn(x-y)/2 i sigma_2 - |x-y|/2 Upsilon_+] V(y),
    L^(-) = int int V(x) [+sgn(x-y)/2 i sigma_2 + |x-y|/2 Upsilon_-] V(y).

``L^(+)_11`` is the coefficient that actually enters the second-order
threshold expansion (see :mod:`gapspectra.asymptotics`); for potentials
without off-diagonal part ``L^(+)_11 = F^(+)_11`` and ``L^(-)_22 = -F^(-)_22``.

All double integrals are computed with composite Gauss-Legendre panels in
which the panel containing the outer node is split at the diagonal, so the
|x-y| and sgn(x-y) kinks never sit inside a rule.
"""

from dataclasses import dataclass
import math

import numpy as np

from ._quadrature import composite_rule, panel_edges, split_rule
from .potentials import ParameterError

__all__ = [
    "MomentError",
    "MomentSet",
    "compute_U",
    "compute_F",
    "compute_limit_moment",
    "compute_sgn_part",
    "compute_sch_cross",
    "moment_norms",
    "compute_moments",
    "upsilon",
]

ISIGMA2 = np.array([[0, 1], [-1, 0]], dtype=complex)
SIGMA3 = np.diag([1.0, -1.0]).astype(complex)
DEFAULT_TOL = 1e-10
ORDER = 16


class MomentError(ParameterError):
    """Moment requested that the potential's metadata declares infinite."""


def upsilon(m, sign):
    """``m (sigma_3 + Id)`` for sign '+' and ``m (sigma_3 - Id)`` for '-'."""
    s = {"plus": 1.0, "+": 1.0, "minus": -1.0, "-": -1.0}[sign]
    return m * (SIGMA3 + s * np.eye(2))


def _radius(V, tol, k):
    if V.finite_moments < k:
        raise MomentError(f"{V.name}: moment of order {k} not finite per metadata")
    try:
        return V.decay.truncation_radius(tol / 10, k)
    except ParameterError as exc:
        raise MomentError(str(exc)) from None


def _rule(V, R, n_panels):
    edges = panel_edges(-R, R, n_panels, V.breakpoints)
    return composite_rule(edges, ORDER), edges


def _refine(compute, tol, start=8, max_panels=2048):
    """Evaluate ``compute(n_panels)`` on a doubling ladder until two
    successive values agree to ``tol`` (entrywise)."""
    n = start
    prev = compute(n)
    while True:
        n *= 2
        cur = compute(n)
        if np.max(np.abs(cur - prev)) <= tol:
            return cur
        if n >= max_panels:
            raise MomentError(f"quadrature did not reach tol={tol:g} with {n} panels")
        prev = cur


def compute_U(V, tol=DEFAULT_TOL):
    """``U = int V dx`` to entrywise accuracy ``tol``."""
    R = _radius(V, tol, 0)

    def run(n):
        (x, w, _), _ = _rule(V, R, n)
        return np.einsum("i,ijk->jk", w, V(x))

    return _refine(run, tol)


def _double(V, kernel, R, n):
    """int int V(x) K(x, y) V(y) dx dy over [-R, R]^2 (matrix-valued)."""
    (x, w, panel), edges = _rule(V, R, n)
    Vx = V(x)
    total = np.zeros((2, 2), dtype=complex)
    for p in range(len(edges) - 1):
        own = panel == p
        xi = x[own]
        others = ~own
        # off-panel part: smooth kernel
        K = kernel(xi[:, None], x[None, others])
        inner = np.einsum("j,ijab,jbc->iac", w[others], K, Vx[others])
        # own panel split at the diagonal
        y, wy = split_rule(edges[p], edges[p + 1], xi, ORDER)
        Ky = kernel(xi[:, None], y)
        Vy = V(y.ravel()).reshape(y.shape + (2, 2))
        inner += np.einsum("ij,ijab,ijbc->iac", wy, Ky, Vy)
        total += np.einsum("i,iab,ibc->ac", w[own], Vx[own], inner)
    return total


def _sgn(x, y):
    return np.sign(x - y)


def _kernel_fn(sgn_coef, dist_matrix):
    """Kernel ``sgn_coef * sgn(x-y) i sigma_2 + |x-y| * dist_matrix``."""

    def kernel(x, y):
        s = _sgn(x, y)[..., None, None]
        r = np.abs(x - y)[..., None, None]
        return sgn_coef * s * ISIGMA2 + r * dist_matrix

    return kernel


def _moment(V, kernel, tol):
    R = _radius(V, tol, 1)
    return _refine(lambda n: _double(V, kernel, R, n), tol)


def compute_F(V, m, sign="plus", tol=DEFAULT_TOL):
    """``F^(+-)`` with sgn(0) = 0."""
    return _moment(V, _kernel_fn(1.0, -0.5 * upsilon(m, sign)), tol)


def compute_limit_moment(V, m, sign="plus", tol=DEFAULT_TOL):
    """``L^(+-)``, the sandwich of the kappa -> 0 resolvent limit."""
    if sign in ("plus", "+"):
        kernel = _kernel_fn(-0.5, -0.5 * upsilon(m, "plus"))
    else:
        kernel = _kernel_fn(0.5, 0.5 * upsilon(m, "minus"))
    return _moment(V, kernel, tol)


def compute_sgn_part(V, tol=DEFAULT_TOL):
    """``int int V(x) sgn(x-y) i sigma_2 V(y)``: the part of F^(+-) with no
    Schrodinger analogue; zero for diagonal potentials."""
    return _moment(V, _kernel_fn(1.0, np.zeros((2, 2), dtype=complex)), tol)


def compute_sch_cross(V, tol=DEFAULT_TOL, entry=(0, 0)):
    """``int int v(x) |x-y| v(y)`` for the scalar component ``v = V_entry``."""
    i, j = entry
    R = _radius(V, tol, 1)
    sel = np.zeros((2, 2), dtype=complex)
    sel[0, 0] = 1.0

    class _Scalar:
        breakpoints = V.breakpoints

        def __call__(self, x):
            out = np.zeros(np.shape(x) + (2, 2), dtype=complex)
            out[..., 0, 0] = V(x)[..., i, j]
            return out

    scalar = _Scalar()

    def kernel(x, y):
        return np.abs(x - y)[..., None, None] * sel

    return complex(_refine(lambda n: _double(scalar, kernel, R, n), tol)[0, 0])


def moment_norms(V, tol=1e-8):
    """``{k: int (1 + |x|^k) |V|}`` for k = 0, 1, 2 (``inf`` when divergent)."""
    out = {}
    for k in (0, 1, 2):
        try:
            R = _radius(V, tol, k)
        except MomentError:
            out[k] = math.inf
            continue

        def run(n, k=k, R=R):
            (x, w, _), _ = _rule(V, R, n)
            nrm = np.linalg.norm(V(x), 2, axis=(1, 2))
            return np.array([np.sum(w * (1 + np.abs(x) ** k) * nrm)])

        out[k] = float(_refine(run, tol)[0])
    return out


@dataclass(frozen=True)
class MomentSet:
    """All moment data of one potential at mass ``m``."""

    m: float
    U: np.ndarray
    F_plus: np.ndarray
    F_minus: np.ndarray
    limit_plus: np.ndarray
    limit_minus: np.ndarray
    moment_norms: dict
    sch_cross: complex

    def as_dict(self):
        def mat(a):
            return [[[complex(v).real, complex(v).imag] for v in row] for row in np.asarray(a)]

        return {
            "m": self.m,
            "U": mat(self.U),
            "F_plus": mat(self.F_plus),
            "F_minus": mat(self.F_minus),
            "limit_plus": mat(self.limit_plus),
            "limit_minus": mat(self.limit_minus),
            "moment_norms": {str(k): v for k, v in self.moment_norms.items()},
            "sch_cross": [self.sch_cross.real, self.sch_cross.imag],
        }


def compute_moments(V, m, tol=DEFAULT_TOL):
    """Fill a :class:`MomentSet`; needs a finite first moment."""
    return MomentSet(
        m=float(m),
        U=compute_U(V, tol),
        F_plus=compute_F(V, m, "plus", tol),
        F_minus=compute_F(V, m, "minus", tol),
        limit_plus=compute_limit_moment(V, m, "plus", tol),
        limit_minus=compute_limit_moment(V, m, "minus", tol),
        moment_norms=moment_norms(V),
        sch_cross=compute_sch_cross(V, tol),
    )
