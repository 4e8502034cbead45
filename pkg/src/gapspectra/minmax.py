"""Variational (min-max) route to the first gap eigenvalue.

Spinors are written as ``x = l+(h) + l-(g)`` with

    l+(h) = (h, -alpha h'),   l-(g) = (-alpha g', g),   alpha = 1/(2m),

which are orthogonal for every pair (h, g).  Restricted to ``l+`` the free
Dirac form is ``m ||l+(h)||^2 + alpha ||h'||^2``, so the ``l+`` branch sits
above ``m`` and the ``l-`` branch below ``-m``.

h and g are discretised with C^1 Hermite cubic elements, so ``l+(h)`` and
``l-(g)`` are H^1 functions and the Dirac form

    Q(x) = int m|x1|^2 - m|x2|^2 + conj(x1) x2' - conj(x2) x1' - eps x^H V x

is assembled without any further integration by parts.  All value and slope
degrees of freedom are clamped at ``+-L``.  The mesh is graded with a sinh
map (fine near the origin, coarse in the tails) and contains the
potential's breakpoints as nodes.

``gamma0`` is the top of the ``l-`` branch and ``gamma1`` is the first
root in ``(gamma0, m]`` of ``mu(lam)``, the smallest eigenvalue of the Schur
complement of ``Q - lam G`` onto the ``l+`` block.
"""

from dataclasses import dataclass, field
import math

import numpy as np
from scipy.linalg import cho_factor, cho_solve, eigh

from ._quadrature import gauss_legendre
from .grid import GridSpec
from .potentials import ParameterError, sup_norm

__all__ = [
    "MinmaxError",
    "SubspaceForms",
    "MinmaxResult",
    "graded_mesh",
    "assemble_forms",
    "gamma0",
    "gamma1",
    "solve_minmax",
]

QUAD_ORDER = 8
BISECTION_STEPS = 60
SECANT_STEPS = 5


class MinmaxError(RuntimeError):
    """The gap condition gamma0 < gamma1 could not be established."""


def graded_mesh(L, n_elements, breakpoints=(), core=1.0):
    """Nodes on [-L, L]: ``x = L sinh(beta t)/sinh(beta)`` for uniform t,
    with beta chosen so the central spacing is about ``core / 10`` (never
    coarser than uniform), plus the breakpoints."""
    uniform = 2.0 * L / n_elements
    target = min(uniform, 0.1 * core)
    ratio = target / uniform  # = beta / sinh(beta)
    beta = 1e-8
    if ratio < 1.0:
        lo, hi = 1e-8, 50.0
        for _ in range(200):
            beta = 0.5 * (lo + hi)
            if beta / math.sinh(beta) > ratio:
                lo = beta
            else:
                hi = beta
    t = np.linspace(-1.0, 1.0, n_elements + 1)
    x = L * np.sinh(beta * t) / math.sinh(beta)
    x[0], x[-1] = -L, L
    bps = np.asarray([b for b in breakpoints if -L < b < L], dtype=float)
    if bps.size:
        # move the closest node onto each breakpoint, keeping order
        for b in bps:
            k = int(np.argmin(np.abs(x - b)))
            if 0 < k < len(x) - 1:
                x[k] = b
        x = np.unique(np.concatenate([x, bps]))
    return x


def _hermite(t, ell):
    """Values, first and second x-derivatives of the four Hermite cubics
    (dofs: value and slope at each end) at reference points t."""
    t = t[None, :]
    ell = ell[:, None]
    shape = (ell.shape[0], t.shape[1])

    def stack(parts):
        return np.stack([np.broadcast_to(p, shape) for p in parts], axis=-1)

    phi = stack([1 - 3 * t**2 + 2 * t**3, ell * (t - 2 * t**2 + t**3),
                 3 * t**2 - 2 * t**3, ell * (t**3 - t**2)])
    d1 = stack([(6 * t**2 - 6 * t) / ell, 1 - 4 * t + 3 * t**2,
                (6 * t - 6 * t**2) / ell, 3 * t**2 - 2 * t])
    d2 = stack([(12 * t - 6) / ell**2, (6 * t - 4) / ell,
                (6 - 12 * t) / ell**2, (6 * t - 2) / ell])
    return phi, d1, d2


@dataclass
class SubspaceForms:
    """Gram and energy blocks on the ``l+`` (h) and ``l-`` (g) subspaces."""

    nodes: np.ndarray
    G_plus: np.ndarray
    G_minus: np.ndarray
    G_cross: np.ndarray
    Q_pp: np.ndarray
    Q_mm: np.ndarray
    Q_pm: np.ndarray
    alpha: float

    @property
    def size(self):
        return self.G_plus.shape[0]


def assemble_forms(V, m, eps, grid, core=None, quad_order=QUAD_ORDER):
    """Assemble :class:`SubspaceForms` for ``D_m - eps V`` on ``grid``.

    ``grid.N`` is the number of elements and ``grid.L`` the half-length.
    """
    alpha = 1.0 / (2.0 * m)
    if core is None:
        core = min(V.decay.scale, grid.L / 10) if math.isfinite(V.decay.scale) else 1.0
    x = graded_mesh(grid.L, grid.N, V.breakpoints, core=max(core, 1e-3))
    ne = len(x) - 1
    ell = np.diff(x)
    tq, wq = gauss_legendre(quad_order)
    tq = 0.5 * (tq + 1.0)
    wq = 0.5 * wq
    phi, d1, d2 = _hermite(tq, ell)
    xq = x[:-1, None] + ell[:, None] * tq[None, :]
    w = ell[:, None] * wq[None, :]
    Vq = V(xq.ravel()).reshape(ne, len(tq), 2, 2)

    # local dofs: [h (4), g (4)]; rows: spinor components and derivatives
    x1 = np.concatenate([phi, -alpha * d1], axis=-1)
    x2 = np.concatenate([-alpha * d1, phi], axis=-1)
    x1d = np.concatenate([d1, -alpha * d2], axis=-1)
    x2d = np.concatenate([-alpha * d2, d1], axis=-1)

    def sand(a, b, weight):
        return np.einsum("eq,eqi,eqj->eij", weight, a, b)

    G_loc = sand(x1, x1, w) + sand(x2, x2, w)
    Q_loc = m * sand(x1, x1, w) - m * sand(x2, x2, w)
    Q_loc = Q_loc + sand(x1, x2d, w) - sand(x2, x1d, w)
    comps = (x1, x2)
    Q_loc = Q_loc.astype(complex)
    for i in range(2):
        for j in range(2):
            vij = Vq[..., i, j]
            if np.any(vij != 0):
                Q_loc -= eps * np.einsum("eq,eqi,eqj->eij", w * vij, comps[i], comps[j])

    # global numbering: h dofs 2k, 2k+1 ; g dofs offset by 2(ne+1)
    nn = ne + 1
    e = np.arange(ne)
    hdofs = np.stack([2 * e, 2 * e + 1, 2 * e + 2, 2 * e + 3], axis=1)
    loc = np.concatenate([hdofs, hdofs + 2 * nn], axis=1)
    ntot = 4 * nn
    G = np.zeros((ntot, ntot))
    Q = np.zeros((ntot, ntot), dtype=complex)
    rows = np.repeat(loc[:, :, None], 8, axis=2)
    cols = np.repeat(loc[:, None, :], 8, axis=1)
    np.add.at(G, (rows, cols), G_loc)
    np.add.at(Q, (rows, cols), Q_loc)
    Q = 0.5 * (Q + Q.conj().T)
    G = 0.5 * (G + G.T)

    clamped = {0, 1, 2 * nn - 2, 2 * nn - 1}
    hkeep = np.array([k for k in range(2 * nn) if k not in clamped])
    gkeep = hkeep + 2 * nn
    if V.hermitian and np.allclose(Q.imag, 0):
        Q = Q.real
    return SubspaceForms(
        nodes=x,
        G_plus=G[np.ix_(hkeep, hkeep)],
        G_minus=G[np.ix_(gkeep, gkeep)],
        G_cross=G[np.ix_(hkeep, gkeep)],
        Q_pp=Q[np.ix_(hkeep, hkeep)],
        Q_mm=Q[np.ix_(gkeep, gkeep)],
        Q_pm=Q[np.ix_(hkeep, gkeep)],
        alpha=alpha,
    )


def _check(V, m, eps):
    if not V.hermitian:
        raise ParameterError("min-max levels need a Hermitian potential")
    vinf = sup_norm(V)
    if vinf > 0 and eps >= m / vinf:
        raise ParameterError(
            f"eps = {eps:g} >= m/||V||_inf = {m / vinf:g}: gap condition not guaranteed")
    return vinf


def _gamma0(forms):
    n = forms.G_minus.shape[0]
    return float(eigh(forms.Q_mm, forms.G_minus, eigvals_only=True,
                      subset_by_index=[n - 1, n - 1])[0])


def _mu(forms, lam):
    """Smallest eigenvalue of the Schur complement at ``lam``."""
    A = forms.Q_pp - lam * forms.G_plus
    B = forms.Q_pm - lam * forms.G_cross
    # Q-- - lam G- is negative definite above gamma0
    C = cho_factor(-(forms.Q_mm - lam * forms.G_minus))
    S = A + B @ cho_solve(C, B.conj().T)
    S = 0.5 * (S + S.conj().T)
    return float(eigh(S, eigvals_only=True, subset_by_index=[0, 0])[0])


@dataclass
class MinmaxResult:
    gamma0: float
    gamma1: float
    mu_trace: list = field(default_factory=list)
    no_eigenvalue: bool = False
    sup_norm: float = 0.0

    def as_dict(self):
        return {
            "gamma0": self.gamma0,
            "gamma1": self.gamma1,
            "mu_trace": [[lam, mu] for lam, mu in self.mu_trace],
            "no_eigenvalue": self.no_eigenvalue,
        }


def solve_minmax(V, m, eps, grid, forms=None):
    """gamma0 and gamma1 with the trace of all mu evaluations.

    ``mu`` is decreasing on ``(gamma0, m]``: bisection on its sign over
    ``[gamma0 + 1e-6, m]`` followed by secant steps.  When ``mu(m) > 0``
    there is no eigenvalue below the threshold and ``gamma1 = m``.
    """
    vinf = _check(V, m, eps)
    forms = forms or assemble_forms(V, m, eps, grid)
    g0 = _gamma0(forms)
    lo, hi = g0 + 1e-6, float(m)
    if lo >= hi:
        raise MinmaxError(f"gamma0 = {g0:.6g} leaves no room below m (gap condition fails)")
    trace = []

    def mu(lam):
        val = _mu(forms, lam)
        trace.append((float(lam), val))
        return val

    mu_hi = mu(hi)
    if mu_hi > 0:
        return MinmaxResult(g0, float(m), trace, no_eigenvalue=True, sup_norm=vinf)
    mu_lo = mu(lo)
    if mu_lo <= 0:
        raise MinmaxError(f"mu(gamma0 + 1e-6) = {mu_lo:.3g} <= 0: gap condition fails")
    for _ in range(BISECTION_STEPS):
        mid = 0.5 * (lo + hi)
        if hi - lo <= 4 * np.finfo(float).eps * abs(mid):
            break
        val = mu(mid)
        if val > 0:
            lo, mu_lo = mid, val
        else:
            hi, mu_hi = mid, val
    # secant polish inside the final bracket
    a, fa, b, fb = lo, mu_lo, hi, mu_hi
    for _ in range(SECANT_STEPS):
        if fb == fa:
            break
        c = b - fb * (b - a) / (fb - fa)
        if not (lo <= c <= hi):
            break
        fc = mu(c)
        a, fa, b, fb = b, fb, c, fc
        if fc == 0:
            break
    root = b if abs(fb) <= abs(fa) else a
    return MinmaxResult(g0, float(root), trace, sup_norm=vinf)


def gamma0(V, m, eps, grid):
    """Largest generalised eigenvalue of ``(Q--, G-)``."""
    _check(V, m, eps)
    return _gamma0(assemble_forms(V, m, eps, grid))


def gamma1(V, m, eps, grid):
    """First min-max level above ``gamma0`` (``m`` when none exists)."""
    return solve_minmax(V, m, eps, grid).gamma1
