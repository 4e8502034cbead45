"""Finite-difference oracles for the Dirac and Schrodinger operators.

Dirac: the upper spinor component lives on nodes ``x_i = -L + (i + 1/4) h``
and the lower one on the staggered points ``x_i + h/2``.  The (1,2) block is
the centred difference ``(D v)_i = (v_i - v_{i-1})/h`` at ``x_i`` and the
(2,1) block is its adjoint ``D^T`` (minus the centred difference of u at the
lower points), so

    H = [[m - eps V11,  D - eps V12],
         [D^T - eps V21, -m - eps V22]]

is Hermitian for Hermitian V and ``H^2 = m^2 + D D^T`` for V = 0: the
discrete free spectrum has the exact gap (-m, m) and no doubled modes.
Potentials enter as cell averages over [x - h/2, x + h/2], so jumps are
integrated exactly.  The quarter-cell offset makes ``x -> -x`` exchange the
two sublattices, which gives an exact discrete version of the ``sigma_1``
symmetry for even potentials.

For Hermitian potentials the diagonal blocks are diagonal matrices, so
eliminating one component leaves a Hermitian tridiagonal Schur complement
``T(lambda)`` that is monotone decreasing in lambda.  By Haynsworth inertia the
number of eigenvalues of H below lambda equals a Sturm count of
``T(lambda)`` (plus a constant), and each gap eigenvalue is the root of one
eigenvalue branch of ``T``.  This is exact for the discrete matrix and
avoids shift-invert Arnoldi, which converges slowly because the continuum
accumulates at the gap edges.

Schrodinger: standard three-point Laplacian with Dirichlet ends.
"""

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from scipy.linalg import eig, eigh_tridiagonal
from scipy.optimize import brentq

from ._quadrature import map_rule
from .potentials import ParameterError

__all__ = [
    "GridSpec",
    "GapEigenvalue",
    "GridTruncationError",
    "dirac_matrix",
    "dirac_eigen_in_gap",
    "schrodinger_ground_state",
    "cell_average",
]

TAIL_LIMIT = 1e-6
DENSE_CAP = 4000


class GridTruncationError(RuntimeError):
    """Eigenvector mass too close to the Dirichlet ends."""


@dataclass(frozen=True)
class GridSpec:
    """Uniform grid on [-L, L] with N cells, spacing ``h = 2L/N``."""

    L: float
    N: int

    def __post_init__(self):
        if not self.L > 0 or self.N < 16:
            raise ParameterError("grid needs L > 0 and N >= 16")

    @property
    def h(self):
        return 2.0 * self.L / self.N

    def nodes(self, shift=0.25):
        return -self.L + (np.arange(self.N) + shift) * self.h


@dataclass
class GapEigenvalue:
    z: complex
    in_gap_margin: float
    eigenvector_norm_tail: float
    flagged: bool = False

    def as_dict(self):
        return {"z": [self.z.real, self.z.imag], "in_gap_margin": self.in_gap_margin,
                "eigenvector_norm_tail": self.eigenvector_norm_tail, "flagged": self.flagged}


def cell_average(f, centers, h, breakpoints=(), order=6):
    """Averages of ``f`` over ``[c - h/2, c + h/2]``; breakpoints inside a
    cell split it so each piece is integrated by a smooth rule."""
    centers = np.asarray(centers, dtype=float)
    lo, hi = centers - h / 2, centers + h / 2
    edges = np.concatenate([lo, hi[-1:]])
    bps = np.asarray([b for b in breakpoints if edges[0] < b < edges[-1]], dtype=float)
    cuts = np.union1d(edges, bps)
    x, w = map_rule(cuts[:-1], cuts[1:], order)
    vals = np.asarray(f(x.ravel()), dtype=complex)
    vals = vals.reshape(x.shape + vals.shape[1:])
    piece = np.einsum("pk,pk...->p...", w, vals)
    owner = np.clip(np.searchsorted(edges, cuts[:-1], side="right") - 1, 0, len(centers) - 1)
    out = np.zeros((len(centers),) + piece.shape[1:], dtype=complex)
    np.add.at(out, owner, piece)
    return out / h


def _blocks(V, m, eps, grid):
    N, h = grid.N, grid.h
    xu = grid.nodes(0.25)
    xv = grid.nodes(0.75)
    Vu = cell_average(V, xu, h, V.breakpoints)
    Vv = cell_average(V, xv, h, V.breakpoints)
    # V12 and V21 couple u_i and v_i: sample at the midpoint between them
    Vm = cell_average(V, 0.5 * (xu + xv), h, V.breakpoints)
    D = sp.diags([np.ones(N), -np.ones(N - 1)], [0, -1], format="csr") / h
    top_left = sp.diags(m - eps * Vu[:, 0, 0])
    bottom_right = sp.diags(-m - eps * Vv[:, 1, 1])
    top_right = D - eps * sp.diags(Vm[:, 0, 1])
    bottom_left = D.T - eps * sp.diags(Vm[:, 1, 0])
    return top_left, top_right, bottom_left, bottom_right


def dirac_matrix(V, m, eps, grid):
    """Sparse discrete ``D_m - eps V`` (upper components first)."""
    top_left, top_right, bottom_left, bottom_right = _blocks(V, m, eps, grid)
    H = sp.bmat([[top_left, top_right], [bottom_left, bottom_right]], format="csc")
    if V.hermitian and np.allclose(H.data.imag, 0):
        H = sp.csc_matrix((np.ascontiguousarray(H.data.real), H.indices, H.indptr), shape=H.shape)
    return H


def _tail_mass(vec, N):
    u, v = vec[:N], vec[N:]
    dens = np.abs(u) ** 2 + np.abs(v) ** 2
    dens = dens / dens.sum()
    k = max(1, N // 20)
    return float(dens[:k].sum() + dens[-k:].sum())


def _neg_count(d, e2):
    """Number of negative eigenvalues of the symmetric tridiagonal matrix
    with diagonal ``d`` and squared off-diagonal ``e2`` (LDL^T pivots)."""
    count = 0
    piv = 1.0
    tiny = np.finfo(float).tiny
    for di, ei in zip(d.tolist(), [0.0] + e2.tolist()):
        piv = di - ei / piv
        if piv == 0.0:
            piv = -tiny
        if piv < 0:
            count += 1
    return count


class _SchurPencil:
    """``T(lam)`` for one elimination choice, stored as real tridiagonal data
    (the off-diagonal phases are gauged away)."""

    def __init__(self, a, b_lo, b_sub, dg, eliminate_lower):
        # H = [[diag(a), B], [B^H, diag(dg)]], B lower bidiagonal (b_lo, b_sub)
        self.a, self.dg = a, dg
        self.b_lo, self.b_sub = b_lo, b_sub
        self.lower = eliminate_lower
        if eliminate_lower:
            # counted eigenvalues below lam: N + neg T  (dg - lam < 0)
            self.offset = len(a)
        else:
            self.offset = 0

    def tridiag(self, lam):
        b0, b1 = self.b_lo, self.b_sub
        if self.lower:
            w = 1.0 / (self.dg - lam)
            d = self.a - lam - (np.abs(b0) ** 2 * w)
            d[1:] -= np.abs(b1) ** 2 * w[:-1]
            off = b1 * w[:-1] * np.conj(b0[:-1])
        else:
            # T = dg - lam - B^H diag(w) B, w = 1/(a - lam)
            w = 1.0 / (self.a - lam)
            d = self.dg - lam - np.abs(b0) ** 2 * w
            d[:-1] -= np.abs(b1) ** 2 * w[1:]
            off = np.conj(b1) * w[1:] * b0[1:]
        return d, np.abs(off)

    def count_below(self, lam):
        d, e = self.tridiag(lam)
        return self.offset + _neg_count(d, e * e)

    def branch(self, lam, j):
        d, e = self.tridiag(lam)
        return float(eigh_tridiagonal(d, e, eigvals_only=True, select="i",
                                      select_range=(j, j))[0])


def _hermitian_gap_eigs(V, m, eps, grid, lo, hi):
    tl, tr, _, br = _blocks(V, m, eps, grid)
    a = np.real(tl.diagonal())
    dg = np.real(br.diagonal())
    tr = sp.csr_matrix(tr)
    b_lo = np.asarray(tr.diagonal(), dtype=complex)
    b_sub = np.asarray(tr.diagonal(-1), dtype=complex)
    # lower elimination needs lam > max(dg), upper needs lam < min(a); split
    # in the middle of the overlap so neither T(lam) nears its poles
    s_lo, s_hi = dg.max(), a.min()
    if not s_lo < s_hi:
        return None
    split = min(max(0.5 * (s_lo + s_hi), lo), hi)
    pieces = []
    if lo < split:
        pieces.append((_SchurPencil(a, b_lo, b_sub, dg, False), lo, split))
    if split < hi:
        pieces.append((_SchurPencil(a, b_lo, b_sub, dg, True), split, hi))
    found = []
    for pencil, a_, b in pieces:
        n_lo = pencil.count_below(a_)
        n_hi = pencil.count_below(b)
        j0 = n_lo - pencil.offset
        for k in range(n_hi - n_lo):
            j = j0 + k
            lam = brentq(lambda t: pencil.branch(t, j), a_, b, xtol=1e-15, rtol=1e-15)
            found.append(lam)
    return sorted(found)


def _eigvec(H, lam):
    """Eigenvector for a known eigenvalue by one shifted inverse iteration."""
    n = H.shape[0]
    shift = lam * (1 + 1e-13) + 1e-14
    lu = spla.splu(sp.csc_matrix(H - shift * sp.identity(n, format="csc")))
    x = np.ones(n) / np.sqrt(n)
    for _ in range(3):
        x = lu.solve(x)
        x /= np.linalg.norm(x)
    return x


def dirac_eigen_in_gap(V, m, eps, grid, window=None, k=6, sigma=0.0, dense=None):
    """Eigenvalues of the discrete Dirac operator with real part in ``window``.

    Hermitian potentials use the tridiagonal Schur-complement count (all
    eigenvalues in the window are returned); non-Hermitian ones use sparse
    shift-invert Arnoldi around ``sigma`` (``k`` eigenvalues nearest to it),
    or a dense eigensolve when ``dense=True`` (only for N <= 4000).  Results whose eigenvector carries
    more than 1e-6 of its mass in the outer 10% of the box are flagged.
    """
    if window is None:
        window = (-m + 1e-3 * m, m - 1e-3 * m)
    lo, hi = window
    if not (-m < lo < hi < m):
        raise ParameterError("window must lie strictly inside (-m, m)")
    H = dirac_matrix(V, m, eps, grid)
    N = grid.N
    if V.hermitian and not dense:
        lams = _hermitian_gap_eigs(V, m, eps, grid, lo, hi)
        if lams is not None:
            out = []
            for lam in lams:
                tail = _tail_mass(_eigvec(H, lam), N)
                margin = float(min(m - lam, lam + m))
                out.append(GapEigenvalue(complex(lam), margin, tail, flagged=tail > TAIL_LIMIT))
            return out
    if dense:
        if N > DENSE_CAP:
            raise ParameterError(f"dense eigensolve capped at N = {DENSE_CAP}")
        vals, vecs = eig(H.toarray())
    elif V.hermitian:
        vals, vecs = spla.eigsh(H, k=k, sigma=sigma, which="LM")
    else:
        vals, vecs = spla.eigs(H.astype(complex), k=k, sigma=sigma, which="LM")
    out = []
    for lam, vec in zip(vals, vecs.T):
        lam = complex(lam)
        if lo <= lam.real <= hi:
            tail = _tail_mass(vec, N)
            margin = float(min(abs(lam - m), abs(lam + m)))
            out.append(GapEigenvalue(lam, margin, tail, flagged=tail > TAIL_LIMIT))
    out.sort(key=lambda g: g.z.real)
    return out


def schrodinger_ground_state(v, m, eps, grid, breakpoints=(), check_tail=True):
    """Lowest eigenvalue of ``-(1/2m) d^2/dx^2 - eps v`` with Dirichlet ends.

    ``v`` is a real scalar function (vectorised).  Returns ``None`` when the
    lowest eigenvalue is not negative.  Raises :class:`GridTruncationError`
    when the eigenvector is not localised away from the ends.
    """
    h = grid.h
    x = -grid.L + np.arange(1, grid.N) * h
    vbar = cell_average(v, x, h, breakpoints).real
    kin = 1.0 / (2.0 * m * h * h)
    d = 2.0 * kin - eps * vbar
    e = -kin * np.ones(len(x) - 1)
    lam, vec = eigh_tridiagonal(d, e, select="i", select_range=(0, 0))
    lam = float(lam[0])
    if lam >= 0:
        return None
    if check_tail:
        dens = vec[:, 0] ** 2
        k = max(1, len(x) // 20)
        tail = float((dens[:k].sum() + dens[-k:].sum()) / dens.sum())
        if tail > TAIL_LIMIT:
            raise GridTruncationError(f"tail mass {tail:.2e}: enlarge L")
    return lam
