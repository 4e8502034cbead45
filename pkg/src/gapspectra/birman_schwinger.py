"""Birman-Schwinger route to gap eigenvalues and threshold resonances.

With ``V = B* A`` and the threshold split of the free resolvent, ``z`` is an
eigenvalue of ``D_m - eps V`` iff ``kappa = kappa(z)`` is a zero of

    g(kappa) = eps m <b, (1 - eps M(z(kappa)))^{-1} a> - kappa,

where ``M`` has kernel ``A(x) S_z(x, y) B*(y)``, ``a = A P+^*`` and
``b = B P+^*``.  ``M`` is discretised by a Nystrom scheme on Gauss-Legendre
panels; in the panel that contains the target node the rule is split at the
node (the kernel has a kink on the diagonal) and the unknown is recovered at
the new points by Lagrange interpolation, which keeps spectral accuracy.

Zeros with ``Re kappa > 0`` are bound states; for exponentially decaying V
the same function continues to ``Re kappa < 0`` where its zeros are
resonances (poles of the resolvent on the second sheet).
"""

from dataclasses import dataclass, field, replace
import math

import numpy as np

from ._quadrature import composite_rule, lagrange_matrix, panel_edges, split_rule
from .moments import compute_U, compute_limit_moment
from .potentials import ParameterError, factorize, sigma1_conjugate
from .resolvent import KappaZ, regular_kernel_S

__all__ = [
    "QuadratureSpec",
    "NystromSystem",
    "KappaRoot",
    "BirmanSchwinger",
    "BirmanSchwingerError",
    "TruncationError",
    "ContourError",
    "assemble",
    "characteristic_g",
    "find_bound_state",
    "find_resonance",
    "count_zeros_halfdisc",
    "winding_number",
]

NEWTON_MAXITER = 50


class BirmanSchwingerError(RuntimeError):
    """``1 - eps M`` is (numerically) singular: a Birman-Schwinger
    eigenvalue of ``eps M`` collides with 1."""


class TruncationError(ValueError):
    def __init__(self, message, tail):
        super().__init__(f"{message} (tail estimate {tail:.3g})")
        self.tail = tail


class ContourError(RuntimeError):
    """Argument accumulation could not resolve the phase along a contour."""


@dataclass(frozen=True)
class QuadratureSpec:
    """Panel layout for the Nystrom discretisation.

    ``panels=None`` picks about one panel per unit length (at least 4).
    ``trunc_radius=None`` truncates where the declared second-moment tail
    drops below ``tol``.
    """

    panels: int = None
    order: int = 16
    trunc_radius: float = None
    tol: float = 1e-13

    def __post_init__(self):
        if self.panels is not None and self.panels < 1:
            raise ParameterError("panels must be a positive integer")
        if self.order < 1:
            raise ParameterError("quadrature order must be positive")
        if self.trunc_radius is not None and not self.trunc_radius > 0:
            raise ParameterError("trunc_radius must be positive")
        if not self.tol > 0:
            raise ParameterError("tol must be positive")

    def refined(self, V, factor=2):
        """Same layout with ``factor`` times as many panels."""
        n = self.panels or len(BirmanSchwinger(V, 1.0, self).edges) - 1
        return replace(self, panels=n * factor)


def _truncation(V, quad, widen=1.0):
    if quad.trunc_radius is not None:
        R = float(quad.trunc_radius)
        if V.decay.kind != "compact" or R < V.support_radius:
            tail = V.decay.tail(R, 2)
            if tail > quad.tol * 1e3:
                raise TruncationError(f"trunc_radius {R:g} too small for tol {quad.tol:g}", tail)
        return R
    if V.decay.kind == "compact":
        return V.support_radius
    return V.decay.truncation_radius(quad.tol, 2) * widen


@dataclass
class NystromSystem:
    """Discretised Birman-Schwinger data at one spectral parameter.

    ``M`` is the (2N, 2N) matrix with blocks
    ``sqrt(w_i) A(x_i) S_z(x_i, x_j) B*(x_j) sqrt(w_j)`` (diagonal-panel
    blocks carry the split-rule correction); ``a_vec`` and ``b_vec`` are the
    weighted samples of ``a`` and ``b`` so that ``<b, f> = vdot(b_vec, f)``.
    """

    nodes: np.ndarray
    weights: np.ndarray
    M: np.ndarray
    a_vec: np.ndarray
    b_vec: np.ndarray
    kz: KappaZ

    def scalar(self, eps):
        """``<b, (1 - eps M)^{-1} a>``."""
        return np.vdot(self.b_vec, _solve(self.M, eps, self.a_vec))

    @property
    def hs_norm(self):
        return float(np.linalg.norm(self.M))


def _norm_estimate(M, iters=5):
    v = np.ones(M.shape[1], dtype=complex) / math.sqrt(M.shape[1])
    est = 0.0
    for _ in range(iters):
        w = M @ v
        est = np.linalg.norm(w)
        if est == 0:
            return 0.0
        u = M.conj().T @ w
        v = u / np.linalg.norm(u)
    return float(est)


def _solve(M, eps, rhs):
    n = M.shape[0]
    lhs = np.eye(n) - eps * M
    if eps * _norm_estimate(M) >= 1.0:
        smin = np.linalg.svd(lhs, compute_uv=False)[-1]
        if smin < 1e-12:
            raise BirmanSchwingerError(
                f"1 - eps M is singular (smallest singular value {smin:.2e}): "
                "eps M has the Birman-Schwinger eigenvalue 1")
    try:
        return np.linalg.solve(lhs, rhs)
    except np.linalg.LinAlgError as exc:
        raise BirmanSchwingerError(f"1 - eps M is singular: {exc}") from None


class BirmanSchwinger:
    """Kappa-independent part of the discretisation of one potential.

    Quadrature nodes, factor samples and the split-rule interpolation data
    are computed once; :meth:`system` only evaluates the kernel.
    """

    def __init__(self, V, m, quad=None, widen=1.0):
        quad = quad or QuadratureSpec()
        self.V = V
        self.m = float(m)
        self.quad = quad
        self.radius = R = _truncation(V, quad, widen)
        n_panels = quad.panels or max(4, int(math.ceil(2 * R)))
        self.edges = edges = panel_edges(-R, R, n_panels, V.breakpoints)
        q = quad.order
        x, w, panel = composite_rule(edges, q)
        self.nodes, self.weights, self.panel = x, w, panel
        fac = factorize(V)
        self.A, self.Bstar = fac.both(x)
        P = len(edges) - 1
        xs = x.reshape(P, q)
        Y, Om = split_rule(edges[:-1, None], edges[1:, None], xs, q)
        self._Y, self._Om = Y, Om  # (P, q, 2q)
        _, BY = fac.both(Y.ravel())
        self._BY = BY.reshape(Y.shape + (2, 2))
        self._L = np.stack([lagrange_matrix(xs[p], Y[p]) for p in range(P)])  # (P, q, 2q, q)
        sw = np.sqrt(w)
        self.a_vec = (sw[:, None] * self.A[:, :, 0]).ravel()
        self.b_vec = (sw[:, None] * self.Bstar[:, 0, :].conj()).ravel()

    @property
    def size(self):
        return len(self.nodes)

    def matrix(self, kz):
        x, w, q = self.nodes, self.weights, self.quad.order
        N = len(x)
        P = len(self.edges) - 1
        S = regular_kernel_S(x[:, None], x[None, :], kz)
        T = np.einsum("iab,ijbc,jcd->iajd", self.A, S, self.Bstar)
        sw = np.sqrt(w)
        T *= (sw[:, None, None, None] * sw[None, None, :, None])
        xs = x.reshape(P, q)
        SY = regular_kernel_S(xs[:, :, None], self._Y, kz)  # (P, q, 2q, 2, 2)
        Ap = self.A.reshape(P, q, 2, 2)
        C = np.einsum("pil,piab,pilbc,pilcd,pilj->piajd", self._Om, Ap, SY, self._BY, self._L)
        swp = sw.reshape(P, q)
        C *= swp[:, :, None, None, None] / swp[:, None, None, :, None]
        for p in range(P):
            sl = slice(p * q, (p + 1) * q)
            T[sl, :, sl, :] = C[p]
        return T.reshape(2 * N, 2 * N)

    def system(self, kz, rank_one=False):
        M = np.zeros((2 * self.size,) * 2, dtype=complex) if rank_one else self.matrix(kz)
        return NystromSystem(self.nodes, self.weights, M, self.a_vec, self.b_vec, kz)

    def g(self, kappa, eps):
        """Characteristic function at ``kappa`` (any sheet)."""
        kz = KappaZ.from_kappa(kappa, self.m)
        return characteristic_g(self.system(kz), eps)


def assemble(V, kz, quad=None, rank_one=False):
    """Nystrom system for potential ``V`` (a PotentialSpec or its
    FactorizedPotential) at spectral parameter ``kz``.

    ``rank_one=True`` forces ``M = 0`` (test mode: g reduces to
    ``eps m <b, a> - kappa``).
    """
    V = getattr(V, "potential", V)
    return BirmanSchwinger(V, kz.m, quad).system(kz, rank_one=rank_one)


def characteristic_g(system, eps):
    """``eps m <b, (1 - eps M)^{-1} a> - kappa``."""
    kz = system.kz
    return complex(eps * kz.m * system.scalar(eps) - kz.kappa)


# --- roots ------------------------------------------------------------------


@dataclass
class KappaRoot:
    """A zero of the characteristic function and the matching energy."""

    kappa: complex
    z: complex
    residual: float
    sheet: str
    newton_iters: int
    winding_checked: bool = False
    kappa0: complex = None
    threshold: str = "plus_m"
    method: str = "bs"
    extra: dict = field(default_factory=dict)

    def as_dict(self):
        return {
            "kappa": [float(self.kappa.real), float(self.kappa.imag)],
            "z": [float(self.z.real), float(self.z.imag)],
            "residual": float(self.residual),
            "sheet": self.sheet,
            "iters": self.newton_iters,
            "winding": self.winding_checked,
            "threshold": self.threshold,
        }


def _tolerance(kappa):
    return 1e-10 * max(1.0, abs(kappa))


def _newton(G, kappa0, eps, maxiter=NEWTON_MAXITER):
    """Newton iteration with a central-difference derivative.

    Returns (kappa, residual, iterations) or None if it does not converge.
    """
    kappa = complex(kappa0)
    for it in range(maxiter + 1):
        g = G(kappa)
        if abs(g) <= _tolerance(kappa):
            return kappa, abs(g), it
        if it == maxiter:
            return None
        h = 1e-6 * max(abs(kappa), eps)
        dg = (G(kappa + h) - G(kappa - h)) / (2 * h)
        if dg == 0 or not np.isfinite(dg):
            return None
        step = g / dg
        kappa = kappa - step
        if not np.isfinite(kappa):
            return None
    return None


def _polish(G, kappa, eps, iters=3):
    """A few extra Newton steps once converged (cheap, tightens the root)."""
    best, best_res = kappa, abs(G(kappa))
    for _ in range(iters):
        h = 1e-6 * max(abs(kappa), eps)
        dg = (G(kappa + h) - G(kappa - h)) / (2 * h)
        kappa = kappa - G(kappa) / dg
        res = abs(G(kappa))
        if res < best_res:
            best, best_res = kappa, res
        else:
            break
    return best, best_res


def _expansion_data(V, m, tol=1e-12):
    U = compute_U(V, tol)
    L = compute_limit_moment(V, m, "plus", tol)
    return complex(U[0, 0]), complex(L[0, 0])


def _reduce(V, threshold):
    if threshold in ("plus_m", "plus", "+"):
        return V, 1.0
    if threshold in ("minus_m", "minus", "-"):
        return sigma1_conjugate(V, negate=True), -1.0
    raise ParameterError(f"unknown threshold {threshold!r}")


def _finish(G, kappa, res, it, eps, m, sign, kappa0, sheet_expected, threshold):
    kappa, res = _polish(G, kappa, eps)
    kz = KappaZ.from_kappa(kappa, m)
    return KappaRoot(kappa=kappa, z=sign * kz.z, residual=float(res), sheet=kz.sheet,
                     newton_iters=it, kappa0=kappa0, threshold=threshold)


def find_bound_state(V, m, eps, threshold="plus_m", quad=None, check_winding=False):
    """Gap eigenvalue bifurcating from ``+m`` (or ``-m``).

    The lower threshold is handled by ``sigma_1`` conjugation: eigenvalues
    of ``D_m - eps V`` are the negatives of those of
    ``D_m - eps (-sigma_1 V sigma_1)``.

    Returns ``None`` when the existence condition (``Re U11 > 0``, or
    ``Re U11 = 0`` and ``Re L11 > 0``) fails or no zero lies in the
    physical half-disc.
    """
    W, sign = _reduce(V, threshold)
    u11, l11 = _expansion_data(W, m)
    exists = u11.real > 1e-14 or (abs(u11.real) <= 1e-14 and l11.real > 0)
    if not exists:
        return None
    kappa0 = eps * m * u11 + eps**2 * m * l11
    bs = BirmanSchwinger(W, m, quad)
    G = lambda k: bs.g(k, eps)  # noqa: E731
    out = _newton(G, kappa0, eps)
    winding = None
    if out is None or out[0].real <= 0:
        winding = count_zeros_halfdisc(W, m, eps, quad=quad, _bs=bs)
        if winding == 0:
            return None
        box = _locate(G, m, 1e-3 * m)
        if box is None:
            raise ContourError("winding count positive but the zero could not be localised")
        out = _newton(G, box, eps)
        if out is None:
            raise ContourError("Newton failed after winding localisation")
    kappa, res, it = out
    root = _finish(G, kappa, res, it, eps, m, sign, kappa0, "physical", threshold)
    if check_winding and winding is None:
        winding = count_zeros_halfdisc(W, m, eps, quad=quad, _bs=bs)
    if winding is not None:
        root.winding_checked = True
        root.extra["winding"] = winding
    return root


def find_resonance(V, m, eps, threshold="plus_m", quad=None):
    """Second-sheet zero near the threshold for exponentially decaying V.

    Needs ``Re U11 < 0`` at the chosen threshold (after the ``sigma_1``
    reduction for ``minus_m``); returns ``None`` otherwise.
    """
    if V.decay.kind not in ("compact", "exponential", "gaussian"):
        raise ParameterError("resonances need compact, exponential or Gaussian decay")
    W, sign = _reduce(V, threshold)
    u11, l11 = _expansion_data(W, m)
    if not u11.real < -1e-14:
        return None
    kappa0 = eps * m * u11 + eps**2 * m * l11
    widen = 1.0
    if W.decay.kind == "exponential":
        a = W.decay.rate
        if not abs(kappa0.real) < a / 2:
            raise ParameterError(
                f"|Re kappa0| = {abs(kappa0.real):.3g} exceeds half the decay rate {a:.3g}")
        widen = a / (a - 2 * abs(kappa0.real))
    bs = BirmanSchwinger(W, m, quad, widen=widen)
    G = lambda k: bs.g(k, eps)  # noqa: E731
    out = _newton(G, kappa0, eps)
    if out is None:
        raise ContourError("Newton did not converge on the second sheet")
    kappa, res, it = out
    root = _finish(G, kappa, res, it, eps, m, sign, kappa0, "second", threshold)
    if root.sheet != "second":
        return None
    return root


# --- argument principle -----------------------------------------------------


def winding_number(G, segments, n_init=32, max_depth=30):
    """Winding number of ``G`` along a closed chain of segments.

    ``segments`` is a list of callables ``t -> kappa`` on [0, 1], joined end
    to start.  Each step is refined until the phase change between
    neighbouring samples is below pi/2.
    """
    total = 0.0
    for seg in segments:
        ts = np.linspace(0.0, 1.0, n_init + 1)
        vals = [G(seg(t)) for t in ts]
        stack = [(ts[i], ts[i + 1], vals[i], vals[i + 1], 0) for i in range(n_init)][::-1]
        while stack:
            t0, t1, g0, g1, depth = stack.pop()
            if g0 == 0 or g1 == 0:
                raise ContourError("contour passes through a zero")
            dphi = np.angle(g1 / g0)
            if abs(dphi) < np.pi / 2:
                total += dphi
                continue
            if depth >= max_depth:
                raise ContourError(f"phase not resolved near kappa={seg(t0):.6g}")
            tm = 0.5 * (t0 + t1)
            gm = G(seg(tm))
            stack.append((tm, t1, gm, g1, depth + 1))
            stack.append((t0, tm, g0, gm, depth + 1))
    return int(round(total / (2 * np.pi)))


def _halfdisc(radius, indent):
    rho = math.sqrt(radius**2 - indent**2)
    th = math.atan2(rho, indent)

    def arc(t):
        return radius * np.exp(1j * (-th + 2 * th * t))

    def seg(t):
        return complex(indent, rho - 2 * rho * t)

    return [arc, seg]


def _box(x0, x1, y0, y1):
    c = [complex(x0, y0), complex(x1, y0), complex(x1, y1), complex(x0, y1)]
    return [lambda t, a=c[i], b=c[(i + 1) % 4]: a + (b - a) * t for i in range(4)]


def _locate(G, m, indent, min_size=None):
    """Shrink a box inside the half-disc around a single zero."""
    s = 0.85 * m - indent
    x0, x1, y0, y1 = indent, indent + s, -s / 2, s / 2
    min_size = min_size or 1e-4 * m
    if winding_number(G, _box(x0, x1, y0, y1)) < 1:
        return None
    while x1 - x0 > min_size:
        xm, ym = 0.5 * (x0 + x1), 0.5 * (y0 + y1)
        for bx in ((x0, xm, y0, ym), (xm, x1, y0, ym), (x0, xm, ym, y1), (xm, x1, ym, y1)):
            try:
                if winding_number(G, _box(*bx)) >= 1:
                    x0, x1, y0, y1 = bx
                    break
            except ContourError:
                # zero sits on this box edge: its centre is close enough
                return complex(0.5 * (bx[0] + bx[1]), 0.5 * (bx[2] + bx[3]))
        else:
            break
    return complex(0.5 * (x0 + x1), 0.5 * (y0 + y1))


def count_zeros_halfdisc(V, m, eps, radius=None, indent=None, quad=None, _bs=None):
    """Number of zeros of g in ``{|kappa| < radius, Re kappa > indent}``.

    Defaults: ``radius = m``, ``indent = 1e-3 m``.
    """
    radius = m if radius is None else radius
    indent = 1e-3 * m if indent is None else indent
    bs = _bs or BirmanSchwinger(V, m, quad)
    return winding_number(lambda k: bs.g(k, eps), _halfdisc(radius, indent))
