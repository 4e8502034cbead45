"""Composite Gauss-Legendre rules and the helpers shared by the integral
modules (panel layout, diagonal-split rules, Lagrange interpolation)."""

from functools import lru_cache

import numpy as np


@lru_cache(maxsize=None)
def gauss_legendre(order):
    """Nodes and weights of the ``order``-point rule on [-1, 1]."""
    t, w = np.polynomial.legendre.leggauss(order)
    t.setflags(write=False)
    w.setflags(write=False)
    return t, w


def map_rule(a, b, order):
    """Gauss-Legendre rule on [a, b]. ``a`` and ``b`` may be arrays."""
    t, w = gauss_legendre(order)
    a = np.asarray(a, dtype=float)[..., None]
    b = np.asarray(b, dtype=float)[..., None]
    half = 0.5 * (b - a)
    return a + half * (t + 1.0), half * w


def panel_edges(lo, hi, n_panels, breakpoints=()):
    """Split [lo, hi] into roughly ``n_panels`` panels.

    Every breakpoint strictly inside the interval becomes a panel edge, and
    the remaining panels are distributed in proportion to piece length.
    """
    cuts = sorted({float(b) for b in breakpoints if lo < b < hi})
    pieces = np.array([lo] + cuts + [hi])
    lengths = np.diff(pieces)
    counts = np.maximum(1, np.round(n_panels * lengths / lengths.sum()).astype(int))
    edges = [np.linspace(a, b, c + 1)[:-1] for a, b, c in zip(pieces[:-1], pieces[1:], counts)]
    return np.concatenate(edges + [np.array([hi])])


def composite_rule(edges, order):
    """Composite rule over consecutive panels.

    Returns nodes, weights and the panel index of every node.
    """
    edges = np.asarray(edges, dtype=float)
    x, w = map_rule(edges[:-1], edges[1:], order)
    panel = np.repeat(np.arange(len(edges) - 1), order)
    return x.ravel(), w.ravel(), panel


def split_rule(a, b, x, order):
    """Rules on [a, x] and [x, b] concatenated, for kernels with a kink at x.

    ``x`` is an array of split points inside [a, b]; the result has shape
    ``x.shape + (2 * order,)``.
    """
    yl, wl = map_rule(np.broadcast_to(a, np.shape(x)), x, order)
    yr, wr = map_rule(x, np.broadcast_to(b, np.shape(x)), order)
    return np.concatenate([yl, yr], axis=-1), np.concatenate([wl, wr], axis=-1)


def lagrange_matrix(nodes, targets):
    """Matrix ``L`` with ``L @ f(nodes) = p(targets)`` for the interpolant p.

    Uses the barycentric formula; exact hits return unit rows.
    """
    nodes = np.asarray(nodes, dtype=float)
    targets = np.asarray(targets, dtype=float)
    center = 0.5 * (nodes.max() + nodes.min())
    scale = 0.5 * (nodes.max() - nodes.min()) or 1.0
    nodes = (nodes - center) / scale
    targets = (targets - center) / scale
    diff = nodes[:, None] - nodes[None, :]
    np.fill_diagonal(diff, 1.0)
    bary = 1.0 / diff.prod(axis=1)
    d = targets[..., None] - nodes
    hit = d == 0.0
    d[hit] = 1.0
    terms = bary / d
    L = terms / terms.sum(axis=-1, keepdims=True)
    rows = hit.any(axis=-1)
    L[rows] = hit[rows].astype(float)
    return L
