"""Free Dirac resolvent kernel and its threshold split.

For ``D_m = [[m, d/dx], [-d/dx, -m]]`` and ``kappa = sqrt(m^2 - z^2)``
(``Re kappa >= 0``) the resolvent kernel is

    R_z(x, y) = e^{-kappa r}/2 [[(z+m)/kappa, -s], [s, (z-m)/kappa]],

with ``r = |x - y|`` and ``s = sgn(x - y)``.  Splitting off the rank-one
singular part at the upper threshold gives

    R_z = (m/kappa) P+^* P+ + S_z,
    S_z = (e^{-kappa r} - 1)(m/kappa) P+^* P+
          + e^{-kappa r} (-(s/2) i sigma_2 + (z-m)/(2 kappa) Id),

and ``S_z -> M1 = [[-m r, -s/2], [s/2, 0]]`` as ``kappa -> 0``.

All kernels are evaluated in terms of ``kappa``; the factor ``(z-m)/kappa``
is always computed as ``-kappa/(z+m)`` and ``(e^{-kappa r}-1)/kappa`` by a
series for small ``kappa r``.
"""

from dataclasses import dataclass

import numpy as np

__all__ = [
    "KappaZ",
    "ThresholdError",
    "kappa_of_z",
    "z_of_kappa",
    "resolvent_kernel",
    "regular_kernel_S",
    "limit_kernel_M1",
]

SERIES_CUTOFF = 1e-4


class ThresholdError(ValueError):
    """Singular kernel requested at kappa = 0."""


def z_of_kappa(kappa, m):
    """``z = sqrt(m^2 - kappa^2)`` (principal branch, Re z >= 0), written as
    ``m - kappa^2 / (m + sqrt(m^2 - kappa^2))`` to avoid cancellation."""
    kappa = complex(kappa)
    return m - kappa**2 / (m + np.sqrt(complex(m * m - kappa**2)))


@dataclass(frozen=True)
class KappaZ:
    """Spectral parameter z together with kappa(z).

    ``sheet`` is 'physical' when ``Re kappa >= 0`` and 'second' otherwise.
    """

    z: complex
    kappa: complex
    m: float
    sheet: str = "physical"
    threshold: bool = False

    @classmethod
    def from_kappa(cls, kappa, m):
        kappa = complex(kappa)
        sheet = "physical" if kappa.real >= 0 else "second"
        return cls(z=z_of_kappa(kappa, m), kappa=kappa, m=float(m), sheet=sheet,
                   threshold=kappa == 0)


def kappa_of_z(z, m):
    """``kappa(z) = sqrt(m^2 - z^2)`` on the physical sheet.

    Purely imaginary results (z on the cut) are returned with Im kappa >= 0;
    at ``z = +-m`` the result carries ``threshold=True``.
    """
    z = complex(z)
    k = np.sqrt(complex(m * m - z * z))
    if k.real < 0:
        k = -k
    if k.real == 0 and k.imag < 0:
        k = -k
    return KappaZ(z=z, kappa=complex(k), m=float(m), sheet="physical", threshold=k == 0)


def _expm1_over_kappa(kappa, r):
    """``(e^{-kappa r} - 1)/kappa``, finite at kappa = 0."""
    kr = kappa * r
    small = np.abs(kr) < SERIES_CUTOFF
    safe = np.where(small, 1.0, kappa)
    direct = np.expm1(-kr) / safe
    series = -r * (1 - kr / 2 + kr**2 / 6 - kr**3 / 24)
    return np.where(small, series, direct)


def resolvent_kernel(x, y, kz):
    """``R_z(x, y)`` as an array of shape ``broadcast(x, y).shape + (2, 2)``."""
    if kz.kappa == 0:
        raise ThresholdError("R_z is singular at the threshold; use regular_kernel_S")
    x, y = np.broadcast_arrays(np.asarray(x, float), np.asarray(y, float))
    r = np.abs(x - y)
    s = np.sign(x - y)
    k, z, m = kz.kappa, kz.z, kz.m
    e = 0.5 * np.exp(-k * r)
    out = np.empty(x.shape + (2, 2), dtype=complex)
    out[..., 0, 0] = e * (z + m) / k
    out[..., 0, 1] = -e * s
    out[..., 1, 0] = e * s
    out[..., 1, 1] = -e * k / (z + m)
    return out


def regular_kernel_S(x, y, kz):
    """``S_z(x, y) = R_z(x, y) - (m/kappa) P+^* P+``, finite for all kappa."""
    x, y = np.broadcast_arrays(np.asarray(x, float), np.asarray(y, float))
    r = np.abs(x - y)
    s = np.sign(x - y)
    k, z, m = kz.kappa, kz.z, kz.m
    e = np.exp(-k * r)
    ratio = -k / (z + m)
    out = np.empty(x.shape + (2, 2), dtype=complex)
    out[..., 0, 0] = m * _expm1_over_kappa(k, r) + 0.5 * e * ratio
    out[..., 0, 1] = -0.5 * e * s
    out[..., 1, 0] = 0.5 * e * s
    out[..., 1, 1] = 0.5 * e * ratio
    return out


def limit_kernel_M1(x, y, m):
    """``[[-m|x-y|, -sgn(x-y)/2], [sgn(x-y)/2, 0]]``."""
    x, y = np.broadcast_arrays(np.asarray(x, float), np.asarray(y, float))
    s = np.sign(x - y)
    out = np.zeros(x.shape + (2, 2), dtype=complex)
    out[..., 0, 0] = -m * np.abs(x - y)
    out[..., 0, 1] = -0.5 * s
    out[..., 1, 0] = 0.5 * s
    return out
