"""Closed-form weak-coupling predictions.

Every prediction is returned as a :class:`Prediction` whose ``value`` is
the sum of its ``order_terms`` (threshold included as the eps^0 term), so
fits can subtract any subset of terms.

Second order at the upper threshold.  Writing ``kappa = sqrt(m^2 - z^2)``
for the bound state, the characteristic equation gives
``kappa = eps m U11 + eps^2 m L11 + O(eps^3)`` with ``L = L^(+)`` from
:func:`gapspectra.moments.compute_limit_moment`, and
``z = m - kappa^2/(2m) + O(kappa^4)``, hence

    z = m - (m/2) U11^2 eps^2 - m U11 L11 eps^3 + O(eps^4).

For potentials without off-diagonal part ``L11 = F^(+)_11``, so the eps^3
coefficient is ``-m U11 F^(+)_11``.  The lower threshold follows from the
conjugation ``V -> -sigma_1 V sigma_1``, ``z -> -z``.

The two-term Schrodinger formula is available in two forms: ``'stated'``
squares ``m eps U + (m^2 eps^2/4) cross``; ``'corrected'`` squares
``m eps U - m^2 eps^2 cross``, which is what the one-dimensional
Birman-Schwinger expansion of ``-(1/2m) d^2 - eps v`` gives and what the
grid solver reproduces.
"""

from dataclasses import dataclass, field
import math

from .potentials import ParameterError

__all__ = [
    "Prediction",
    "predict_schrodinger_short",
    "predict_schrodinger_long",
    "predict_dirac_long",
    "predict_dirac_second_order",
    "predict_comparison",
    "second_order_coefficients",
    "ERROR_ORDERS",
]

ERROR_ORDERS = (
    "O(eps^(1+nu)) inside square",
    "o(eps^2)",
    "O(eps^4)",
    "o(eps^2 log^2 eps)",
    "O(sqrt(eps) lambdaS) + O(eps^3)",
)


@dataclass
class Prediction:
    """A truncated expansion evaluated at one eps.

    ``order_terms`` holds ``(power, coefficient, log_power)`` triples; the
    term contributes ``coefficient * eps**power * log(eps)**log_power``.
    """

    value: complex
    order_terms: list
    error_order: str
    source: str
    eps: float
    band_scale: float = 0.0
    notes: dict = field(default_factory=dict)

    def evaluate(self, eps=None, max_power=None):
        eps = self.eps if eps is None else eps
        total = 0j
        for p, c, lp in self.order_terms:
            if max_power is not None and p > max_power:
                continue
            term = c * eps**p
            if lp:
                term *= math.log(eps) ** lp
            total += term
        return total

    def as_dict(self):
        v = complex(self.value)
        return {
            "value": [v.real, v.imag],
            "order_terms": [[p, [complex(c).real, complex(c).imag], lp]
                            for p, c, lp in self.order_terms],
            "error_order": self.error_order,
            "source": self.source,
            "eps": self.eps,
            "band_scale": self.band_scale,
        }


def _make(terms, error_order, source, eps, **kw):
    p = Prediction(0j, terms, error_order, source, float(eps), **kw)
    p.value = p.evaluate()
    if p.value.imag == 0:
        p.value = complex(p.value.real, 0.0)
    return p


def predict_schrodinger_short(U_entry, cross, m, eps, terms=1, form="stated"):
    """First eigenvalue of ``-(1/2m) d^2/dx^2 - eps v`` for short-range v.

    ``terms=1``: ``-(1/2m)(m eps U)^2``.  ``terms=2`` adds the cross term:
    ``form='stated'`` uses ``+ (m^2 eps^2/4) cross`` inside the square and
    ``form='corrected'`` uses ``- m^2 eps^2 cross``.
    """
    if terms not in (1, 2):
        raise ParameterError("terms must be 1 or 2")
    U = complex(U_entry)
    a = m * U
    if terms == 1:
        return _make([(2, -a * a / (2 * m), 0)], "O(eps^(1+nu)) inside square",
                     "schrodinger_short_one_term", eps)
    if form == "stated":
        b = m * m * complex(cross) / 4
    elif form == "corrected":
        b = -m * m * complex(cross)
    else:
        raise ParameterError("form must be 'stated' or 'corrected'")
    order = [(2, -a * a / (2 * m), 0), (3, -a * b / m, 0), (4, -b * b / (2 * m), 0)]
    return _make(order, "o(eps^2)", f"schrodinger_short_two_term[{form}]", eps)


def _check_log_eps(eps):
    if not 0 < eps < 1:
        raise ParameterError("long-range predictions need 0 < eps < 1")


def predict_schrodinger_long(m, eps):
    """``-2 m eps^2 log^2 eps`` for a ``1/|x|`` tail."""
    _check_log_eps(eps)
    return _make([(2, -2.0 * m, 2)], "o(eps^2 log^2 eps)", "schrodinger_long", eps)


def predict_dirac_long(m, eps):
    """``m - 2 m eps^2 log^2 eps`` for a ``1/|x|`` tail in ``V11``."""
    _check_log_eps(eps)
    return _make([(0, float(m), 0), (2, -2.0 * m, 2)], "o(eps^2 log^2 eps)",
                  "dirac_long", eps)


def _coefficients(moments, m, threshold):
    """(threshold value, c2, c3) of the three-term expansion."""
    if threshold == "plus_m":
        U = complex(moments.U[0, 0])
        L = complex(moments.limit_plus[0, 0])
        return float(m), -m * U * U / 2, -m * U * L
    if threshold == "minus_m":
        U = complex(moments.U[1, 1])
        L = complex(moments.limit_minus[1, 1])
        return -float(m), m * U * U / 2, -m * U * L
    raise ParameterError("threshold must be 'plus_m' or 'minus_m'")


def second_order_coefficients(moments, m, threshold="plus_m"):
    """``(c2, c3)`` with ``z = +-m + c2 eps^2 + c3 eps^3 + O(eps^4)``."""
    _, c2, c3 = _coefficients(moments, m, threshold)
    return c2, c3


def predict_dirac_second_order(moments, m, eps, threshold="plus_m"):
    """Three-term expansion of the gap eigenvalue near ``+-m``.

    The existence condition (``Re U11 > 0`` at ``+m``, ``Re U22 < 0`` at
    ``-m``) is recorded in ``notes['exists']`` rather than enforced, so the
    formula can still be evaluated for comparison.
    """
    z0, c2, c3 = _coefficients(moments, m, threshold)
    U = complex(moments.U[0, 0] if threshold == "plus_m" else moments.U[1, 1])
    exists = U.real > 0 if threshold == "plus_m" else U.real < 0
    terms = [(0, z0, 0), (2, c2, 0), (3, c3, 0)]
    return _make(terms, "O(eps^4)", f"dirac_second_order[{threshold}]", eps,
                 notes={"exists": bool(exists)})


def predict_comparison(lambdaS, m, eps):
    """``m + lambdaS`` with band ``C (sqrt(eps) |lambdaS| + eps^3)``.

    ``band_scale`` holds the bracket; the constant C is left to the fit.
    """
    if lambdaS is None:
        lambdaS = 0.0
    if lambdaS > 0:
        raise ParameterError("lambdaS must be <= 0")
    band = math.sqrt(eps) * abs(lambdaS) + eps**3
    return _make([(0, float(m) + lambdaS, 0)], "O(sqrt(eps) lambdaS) + O(eps^3)",
                 "comparison", eps, band_scale=band)
