"""Weak-coupling eigenvalues of one-dimensional Dirac operators in the gap.

Solvers for eigenvalues of ``D_m - eps V`` near the thresholds ``+-m``:
a Birman-Schwinger Nystrom root finder, a finite-difference grid solver, a
min-max (variational) solver, plus the moment integrals and closed-form
expansions they are compared against.
"""

__version__ = "0.1.0"

from .potentials import (  # noqa: E402
    Decay,
    ParameterError,
    PotentialSpec,
    check_hypotheses,
    factorize,
    from_csv,
    from_function,
    make_builtin,
    scale,
    sigma1_conjugate,
    sigma2_parity_conjugate,
    zero_potential,
)
from .moments import MomentSet, compute_moments  # noqa: E402
from .resolvent import KappaZ, kappa_of_z, z_of_kappa  # noqa: E402
from .birman_schwinger import (  # noqa: E402
    QuadratureSpec,
    count_zeros_halfdisc,
    find_bound_state,
    find_resonance,
)
from .grid import GridSpec, dirac_eigen_in_gap, schrodinger_ground_state  # noqa: E402
from .minmax import gamma0, gamma1, solve_minmax  # noqa: E402
from .asymptotics import (  # noqa: E402
    Prediction,
    predict_comparison,
    predict_dirac_long,
    predict_dirac_second_order,
    predict_schrodinger_long,
    predict_schrodinger_short,
)
