"""Positive periodic and subharmonic solutions of u'' + c u' + q(t) g(u) = 0 with sign-changing q."""

__version__ = "0.1.0"

from .weights import WeightSpec, decompose_humps, mean_value, mu_sharp  # noqa: E402
from .nonlinearity import ExtendedField, Nonlinearity, check_hypotheses, make_nonlinearity  # noqa: E402
from .dynamics import Trajectory, integrate, poincare_map  # noqa: E402
from .periodic import (HumpString, PeriodicOrbit, classify_string, dedup_classes,  # noqa: E402
                       find_periodic_orbits, minimal_order, necessary_condition_residuals,
                       newton_shoot, seed_guesses)
from .spectral import dirichlet_eigenvalue, principal_eigenvalue, verify_morse  # noqa: E402
from .oscillation import count_zeros_diff, winding  # noqa: E402
from .combinatorics import canonical_necklace, lyndon_words, moebius, witt_count  # noqa: E402
