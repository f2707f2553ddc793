"""Numerical laboratory for Möbius-bubble Jacobians on the unit disc.

Subpackages are imported lazily by the command line; the most used entry
points are re-exported here.
"""

from .disc import PolarGrid, ScalarField, focus_for_epsilon, make_polar_grid
from .mobius import BubbleSpec, bubble_fields, jacobian_density, mobius_eval
from .norms import hminus1, lorentz21, lp_norm, mprime_lorentz21, norm_report
from .spectral import solve_dirichlet_spectral, solve_neumann_spectral

__version__ = "0.1.0"
