"""Travelling waves of a Frenkel-Kontorova chain with a piecewise-linear on-site force.

Solves ``c^2 u'' - (u(x+1) - 2u(x) + u(x-1)) + alpha u - alpha psi'(u) = 0``
for ``psi' = sgn`` and its mollification, with certified linear inversion,
two-transition gluing and a time-domain check on the chain.
"""

__version__ = "0.1.0"

from .dispersion import K0, Params, D, D_prime, dispersion_eval, inversion_constants, kernel_roots  # noqa: E402
from .errors import FKWaveError, InvalidParams  # noqa: E402
from .fields import CompositeField, Grid, apply_L, h2_norm, solver_grid, weighted_norm  # noqa: E402
from .linsolve import invert_L, project_moment  # noqa: E402
from .waves import SolverConfig, check_conditions, solve_stage1, solve_stage2, stage1_for  # noqa: E402
from .twotrans import solve_two_transition  # noqa: E402
from .lattice import simulate  # noqa: E402

__all__ = [
    "__version__", "K0", "Params", "D", "D_prime", "dispersion_eval", "inversion_constants", "kernel_roots",
    "FKWaveError", "InvalidParams", "CompositeField", "Grid", "apply_L", "h2_norm", "solver_grid", "weighted_norm",
    "invert_L", "project_moment", "SolverConfig", "check_conditions", "solve_stage1", "solve_stage2", "stage1_for",
    "solve_two_transition", "simulate",
]
