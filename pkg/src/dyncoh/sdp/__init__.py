"""Dense SDP modeling and solving.

Typical use::

    p = ConicProblem()
    X = p.hermitian("X", 4)
    p.add_ge(X, J)
    p.minimize(X.trace())
    rep = solve(p)
"""

from .model import Affine, ConicProblem, herm_basis, hvec, hunvec
from .core import (IllPosedProblem, SolveReport, SolverError, Tolerances,
                    backends, register_backend, solve, use_backend)

__all__ = [
    "Affine", "ConicProblem", "IllPosedProblem", "SolveReport", "SolverError",
    "Tolerances", "backends", "herm_basis", "hunvec", "hvec", "register_backend", "solve",
    "use_backend",
]
