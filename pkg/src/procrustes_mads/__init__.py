"""Orthogonal Procrustes alignment under the Frobenius, spectral and robust norms.

The Frobenius problem is solved in closed form; the spectral and robust
problems are solved by mesh-adaptive direct search (LTMADS) on the
orthogonal group. The package also contains the planar "duck" alignment
experiments and Procrustes-based two-sample tests for random dot product
graphs.
"""
from .exceptions import ContractError, InputError, NumericalError
from .mads import MadsParams, MadsResult, minimize
from .procrustes import NormKind, ProcrustesSolution, angle_sweep, cost, solve, solve_frobenius, solve_mads

__all__ = [
    "ContractError",
    "InputError",
    "NumericalError",
    "MadsParams",
    "MadsResult",
    "minimize",
    "NormKind",
    "ProcrustesSolution",
    "angle_sweep",
    "cost",
    "solve",
    "solve_frobenius",
    "solve_mads",
]

__version__ = "0.1.0"
