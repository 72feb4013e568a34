"""Minimal-norm eps-solutions of ill-posed linear problems and greedy reduced bases.

The core objects are Gram-matrix spaces (:class:`SpaceDef`), operators
between them (:class:`BoundedOperator`), the dual eps-solver
(:func:`solve_dual`) and the offline/online reduced basis
(:func:`train_offline`, :func:`reconstruct_online`). :mod:`epsrb.elliptic`
provides a one-dimensional parametric elliptic testbed.
"""

from .archive import load_basis, save_basis
from .config import RunConfig, load_config, parse_config
from .eps_solver import (
    EpsProblem,
    EpsSolution,
    eval_dual,
    hessian_min_eig,
    solve_dual,
    solve_dual_diagonal,
    solve_finite_dim,
)
from .estimators import EpsSolver, ReducedBasisSolver
from .exceptions import *  # noqa: F401,F403
from .family import CallableFamily, ProblemFamily
from .greedy import OnlineResult, ReducedBasis, TrainingGrid, reconstruct_online, surrogate_report, train_offline
from .operator_core import BoundedOperator, GramOperator, SpaceDef, adjoint, euclidean, gram_apply, make_space
from .tychonoff import EtaInterval, TychProblem, audit_containment, estimate_eta_interval, residual, solve_tychonoff

__version__ = "0.1.0"
