"""Estimator-style wrappers over a :class:`~epsrb.family.ProblemFamily`.

Rows of ``X`` are parameter vectors ``nu``; ``predict`` returns the
eps-solutions ``u`` as rows.
"""

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_array, check_is_fitted

from .eps_solver import EpsProblem, solve_dual
from .greedy import TrainingGrid, reconstruct_online, train_offline
from .tychonoff import estimate_eta_interval

__all__ = ["EpsSolver", "ReducedBasisSolver", "check_parameters"]


def check_parameters(family, X):
    """Validate ``X`` as an ``(n_samples, n_params)`` array inside the family box."""
    X = check_array(X, dtype=np.float64, ensure_min_samples=0)
    if X.shape[1] != family.n_params:
        raise ValueError(f"X has {X.shape[1]} columns, the family has {family.n_params} parameters")
    return np.array([family.check_nu(nu) for nu in X]).reshape(X.shape)


class EpsSolver(BaseEstimator):
    """Full-order eps-solutions for a problem family.

    Parameters
    ----------
    family : ProblemFamily
    eps : float, optional
        Overrides ``family.eps``.
    method : {"auto", "direct", "cg"}
        Linear solver inside the dual root-find.

    Attributes
    ----------
    eps_ : float
    f_minus_ : float
        Smallest ``||f_nu||_Y`` over the fitted parameters.
    """

    def __init__(self, family, eps=None, method="auto"):
        self.family = family
        self.eps = eps
        self.method = method

    def fit(self, X, y=None):
        X = check_parameters(self.family, X)
        self.eps_ = self.family.eps if self.eps is None else float(self.eps)
        norms = self.family.target_norms(X) if len(X) else np.array([np.inf])
        self.f_minus_ = float(norms.min())
        self.n_features_in_ = self.family.n_params
        return self

    def solve(self, X):
        """List of :class:`EpsSolution`, one per row of ``X``."""
        check_is_fitted(self, "eps_")
        X = check_parameters(self.family, X)
        out = []
        for nu in X:
            op, f = self.family.assemble(nu)
            out.append(solve_dual(EpsProblem(op, f, self.eps_), method=self.method))
        return out

    def predict(self, X):
        sols = self.solve(X)
        return np.array([s.u_tilde for s in sols]).reshape(len(sols), self.family.domain.dim)


class ReducedBasisSolver(BaseEstimator):
    """Offline greedy training and online eps-reconstruction.

    ``fit`` takes the training parameters, brackets ``eta*`` over them and
    trains a basis on the product of those parameters with ``n_eta`` values
    of ``eta``.

    Attributes
    ----------
    eta_interval_ : EtaInterval
    grid_ : TrainingGrid
    basis_ : ReducedBasis
    history_ : ndarray
        Largest training surrogate after each selection.
    """

    def __init__(self, family, delta=1e-6, n_eta=16, eta_spacing="log", safety_factor=2.0,
                 tol_online=1e-3, projection="residual", workers=None):
        self.family = family
        self.delta = delta
        self.n_eta = n_eta
        self.eta_spacing = eta_spacing
        self.safety_factor = safety_factor
        self.tol_online = tol_online
        self.projection = projection
        self.workers = workers

    def fit(self, X, y=None):
        X = check_parameters(self.family, X)
        self.eta_interval_ = estimate_eta_interval(self.family, X, self.safety_factor)
        self.grid_ = TrainingGrid.from_interval(X, self.eta_interval_, self.n_eta, self.eta_spacing)
        self.basis_ = train_offline(self.family, self.grid_, self.delta,
                                    workers=self.workers, projection=self.projection)
        self.history_ = np.asarray(self.basis_.history)
        self.n_features_in_ = self.family.n_params
        return self

    def _online(self, X):
        check_is_fitted(self, "basis_")
        X = check_parameters(self.family, X)
        return [reconstruct_online(self.basis_, self.family, nu) for nu in X]

    def transform(self, X):
        """Reduced coefficients, one row per parameter."""
        return np.array([r.alphas for r in self._online(X)]).reshape(-1, self.basis_.size)

    def predict(self, X):
        return np.array([r.u_approx for r in self._online(X)]).reshape(-1, self.family.domain.dim)

    def misfit(self, X):
        return np.array([r.misfit for r in self._online(X)])

    def score(self, X, y=None):
        """Fraction of parameters with misfit within ``eps * (1 + tol_online)``."""
        m = self.misfit(X)
        return float(np.mean(m <= self.family.eps * (1.0 + self.tol_online))) if m.size else 1.0
