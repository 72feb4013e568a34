"""Parameter-dependent problem families ``nu -> (L_nu, f_nu)``."""

import hashlib
import itertools
import json

import numpy as np

from .exceptions import DimensionMismatch, InfeasibleFamily, ParameterOutOfDomain
from .operator_core import BoundedOperator

__all__ = ["ProblemFamily", "CallableFamily"]


class ProblemFamily:
    """Base class for a family over a compact parameter box.

    Subclasses implement :meth:`operator` and :meth:`target`. The X and Y
    spaces are shared by all members of the family.

    Parameters
    ----------
    domain, codomain : SpaceDef
        The spaces X and Y.
    nu_box : (d, 2) array_like
        Lower and upper bound of every parameter coordinate.
    eps : float
        Tolerance of the eps-problems.
    """

    def __init__(self, domain, codomain, nu_box, eps):
        box = np.atleast_2d(np.asarray(nu_box, dtype=float))
        if box.ndim != 2 or box.shape[1] != 2 or np.any(box[:, 0] > box[:, 1]):
            raise ValueError("nu_box must be a (d, 2) array of [low, high] rows")
        if not eps > 0:
            raise ValueError("eps must be positive")
        box.setflags(write=False)
        self.domain = domain
        self.codomain = codomain
        self.nu_box = box
        self.eps = float(eps)

    @property
    def n_params(self):
        return self.nu_box.shape[0]

    def operator(self, nu):
        raise NotImplementedError

    def target(self, nu):
        raise NotImplementedError

    def assemble(self, nu):
        nu = self.check_nu(nu)
        return self.operator(nu), self.target(nu)

    def check_nu(self, nu, atol=1e-12):
        nu = np.atleast_1d(np.asarray(nu, dtype=float))
        if nu.shape != (self.n_params,):
            raise DimensionMismatch(
                f"parameter has shape {nu.shape}, family expects ({self.n_params},)"
            )
        span = self.nu_box[:, 1] - self.nu_box[:, 0]
        slack = atol * np.maximum(span, 1.0)
        if np.any(nu < self.nu_box[:, 0] - slack) or np.any(nu > self.nu_box[:, 1] + slack):
            raise ParameterOutOfDomain(f"nu={nu.tolist()} lies outside {self.nu_box.tolist()}")
        return nu

    def sample(self, n, seed=None):
        """``n`` parameters drawn uniformly from the box."""
        rng = np.random.default_rng(seed)
        lo, hi = self.nu_box[:, 0], self.nu_box[:, 1]
        return lo + (hi - lo) * rng.random((n, self.n_params))

    def grid(self, counts):
        """Tensor grid with ``counts[j]`` equispaced points along axis ``j``.

        Points are ordered lexicographically (last axis fastest).
        """
        counts = np.broadcast_to(np.asarray(counts, dtype=int), (self.n_params,))
        axes = [
            np.linspace(lo, hi, c) if c > 1 else np.array([0.5 * (lo + hi)])
            for (lo, hi), c in zip(self.nu_box, counts)
        ]
        return np.array(list(itertools.product(*axes)), dtype=float).reshape(-1, self.n_params)

    def description(self):
        """JSON-serializable definition of the family, used for fingerprints."""
        return {"nu_box": self.nu_box.tolist(), "eps": self.eps}

    def fingerprint(self):
        blob = json.dumps(self.description(), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()

    def target_norms(self, nus):
        return np.array([self.codomain.norm(self.target(self.check_nu(nu))) for nu in nus])

    def check_feasible(self, nus):
        """Raise :class:`InfeasibleFamily` unless ``||f_nu|| > eps`` on ``nus``.

        Returns the smallest target norm found.
        """
        norms = self.target_norms(nus)
        bad = np.flatnonzero(norms <= self.eps)
        if bad.size:
            i = bad[0]
            raise InfeasibleFamily(
                f"||f_nu||_Y = {norms[i]!r} <= eps = {self.eps!r} at nu={np.asarray(nus)[i].tolist()}"
            )
        return float(norms.min())


class CallableFamily(ProblemFamily):
    """Family given by two callables ``nu -> matrix`` and ``nu -> f``."""

    def __init__(self, domain, codomain, nu_box, eps, operator_fn, target_fn, name="callable"):
        super().__init__(domain, codomain, nu_box, eps)
        self._operator_fn = operator_fn
        self._target_fn = target_fn
        self.name = name

    def operator(self, nu):
        return BoundedOperator(self._operator_fn(nu), self.domain, self.codomain)

    def target(self, nu):
        return self.codomain.check(np.asarray(self._target_fn(nu), dtype=float), "target")

    def description(self):
        d = super().description()
        d["name"] = self.name
        return d
