"""Tychonoff-regularized two-parameter family ``(Lambda_nu + eta I) w = f_nu``.

Replacing ``eps N(v)`` by ``eta v`` makes the problem linear and uniformly
coercive (all eigenvalues at least ``eta``), so its residual is a two-sided
estimate of the error:

    eta ||w_tilde - w|| <= ||R w|| <= (||Lambda|| + eta) ||w_tilde - w||.
"""

from dataclasses import dataclass

import numpy as np

from .eps_solver import EpsProblem, solve_dual
from .exceptions import ContainmentFailure, DimensionMismatch, InfeasibleFamily
from .linsolve import ShiftedSystem

__all__ = [
    "TychProblem",
    "EtaInterval",
    "solve_tychonoff",
    "residual",
    "residual_constants",
    "estimate_eta_interval",
    "audit_containment",
]


@dataclass(frozen=True)
class TychProblem:
    operator: object
    target: np.ndarray
    eta: float

    def __post_init__(self):
        f = self.operator.codomain.check(self.target, "target")
        if f.ndim != 1:
            raise DimensionMismatch("target must be a vector")
        if not self.eta > 0:
            raise ValueError(f"eta must be positive, got {self.eta}")
        object.__setattr__(self, "target", f)
        object.__setattr__(self, "eta", float(self.eta))


def solve_tychonoff(problem, method="auto"):
    """Exact solution of ``(Lambda + eta I) w = f``."""
    system = ShiftedSystem(problem.operator.gram_operator(), problem.target, method=method)
    return system.solve(problem.eta)


def residual(problem, w):
    """Residual ``R = Lambda w + eta w - f`` and its Y-norm."""
    op = problem.operator
    space = op.codomain
    w = space.check(w, "w")
    r = op.gram_operator()(w) + problem.eta * w - problem.target
    return r, space.norm(r)


def residual_constants(problem):
    """``(c_minus, c_plus) = (eta, ||Lambda|| + eta)``."""
    return problem.eta, problem.operator.gram_operator().norm() + problem.eta


@dataclass(frozen=True)
class EtaInterval:
    """``[eta_minus, eta_plus] = [eps / v_plus, eps / v_minus]``."""

    eta_minus: float
    eta_plus: float
    v_minus: float
    v_plus: float

    def __post_init__(self):
        if not 0 < self.eta_minus <= self.eta_plus:
            raise ValueError(f"invalid eta interval [{self.eta_minus}, {self.eta_plus}]")

    @classmethod
    def from_bounds(cls, eps, v_minus, v_plus):
        return cls(eps / v_plus, eps / v_minus, v_minus, v_plus)

    def __contains__(self, eta):
        return self.eta_minus <= eta <= self.eta_plus

    def grid(self, n, spacing="log"):
        """``n`` points spanning the interval, endpoints included."""
        if n == 1:
            return np.array([np.sqrt(self.eta_minus * self.eta_plus)])
        if spacing == "log":
            pts = np.geomspace(self.eta_minus, self.eta_plus, n)
        elif spacing == "uniform":
            pts = np.linspace(self.eta_minus, self.eta_plus, n)
        else:
            raise ValueError(f"unknown spacing {spacing!r}")
        pts[0], pts[-1] = self.eta_minus, self.eta_plus
        return pts


def estimate_eta_interval(family, samples, safety_factor=2.0):
    """Bracket ``eta* = eps / ||v_nu||`` over the family.

    The lower solution bound ``v_minus = (f_minus - eps) / L_plus`` follows from
    the Euler-Lagrange equation. The upper bound has no constructive formula;
    it is taken as ``safety_factor`` times the largest ``||v_nu||`` observed on
    ``samples``.
    """
    samples = np.atleast_2d(np.asarray(samples, dtype=float))
    if samples.shape[0] == 0:
        raise ValueError("samples must be nonempty")
    eps = family.eps
    f_norms, lam_norms, v_norms = [], [], []
    for nu in samples:
        op, f = family.assemble(nu)
        fn = family.codomain.norm(f)
        if fn <= eps:
            raise InfeasibleFamily(
                f"||f_nu||_Y = {fn!r} <= eps = {eps!r} at nu={nu.tolist()}"
            )
        f_norms.append(fn)
        lam_norms.append(op.gram_operator().norm())
        v_norms.append(solve_dual(EpsProblem(op, f, eps)).s)
    v_minus = (min(f_norms) - eps) / max(lam_norms)
    v_plus = safety_factor * max(v_norms)
    return EtaInterval.from_bounds(eps, v_minus, v_plus)


def audit_containment(interval, family, nus):
    """Check ``eta*_nu`` lies in ``interval`` for every ``nu``.

    Returns the array of optimal ``eta*`` values; raises
    :class:`ContainmentFailure` on the first parameter that escapes.
    """
    etas = []
    for nu in np.atleast_2d(nus):
        op, f = family.assemble(nu)
        eta = solve_dual(EpsProblem(op, f, family.eps)).eta_star
        if eta not in interval:
            raise ContainmentFailure(
                f"eta*={eta!r} at nu={nu.tolist()} outside "
                f"[{interval.eta_minus!r}, {interval.eta_plus!r}]"
            )
        etas.append(eta)
    return np.array(etas)
