"""Minimal-norm epsilon-solutions through the dual problem.

For ``||f||_Y > eps`` the dual minimizer satisfies

    Lambda v + eps v / ||v||_Y = f,        Lambda = L L*.

Writing ``eta = eps / ||v||_Y`` turns this into the linear system
``(Lambda + eta I) w = f`` plus one scalar condition, so the whole solve
reduces to finding the root of

    psi(eta) = eta * ||w(eta)||_Y - eps,

which is continuous and strictly increasing. Each evaluation of ``psi`` is a
single symmetric positive definite solve.
"""

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as la

from .exceptions import (
    BracketFailure,
    DependentBasis,
    DimensionMismatch,
    MaxIterations,
    ZeroVector,
)
from .linsolve import ShiftedSystem

__all__ = [
    "EpsProblem",
    "EpsSolution",
    "eval_dual",
    "solve_dual",
    "solve_dual_diagonal",
    "solve_finite_dim",
    "hessian_min_eig",
]

PSI_RTOL = 1e-10
BRACKET_RTOL = 1e-12
EXPANSION_FACTOR = 10.0
MAX_EXPANSIONS = 60
MAX_ITER = 200


@dataclass(frozen=True)
class EpsProblem:
    """``min ||u||_X  subject to  ||L u - f||_Y <= eps``."""

    operator: object
    target: np.ndarray
    eps: float

    def __post_init__(self):
        f = self.operator.codomain.check(self.target, "target")
        if f.ndim != 1:
            raise DimensionMismatch("target must be a vector")
        if not np.all(np.isfinite(f)):
            raise ValueError("target has non-finite entries")
        if not self.eps > 0:
            raise ValueError(f"eps must be positive, got {self.eps}")
        object.__setattr__(self, "target", f)
        object.__setattr__(self, "eps", float(self.eps))

    @property
    def space(self):
        return self.operator.codomain

    def target_norm(self):
        return self.space.norm(self.target)


@dataclass(frozen=True)
class EpsSolution:
    """Dual minimizer ``v_tilde`` and the primal solution ``u_tilde = L* v_tilde``.

    ``eta_star`` is the shift at which ``(Lambda + eta_star) v_tilde = f``; it
    equals ``eps / s`` for the plain dual problem and is ``inf`` for the zero
    solution. ``condition`` bounds the Y-condition number of the last shifted
    system that was solved.
    """

    v_tilde: np.ndarray
    u_tilde: np.ndarray
    s: float
    eta_star: float
    misfit: float
    iterations: int
    converged: bool
    condition: float = field(default=1.0)

    @property
    def is_zero(self):
        return self.s == 0.0


def eval_dual(problem, v):
    """``J(v) = 1/2 ||L* v||_X^2 + eps ||v||_Y - <f, v>_Y``."""
    op = problem.operator
    v = op.codomain.check(v, "v")
    u = op.adjoint()(v)
    return float(
        0.5 * op.domain.inner(u, u)
        + problem.eps * op.codomain.norm(v)
        - op.codomain.inner(problem.target, v)
    )


def _zero_solution(problem):
    op = problem.operator
    return EpsSolution(
        v_tilde=np.zeros(op.codomain.dim),
        u_tilde=np.zeros(op.domain.dim),
        s=0.0,
        eta_star=np.inf,
        misfit=problem.target_norm(),
        iterations=0,
        converged=True,
    )


def _bracket(psi, eta0, max_expansions):
    """Geometric search for ``lo < hi`` with ``psi(lo) < 0 < psi(hi)``."""
    p0 = psi(eta0)
    if p0 == 0.0:
        return eta0, p0, eta0, p0, 1
    evals = 1
    if p0 < 0.0:
        lo, plo = eta0, p0
        hi = eta0
        for _ in range(max_expansions):
            hi *= EXPANSION_FACTOR
            phi = psi(hi)
            evals += 1
            if phi > 0.0:
                return lo, plo, hi, phi, evals
            lo, plo = hi, phi
    else:
        hi, phi = eta0, p0
        lo = eta0
        for _ in range(max_expansions):
            lo /= EXPANSION_FACTOR
            plo = psi(lo)
            evals += 1
            if plo < 0.0:
                return lo, plo, hi, phi, evals
            hi, phi = lo, plo
    raise BracketFailure(
        f"no sign change of psi within {max_expansions} expansions from eta0={eta0:g}"
    )


def _root(psi, lo, plo, hi, phi, ftol, xrtol, max_iter):
    """Illinois false position on ``log(eta)`` with a bisection safeguard.

    Returns ``(eta, psi(eta), evaluations)``. Stops when ``-ftol <= psi <= -ftol/10``
    or the bracket is narrower than ``xrtol * lo``. The returned point always
    has ``psi <= 0``, so the residual ``eps + psi`` stays below ``eps`` with a
    margin that absorbs rounding when the residual is recomputed.
    """
    if plo == 0.0:
        return lo, plo, 0
    if phi == 0.0:
        return hi, phi, 0
    best = (lo, plo)
    tlo, thi = np.log(lo), np.log(hi)
    side = 0
    for it in range(1, max_iter + 1):
        t = (tlo * phi - thi * plo) / (phi - plo)
        width = thi - tlo
        # keep the iterate strictly inside and away from the ends
        if not (tlo + 1e-3 * width < t < thi - 1e-3 * width):
            t = 0.5 * (tlo + thi)
        eta = float(np.exp(t))
        p = psi(eta)
        if best[1] < p <= 0.0:
            best = (eta, p)
        if -ftol <= p <= -0.1 * ftol:
            return eta, p, it
        if p < 0.0:
            tlo, plo = t, p
            if side == -1:
                phi *= 0.5
            side = -1
        else:
            thi, phi = t, p
            if side == 1:
                plo *= 0.5
            side = 1
        if np.expm1(thi - tlo) <= xrtol:
            return best[0], best[1], it
    raise MaxIterations(f"root of psi not found in {max_iter} iterations")


def _initial_eta(gram_op, fnorm, eps):
    lam_bar = gram_op.gershgorin()
    if not lam_bar > 0.0:
        raise BracketFailure("Lambda vanishes; no eps-solution exists")
    return eps / fnorm * lam_bar


def solve_dual(problem, *, method="auto", max_iter=MAX_ITER,
               max_expansions=MAX_EXPANSIONS, psi_rtol=PSI_RTOL,
               bracket_rtol=BRACKET_RTOL):
    """Minimize the dual functional and return the eps-solution.

    Parameters
    ----------
    problem : EpsProblem
    method : {"auto", "direct", "cg"}
        Linear solver for the shifted systems; ``auto`` uses Cholesky up to
        dimension 512 and CG above.

    Returns
    -------
    EpsSolution
    """
    op = problem.operator
    space = op.codomain
    eps = problem.eps
    fnorm = problem.target_norm()
    if fnorm <= eps:
        return _zero_solution(problem)

    gram_op = op.gram_operator()
    adj = op.adjoint()
    system = ShiftedSystem(gram_op, problem.target, method=method)

    def psi(eta):
        # equals eta*||w|| - eps; evaluating the primal residual instead makes
        # psi <= 0 mean exactly "reported misfit <= eps"
        return space.norm(op(adj(system.solve(eta))) - problem.target) - eps

    eta0 = _initial_eta(gram_op, fnorm, eps)
    lo, plo, hi, phi, n_bracket = _bracket(psi, eta0, max_expansions)
    eta, _, n_root = _root(
        psi, lo, plo, hi, phi, psi_rtol * eps, bracket_rtol, max_iter
    )
    v = system.solve(eta)
    u = op.adjoint()(v)
    misfit = space.norm(op(u) - problem.target)
    lam_bar = gram_op.gershgorin()
    return EpsSolution(
        v_tilde=v,
        u_tilde=u,
        s=space.norm(v),
        eta_star=eta,
        misfit=misfit,
        iterations=n_bracket + n_root,
        converged=True,
        condition=(lam_bar + eta) / eta,
    )


def solve_dual_diagonal(lambdas, f_coeffs, eps, max_iter=400):
    """Dual solution for a diagonal ``Lambda`` in an orthonormal basis.

    Componentwise ``v_k = f_k / (lambda_k + eps/s)`` with ``s = ||v||``; the
    scalar ``s`` is fixed by plain geometric bisection on ``eta = eps/s``.
    Kept deliberately free of any linear algebra so it can check
    :func:`solve_dual`.

    Returns
    -------
    v_coeffs : ndarray
    s : float
        ``||v||``; zero (with zero coefficients) when ``||f|| <= eps``.
    """
    lam = np.asarray(lambdas, dtype=float)
    f = np.asarray(f_coeffs, dtype=float)
    if lam.shape != f.shape:
        raise DimensionMismatch("lambdas and f_coeffs differ in shape")
    if np.any(lam < 0):
        raise ValueError("lambdas must be nonnegative")
    if not eps > 0:
        raise ValueError("eps must be positive")
    if np.linalg.norm(f) <= eps:
        return np.zeros_like(f), 0.0

    def psi(eta):
        return eta * np.linalg.norm(f / (lam + eta)) - eps

    hi = max(float(lam.max()), 1.0)
    while psi(hi) <= 0.0:
        hi *= 2.0
    lo = hi
    while psi(lo) >= 0.0:
        lo *= 0.5
        if lo < 1e-300:
            raise BracketFailure("f has a component in the null space of Lambda larger than eps")
    for _ in range(max_iter):
        mid = np.sqrt(lo * hi)
        if not lo < mid < hi:
            break
        if psi(mid) < 0.0:
            lo = mid
        else:
            hi = mid
    eta = np.sqrt(lo * hi)
    v = f / (lam + eta)
    return v, float(np.linalg.norm(v))


def _orthonormal_E(space, basis_E):
    if basis_E is None or len(basis_E) == 0:
        return np.empty((space.dim, 0))
    vecs = np.column_stack([space.check(b) for b in basis_E])
    q, kept = space.orthonormalize(vecs)
    if len(kept) != vecs.shape[1]:
        raise DependentBasis("basis_E is linearly dependent in the Y inner product")
    return q


def solve_finite_dim(problem, basis_E, *, method="auto", max_iter=MAX_ITER,
                     max_expansions=MAX_EXPANSIONS):
    """Minimize ``J_E(v) = 1/2 ||L* v||^2 + eps ||P_perp v|| - <f, v>``.

    ``P_perp`` projects Y-orthogonally onto the complement of
    ``span(basis_E)``. The returned ``u_E = L* v_E`` matches ``f`` exactly on
    ``E`` (``P_E (L u_E - f) = 0``) and satisfies ``||L u_E - f|| <= eps``.

    Stationarity reads ``Lambda v + eta P_perp v = f`` with
    ``eta = eps / ||P_perp v||``, which is solved like :func:`solve_dual` with
    ``P_perp`` in place of the identity. When the E-restricted solution
    already leaves a residual of norm at most ``eps`` it is the minimizer,
    ``P_perp v = 0``, and ``eta_star`` is reported as ``inf``.
    """
    op = problem.operator
    space = op.codomain
    eps = problem.eps
    f = problem.target
    q = _orthonormal_E(space, basis_E)
    gram_op = op.gram_operator()
    gq = space.gram @ q

    # limiting case eta -> inf: v restricted to E, Galerkin-matched on E
    if q.shape[1]:
        sq = q.T @ gram_op.symmetric @ q
        try:
            a = la.solve(sq, gq.T @ f, assume_a="pos")
        except la.LinAlgError:
            raise DependentBasis("Lambda is singular on span(basis_E)")
        v_E = q @ a
    else:
        v_E = np.zeros(space.dim)
    r = f - gram_op(v_E)
    if space.norm(r) <= eps:
        u = op.adjoint()(v_E)
        return EpsSolution(
            v_tilde=v_E, u_tilde=u, s=space.norm(v_E), eta_star=np.inf,
            misfit=space.norm(op(u) - f), iterations=0, converged=True,
        )

    penalty = space.gram - gq @ gq.T
    penalty = 0.5 * (penalty + penalty.T)
    system = ShiftedSystem(gram_op, f, penalty=penalty, method=method)
    adj = op.adjoint()

    def psi(eta):
        return space.norm(op(adj(system.solve(eta))) - f) - eps

    eta0 = _initial_eta(gram_op, problem.target_norm(), eps)
    lo, plo, hi, phi, n_bracket = _bracket(psi, eta0, max_expansions)
    eta, _, n_root = _root(
        psi, lo, plo, hi, phi, PSI_RTOL * eps, BRACKET_RTOL, max_iter
    )
    v = system.solve(eta)
    u = op.adjoint()(v)
    return EpsSolution(
        v_tilde=v, u_tilde=u, s=space.norm(v), eta_star=eta,
        misfit=space.norm(op(u) - f), iterations=n_bracket + n_root,
        converged=True,
    )


def hessian_min_eig(op, v, eps):
    """Smallest eigenvalue of ``Lambda + (eps/||v||)(I - P_v)`` on Y.

    ``P_v`` is the Y-orthogonal projection onto ``span(v)``; this operator is
    the derivative of the Euler-Lagrange map at ``v``.
    """
    space = op.codomain
    v = space.check(v, "v")
    nv = space.norm(v)
    if nv == 0.0:
        raise ZeroVector("v must be nonzero")
    gv = space.riesz(v) / nv
    c = eps / nv
    s = op.gram_operator().symmetric + c * (space.gram - np.outer(gv, gv))
    s = 0.5 * (s + s.T)
    lam = la.eigh(s, space.gram, eigvals_only=True, subset_by_index=[0, 0])
    return float(lam[0])
