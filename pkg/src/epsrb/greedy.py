"""Weak-greedy reduced basis over (nu, eta) and online eps-reconstruction.

Offline, the greedy loop approximates every training pair in the current
basis, scores it with the Tychonoff residual norm
``||(Lambda_nu + eta) w - f_nu||_Y`` and admits the exact solution at the
worst pair. Online, the target ``f_nu`` is projected onto
``span{Lambda_nu w_i}`` and the eps-solution is read off as
``sum_i alpha_i L_nu* w_i``.
"""

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as la

from .exceptions import EmptyBasis, EmptyGrid, ParameterOutOfDomain, StagnationWithoutConvergence
from .tychonoff import TychProblem, solve_tychonoff

__all__ = [
    "TrainingGrid",
    "ReducedBasis",
    "OnlineResult",
    "train_offline",
    "reconstruct_online",
    "surrogate_report",
    "default_workers",
]

ORTHO_TOL = 1e-12
GRAMIAN_CUTOFF = 1e-12
WORKERS_ENV = "EPSRB_WORKERS"


def default_workers():
    env = os.environ.get(WORKERS_ENV)
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


@dataclass(frozen=True)
class TrainingGrid:
    """Product grid ``nu_points x eta_points``.

    Pairs are enumerated lexicographically by ``(nu index, eta index)``; that
    order is also the greedy tie-break.
    """

    nu_points: np.ndarray
    eta_points: np.ndarray

    def __post_init__(self):
        nus = np.atleast_2d(np.asarray(self.nu_points, dtype=float))
        etas = np.atleast_1d(np.asarray(self.eta_points, dtype=float))
        if nus.size == 0:
            nus = nus.reshape(0, max(nus.shape[-1], 1))
        if np.any(etas <= 0):
            raise ValueError("eta points must be positive")
        object.__setattr__(self, "nu_points", nus)
        object.__setattr__(self, "eta_points", etas)

    @classmethod
    def from_interval(cls, nu_points, interval, n_eta, spacing="log"):
        return cls(nu_points, interval.grid(n_eta, spacing))

    def __len__(self):
        return self.nu_points.shape[0] * self.eta_points.size

    def pair(self, index):
        i, j = divmod(index, self.eta_points.size)
        return self.nu_points[i], float(self.eta_points[j])

    def validate(self, family, interval=None):
        for nu in self.nu_points:
            family.check_nu(nu)
        if interval is not None:
            for eta in self.eta_points:
                if eta not in interval:
                    raise ParameterOutOfDomain(f"eta={eta!r} outside the eta interval")


@dataclass
class ReducedBasis:
    """Greedy-selected snapshots and their Y-orthonormalized span.

    ``snapshots`` and ``ortho`` hold vectors as columns. ``history[k]`` is the
    largest training surrogate with ``k`` basis vectors, so the list has one
    more entry than there are snapshots.
    """

    selected: list
    snapshots: np.ndarray
    ortho: np.ndarray
    history: list
    delta: float
    converged: bool = False
    projection: str = "residual"
    metadata: dict = field(default_factory=dict)

    @property
    def size(self):
        return self.ortho.shape[1]

    def __len__(self):
        return self.size


@dataclass(frozen=True)
class OnlineResult:
    """Coefficients ``alphas`` refer to the columns of ``basis.ortho``."""

    alphas: np.ndarray
    u_approx: np.ndarray
    misfit: float
    m: int
    ill_conditioned: bool = False


class _Member:
    """Per-parameter state of the greedy sweep.

    Everything lives in Euclidean coordinates ``C^T v`` (``G_Y = C C^T``), so
    Y-norms and Y-least-squares become ordinary 2-norm operations.
    """

    def __init__(self, family, nu):
        self.nu = nu
        self.op, self.f = family.assemble(nu)
        self.gram_op = self.op.gram_operator()
        self.space = self.op.codomain
        self.e_f = self.space.to_euclidean(self.f)
        self.f_norm = float(np.linalg.norm(self.e_f))
        self.e_lq = np.empty((self.space.dim, 0))

    def append(self, q):
        col = self.space.to_euclidean(self.gram_op(q))
        self.e_lq = np.column_stack([self.e_lq, col])

    def project(self, e_q, eta, projection):
        """Coefficients and residual norm of the reduced approximation."""
        if e_q.shape[1] == 0:
            return np.zeros(0), self.f_norm
        a = self.e_lq + eta * e_q
        if projection == "residual":
            alpha = np.linalg.lstsq(a, self.e_f, rcond=None)[0]
        else:
            # Galerkin: Q^T (G_Y Lambda + eta G_Y) Q alpha = Q^T G_Y f, Q^T G_Y Q = I
            lhs = e_q.T @ a
            lhs = 0.5 * (lhs + lhs.T)
            alpha = la.solve(lhs, e_q.T @ self.e_f, assume_a="pos")
        return alpha, float(np.linalg.norm(a @ alpha - self.e_f))


def _check_projection(projection):
    if projection not in ("residual", "galerkin"):
        raise ValueError(f"unknown projection {projection!r}")


def train_offline(family, grid, delta, *, workers=None, projection="residual",
                  max_size=None, callback=None):
    """Weak-greedy construction of a reduced basis for ``(Lambda_nu + eta) w = f_nu``.

    Parameters
    ----------
    family : ProblemFamily
    grid : TrainingGrid
    delta : float
        Stop once every training surrogate is at most ``delta``.
    workers : int, optional
        Threads for the per-parameter surrogate sweep. Defaults to
        ``$EPSRB_WORKERS`` or the CPU count.
    projection : {"residual", "galerkin"}
        How a training pair is approximated in the current basis. "residual"
        minimizes the surrogate itself over the span (so the greedy history
        cannot increase); "galerkin" uses the energy-norm projection.
    max_size : int, optional
        Hard cap on the basis size.
    callback : callable, optional
        Called as ``callback(k, pair, surrogate)`` after each selection.

    Returns
    -------
    ReducedBasis

    Raises
    ------
    StagnationWithoutConvergence
        If the maximizing pair is already in the basis, its snapshot is
        numerically dependent, or ``max_size`` is hit while the surrogate is
        above ``delta``. The partial basis is attached to the exception.
    """
    if len(grid) == 0:
        raise EmptyGrid("training grid has no points")
    if not delta >= 0:
        raise ValueError("delta must be nonnegative")
    _check_projection(projection)
    grid.validate(family)
    workers = default_workers() if workers is None else max(1, int(workers))
    space = family.codomain
    etas = grid.eta_points
    members = [_Member(family, nu) for nu in grid.nu_points]
    if max_size is None:
        max_size = space.dim

    q = np.empty((space.dim, 0))
    e_q = np.empty((space.dim, 0))
    basis = ReducedBasis([], np.empty((space.dim, 0)), q, [], float(delta),
                         projection=projection)

    def sweep(member):
        return [member.project(e_q, eta, projection)[1] for eta in etas]

    with ThreadPoolExecutor(max_workers=workers) as pool:
        while True:
            surrogates = np.array(list(pool.map(sweep, members)))
            k = int(np.argmax(surrogates))  # first maximum = lexicographic tie-break
            smax = float(surrogates.flat[k])
            basis.history.append(smax)
            if smax <= delta:
                basis.converged = True
                return basis
            i, j = divmod(k, etas.size)
            pair = (grid.nu_points[i].copy(), float(etas[j]))
            if any(np.array_equal(pair[0], s[0]) and pair[1] == s[1] for s in basis.selected):
                raise StagnationWithoutConvergence(
                    f"pair {k} re-selected with surrogate {smax!r} > delta={delta!r}", basis)
            if basis.size >= max_size:
                raise StagnationWithoutConvergence(
                    f"basis reached {basis.size} vectors with surrogate {smax!r} > delta={delta!r}",
                    basis)
            m = members[i]
            w = solve_tychonoff(TychProblem(m.op, m.f, pair[1]))
            qn, ok = space.extend(q, w, tol=ORTHO_TOL)
            if not ok:
                raise StagnationWithoutConvergence(
                    f"snapshot at pair {k} is dependent on the basis while "
                    f"surrogate {smax!r} > delta={delta!r}", basis)
            q = np.column_stack([q, qn])
            e_q = np.column_stack([e_q, space.to_euclidean(qn)])
            for member in members:
                member.append(qn)
            basis.selected.append(pair)
            basis.snapshots = np.column_stack([basis.snapshots, w])
            basis.ortho = q
            if callback is not None:
                callback(basis.size, pair, smax)


def reconstruct_online(basis, family, nu, cutoff=GRAMIAN_CUTOFF):
    """eps-solution for ``nu`` from the reduced basis.

    Solves the Y-normal equations of ``min_alpha ||sum_i alpha_i Lambda_nu w_i - f_nu||``
    with a truncated spectral pseudo-inverse (eigenvalues below
    ``cutoff * max`` are dropped and ``ill_conditioned`` is set), then
    assembles ``u = sum_i alpha_i L_nu* w_i``.
    """
    if basis.size == 0:
        raise EmptyBasis("reduced basis is empty")
    op, f = family.assemble(nu)
    space = op.codomain
    w = basis.ortho
    b = op.gram_operator()(w)
    gb = space.gram @ b
    gramian = 0.5 * (b.T @ gb + gb.T @ b)
    lam, vecs = la.eigh(gramian)
    keep = lam > cutoff * lam[-1]
    alphas = vecs[:, keep] @ ((vecs[:, keep].T @ (gb.T @ f)) / lam[keep])
    u = op.adjoint()(w @ alphas)
    misfit = space.norm(op(u) - f)
    return OnlineResult(alphas, u, misfit, basis.size, ill_conditioned=not keep.all())


def surrogate_report(basis, grid, family):
    """Surrogate against exact error at every training pair.

    Returns a list of dicts with keys ``nu, eta, surrogate, true_error,
    effectivity, c_minus, c_plus``. ``effectivity = surrogate / true_error``
    must lie in ``[c_minus, c_plus] = [eta, ||Lambda_nu|| + eta]``.
    """
    space = family.codomain
    e_q = space.to_euclidean(basis.ortho) if basis.size else np.empty((space.dim, 0))
    rows = []
    for nu in grid.nu_points:
        member = _Member(family, nu)
        for qi in basis.ortho.T:
            member.append(qi)
        lam_norm = member.gram_op.norm()
        for eta in grid.eta_points:
            alpha, sur = member.project(e_q, eta, basis.projection)
            exact = solve_tychonoff(TychProblem(member.op, member.f, eta))
            w_proj = basis.ortho @ alpha if basis.size else np.zeros(space.dim)
            err = space.norm(exact - w_proj)
            rows.append({
                "nu": nu.copy(),
                "eta": float(eta),
                "surrogate": sur,
                "true_error": err,
                "effectivity": sur / err if err > 0 else np.nan,
                "c_minus": float(eta),
                "c_plus": lam_norm + float(eta),
            })
    return rows
