"""Shifted symmetric solves ``(Lambda + eta B) w = f`` in the Y inner product.

Every solve is carried out on the symmetric form

    (G_Y Lambda + eta G_Y B) w = G_Y f

which is positive definite whenever ``eta > 0`` and ``B`` is the identity.
Small systems are Cholesky-factorized per shift; large ones go through
preconditioned CG with ``G_Y^{-1}`` as preconditioner, which is plain CG in
the Y inner product.
"""

import numpy as np
import scipy.linalg as la
import scipy.sparse.linalg as spla

from .exceptions import LinearSolveFailure

DIRECT_MAX_DIM = 512
CG_RTOL = 1e-12


class ShiftedSystem:
    """Solver for a fixed ``Lambda``, right-hand side and penalty ``B``.

    Parameters
    ----------
    gram_op : GramOperator
    target : (n,) ndarray
        Right-hand side ``f`` (a Y-vector, not its Riesz representative).
    penalty : (n, n) ndarray, optional
        Symmetric form ``G_Y B`` of the shift operator. Defaults to ``G_Y``.
    method : {"auto", "direct", "cg"}
    """

    def __init__(self, gram_op, target, penalty=None, method="auto"):
        space = gram_op.space
        self.gram_op = gram_op
        self.space = space
        self.target = space.check(target)
        self.rhs = space.riesz(self.target)
        self.penalty = space.gram if penalty is None else penalty
        if method == "auto":
            method = "direct" if space.dim <= DIRECT_MAX_DIM else "cg"
        if method not in ("direct", "cg"):
            raise ValueError(f"unknown method {method!r}")
        self.method = method
        self._x0 = None

    def matrix(self, eta):
        return self.gram_op.symmetric + eta * self.penalty

    def solve(self, eta):
        if self.method == "direct":
            return self._solve_direct(eta)
        return self._solve_cg(eta)

    def _solve_direct(self, eta):
        a = self.matrix(eta)
        try:
            factor = la.cho_factor(a, lower=True, check_finite=False)
        except la.LinAlgError as exc:
            raise LinearSolveFailure(f"shifted system not positive definite at eta={eta:g}: {exc}")
        w = la.cho_solve(factor, self.rhs, check_finite=False)
        # one step of iterative refinement
        w += la.cho_solve(factor, self.rhs - a @ w, check_finite=False)
        if not np.all(np.isfinite(w)):
            raise LinearSolveFailure(f"non-finite solution at eta={eta:g}")
        return w

    def _solve_cg(self, eta):
        a = self.matrix(eta)
        n = self.space.dim
        prec = spla.LinearOperator((n, n), matvec=self.space.solve, dtype=float)
        w, info = spla.cg(
            a, self.rhs, x0=self._x0, rtol=CG_RTOL, atol=0.0,
            maxiter=20 * n, M=prec,
        )
        if info != 0:
            raise LinearSolveFailure(f"CG did not reach rtol={CG_RTOL:g} at eta={eta:g} (info={info})")
        self._x0 = w
        return w
