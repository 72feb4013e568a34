"""Finite-dimensional Hilbert spaces, bounded operators and their adjoints.

A space is a coordinate space R^n carrying the inner product
``<u, v> = u^T G v`` for a symmetric positive definite Gram matrix ``G``.
An operator between two such spaces is a plain matrix; its adjoint is

    L* = G_X^{-1} M^T G_Y

which is the only formula the rest of the package needs.
"""

import hashlib

import numpy as np
import scipy.linalg as la

from .exceptions import (
    DimensionMismatch,
    NonSymmetric,
    NotPositiveDefinite,
    SingularGram,
)

__all__ = [
    "SpaceDef",
    "BoundedOperator",
    "GramOperator",
    "make_space",
    "euclidean",
    "adjoint",
    "gram_apply",
]

SYMMETRY_RTOL = 1e-12


def _frozen(a):
    a = np.array(a, dtype=float, copy=True)
    a.setflags(write=False)
    return a


class SpaceDef:
    """Coordinate space with a Gram-matrix inner product.

    The Cholesky factor of the Gram matrix is computed once here and reused
    for every norm, Riesz map and Gram solve.

    Parameters
    ----------
    gram : (n, n) array_like
        Symmetric positive definite matrix. Symmetric to within a relative
        tolerance of 1e-12; it is symmetrized exactly on construction.
    solver : callable, optional
        Structured fast path for ``b -> gram^{-1} b`` (for example banded
        solves when the Gram matrix is a product of sparse factors). Defaults
        to the cached Cholesky factor.
    """

    def __init__(self, gram, solver=None):
        g = np.asarray(gram, dtype=float)
        if g.ndim != 2 or g.shape[0] != g.shape[1] or g.shape[0] == 0:
            raise DimensionMismatch(f"Gram matrix must be square, got {g.shape}")
        if not np.all(np.isfinite(g)):
            raise NotPositiveDefinite("Gram matrix has non-finite entries")
        scale = np.max(np.abs(g))
        if np.max(np.abs(g - g.T)) > SYMMETRY_RTOL * scale:
            raise NonSymmetric("Gram matrix is not symmetric")
        g = 0.5 * (g + g.T)
        try:
            chol = la.cholesky(g, lower=True)
        except la.LinAlgError as exc:
            raise NotPositiveDefinite(f"Gram matrix is not positive definite: {exc}")
        d = np.diag(chol)
        if (d.min() / d.max()) ** 2 < np.finfo(float).eps:
            raise SingularGram("Gram matrix is numerically singular")
        self.gram = _frozen(g)
        self._chol = _frozen(chol)
        self._solver = solver

    def __repr__(self):
        return f"SpaceDef(dim={self.dim})"

    @property
    def dim(self):
        return self.gram.shape[0]

    @property
    def cholesky(self):
        """Lower Cholesky factor ``C`` with ``gram = C C^T``."""
        return self._chol

    def check(self, v, name="vector"):
        v = np.asarray(v, dtype=float)
        if v.shape[0] != self.dim:
            raise DimensionMismatch(
                f"{name} has leading dimension {v.shape[0]}, space has {self.dim}"
            )
        return v

    def inner(self, u, v):
        """``u^T G v``; columns of 2-D arguments are treated as vectors."""
        u = self.check(u, "u")
        v = self.check(v, "v")
        return u.T @ (self.gram @ v)

    def norm(self, v):
        v = self.check(v)
        # ||C^T v||_2 is better conditioned than sqrt(v^T G v)
        return float(np.linalg.norm(self._chol.T @ v))

    def riesz(self, v):
        """Map a vector to its coefficient functional ``G v``."""
        return self.gram @ self.check(v)

    def solve(self, b):
        """Apply ``G^{-1}``."""
        b = self.check(b)
        if self._solver is not None:
            return self._solver(b)
        return la.cho_solve((self._chol, True), b)

    @property
    def has_fast_solver(self):
        return self._solver is not None

    def to_euclidean(self, v):
        """Coordinates in which this space's norm is the 2-norm (``C^T v``)."""
        return self._chol.T @ self.check(v)

    def orthonormalize(self, vectors, tol=1e-12):
        """Modified Gram-Schmidt with one reorthogonalization pass.

        Parameters
        ----------
        vectors : (n, k) array_like
            Columns to orthonormalize, in order.
        tol : float
            A column is rejected when its norm after orthogonalization falls
            below ``tol`` times its original norm.

        Returns
        -------
        q : (n, r) ndarray
            Orthonormal columns.
        kept : list of int
            Indices of the input columns that produced ``q``.
        """
        vectors = self.check(np.atleast_2d(np.asarray(vectors, dtype=float).T).T)
        q = np.empty((self.dim, 0))
        kept = []
        for j in range(vectors.shape[1]):
            w, ok = self.extend(q, vectors[:, j], tol=tol)
            if ok:
                q = np.column_stack([q, w])
                kept.append(j)
        return q, kept

    def extend(self, q, v, tol=1e-12):
        """Orthonormalize ``v`` against the orthonormal columns of ``q``.

        Returns ``(w, accepted)``; ``w`` is unit length when accepted.
        """
        v = np.array(self.check(v), dtype=float)
        n0 = self.norm(v)
        if n0 == 0.0:
            return v, False
        for _ in range(2):
            for i in range(q.shape[1]):
                v -= self.inner(q[:, i], v) * q[:, i]
        n1 = self.norm(v)
        if n1 <= tol * n0:
            return v, False
        return v / n1, True

    def fingerprint(self):
        """SHA-256 of the Gram matrix as little-endian row-major float64."""
        return hashlib.sha256(
            np.ascontiguousarray(self.gram, dtype="<f8").tobytes()
        ).hexdigest()


def make_space(gram, solver=None):
    """Validate a Gram matrix and wrap it as a :class:`SpaceDef`."""
    return SpaceDef(gram, solver=solver)


def euclidean(n):
    return SpaceDef(np.eye(n))


class BoundedOperator:
    """Matrix ``M`` acting from ``domain`` (X) to ``codomain`` (Y)."""

    def __init__(self, matrix, domain, codomain):
        m = np.asarray(matrix, dtype=float)
        if m.ndim != 2 or m.shape != (codomain.dim, domain.dim):
            raise DimensionMismatch(
                f"matrix shape {m.shape} does not map dim {domain.dim} "
                f"to dim {codomain.dim}"
            )
        if not np.all(np.isfinite(m)):
            raise ValueError("operator matrix has non-finite entries")
        self.matrix = _frozen(m)
        self.domain = domain
        self.codomain = codomain
        self._adjoint = None
        self._gram = None

    def __repr__(self):
        return f"BoundedOperator({self.domain.dim} -> {self.codomain.dim})"

    def __call__(self, u):
        return self.matrix @ self.domain.check(u)

    def adjoint(self):
        if self._adjoint is None:
            mt_gy = self.matrix.T @ self.codomain.gram
            adj = BoundedOperator(
                self.domain.solve(mt_gy), self.codomain, self.domain
            )
            self._adjoint = adj
        return self._adjoint

    def gram_operator(self):
        if self._gram is None:
            self._gram = GramOperator(self)
        return self._gram


class GramOperator:
    """``Lambda = L L*`` acting on the codomain of ``L``.

    Besides the matrix itself this keeps the symmetric form
    ``S = G_Y Lambda = G_Y M G_X^{-1} M^T G_Y``, which is what every
    Y-self-adjoint solve actually factorizes.
    """

    def __init__(self, op):
        self.op = op
        space = op.codomain
        self.space = space
        self.matrix = _frozen(op.matrix @ op.adjoint().matrix)
        # G_Y M G_X^{-1} M^T G_Y
        mt_gy = op.matrix.T @ space.gram
        if op.domain.has_fast_solver:
            s = mt_gy.T @ op.domain.solve(mt_gy)
        else:
            b = la.solve_triangular(op.domain.cholesky, mt_gy, lower=True)
            s = b.T @ b
        self.symmetric = _frozen(0.5 * (s + s.T))
        self._norm = None

    @property
    def dim(self):
        return self.space.dim

    def __call__(self, v):
        return self.matrix @ self.space.check(v)

    def norm(self):
        """Operator norm in ``L(Y)``: the largest generalized eigenvalue."""
        if self._norm is None:
            n = self.dim
            top = la.eigh(
                self.symmetric, self.space.gram,
                eigvals_only=True, subset_by_index=[n - 1, n - 1],
            )
            self._norm = float(max(top[0], 0.0))
        return self._norm

    def gershgorin(self):
        """Cheap upper bound on ``norm()`` (max absolute row sum)."""
        return float(np.max(np.sum(np.abs(self.matrix), axis=1)))

    def eigh(self):
        """Y-orthonormal eigendecomposition ``Lambda V = V diag(lam)``."""
        lam, vecs = la.eigh(self.symmetric, self.space.gram)
        return lam, vecs


def adjoint(op):
    """Adjoint of ``op`` with respect to the Gram inner products."""
    return op.adjoint()


def gram_apply(op, v):
    """Evaluate ``L (L* v)``."""
    v = op.codomain.check(v)
    return op(op.adjoint()(v))
