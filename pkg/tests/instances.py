"""Random test instances with known spectral structure."""

import numpy as np

from epsrb import BoundedOperator, euclidean, make_space


def random_spd(rng, n, cond=10.0):
    q, _ = np.linalg.qr(rng.standard_normal((n, n)))
    d = np.geomspace(1.0, cond, n) if n > 1 else np.ones(1)
    g = (q * d) @ q.T
    return 0.5 * (g + g.T)


def orthonormal_basis(space):
    """Columns ``phi`` with ``phi^T G phi = I``."""
    c = space.cholesky
    return np.linalg.solve(c.T, np.eye(space.dim))


def spectral_operator(rng, sigma, gram_cond=10.0, euclid=False):
    """``L`` with ``Lambda phi_k = sigma_k^2 phi_k`` for a Y-orthonormal ``phi``.

    Returns ``(op, phi)``.
    """
    n = len(sigma)
    if euclid:
        x, y = euclidean(n), euclidean(n)
    else:
        x = make_space(random_spd(rng, n, gram_cond))
        y = make_space(random_spd(rng, n, gram_cond))
    phi = orthonormal_basis(y)
    psi = orthonormal_basis(x)
    if not euclid:
        # rotate so the singular vectors are not aligned with the Cholesky factors
        rot, _ = np.linalg.qr(rng.standard_normal((n, n)))
        phi, psi = phi @ rot, psi @ np.linalg.qr(rng.standard_normal((n, n)))[0]
    m = phi @ np.diag(sigma) @ psi.T @ x.gram
    return BoundedOperator(m, x, y), phi


def dense_operator(rng, dim_x, dim_y, gram_cond=10.0):
    x = make_space(random_spd(rng, dim_x, gram_cond))
    y = make_space(random_spd(rng, dim_y, gram_cond))
    return BoundedOperator(rng.standard_normal((dim_y, dim_x)), x, y)


def target_with_norm(rng, space, norm):
    f = rng.standard_normal(space.dim)
    return f * (norm / space.norm(f))


def mixed_instance(rng, dim, diagonal, lam_min=1e-6):
    """Operator with ``Lambda`` spectrum in ``[lam_min, 1]`` (diagonal or dense)."""
    sigma = np.sqrt(np.sort(np.geomspace(lam_min, 1.0, dim) * rng.uniform(0.5, 1.0, dim))[::-1])
    op, _ = spectral_operator(rng, sigma, euclid=diagonal)
    return op
