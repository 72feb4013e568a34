"""1D variable-coefficient Dirichlet operators ``-(a_nu u')'`` on (0, 1).

Discretization is the flux-form three-point stencil on ``n`` interior nodes
``x_i = i h``, ``h = 1/(n+1)``, with the coefficient sampled at cell
midpoints. With ``K0`` the constant-coefficient stiffness matrix:

* X (discrete ``H^2 cap H^1_0``) carries ``G_X = h K0^2``,
* Y (discrete ``H^{-1}``) carries ``G_Y = h K0^{-1}``,

and ``L_nu`` is just ``K_nu`` viewed as a map X -> Y. Its adjoint is then
``K0^{-2} K_nu K0^{-1}`` in closed form.
"""

import numpy as np
import scipy.linalg as la

from .eps_solver import EpsProblem, solve_dual
from .exceptions import CoercivityViolation, ConfigError
from .family import ProblemFamily
from .operator_core import BoundedOperator, make_space

__all__ = [
    "AffineFunction",
    "CoefficientField",
    "AffineForcing",
    "EllipticFamily",
    "default_family",
    "grid_points",
    "midpoints",
    "stiffness_band",
    "band_to_dense",
    "assemble_stiffness",
    "assemble_spaces",
    "analytic_adjoint",
    "eigen_constant",
    "solve_elliptic_eps",
    "coercivity_report",
    "graph_norm_constants",
    "lower_gram_constant",
    "shifted_norm_bounds",
]


def grid_points(n):
    h = 1.0 / (n + 1)
    return h * np.arange(1, n + 1)


def midpoints(n):
    h = 1.0 / (n + 1)
    return h * (np.arange(n + 1) + 0.5)


class AffineFunction:
    """``x -> sum_p poly[p] x^p + sum_k sin[k-1] sin(k pi x)``."""

    def __init__(self, poly=(), sin=()):
        self.poly = [float(c) for c in poly]
        self.sin = [float(c) for c in sin]

    @classmethod
    def from_spec(cls, spec):
        unknown = set(spec) - {"poly", "sin"}
        if unknown:
            raise ConfigError(f"unknown coefficient term keys {sorted(unknown)}")
        return cls(spec.get("poly", ()), spec.get("sin", ()))

    def to_spec(self):
        return {"poly": self.poly, "sin": self.sin}

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        out = np.zeros_like(x)
        for p, c in enumerate(self.poly):
            out += c * x**p
        for k, c in enumerate(self.sin, start=1):
            out += c * np.sin(k * np.pi * x)
        return out


class CoefficientField:
    """Scalar diffusion coefficient ``a_nu(x) = base(x) + sum_j nu_j terms[j](x)``.

    ``alpha`` is the declared uniform lower bound; every evaluation for a
    requested ``nu`` is checked against it.
    """

    def __init__(self, base, terms, alpha, a_plus=np.inf):
        if not alpha > 0:
            raise ConfigError("coercivity bound alpha must be positive")
        self.base = base
        self.terms = list(terms)
        self.alpha = float(alpha)
        self.a_plus = float(a_plus)

    @classmethod
    def affine_sine(cls, alpha=0.6):
        """``a_nu(x) = 1 + nu_1 + nu_2 sin(pi x)``."""
        return cls(AffineFunction(poly=[1.0]),
                   [AffineFunction(poly=[1.0]), AffineFunction(sin=[1.0])],
                   alpha=alpha)

    def __call__(self, nu, x):
        nu = np.atleast_1d(nu)
        if len(nu) != len(self.terms):
            raise ValueError(f"coefficient has {len(self.terms)} parameters, got {len(nu)}")
        a = self.base(x)
        for nj, g in zip(nu, self.terms):
            a = a + nj * g(x)
        return a

    def sample(self, nu, x):
        """Evaluate and enforce ``alpha <= a <= a_plus``."""
        a = self(nu, x)
        if np.min(a) < self.alpha:
            raise CoercivityViolation(
                f"a_nu(x) = {np.min(a)!r} < alpha = {self.alpha!r} at nu={np.asarray(nu).tolist()}"
            )
        if np.max(a) > self.a_plus:
            raise CoercivityViolation(
                f"a_nu(x) = {np.max(a)!r} > a_plus = {self.a_plus!r} at nu={np.asarray(nu).tolist()}"
            )
        return a

    def to_spec(self):
        return {
            "base": self.base.to_spec(),
            "terms": [t.to_spec() for t in self.terms],
            "alpha": self.alpha,
            "a_plus": None if np.isinf(self.a_plus) else self.a_plus,
        }


def _profile_coeffs(name, n):
    k = np.arange(1, n + 1, dtype=float)
    if name == "rough":
        c = 1.0 / k
    elif name == "smooth":
        c = 1.0 / k**3
    elif name.startswith("mode"):
        k = int(name[4:]) if name[4:].isdigit() else 0
        if not 1 <= k <= n:
            raise ConfigError(f"forcing profile {name!r} needs a mode number in 1..{n}")
        c = np.zeros(n)
        c[k - 1] = 1.0
    else:
        raise ConfigError(f"unknown forcing profile {name!r}")
    return c / np.linalg.norm(c)


class AffineForcing:
    """``f_nu = base + sum_j nu_j terms[j]`` built from named profiles.

    Each profile is a unit Y-norm vector whose coefficients against the
    Y-orthonormal sine basis are ``1/k`` ("rough"), ``1/k^3`` ("smooth") or a
    single mode ("modeK"). A component spec maps profile names to weights,
    e.g. ``{"rough": 1.0}``.
    """

    def __init__(self, base, terms):
        self.base = dict(base)
        self.terms = [dict(t) for t in terms]

    @classmethod
    def rough_smooth(cls):
        return cls({"rough": 1.0}, [{"rough": -0.5}, {"smooth": 1.0}])

    def vectors(self, n):
        _, psi = eigen_constant(n)

        def build(spec):
            v = np.zeros(n)
            for name, w in spec.items():
                v += float(w) * (psi @ _profile_coeffs(name, n))
            return v

        return build(self.base), [build(t) for t in self.terms]

    def to_spec(self):
        return {"base": self.base, "terms": self.terms}


def stiffness_band(a_mid, h):
    """Upper banded storage (``scipy.linalg.solveh_banded`` layout) of ``K``."""
    a_mid = np.asarray(a_mid, dtype=float)
    n = a_mid.size - 1
    band = np.zeros((2, n))
    band[1] = (a_mid[:-1] + a_mid[1:]) / h**2
    band[0, 1:] = -a_mid[1:-1] / h**2
    return band


def _band_matmul(band, b):
    """``K @ b`` for ``K`` in upper banded storage."""
    b = np.asarray(b, dtype=float)
    diag = band[1].reshape((-1,) + (1,) * (b.ndim - 1))
    off = band[0, 1:].reshape((-1,) + (1,) * (b.ndim - 1))
    out = diag * b
    out[:-1] += off * b[1:]
    out[1:] += off * b[:-1]
    return out


def band_to_dense(band):
    n = band.shape[1]
    k = np.diag(band[1])
    if n > 1:
        k += np.diag(band[0, 1:], 1) + np.diag(band[0, 1:], -1)
    return k


def _solve_band(band, b):
    """``K^{-1} b`` for ``K`` in upper banded storage."""
    if band.shape[1] == 1:
        # the LAPACK tridiagonal path rejects 1x1 systems
        return np.asarray(b, dtype=float) / band[1, 0]
    return la.solveh_banded(band, b)


def _k0_band(n):
    return stiffness_band(np.ones(n + 1), 1.0 / (n + 1))


def assemble_spaces(n):
    """Discrete X (``G_X = h K0^2``) and Y (``G_Y = h K0^{-1}``)."""
    if n < 1:
        raise ValueError("n must be at least 1")
    h = 1.0 / (n + 1)
    kb = _k0_band(n)
    k0 = band_to_dense(kb)
    k0_inv = _solve_band(kb, np.eye(n))

    def solve_x(b):
        return _solve_band(kb, _solve_band(kb, b)) / h

    def solve_y(b):
        return _band_matmul(kb, b) / h

    X = make_space(h * k0 @ k0, solver=solve_x)
    Y = make_space(h * 0.5 * (k0_inv + k0_inv.T), solver=solve_y)
    return X, Y


def eigen_constant(n):
    """Eigenpairs of ``K0``: discrete sines, normalized in the Y inner product.

    Returns
    -------
    lam : (n,) ndarray
        ``(4/h^2) sin^2(k pi h / 2)``, increasing.
    psi : (n, n) ndarray
        Column ``k-1`` is ``sin(k pi x_i)`` scaled to unit ``G_Y``-norm.
    """
    h = 1.0 / (n + 1)
    k = np.arange(1, n + 1)
    lam = 4.0 / h**2 * np.sin(k * np.pi * h / 2) ** 2
    s = np.sin(np.outer(grid_points(n), k) * np.pi)
    # ||s_k||_2^2 = (n+1)/2, so ||s_k||_Y^2 = h (n+1) / (2 lam_k) = 1 / (2 lam_k)
    return lam, s * np.sqrt(2.0 * lam)


class EllipticFamily(ProblemFamily):
    """Family ``L_nu = -(a_nu u')'`` from discrete H^2 into discrete H^{-1}.

    Parameters
    ----------
    n : int
        Interior grid size.
    coeff : CoefficientField
    forcing : AffineForcing
    nu_box : (d, 2) array_like
    eps : float
    """

    def __init__(self, n, coeff, forcing, nu_box, eps):
        X, Y = assemble_spaces(n)
        super().__init__(X, Y, nu_box, eps)
        if len(coeff.terms) != self.n_params or len(forcing.terms) != self.n_params:
            raise ConfigError(
                f"coefficient/forcing have {len(coeff.terms)}/{len(forcing.terms)} "
                f"parameter terms but nu_box has {self.n_params} rows"
            )
        self.n = int(n)
        self.h = 1.0 / (n + 1)
        self.coeff = coeff
        self.forcing = forcing
        self._f0, self._fj = forcing.vectors(self.n)
        self.k0_band = _k0_band(self.n)

    def coefficient_at_midpoints(self, nu):
        return self.coeff.sample(nu, midpoints(self.n))

    def stiffness_band(self, nu):
        return stiffness_band(self.coefficient_at_midpoints(nu), self.h)

    def operator(self, nu):
        nu = self.check_nu(nu)
        return BoundedOperator(band_to_dense(self.stiffness_band(nu)), self.domain, self.codomain)

    def target(self, nu):
        nu = self.check_nu(nu)
        f = self._f0.copy()
        for nj, g in zip(nu, self._fj):
            f += nj * g
        return f

    def description(self):
        d = super().description()
        d.update(n=self.n, coefficient=self.coeff.to_spec(), forcing=self.forcing.to_spec())
        return d


def default_family(n=64, eps=0.1):
    """``a_nu = 1 + nu_1 + nu_2 sin(pi x)`` on ``[0,1] x [0,0.4]``, rough/smooth forcing."""
    return EllipticFamily(
        n, CoefficientField.affine_sine(), AffineForcing.rough_smooth(),
        [[0.0, 1.0], [0.0, 0.4]], eps,
    )


def assemble_stiffness(family, nu):
    """Dense symmetric tridiagonal ``K_nu``."""
    return band_to_dense(family.stiffness_band(family.check_nu(nu)))


def analytic_adjoint(family, nu):
    """``K0^{-2} K_nu K0^{-1}`` using banded solves only."""
    k = assemble_stiffness(family, nu)
    kb = family.k0_band
    k_k0inv = _solve_band(kb, k).T          # K_nu K0^{-1}
    return _solve_band(kb, _solve_band(kb, k_k0inv))


def solve_elliptic_eps(family, nu, eps=None, **kwargs):
    """eps-solution of ``-(a_nu u')' = f_nu`` with minimal discrete H^2 norm."""
    op, f = family.assemble(nu)
    return solve_dual(EpsProblem(op, f, family.eps if eps is None else eps), **kwargs)


# assumption audits -----------------------------------------------------------

def coercivity_report(family, nus, n_fine=2001):
    """Observed coefficient range and smallest stiffness eigenvalue.

    The coefficient is sampled on a fine grid as well as at the assembly
    midpoints; the stiffness bound to compare with is ``alpha * lambda_1(K0)``.
    """
    x = np.linspace(0.0, 1.0, n_fine)
    lam1 = eigen_constant(family.n)[0][0]
    a_min, a_max, k_min = np.inf, -np.inf, np.inf
    for nu in np.atleast_2d(nus):
        a = family.coeff(nu, x)
        a_min, a_max = min(a_min, a.min()), max(a_max, a.max())
        band = family.stiffness_band(nu)
        k_min = min(k_min, la.eigvals_banded(band, lower=False, select="i", select_range=(0, 0))[0])
    return {
        "alpha": family.coeff.alpha,
        "a_min": float(a_min),
        "a_max": float(a_max),
        "k_min": float(k_min),
        "k_bound": float(family.coeff.alpha * lam1),
        "ok": bool(a_min >= family.coeff.alpha and k_min >= family.coeff.alpha * lam1 - 1e-10),
    }


def graph_norm_constants(family, nus):
    """Equivalence constants between ``G_X`` and the graph norm ``h (I + K_nu^2)``.

    Returns the extreme generalized eigenvalues ``c_lo, c_hi`` over ``nus``.
    """
    gx = family.domain.gram
    lo, hi = np.inf, 0.0
    for nu in np.atleast_2d(nus):
        k = assemble_stiffness(family, nu)
        graph = family.h * (np.eye(family.n) + k @ k)
        ev = la.eigh(graph, gx, eigvals_only=True)
        lo, hi = min(lo, ev[0]), max(hi, ev[-1])
    return {"c_lo": float(lo), "c_hi": float(hi), "ratio": float(hi / lo)}


def lower_gram_constant(family, nus):
    """Empirical ``c`` with ``L_nu L_nu* >= c I I*`` (``I I* = K0^{-1}`` on Y).

    Smallest generalized eigenvalue of the pair over ``nus``; an estimate,
    not a certificate.
    """
    gy = family.codomain.gram
    ii_sym = gy @ _solve_band(family.k0_band, np.eye(family.n))
    ii_sym = 0.5 * (ii_sym + ii_sym.T)
    c = np.inf
    for nu in np.atleast_2d(nus):
        s = family.operator(nu).gram_operator().symmetric
        c = min(c, la.eigh(s, ii_sym, eigvals_only=True, subset_by_index=[0, 0])[0])
    return float(c)


def shifted_norm_bounds(family, nu, beta):
    """Range of ``||A x|| / ||(beta I - A) x||`` in L^2 for ``A = K_nu``.

    For negative ``beta`` the ratio lies in ``[alpha/(|beta|+alpha), 1]``;
    the theoretical lower bound is reported with ``|beta|`` and flagged as
    such (``beta_reading = "abs"``).
    """
    if not beta < 0:
        raise ValueError("beta must be negative")
    k = assemble_stiffness(family, nu)
    shifted = beta * np.eye(family.n) - k
    ev = la.eigh(k @ k, shifted @ shifted, eigvals_only=True)
    alpha = family.coeff.alpha
    return {
        "ratio_min": float(np.sqrt(ev[0])),
        "ratio_max": float(np.sqrt(ev[-1])),
        "bound_lower": alpha / (abs(beta) + alpha),
        "bound_upper": 1.0,
        "beta_reading": "abs",
    }
