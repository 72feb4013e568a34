import numpy as np
import pytest

from epsrb import solve_dual_diagonal
from epsrb.elliptic import (
    AffineForcing,
    AffineFunction,
    CoefficientField,
    EllipticFamily,
    analytic_adjoint,
    assemble_spaces,
    assemble_stiffness,
    coercivity_report,
    default_family,
    eigen_constant,
    graph_norm_constants,
    grid_points,
    lower_gram_constant,
    shifted_norm_bounds,
    solve_elliptic_eps,
)
from epsrb.exceptions import CoercivityViolation, ConfigError


def _family(n, base_poly=(1.0,), eps=0.1, forcing=None, alpha=0.5):
    coeff = CoefficientField(AffineFunction(poly=base_poly), [AffineFunction()], alpha)
    forcing = forcing or AffineForcing({"rough": 1.0}, [{}])
    return EllipticFamily(n, coeff, forcing, [[0.0, 1.0]], eps)


def test_constant_stencil():
    k = assemble_stiffness(_family(3), [0.0])
    np.testing.assert_allclose(k, 16 * (2 * np.eye(3) - np.eye(3, k=1) - np.eye(3, k=-1)))


def test_stiffness_symmetric_and_coercive():
    fam = default_family(n=32)
    lam1 = eigen_constant(32)[0][0]
    for nu in fam.sample(10, seed=0):
        k = assemble_stiffness(fam, nu)
        assert np.array_equal(k, k.T)
        assert np.linalg.eigvalsh(k)[0] >= fam.coeff.alpha * lam1 - 1e-10


def test_quadratic_form_converges_second_order():
    exact = np.pi**2 / 2 * 1.5   # int_0^1 (1 + x) pi^2 cos^2(pi x) dx
    errs = []
    for n in (64, 128):
        fam = _family(n, base_poly=(1.0, 1.0))
        u = np.sin(np.pi * grid_points(n))
        errs.append(abs(fam.h * u @ assemble_stiffness(fam, [0.0]) @ u - exact))
    rate = np.log(errs[0] / errs[1]) / np.log(129 / 65)
    assert errs[1] < 1e-3
    assert rate == pytest.approx(2.0, abs=0.1)


def test_spaces_n1():
    x, y = assemble_spaces(1)
    assert x.gram[0, 0] == pytest.approx(32.0)
    assert y.gram[0, 0] == pytest.approx(1 / 16)
    lam, _ = eigen_constant(1)
    assert lam[0] == pytest.approx(8.0)


def test_y_embedding_constant(rng):
    n = 20
    _, y = assemble_spaces(n)
    lam1 = eigen_constant(n)[0][0]
    h = 1.0 / (n + 1)
    for _ in range(50):
        v = rng.standard_normal(n)
        assert y.norm(v) <= np.sqrt(h) * np.linalg.norm(v) / np.sqrt(lam1) * (1 + 1e-12)


def test_fast_solvers_match_dense(rng):
    x, y = assemble_spaces(12)
    b = rng.standard_normal((12, 3))
    np.testing.assert_allclose(x.solve(b), np.linalg.solve(x.gram, b), rtol=1e-9)
    np.testing.assert_allclose(y.solve(b), np.linalg.solve(y.gram, b), rtol=1e-9)


@pytest.mark.parametrize("n", [1, 5, 40])
def test_eigenpairs(n):
    lam, psi = eigen_constant(n)
    _, y = assemble_spaces(n)
    k0 = assemble_stiffness(_family(n), [0.0])
    np.testing.assert_allclose(lam, np.linalg.eigvalsh(k0), rtol=1e-10)
    np.testing.assert_allclose(k0 @ psi, psi * lam, rtol=1e-9, atol=1e-9 * lam.max())
    np.testing.assert_allclose(psi.T @ y.gram @ psi, np.eye(n), atol=1e-10)


def test_gram_operator_diagonal_in_sine_basis():
    n = 16
    lam, psi = eigen_constant(n)
    fam = _family(n)
    s = fam.operator([0.0]).gram_operator().symmetric
    # Lambda psi_k = (1/lam_k) psi_k for a = 1
    np.testing.assert_allclose(psi.T @ s @ psi, np.diag(1 / lam), atol=1e-12 / lam.min())


def test_analytic_adjoint_constant_coefficient():
    fam = _family(10)
    k0 = assemble_stiffness(fam, [0.0])
    np.testing.assert_allclose(analytic_adjoint(fam, [0.0]), np.linalg.inv(k0 @ k0), rtol=1e-9)


def test_adjoint_identity(rng):
    fam = default_family(n=32)
    op = fam.operator([0.3, 0.1])
    for _ in range(10):
        u, v = rng.standard_normal(32), rng.standard_normal(32)
        assert fam.codomain.inner(op(u), v) == pytest.approx(
            fam.domain.inner(u, op.adjoint()(v)), rel=1e-9)


def test_coercivity_violation():
    coeff = CoefficientField(AffineFunction(poly=[1.0]), [AffineFunction(poly=[-1.0])], alpha=0.5)
    fam = EllipticFamily(8, coeff, AffineForcing({"rough": 1.0}, [{}]), [[0.0, 1.0]], 0.1)
    fam.operator([0.4])
    with pytest.raises(CoercivityViolation):
        fam.operator([0.6])
    with pytest.raises(ConfigError):
        CoefficientField(AffineFunction(poly=[1.0]), [], alpha=0.0)


def test_solve_preimage_witness():
    fam = default_family(n=32, eps=1e-3)
    nu = np.array([0.5, 0.2])
    g = np.sin(np.pi * grid_points(32)) + 0.3 * grid_points(32) * (1 - grid_points(32))
    op = fam.operator(nu)
    f = op(g)
    from epsrb import EpsProblem, solve_dual

    sol = solve_dual(EpsProblem(op, f, 1e-3 * fam.codomain.norm(f)))
    assert fam.domain.norm(sol.u_tilde) <= fam.domain.norm(g)


def test_solve_zero_when_eps_large():
    fam = default_family(n=16)
    sol = solve_elliptic_eps(fam, [0.5, 0.2], eps=100.0)
    assert sol.is_zero


def test_constant_coefficient_matches_spectral_oracle():
    n = 48
    fam = _family(n, eps=0.05)
    lam, psi = eigen_constant(n)
    sol = solve_elliptic_eps(fam, [0.0])
    coeffs = psi.T @ fam.codomain.gram @ fam.target([0.0])
    v_ref, _ = solve_dual_diagonal(1 / lam, coeffs, 0.05)
    err = fam.codomain.norm(sol.v_tilde - psi @ v_ref) / np.linalg.norm(v_ref)
    assert err <= 1e-8


def test_default_forcing_feasible():
    fam = default_family()
    corners = [[0, 0], [1, 0], [0, 0.4], [1, 0.4]]
    assert fam.check_feasible(corners) > fam.eps
    assert fam.target_norms(corners).min() > 0.1


def test_audits_default_family():
    fam = default_family(n=32)
    nus = fam.sample(8, seed=3)
    rep = coercivity_report(fam, nus)
    assert rep["ok"] and rep["alpha"] == 0.6 and rep["a_min"] >= 1.0 - 1e-12
    gn = graph_norm_constants(fam, nus)
    assert 0 < gn["c_lo"] <= gn["c_hi"] < np.inf
    assert lower_gram_constant(fam, nus) > 0
    sb = shifted_norm_bounds(fam, nus[0], beta=-2.0)
    assert sb["beta_reading"] == "abs"
    assert sb["bound_lower"] - 1e-12 <= sb["ratio_min"] <= sb["ratio_max"] <= 1.0
    with pytest.raises(ValueError):
        shifted_norm_bounds(fam, nus[0], beta=1.0)


def test_description_roundtrip_changes_fingerprint():
    a, b = default_family(n=16), default_family(n=16, eps=0.2)
    assert a.fingerprint() == default_family(n=16).fingerprint()
    assert a.fingerprint() != b.fingerprint()
