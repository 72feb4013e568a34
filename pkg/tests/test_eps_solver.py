import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from epsrb import (
    BoundedOperator,
    EpsProblem,
    euclidean,
    eval_dual,
    hessian_min_eig,
    make_space,
    solve_dual,
    solve_dual_diagonal,
    solve_finite_dim,
)
from epsrb.exceptions import DependentBasis, ZeroVector
from instances import mixed_instance, spectral_operator, target_with_norm


def _diag_problem(lams, f, eps):
    n = len(lams)
    op = BoundedOperator(np.diag(np.sqrt(lams)), euclidean(n), euclidean(n))
    return EpsProblem(op, np.asarray(f, float), eps)


def test_worked_example_2d():
    # Lambda = diag(1, 4), f = (1, 1), eps = 0.5: grid-search oracle over the feasible set
    prob = _diag_problem([1.0, 4.0], [1.0, 1.0], 0.5)
    sol = solve_dual(prob)
    assert sol.misfit == pytest.approx(0.5, rel=1e-8)
    g = np.linspace(-1.5, 1.5, 2001)
    u1, u2 = np.meshgrid(g, g)
    res = np.hypot(u1 - 1.0, 2 * u2 - 1.0)
    best = np.sqrt(u1**2 + u2**2)[res <= 0.5].min()
    assert np.linalg.norm(sol.u_tilde) <= best + 1e-12
    assert np.linalg.norm(sol.u_tilde) == pytest.approx(best, abs=2e-3)


def test_euler_lagrange_stationarity(rng):
    op = mixed_instance(rng, 12, diagonal=False)
    f = target_with_norm(rng, op.codomain, 2.0)
    sol = solve_dual(EpsProblem(op, f, 0.1))
    y = op.codomain
    r = op.gram_operator()(sol.v_tilde) + 0.1 * sol.v_tilde / y.norm(sol.v_tilde) - f
    assert y.norm(r) <= 1e-8
    assert sol.s == pytest.approx(0.1 / sol.eta_star, rel=1e-8)
    assert sol.converged


def test_dual_minimizer_beats_perturbations(rng):
    op = mixed_instance(rng, 6, diagonal=False, lam_min=1e-2)
    prob = EpsProblem(op, target_with_norm(rng, op.codomain, 1.0), 0.2)
    sol = solve_dual(prob)
    j0 = eval_dual(prob, sol.v_tilde)
    for _ in range(50):
        d = rng.standard_normal(6) * 1e-3
        assert eval_dual(prob, sol.v_tilde + d) >= j0 - 1e-14


@pytest.mark.parametrize("scale", [0.0, 0.5, 1.0])
def test_zero_solution(rng, scale):
    op = mixed_instance(rng, 5, diagonal=True)
    f = target_with_norm(rng, op.codomain, 0.3 * scale) if scale else np.zeros(5)
    sol = solve_dual(EpsProblem(op, f, 0.3))
    assert sol.is_zero and np.all(sol.u_tilde == 0) and sol.eta_star == np.inf
    assert sol.misfit == pytest.approx(0.3 * scale)


@settings(max_examples=50, deadline=None)
@given(st.integers(1, 40), st.integers(0, 2**32 - 1))
def test_matches_diagonal_oracle(n, seed):
    rng = np.random.default_rng(seed)
    lam = 10.0 ** rng.uniform(-5, 1, n)
    coeffs = rng.standard_normal(n) * rng.uniform(0.1, 3.0)
    op, phi = spectral_operator(rng, np.sqrt(lam))
    v_ref, s_ref = solve_dual_diagonal(lam, coeffs, 0.1)
    sol = solve_dual(EpsProblem(op, phi @ coeffs, 0.1))
    y = op.codomain
    if s_ref == 0:
        assert sol.is_zero
    else:
        assert y.norm(sol.v_tilde - phi @ v_ref) <= 1e-8 * y.norm(phi @ v_ref)


def test_diagonal_oracle_scalar_closed_form():
    # one component: v = f / (lam + eps/|v|)  =>  |v| = (|f| - eps) / lam
    v, s = solve_dual_diagonal([2.0], [3.0], 1.0)
    assert s == pytest.approx(1.0, rel=1e-12)
    assert v[0] == pytest.approx(1.0, rel=1e-12)


def test_cg_matches_direct(rng):
    op = mixed_instance(rng, 40, diagonal=False, lam_min=1e-3)
    prob = EpsProblem(op, target_with_norm(rng, op.codomain, 1.0), 0.1)
    a = solve_dual(prob, method="direct")
    b = solve_dual(prob, method="cg")
    assert op.codomain.norm(a.v_tilde - b.v_tilde) <= 1e-8 * op.codomain.norm(a.v_tilde)


def test_problem_validation():
    op = BoundedOperator(np.eye(2), euclidean(2), euclidean(2))
    with pytest.raises(ValueError):
        EpsProblem(op, np.ones(2), 0.0)
    with pytest.raises(ValueError):
        EpsProblem(op, np.array([1.0, np.nan]), 0.1)


def test_finite_dim_full_space_is_exact(rng):
    op = mixed_instance(rng, 6, diagonal=False, lam_min=1e-3)
    f = target_with_norm(rng, op.codomain, 1.0)
    sol = solve_finite_dim(EpsProblem(op, f, 0.1), list(np.eye(6)))
    assert op.codomain.norm(op(sol.u_tilde) - f) <= 1e-8


def test_finite_dim_empty_E_is_plain_dual(rng):
    op = mixed_instance(rng, 6, diagonal=False)
    prob = EpsProblem(op, target_with_norm(rng, op.codomain, 1.0), 0.1)
    a, b = solve_finite_dim(prob, []), solve_dual(prob)
    assert op.codomain.norm(a.v_tilde - b.v_tilde) <= 1e-7 * op.codomain.norm(b.v_tilde)


def test_finite_dim_dependent_basis(rng):
    op = mixed_instance(rng, 4, diagonal=True)
    prob = EpsProblem(op, target_with_norm(rng, op.codomain, 1.0), 0.1)
    e = rng.standard_normal(4)
    with pytest.raises(DependentBasis):
        solve_finite_dim(prob, [e, 2 * e])


def test_hessian_min_eig_example():
    # Lambda = diag(1, 2), v = e1, eps = 0.5: eigenvalues 1 (along v) and 2.5
    op = BoundedOperator(np.diag([1.0, np.sqrt(2.0)]), euclidean(2), euclidean(2))
    assert hessian_min_eig(op, np.array([1.0, 0.0]), 0.5) == pytest.approx(1.0)
    op0 = BoundedOperator(np.diag([0.0, 1.0]), euclidean(2), euclidean(2))
    assert hessian_min_eig(op0, np.array([0.0, 2.0]), 1.0) == pytest.approx(0.5)
    with pytest.raises(ZeroVector):
        hessian_min_eig(op, np.zeros(2), 0.5)


def test_nonidentity_grams_scale_consistently(rng):
    # scaling G_Y by c^2 scales every Y-norm by c; the eps-solution with eps*c is unchanged
    op = mixed_instance(rng, 5, diagonal=False)
    f = target_with_norm(rng, op.codomain, 1.0)
    c = 3.0
    y2 = make_space(c**2 * op.codomain.gram)
    op2 = BoundedOperator(op.matrix, op.domain, y2)
    a = solve_dual(EpsProblem(op, f, 0.1))
    b = solve_dual(EpsProblem(op2, f, 0.1 * c))
    np.testing.assert_allclose(b.u_tilde, a.u_tilde, rtol=1e-7, atol=1e-10)
