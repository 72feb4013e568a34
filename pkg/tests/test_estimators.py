import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from epsrb import EpsProblem, EpsSolver, ReducedBasisSolver, solve_dual
from epsrb.elliptic import default_family
from epsrb.exceptions import ParameterOutOfDomain


@pytest.fixture(scope="module")
def family():
    return default_family(n=16)


def test_eps_solver_predict(family):
    X = family.sample(3, seed=0)
    est = EpsSolver(family).fit(X)
    U = est.predict(X)
    assert U.shape == (3, 16)
    op, f = family.assemble(X[1])
    np.testing.assert_allclose(U[1], solve_dual(EpsProblem(op, f, family.eps)).u_tilde)
    assert est.f_minus_ > family.eps


def test_eps_override_and_params(family):
    est = EpsSolver(family, eps=50.0)
    assert est.get_params()["eps"] == 50.0
    est2 = clone(est).set_params(eps=0.2)
    assert est2.eps == 0.2 and est.eps == 50.0
    U = est.fit([[0.5, 0.2]]).predict([[0.5, 0.2]])
    assert np.all(U == 0)


def test_validation(family):
    with pytest.raises(NotFittedError):
        EpsSolver(family).predict([[0.1, 0.1]])
    with pytest.raises(ValueError):
        EpsSolver(family).fit([[0.1, 0.1, 0.1]])
    with pytest.raises(ParameterOutOfDomain):
        EpsSolver(family).fit([[3.0, 0.1]])
    with pytest.raises(ValueError):
        EpsSolver(family).fit([[np.nan, 0.1]])


def test_reduced_basis_solver(family):
    rb = ReducedBasisSolver(family, n_eta=8, workers=1).fit(family.grid([3, 3]))
    assert rb.basis_.converged and rb.history_[-1] <= 1e-6
    X = family.sample(5, seed=1)
    alphas = rb.transform(X)
    U = rb.predict(X)
    assert alphas.shape == (5, rb.basis_.size) and U.shape == (5, 16)
    assert np.all(rb.misfit(X) <= family.eps * 1.001)
    assert rb.score(X) == 1.0
    assert all(eta in rb.eta_interval_ for eta in rb.grid_.eta_points)
    assert rb.transform(np.empty((0, 2))).shape == (0, rb.basis_.size)
