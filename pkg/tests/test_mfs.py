import math

import numpy as np
import pytest

from smallholes.core import DomainSpec, Ellipsoid, LinearX1, OffCenterBall, validate_domain
from smallholes.exceptions import EvaluationOutsideDomain, IllConditioned
from smallholes.mfs import MFSPoissonSolver, MFSSolver, solve_divergence_source
from smallholes.shell import solve_constant_source


def _interior(dom, n=2000, seed=3):
    X = np.random.default_rng(seed).uniform(-1, 1, (n, 3))
    return X[dom.contains(X, rtol=0.0)]


def test_matches_shell_solution():
    dom = validate_domain(DomainSpec(3, 0.25))
    mfs = solve_divergence_source(dom, LinearX1(), n_charges=300)
    shell = solve_constant_source(1.0, 0.25, 3)
    X = _interior(dom)
    assert np.max(np.abs(mfs.predict(X) - shell.predict(X))) < 1e-7
    assert np.max(np.abs(mfs.predict_gradient(X) - shell.predict_gradient(X))) < 1e-5


def test_manufactured_harmonic_ellipsoid():
    x0 = np.array([0.0, 0.0, 2.0])
    exact = lambda X: 1.0 / (4 * math.pi * np.linalg.norm(X - x0, axis=1))
    dom = validate_domain(DomainSpec(3, 0.2, Ellipsoid((0.5, 0.0, 0.0), (1.5, 1.0, 0.75))))
    sol = MFSSolver(domain=dom, n_charges=300).fit(exact)
    X = _interior(dom)
    assert np.max(np.abs(sol.predict(X) - exact(X))) < 1e-6


def test_under_resolved_raises_with_report():
    dom = validate_domain(DomainSpec(3, 0.25, OffCenterBall((0.5, 0.0, 0.0), 1.0)))
    with pytest.raises(IllConditioned) as info:
        MFSPoissonSolver(domain=dom, n_charges=8).fit(LinearX1())
    rep = info.value.report()
    assert rep["rank"] <= 16 and rep["residual"] > 1e-6 and rep["condition_estimate"] > 1


def test_deterministic_and_seeded():
    dom = validate_domain(DomainSpec(3, 0.25))
    a = MFSPoissonSolver(domain=dom, n_charges=100, residual_tol=1e-2).fit(1.0)
    b = MFSPoissonSolver(domain=dom, n_charges=100, residual_tol=1e-2).fit(1.0)
    assert np.array_equal(a.weights_, b.weights_)
    assert np.array_equal(a.validation_points_, b.validation_points_)


def test_outside_domain_rejected():
    dom = validate_domain(DomainSpec(3, 0.25))
    sol = MFSPoissonSolver(domain=dom, n_charges=100, residual_tol=1e-2).fit(1.0)
    with pytest.raises(EvaluationOutsideDomain):
        sol.predict([[0.05, 0.0, 0.0]])


def test_constant_data_four_dimensions():
    dom = validate_domain(DomainSpec(4, 0.25))
    sol = MFSPoissonSolver(domain=dom, n_charges=400, residual_tol=1e-3).fit(LinearX1())
    shell = solve_constant_source(1.0, 0.25, 4)
    X = np.random.default_rng(0).uniform(-0.6, 0.6, (200, 4))
    X = X[dom.contains(X, rtol=0.0)]
    assert np.max(np.abs(sol.predict(X) - shell.predict(X))) < 1e-3


def test_get_params_roundtrip():
    est = MFSSolver(n_charges=50, seed=4)
    assert est.get_params()["n_charges"] == 50
    assert est.set_params(seed=7).seed == 7
