import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from smallholes.core import (ConstantVector, DomainSpec, Ellipsoid, LinearX1, OffCenterBall,
                             RadialVector, validate_domain)
from smallholes.exceptions import ExponentOutOfRange, QuadratureNotConverged
from smallholes.norms import (LpReport, lp_gradient_norm, lp_gradient_norms, lp_source_norm,
                              radial_lp_gradient_norms, radial_profile_lp_norm, verify_weight_norm)
from smallholes.quadrature import (QuadratureConfig, domain_cubature, graded_breaks, panel_rule,
                                   sphere_rule)
from smallholes.shell import limit_ball_solution, solve_constant_source


def test_graded_breaks():
    b = graded_breaks(0.01, 1.0)
    w = np.diff(b)
    assert b[0] == 0.01 and b[-1] == 1.0
    assert np.allclose(w[1:] / w[:-1], 2.0)
    assert len(w) == math.ceil(math.log2(100)) + 4


def test_panel_rule_exact_polynomials():
    r, w = panel_rule(graded_breaks(0.1, 2.0), 8)
    assert math.isclose(np.sum(w * r ** 7), (2.0 ** 8 - 0.1 ** 8) / 8, rel_tol=1e-13)


def test_sphere_rule():
    dirs, w = sphere_rule(16, 32)
    assert math.isclose(w.sum(), 4 * math.pi, rel_tol=1e-13)
    assert np.allclose(np.linalg.norm(dirs, axis=1), 1.0)
    assert math.isclose(np.sum(w * np.abs(dirs[:, 0]) ** 3), math.pi, rel_tol=1e-12)


@pytest.mark.parametrize("hole", [None, OffCenterBall((0.8, 0.3, 0.0), 1.0),
                                  Ellipsoid((0.0, 0.5, 0.0), (1.5, 1.0, 0.5))])
def test_cubature_volume(hole):
    dom = validate_domain(DomainSpec(3, 0.2, hole) if hole else DomainSpec(3, 0.2))
    cub = domain_cubature(dom, QuadratureConfig())
    hole_vol = (4 / 3 * math.pi * 0.2 ** 3) * (np.prod(hole.semi_axes) if isinstance(hole, Ellipsoid) else 1.0)
    assert math.isclose(cub.weights.sum(), 4 / 3 * math.pi - hole_vol, rel_tol=1e-8)
    assert np.all(dom.contains(cub.points))


def test_ball_gradient_norm():
    rep = lp_gradient_norm(limit_ball_solution(1.0, 3), p=2.0)
    assert math.isclose(rep.value, math.sqrt(4 * math.pi / 45), rel_tol=1e-10)
    assert rep.converged


def test_three_d_matches_radial():
    sol = solve_constant_source(1.0, 1 / 16, 3)
    a = lp_gradient_norm(sol, p=2.5).value
    b = radial_lp_gradient_norms(sol, [2.5])[0].value
    assert math.isclose(a, b, rel_tol=1e-8)


def test_dirichlet_energy_identity():
    # ||grad u||_2^2 = int u div f for zero boundary data
    sol = solve_constant_source(1.0, 0.25, 3)
    r, w = panel_rule(graded_breaks(0.25, 1.0), 16)
    energy = 4 * math.pi * np.sum(w * sol.radial_value(r) * r ** 2)
    assert math.isclose(lp_gradient_norm(sol, p=2).value ** 2, energy, rel_tol=1e-12)


def test_source_norms():
    assert math.isclose(lp_source_norm(LinearX1(), p=2).value, math.sqrt(4 * math.pi / 15), rel_tol=1e-12)
    dom = validate_domain(DomainSpec(3, 0.25))
    vol = 4 / 3 * math.pi * (1 - 0.25 ** 3)
    assert math.isclose(lp_source_norm(ConstantVector((0, 3.0, 4.0)), dom, 3).value,
                        5 * vol ** (1 / 3), rel_tol=1e-12)


def test_source_norm_off_center_vs_separable():
    dom = validate_domain(DomainSpec(3, 0.25, OffCenterBall((0.0, 0.0, 0.0), 1.0)))
    conc = validate_domain(DomainSpec(3, 0.25))
    a = lp_source_norm(LinearX1(), dom, 3.0).value
    b = lp_source_norm(LinearX1(), conc, 3.0).value
    assert math.isclose(a, b, rel_tol=1e-9)


def test_profile_norm():
    val = radial_profile_lp_norm(lambda r: np.ones_like(r), 0.5, 3, 2.0).value
    assert math.isclose(val, math.sqrt(4 / 3 * math.pi * (1 - 0.125)), rel_tol=1e-13)


def test_report_flagging():
    rep = LpReport(1.0, 2.0, 10, 0, 1e-3, 1e-7)
    assert not rep.converged
    with pytest.raises(QuadratureNotConverged):
        rep.raise_if_not_converged()


def test_weight_norm():
    res = verify_weight_norm(0.1, 2, 3)
    assert math.isclose(res["computed"], math.sqrt(4 * math.pi) * 0.1 ** 1.5, rel_tol=1e-12)
    for q in (3, 3.5, 0.5):
        with pytest.raises(ExponentOutOfRange):
            verify_weight_norm(0.1, q, 3)


@settings(max_examples=20, deadline=None)
@given(st.floats(0.02, 0.25), st.floats(1.0, 2.9))
def test_weight_norm_property(eps, q):
    res = verify_weight_norm(eps, q, 3)
    assert math.isclose(res["computed"], res["predicted"], rel_tol=1e-9)


@settings(max_examples=15, deadline=None)
@given(st.floats(1.1, 6.0))
def test_norm_monotone_in_domain(p):
    # a larger hole removes part of the integration region for the same field
    f = RadialVector(profile=lambda r: 1.0 + r)
    small = lp_source_norm(f, validate_domain(DomainSpec(3, 0.05)), p).value
    large = lp_source_norm(f, validate_domain(DomainSpec(3, 0.25)), p).value
    assert large < small
