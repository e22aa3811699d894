import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from smallholes.analysis import (Regime, SweepRow, _fit_rows, agrees, classify, counterexample_integral,
                                 dual_blowup_sweep, dual_source, empirical_constant, epsilon_sweep,
                                 fit_rate, limit_point_value, predict_regime, rescale_check,
                                 rescale_factor, solve)
from smallholes.core import (ConstantVector, DomainSpec, LinearX1, Modal, OffCenterBall, RadialVector,
                             validate_domain)
from smallholes.exceptions import SweepTooShort, ZeroGradient
from smallholes.mfs import MFSPoissonSolver
from smallholes.norms import radial_lp_gradient_norm, radial_profile_lp_norm
from smallholes.shell import RadialShellSolver, limit_ball_solution, solve_constant_source

EPS = [2.0 ** -k for k in range(2, 9)]


@pytest.mark.parametrize("d,p,regime", [
    (3, 2.0, Regime.UNIFORMLY_BOUNDED), (3, 4.0, Regime.BLOW_UP), (3, 3.0, Regime.BORDERLINE),
    (3, 1.5, Regime.BORDERLINE), (3, 1.2, Regime.DUAL_BLOW_UP), (4, 3.0, Regime.UNIFORMLY_BOUNDED),
    (4, 5.0, Regime.BLOW_UP), (4, 4 / 3, Regime.BORDERLINE),
])
def test_predict_regime(d, p, regime):
    assert predict_regime(d, p).predicted is regime


def test_predicted_rate():
    assert predict_regime(3, 4.0).rate == -0.25
    assert predict_regime(3, 2.0).rate is None


def test_classify_thresholds():
    assert classify(0.01, 0.1) is Regime.UNIFORMLY_BOUNDED
    assert classify(-0.3, 0.99) is Regime.BLOW_UP
    assert classify(-0.3, 0.9) is Regime.INCONCLUSIVE
    assert classify(0.3, 1.0) is Regime.INCONCLUSIVE


@settings(max_examples=40, deadline=None)
@given(st.floats(-2, 2), st.floats(-3, 3))
def test_fit_rate_recovers_power_law(slope, logc):
    eps = np.array(EPS)
    s, c, r2 = fit_rate(eps, math.exp(logc) * eps ** slope)
    assert math.isclose(s, slope, abs_tol=1e-9)
    assert math.isclose(c, logc, abs_tol=1e-8)


def test_fit_uses_smallest_points():
    eps = np.array(EPS)
    vals = np.where(eps > 0.05, 100.0, eps ** -0.5)
    assert math.isclose(fit_rate(eps, vals)[0], -0.5, abs_tol=1e-12)


def test_sweep_regimes_shell():
    res = epsilon_sweep(EPS, LinearX1(), [2.0, 4.0], dim=4)
    assert res.fits[2.0].regime is Regime.UNIFORMLY_BOUNDED
    assert predict_regime(4, 4.0).predicted is Regime.BORDERLINE
    assert agrees(predict_regime(4, 4.0), res.fits[4.0].regime) is None
    for row in res.rows:
        assert row.ratio == row.grad_norm / row.source_norm


@pytest.mark.parametrize("d,p", [(3, 2.0), (3, 2.5), (3, 5.0), (4, 3.0), (4, 6.0)])
def test_regime_agreement_off_borderline(d, p):
    res = epsilon_sweep(EPS, LinearX1(), [p], dim=d)
    assert agrees(predict_regime(d, p), res.regime)


def test_sweep_input_checks():
    with pytest.raises(ValueError):
        epsilon_sweep([0.1, 0.2, 0.05, 0.01], LinearX1(), [2.0])
    with pytest.raises(ValueError):
        epsilon_sweep([0.5, 0.2, 0.1, 0.05], LinearX1(), [2.0])


def test_sweep_too_short_carries_partial():
    with pytest.raises(SweepTooShort) as info:
        epsilon_sweep([0.25, 0.125, 0.0625], LinearX1(), [2.0])
    assert len(info.value.result.rows) == 3


def test_failed_rows_are_marked():
    rows = [SweepRow(e, 2.0, 1.0, 1.0, True) for e in EPS[:4]]
    rows.append(SweepRow(EPS[4], 2.0, math.nan, math.nan, False, error="boom"))
    assert 2.0 in _fit_rows(rows, [2.0])


def test_sweep_threads_deterministic():
    a = epsilon_sweep(EPS[:5], LinearX1(), [2.0], dim=4)
    b = epsilon_sweep(EPS[:5], LinearX1(), [2.0], dim=4, threads=3)
    assert a.rows == b.rows


def test_solve_dispatch():
    dom = validate_domain(DomainSpec(3, 0.25))
    assert isinstance(solve(dom, LinearX1()), RadialShellSolver)
    off = validate_domain(DomainSpec(3, 0.25, OffCenterBall((0.5, 0.0, 0.0), 1.0)))
    assert isinstance(solve(off, LinearX1(), mfs_options={"n_charges": 200}), MFSPoissonSolver)
    with pytest.raises(ValueError):
        solve(off, LinearX1(), solver="shell")


def test_rescale_closed_form():
    sol = solve_constant_source(1.0, 0.25, 3)
    chk = rescale_check(sol, 2.0)
    assert chk.factor == 2.0
    assert chk.relative_error <= 1e-8
    assert rescale_factor(0.1, 4.0, 4) == 1.0


def test_rescale_mfs_off_center(fast_cfg):
    dom = validate_domain(DomainSpec(3, 0.25, OffCenterBall((0.5, 0.0, 0.0), 1.0)))
    sol = MFSPoissonSolver(domain=dom, n_charges=300).fit(LinearX1())
    assert rescale_check(sol, 2.0, fast_cfg).relative_error <= 1e-5


def test_counterexample_values():
    assert math.isclose(counterexample_integral(LinearX1(), 3), 2 * math.pi / 3, abs_tol=1e-12)
    assert counterexample_integral(ConstantVector((1.0, 0.0, 0.0)), 3) == 0.0
    # radial reduction in four dimensions: 2 pi^2 (1/2 - 1/4)
    assert math.isclose(counterexample_integral(LinearX1(), 4), math.pi ** 2 / 2, rel_tol=1e-12)
    assert math.isclose(limit_point_value(LinearX1(), 4),
                        limit_ball_solution(1.0, 4).radial_value(np.array([0.0]))[0], rel_tol=1e-12)


def test_counterexample_radial_and_modal():
    g = RadialVector(profile=lambda r: r ** 2, derivative=lambda r: 2 * r)
    # div = 4 r in three dimensions: 4 pi int (r - r^2) 4 r dr = 4 pi / 3
    assert math.isclose(counterexample_integral(g, 3), 4 * math.pi / 3, rel_tol=1e-10)
    # a non-radial mode integrates to zero against a radial weight
    assert abs(counterexample_integral(Modal(1, 0, lambda r: np.ones_like(r)), 3)) < 1e-10


def test_dual_source_unit_norm():
    v = solve_constant_source(1.0, 0.125, 3)
    for p in (1.2, 1.4, 2.0):
        f = dual_source(v, p)
        assert math.isclose(radial_profile_lp_norm(f.profile, 0.125, 3, p, breakpoints=f.breakpoints).value,
                            1.0, abs_tol=1e-8)
    f2 = dual_source(v, 2.0)
    r = np.linspace(0.2, 0.9, 5)
    norm = radial_lp_gradient_norm(v, 2.0).value
    assert np.allclose(f2.profile(r), v.radial_derivative(r) / norm)


def test_dual_source_zero_gradient():
    with pytest.raises(ZeroGradient):
        dual_source(solve_constant_source(0.0, 0.125, 3), 1.2)


def test_dual_sweep_chain():
    res = dual_blowup_sweep([2.0 ** -k for k in range(3, 8)], 1.4)
    assert res.regime is Regime.BLOW_UP
    for row in res.rows:
        assert row.grad_norm >= row.lower_bound - 1e-6
    with pytest.raises(ValueError):
        dual_blowup_sweep([2.0 ** -k for k in range(3, 8)], 2.0)


def test_empirical_constant():
    assert empirical_constant(2.0, 0.25) <= 1 + 1e-6
    vals = [empirical_constant(2.5, e) for e in (0.25, 1 / 16, 1 / 64)]
    assert max(vals) / min(vals) <= 2.0
    big = [empirical_constant(4.0, e) for e in (1 / 16, 1 / 256)]
    assert big[1] > big[0]
