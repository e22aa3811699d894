"""Epsilon sweeps, blow-up rate fits and the checks built on the solvers.

The fitted quantity is the slope of ``log ||grad u_eps||_p`` against
``log eps`` over the four smallest usable ``eps``. A negative slope means
the gradient norm grows as the hole shrinks.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
import math
from typing import NamedTuple, Optional

import numpy as np

from ._validation import check_exponent, conjugate_exponent
from .core import (ConcentricBall, ConstantVector, DomainSpec, LinearX1, Modal, RadialVector,
                   validate_domain)
from .exceptions import NumericalError, QuadratureNotConverged, SweepTooShort, ZeroGradient
from .kernel import KernelConfig, sphere_area
from .mfs import MFSPoissonSolver
from .norms import (lp_gradient_norms, lp_source_norm, radial_lp_gradient_norm,
                    radial_lp_gradient_norms, radial_profile_lp_norm)
from .quadrature import QuadratureConfig, domain_cubature, graded_breaks, panel_rule
from .shell import ModalShellSolver, RadialShellSolver, solve_constant_source, solve_radial_source

FIT_POINTS = 4
SLOPE_THRESHOLD = 0.05
MIN_R_SQUARED = 0.98


class Regime(str, Enum):
    UNIFORMLY_BOUNDED = "uniformly_bounded"
    BLOW_UP = "blow_up"
    DUAL_BLOW_UP = "dual_blow_up"
    BORDERLINE = "borderline"
    INCONCLUSIVE = "inconclusive"


@dataclass(frozen=True)
class RegimePrediction:
    dim: int
    p: float
    predicted: Regime
    rate: Optional[float] = None


def predict_regime(dim, p):
    """Regime expected for exponent ``p`` in dimension ``dim``.

    Uniform bounds hold for ``d' < p < d``; gradient norms blow up for
    ``p > d`` (shell rate ``(d - p)/p``) and, for suitably chosen unit
    sources, for ``1 < p < d'``. The endpoints are left open.
    """
    if dim < 3:
        raise ValueError("dimension must be >= 3")
    p = check_exponent(p)
    d_conj = dim / (dim - 1.0)
    if math.isclose(p, dim, rel_tol=0, abs_tol=1e-12) or math.isclose(p, d_conj, rel_tol=0, abs_tol=1e-12):
        return RegimePrediction(dim, p, Regime.BORDERLINE)
    if d_conj < p < dim:
        return RegimePrediction(dim, p, Regime.UNIFORMLY_BOUNDED)
    if p > dim:
        return RegimePrediction(dim, p, Regime.BLOW_UP, (dim - p) / p)
    return RegimePrediction(dim, p, Regime.DUAL_BLOW_UP)


def agrees(prediction, regime):
    """Whether an observed regime matches a prediction; ``None`` on the borderline."""
    if prediction.predicted is Regime.BORDERLINE:
        return None
    if prediction.predicted is Regime.UNIFORMLY_BOUNDED:
        return regime is Regime.UNIFORMLY_BOUNDED
    return regime is Regime.BLOW_UP


# --------------------------------------------------------------------------
# sweep results
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class SweepRow:
    epsilon: float
    p: float
    grad_norm: float
    source_norm: float
    converged: bool
    lower_bound: Optional[float] = None
    error: Optional[str] = None

    @property
    def ratio(self):
        return self.grad_norm / self.source_norm if self.source_norm else math.nan


@dataclass(frozen=True)
class RateFit:
    p: float
    slope: float
    intercept: float
    r_squared: float
    regime: Regime
    n_points: int


@dataclass
class SweepResult:
    rows: list
    fits: dict = field(default_factory=dict)

    def _single(self):
        if len(self.fits) != 1:
            raise ValueError("sweep covers several exponents; use .fits[p]")
        return next(iter(self.fits.values()))

    @property
    def slope(self):
        return self._single().slope

    @property
    def r_squared(self):
        return self._single().r_squared

    @property
    def regime(self):
        return self._single().regime

    def column(self, name, p=None):
        return np.array([getattr(r, name) for r in self.rows if p is None or r.p == p])


def classify(slope, r_squared):
    if abs(slope) < SLOPE_THRESHOLD:
        return Regime.UNIFORMLY_BOUNDED
    if slope < -SLOPE_THRESHOLD and r_squared >= MIN_R_SQUARED:
        return Regime.BLOW_UP
    return Regime.INCONCLUSIVE


def fit_rate(epsilons, values, n_points=FIT_POINTS):
    """Least-squares slope of ``log(values)`` vs ``log(epsilons)`` on the
    ``n_points`` smallest epsilons. Returns ``(slope, intercept, r_squared)``."""
    eps = np.asarray(epsilons, dtype=float)
    vals = np.asarray(values, dtype=float)
    order = np.argsort(eps)[:n_points]
    x, y = np.log(eps[order]), np.log(vals[order])
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 if ss_tot == 0 else 1.0 - float(np.sum(resid ** 2)) / ss_tot
    return float(slope), float(intercept), r2


def _fit_rows(rows, ps):
    fits = {}
    for p in ps:
        usable = [r for r in rows if r.p == p and r.converged and np.isfinite(r.grad_norm)
                  and r.grad_norm > 0]
        if len(usable) < FIT_POINTS:
            raise SweepTooShort(f"only {len(usable)} usable rows for p = {p}")
        slope, intercept, r2 = fit_rate([r.epsilon for r in usable],
                                        [r.grad_norm for r in usable])
        fits[p] = RateFit(p, slope, intercept, r2, classify(slope, r2), FIT_POINTS)
    return fits


def _check_epsilons(epsilons):
    eps = [float(e) for e in epsilons]
    if any(b >= a for a, b in zip(eps, eps[1:])):
        raise ValueError("epsilon list must be strictly decreasing")
    if not all(0 < e <= 0.25 for e in eps):
        raise ValueError("every epsilon must lie in (0, 1/4]")
    return eps


def _map(fn, items, threads):
    if threads and threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(fn, items))
    return [fn(i) for i in items]


# --------------------------------------------------------------------------
# solving one configuration
# --------------------------------------------------------------------------

def choose_solver(domain, source, solver="auto"):
    if solver in ("shell", "mfs"):
        return solver
    if solver != "auto":
        raise ValueError(f"unknown solver {solver!r}")
    if domain.is_concentric and (isinstance(source, (LinearX1, ConstantVector, RadialVector))
                                 or (isinstance(source, Modal) and domain.dim == 3)):
        return "shell"
    return "mfs"


def solve(domain, source, solver="auto", cfg=None, mfs_options=None):
    """Solve ``-Laplace u = div f`` with zero Dirichlet data on ``domain``."""
    domain = validate_domain(domain)
    kind = choose_solver(domain, source, solver)
    if kind == "shell":
        if not domain.is_concentric or domain.frame != "original":
            raise ValueError("the shell solver needs a concentric hole in the original frame")
        inner = domain.inner_radius
        if isinstance(source, Modal):
            return ModalShellSolver(source.l, source.m, inner, cfg).fit(source)
        return RadialShellSolver(inner, domain.dim, cfg).fit(source)
    return MFSPoissonSolver(domain=domain, **(mfs_options or {})).fit(source)


def epsilon_sweep(epsilons, source, ps, dim=3, hole=None, solver="auto", cfg=None,
                  mfs_options=None, threads=1):
    """Solve and measure ``||grad u_eps||_p`` and ``||f||_p`` for each epsilon.

    Rows whose solve or quadrature fails are kept with ``converged=False``.
    A :class:`SweepTooShort` raised here carries the partial result as
    ``.result``.
    """
    eps_list = _check_epsilons(epsilons)
    ps = [check_exponent(p) for p in ps]
    hole = hole if hole is not None else ConcentricBall()
    cfg = cfg or QuadratureConfig()

    def one(eps):
        domain = validate_domain(DomainSpec(dim, eps, hole))
        try:
            sol = solve(domain, source, solver, cfg, mfs_options)
            grads = lp_gradient_norms(sol, ps, cfg=cfg)
        except NumericalError as exc:
            return [SweepRow(eps, p, math.nan, math.nan, False, error=str(exc)) for p in ps]
        rows = []
        for p, g in zip(ps, grads):
            s = lp_source_norm(source, domain, p, cfg)
            rows.append(SweepRow(eps, p, g.value, s.value, g.converged and s.converged))
        return rows

    rows = [row for chunk in _map(one, eps_list, threads) for row in chunk]
    result = SweepResult(rows)
    try:
        result.fits = _fit_rows(rows, ps)
    except SweepTooShort as exc:
        exc.result = result
        raise
    return result


# --------------------------------------------------------------------------
# rescaling
# --------------------------------------------------------------------------

class RescaleCheck(NamedTuple):
    relative_error: float
    factor: float
    original_norm: float
    rescaled_norm: float


def rescale_factor(epsilon, p, dim):
    """``eps^(1 - d/p)``, the ratio of rescaled to original gradient norms."""
    return float(epsilon) ** (1.0 - dim / float(p))


def rescale_check(sol, p, cfg=None):
    """Compare ``||grad u~||_p`` on the rescaled domain with ``eps^(1-d/p) ||grad u||_p``.

    ``u~(y) = u(eps y)`` is integrated with a quadrature laid out directly in
    the rescaled frame.
    """
    cfg = cfg or QuadratureConfig()
    p = check_exponent(p)
    domain = sol.domain_
    eps, d = domain.epsilon, sol.dim_
    factor = rescale_factor(eps, p, d)
    if hasattr(sol, "derivative_roots"):
        original = radial_lp_gradient_norm(sol, p, cfg).value
        a, b = sol.inner_radius_ / eps, 1.0 / eps
        roots = [r / eps for r in sol.derivative_roots()]
        breaks = np.unique(np.concatenate([graded_breaks(a, b, cfg.n_panels, cfg.grading_ratio),
                                           [r for r in roots if a < r < b]]))
        y, w = panel_rule(breaks, 2 * cfg.nodes_per_panel)
        du = eps * np.abs(sol.radial_derivative(eps * y))
        rescaled = float(sphere_area(d) * np.sum(w * du ** p * y ** (d - 1))) ** (1.0 / p)
    else:
        original = lp_gradient_norms(sol, [p], cfg=cfg)[0].value
        big = domain.to_frame("rescaled")
        cub = domain_cubature(big, cfg.doubled())
        g = eps * np.linalg.norm(sol.predict_gradient(eps * cub.points), axis=1)
        rescaled = float(np.sum(cub.weights * g ** p)) ** (1.0 / p)
    expected = factor * original
    return RescaleCheck(abs(rescaled - expected) / expected, factor, original, rescaled)


# --------------------------------------------------------------------------
# limit value at the hole
# --------------------------------------------------------------------------

def _radial_divergence(f, dim):
    if isinstance(f, (LinearX1, ConstantVector)):
        c = f.constant_divergence
        return lambda r: np.full_like(r, c)
    if isinstance(f, RadialVector):
        def div(r):
            X = np.zeros((len(r), dim))
            X[:, 0] = r
            return f.divergence(X)
        return div
    return None


def counterexample_integral(f, dim=3, cfg=None):
    """``int_{B_1} (|y|^(2-d) - 1) div f(y) dy`` over the unit ball.

    Raises
    ------
    QuadratureNotConverged
    """
    cfg = cfg or QuadratureConfig()
    radial_div = _radial_divergence(f, dim)

    if radial_div is not None:
        def compute(c):
            r, w = panel_rule(np.linspace(0.0, 1.0, (c.n_panels or 4) + 1), c.nodes_per_panel)
            return sphere_area(dim) * float(np.sum(w * (r - r ** (dim - 1)) * radial_div(r)))
    elif dim == 3:
        from .core import shell_domain
        ball = shell_domain(0.25, 3)

        def compute(c):
            cub = domain_cubature(ball, c, no_hole=True)
            r = np.linalg.norm(cub.points, axis=1)
            return float(np.sum(cub.weights * (1.0 / r - 1.0) * f.divergence(cub.points)))
    else:
        raise NotImplementedError("non-radial divergence needs d = 3")
    coarse, fine = compute(cfg), compute(cfg.doubled())
    if abs(fine - coarse) > cfg.tol * max(abs(fine), 1.0):
        raise QuadratureNotConverged("weighted divergence integral did not converge")
    return fine


def limit_point_value(f, dim=3, cfg=None):
    """Value at the origin of the no-hole limit solution, ``alpha_d`` times
    :func:`counterexample_integral`."""
    return KernelConfig(dim).alpha * counterexample_integral(f, dim, cfg)


# --------------------------------------------------------------------------
# duality construction
# --------------------------------------------------------------------------

def dual_source(v, p, cfg=None):
    """Unit-norm source ``|grad v|^(p'-2) grad v / ||grad v||_{p'}^(p'/p)``.

    ``v`` must be a fitted :class:`RadialShellSolver`; the result is a
    :class:`RadialVector` with ``||f||_p = 1``.
    """
    p = check_exponent(p)
    q = conjugate_exponent(p)
    norm = radial_lp_gradient_norm(v, q, cfg).value
    if not norm > 0:
        raise ZeroGradient("dual source needs a solution with nonzero gradient")
    scale = norm ** (q / p)

    def profile(r):
        du = v.radial_derivative(r)
        return np.abs(du) ** (q - 2) * du / scale

    return RadialVector(profile=profile, epsilon=v.inner_radius_,
                        breakpoints=tuple(v.derivative_roots()), name=f"dual(p={p:g})")


def dual_blowup_sweep(epsilons, p, dim=3, source=None, cfg=None, threads=1):
    """Rows of ``||f_eps||_p``, ``||grad u_eps||_p`` and the duality lower bound
    ``||grad v_eps||_{p'} / ||f||_{p'}`` on concentric shells."""
    eps_list = _check_epsilons(epsilons)
    p = check_exponent(p)
    if not p < dim / (dim - 1.0):
        raise ValueError(f"dual construction targets 1 < p < d' = {dim / (dim - 1.0):g}")
    source = source if source is not None else LinearX1()
    if getattr(source, "constant_divergence", None) is None:
        raise ValueError("dual sweep needs a source with constant divergence")
    cfg = cfg or QuadratureConfig()
    q = conjugate_exponent(p)

    def one(eps):
        domain = validate_domain(DomainSpec(dim, eps))
        try:
            v = solve_constant_source(source.constant_divergence, eps, dim)
            fe = dual_source(v, p, cfg)
            u = solve_radial_source(fe, eps, dim, quadrature=cfg)
            g = radial_lp_gradient_norm(u, p, cfg)
            s = radial_profile_lp_norm(fe.profile, eps, dim, p, cfg, fe.breakpoints)
            lower = (radial_lp_gradient_norm(v, q, cfg).value
                     / lp_source_norm(source, domain, q, cfg).value)
        except NumericalError as exc:
            return SweepRow(eps, p, math.nan, math.nan, False, error=str(exc))
        return SweepRow(eps, p, g.value, s.value, g.converged and s.converged, lower)

    rows = _map(one, eps_list, threads)
    result = SweepResult(rows)
    try:
        result.fits = _fit_rows(rows, [p])
    except SweepTooShort as exc:
        exc.result = result
        raise
    return result


# --------------------------------------------------------------------------
# empirical constant
# --------------------------------------------------------------------------

def default_source_library():
    return [
        LinearX1(),
        RadialVector(profile=lambda r: np.ones_like(r), derivative=lambda r: np.zeros_like(r),
                     name="unit_radial"),
        RadialVector(profile=lambda r: r, derivative=lambda r: np.ones_like(r), name="linear_radial"),
        RadialVector(profile=lambda r: 1.0 - r, derivative=lambda r: -np.ones_like(r),
                     name="tapered_radial"),
    ]


def empirical_constant(p, epsilon, library=None, dim=3, cfg=None):
    """Largest ``||grad u||_p / ||f||_p`` over a library of sources on the shell."""
    p = check_exponent(p)
    library = library if library is not None else default_source_library()
    domain = validate_domain(DomainSpec(dim, epsilon))
    cfg = cfg or QuadratureConfig()
    best = 0.0
    for f in library:
        sol = RadialShellSolver(domain.inner_radius, dim, cfg).fit(f)
        g = radial_lp_gradient_norms(sol, [p], cfg)[0].value
        s = lp_source_norm(f, domain, p, cfg).value
        if s > 0:
            best = max(best, g / s)
    return best
