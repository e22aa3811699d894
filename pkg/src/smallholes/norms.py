"""L^p norms of gradients and source fields over perforated balls.

Every norm is computed twice, the second time with all node counts doubled;
the relative change is reported as ``refinement_delta``. Reports whose
change stays above tolerance are flagged ``converged=False`` rather than
raising, so that sweeps can carry on and mark the affected cells.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
import math

import numpy as np
from scipy.special import gammaln, roots_jacobi

from ._validation import check_exponent
from .core import ConstantVector, LinearX1, RadialVector
from .exceptions import ExponentOutOfRange, QuadratureNotConverged
from .kernel import sphere_area
from .quadrature import (QuadratureConfig, domain_cubature, graded_breaks, insert_breaks,
                         panel_rule)


@dataclass(frozen=True)
class LpReport:
    value: float
    p: float
    nodes_radial: int
    nodes_angular: int
    refinement_delta: float
    tolerance: float

    @property
    def converged(self):
        return self.refinement_delta <= self.tolerance

    def raise_if_not_converged(self):
        if not self.converged:
            raise QuadratureNotConverged(
                f"L^{self.p} norm changed by {self.refinement_delta:.2e} under refinement "
                f"(tolerance {self.tolerance:.1e})")
        return self


def _relative_change(new, old):
    if new == old:
        return 0.0
    return abs(new - old) / max(abs(new), 1e-300)


def _refine(compute, cfg, ps):
    """Run ``compute(cfg) -> (values, nodes_radial, nodes_angular)`` with doubling
    until every exponent meets the tolerance or refinements run out."""
    values, nr, na = compute(cfg)
    delta = [math.inf] * len(ps)
    for _ in range(max(cfg.max_refinements, 1)):
        cfg = cfg.doubled()
        new, nr, na = compute(cfg)
        delta = [_relative_change(a, b) for a, b in zip(new, values)]
        values = new
        if max(delta) <= cfg.tol:
            break
    return [LpReport(float(v), float(p), nr, na, float(dl), cfg.tol)
            for v, p, dl in zip(values, ps, delta)]


# --------------------------------------------------------------------------
# radial reductions
# --------------------------------------------------------------------------

def _radial_integral(func, a, b, dim, n_nodes, cfg, breakpoints=()):
    """``|S^(d-1)| int_a^b func(r) r^(d-1) dr`` by graded panels."""
    breaks = graded_breaks(a, b, cfg.n_panels, cfg.grading_ratio)
    breaks = insert_breaks(breaks, breakpoints)
    r, w = panel_rule(breaks, n_nodes)
    return sphere_area(dim) * np.sum(w * func(r) * r ** (dim - 1)), len(r)


def radial_lp_gradient_norm(sol, p, cfg=None):
    """``(|S^(d-1)| int |u'(r)|^p r^(d-1) dr)^(1/p)`` for a radial solution."""
    reports = radial_lp_gradient_norms(sol, [p], cfg)
    return reports[0]


def radial_lp_gradient_norms(sol, ps, cfg=None):
    cfg = cfg or QuadratureConfig()
    ps = [check_exponent(p) for p in ps]
    a, d = sol.inner_radius_, sol.dim_
    extra = list(sol.derivative_roots())
    extra += list(getattr(getattr(sol, "source_", None), "breakpoints", ()) or ())

    def compute(c):
        breaks = graded_breaks(a, 1.0, c.n_panels, c.grading_ratio)
        breaks = insert_breaks(breaks, extra)
        r, w = panel_rule(breaks, c.nodes_per_panel)
        du = np.abs(sol.radial_derivative(r))
        base = sphere_area(d) * w * r ** (d - 1)
        return [float(np.sum(base * du ** p)) ** (1.0 / p) for p in ps], len(r), 0

    return _refine(compute, cfg, ps)


def radial_profile_lp_norm(profile, epsilon, dim, p, cfg=None, breakpoints=()):
    """L^p norm of ``g(|x|) e_r`` over the shell ``epsilon < |x| < 1``."""
    cfg = cfg or QuadratureConfig()
    p = check_exponent(p)

    def compute(c):
        val, n = _radial_integral(lambda r: np.abs(profile(r)) ** p, epsilon, 1.0, dim,
                                  c.nodes_per_panel, c, breakpoints)
        return [val ** (1.0 / p)], n, 0

    return _refine(compute, cfg, [p])[0]


# --------------------------------------------------------------------------
# general solutions
# --------------------------------------------------------------------------

def _solution_domain(sol, domain):
    if domain is not None:
        return domain, False
    dom = getattr(sol, "domain_", None)
    if dom is None:
        return None, True
    return dom, False


def _is_radial(sol):
    return hasattr(sol, "derivative_roots")


def lp_gradient_norms(sol, ps, domain=None, cfg=None, rotation=None):
    """Gradient norms for several exponents sharing one set of evaluations."""
    cfg = cfg or QuadratureConfig()
    ps = [check_exponent(p) for p in ps]
    dom, no_hole = _solution_domain(sol, domain)
    if sol.dim_ != 3:
        if _is_radial(sol):
            return radial_lp_gradient_norms(sol, ps, cfg)
        raise NotImplementedError("only radial solutions are supported for d > 3")
    if no_hole:
        from .core import shell_domain
        dom = shell_domain(0.25, 3)

    def compute(c):
        cub = domain_cubature(dom, c, rotation, no_hole=no_hole)
        g = np.linalg.norm(sol.predict_gradient(cub.points), axis=1)
        return ([float(np.sum(cub.weights * g ** p)) ** (1.0 / p) for p in ps],
                cub.nodes_radial, cub.nodes_angular)

    return _refine(compute, cfg, ps)


def lp_gradient_norm(sol, domain=None, p=2.0, cfg=None, rotation=None):
    """``(int |grad u|^p dx)^(1/p)`` over the solution's domain.

    Three-dimensional solutions use the cubature of
    :func:`smallholes.quadrature.domain_cubature`; radial solutions in higher
    dimension fall back to the one-dimensional reduction.
    """
    return lp_gradient_norms(sol, [p], domain, cfg, rotation)[0]


# --------------------------------------------------------------------------
# source norms
# --------------------------------------------------------------------------

def _sphere_abs_moment(dim, p):
    """``int_{S^(d-1)} |w_1|^p dw``."""
    return 2.0 * math.exp(0.5 * (dim - 1) * math.log(math.pi)
                          + gammaln((p + 1) / 2.0) - gammaln((p + dim) / 2.0))


def _separable(f):
    """``(angular factor, radial function)`` with ``|f|^p = A(p) * F(r, p)``."""
    if isinstance(f, LinearX1):
        return (lambda d, p: _sphere_abs_moment(d, p)), (lambda r, p: r ** p)
    if isinstance(f, ConstantVector):
        v = float(np.linalg.norm(f.vector))
        return (lambda d, p: sphere_area(d)), (lambda r, p: np.full_like(r, v ** p))
    if isinstance(f, RadialVector):
        return (lambda d, p: sphere_area(d)), (lambda r, p: np.abs(f.profile(r)) ** p)
    return None


def lp_source_norm(f, domain=None, p=2.0, cfg=None, dim=3):
    """``(int |f|^p dx)^(1/p)`` over ``domain`` (the full unit ball if ``None``)."""
    cfg = cfg or QuadratureConfig()
    p = check_exponent(p)
    if domain is not None:
        dim = domain.dim
    sep = _separable(f)
    concentric = domain is None or domain.is_concentric
    if sep is not None and concentric:
        ang, rad = sep
        a = 0.0 if domain is None else domain.inner_radius
        b = 1.0 if domain is None else domain.outer_radius
        bp = getattr(f, "breakpoints", ())

        def compute(c):
            breaks = insert_breaks(graded_breaks(a, b, c.n_panels, c.grading_ratio), bp)
            r, w = panel_rule(breaks, c.nodes_per_panel)
            return [float(ang(dim, p) * np.sum(w * rad(r, p) * r ** (dim - 1))) ** (1.0 / p)], len(r), 0

        return _refine(compute, cfg, [p])[0]
    if dim != 3:
        raise NotImplementedError("non-separable sources need d = 3")
    from .core import shell_domain
    dom = domain if domain is not None else shell_domain(0.25, 3)

    def compute(c):
        cub = domain_cubature(dom, c, no_hole=domain is None)
        vals = np.linalg.norm(f(cub.points), axis=1)
        return [float(np.sum(cub.weights * vals ** p)) ** (1.0 / p)], cub.nodes_radial, cub.nodes_angular

    return _refine(compute, cfg, [p])[0]


# --------------------------------------------------------------------------
# weight-norm self test
# --------------------------------------------------------------------------

def verify_weight_norm(epsilon, q, dim=3, n_nodes=16, levels=60):
    """L^q norm of ``eps^(d-1) / |x|`` over ``B(0, 1/eps)``: quadrature and closed form.

    The quadrature uses geometric panels toward the origin, Gauss-Legendre on
    each, and a Gauss-Jacobi panel absorbing the ``r^(d-1-q)`` factor at the
    origin.

    Raises
    ------
    ExponentOutOfRange
        If ``q >= d`` (the norm then grows without bound with the radius) or ``q < 1``.
    """
    eps, q = float(epsilon), float(q)
    if not 1.0 <= q < dim:
        raise ExponentOutOfRange(f"need 1 <= q < d = {dim}, got q = {q}")
    R = 1.0 / eps
    beta = dim - 1 - q
    breaks = R * 2.0 ** -np.arange(levels, -1, -1, dtype=float)
    r, w = panel_rule(breaks, n_nodes)
    body = np.sum(w * r ** beta)
    t, wj = roots_jacobi(n_nodes, 0.0, beta)
    a = breaks[0]
    head = (a / 2.0) ** (beta + 1) * np.sum(wj)
    integral = sphere_area(dim) * (head + body)
    computed = eps ** (dim - 1) * integral ** (1.0 / q)
    predicted = eps ** (dim - 1) * (sphere_area(dim) * R ** (dim - q) / (dim - q)) ** (1.0 / q)
    return {"computed": float(computed), "predicted": float(predicted)}
