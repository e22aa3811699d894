"""Exact and semi-analytic solutions on the spherical shell ``eps < |x| < 1``.

These are the ground-truth solvers for concentric holes. Each estimator is
configured with the shell geometry, fitted to a source, and then evaluated
pointwise with :meth:`predict` / :meth:`predict_gradient`.
"""

from __future__ import annotations

import numpy as np
from scipy.optimize import brentq
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from ._validation import check_points
from .core import ConstantVector, LinearX1, Modal, RadialVector, real_harmonic, shell_domain
from .exceptions import EvaluationOutsideDomain, QuadratureNotConverged
from .quadrature import QuadratureConfig, gauss_legendre, graded_breaks, insert_breaks, panel_rule

SOLVER_TOL = 1e-10


class FieldMixin:
    """Pointwise evaluation shared by all solution estimators."""

    def evaluate(self, X):
        """Return ``(values, gradients)`` at the points ``X``."""
        return self.predict(X), self.predict_gradient(X)


class _CumulativeIntegral:
    """``r -> int_a^r func(s) ds`` by composite Gauss-Legendre on fixed panels."""

    def __init__(self, func, breaks, n_nodes):
        self.func = func
        self.breaks = np.asarray(breaks, dtype=float)
        self.n_nodes = n_nodes
        nodes, weights = panel_rule(self.breaks, n_nodes)
        vals = np.asarray(func(nodes), dtype=float)
        per_panel = (vals * weights).reshape(len(self.breaks) - 1, n_nodes).sum(axis=1)
        self.cumulative = np.concatenate([[0.0], np.cumsum(per_panel)])

    @property
    def total(self):
        return self.cumulative[-1]

    def __call__(self, r):
        r = np.asarray(r, dtype=float)
        flat = np.clip(r.ravel(), self.breaks[0], self.breaks[-1])
        j = np.clip(np.searchsorted(self.breaks, flat, side="right") - 1, 0, len(self.breaks) - 2)
        lo = self.breaks[j]
        t, w = gauss_legendre(self.n_nodes)
        half = 0.5 * (flat - lo)
        s = lo[:, None] + half[:, None] * (t[None, :] + 1.0)
        partial = half * (np.asarray(self.func(s), dtype=float) @ w)
        return (self.cumulative[j] + partial).reshape(r.shape)


def _sign_change_roots(func, breaks, n_nodes=16):
    """Simple roots of ``func`` located from sign changes on the panel nodes."""
    nodes, _ = panel_rule(breaks, n_nodes)
    nodes = np.concatenate([[breaks[0]], nodes, [breaks[-1]]])
    vals = np.asarray(func(nodes), dtype=float)
    roots = []
    for a, b, fa, fb in zip(nodes[:-1], nodes[1:], vals[:-1], vals[1:]):
        if fa == 0.0:
            roots.append(a)
        elif fa * fb < 0:
            roots.append(brentq(lambda s: float(func(np.array([s]))[0]), a, b, xtol=1e-15, rtol=1e-15))
    return sorted(set(roots) - {breaks[0], breaks[-1]})


class RadialShellSolver(FieldMixin, BaseEstimator):
    """Radially symmetric solution of ``-Laplace u = div f`` on ``eps < |x| < 1``.

    Parameters
    ----------
    epsilon : float
        Inner radius. ``0`` gives the full ball (no hole).
    dim : int
        Space dimension, at least 3.
    quadrature : QuadratureConfig, optional
        Panel layout for sources without a closed form.

    Attributes
    ----------
    kind_ : {"constant", "radial"}
    constant_ : float
        Constant divergence (``kind_ == "constant"``).
    coef_ : tuple
        ``(A, B)`` in ``u = -c r^2/(2d) + A + B r^(2-d)`` (``kind_ == "constant"``).
    flux_ : float
        ``r^(d-1) (u' + g)`` (``kind_ == "radial"``).
    """

    def __init__(self, epsilon=0.25, dim=3, quadrature=None):
        self.epsilon = epsilon
        self.dim = dim
        self.quadrature = quadrature

    def fit(self, source, y=None):
        """Solve for ``source``: a number (constant divergence), a catalog
        source with constant divergence, or a :class:`RadialVector`."""
        eps, d = float(self.epsilon), int(self.dim)
        self.dim_ = d
        self.inner_radius_ = eps
        self.domain_ = shell_domain(eps, d) if eps > 0 else None
        if isinstance(source, RadialVector):
            self._fit_radial(source, eps, d)
            return self
        if isinstance(source, (LinearX1, ConstantVector)):
            c = source.constant_divergence
        elif isinstance(source, Modal):
            raise TypeError("modal sources need ModalShellSolver")
        else:
            c = float(source)
            source = None
        self.kind_ = "constant"
        self.constant_ = c
        self.source_ = source
        if eps == 0:
            B = 0.0
        else:
            B = c * (eps ** 2 - 1.0) / (2 * d * (eps ** (2 - d) - 1.0))
        self.coef_ = (c / (2 * d) - B, B)
        return self

    def _fit_radial(self, source, eps, d):
        if eps <= 0:
            raise ValueError("radial sources need a hole (epsilon > 0)")
        cfg = self.quadrature or QuadratureConfig()
        breaks = graded_breaks(eps, 1.0, cfg.n_panels, cfg.grading_ratio)
        breaks = insert_breaks(breaks, getattr(source, "breakpoints", ()))
        profile = source.profile
        coarse = _CumulativeIntegral(profile, breaks, cfg.nodes_per_panel)
        fine = _CumulativeIntegral(profile, breaks, 2 * cfg.nodes_per_panel)
        scale = max(_CumulativeIntegral(lambda s: np.abs(profile(s)), breaks,
                                        2 * cfg.nodes_per_panel).total, 1e-300)
        if abs(fine.total - coarse.total) > SOLVER_TOL * scale:
            raise QuadratureNotConverged(
                f"profile integral changed by {abs(fine.total - coarse.total):.3e} under node doubling")
        self.kind_ = "radial"
        self.source_ = source
        self.breaks_ = breaks
        self._G = fine
        self.flux_ = fine.total * (d - 2) / (eps ** (2 - d) - 1.0)

    # -- radial profile ---------------------------------------------------
    def radial_value(self, r):
        check_is_fitted(self, "kind_")
        r = np.asarray(r, dtype=float)
        d = self.dim_
        if self.kind_ == "constant":
            A, B = self.coef_
            with np.errstate(divide="ignore"):
                hom = B * r ** (2 - d) if B != 0 else 0.0
            return -self.constant_ * r ** 2 / (2 * d) + A + hom
        eps = self.inner_radius_
        return -self._G(r) + self.flux_ * (eps ** (2 - d) - r ** (2 - d)) / (d - 2)

    def radial_derivative(self, r):
        check_is_fitted(self, "kind_")
        r = np.asarray(r, dtype=float)
        d = self.dim_
        if self.kind_ == "constant":
            _, B = self.coef_
            with np.errstate(divide="ignore"):
                hom = (2 - d) * B * r ** (1 - d) if B != 0 else 0.0
            return -self.constant_ * r / d + hom
        return -np.asarray(self.source_.profile(r), dtype=float) + self.flux_ * r ** (1 - d)

    def derivative_roots(self):
        """Radii in ``(eps, 1)`` where ``u'`` changes sign."""
        check_is_fitted(self, "kind_")
        if self.kind_ == "constant":
            c, (_, B), d = self.constant_, self.coef_, self.dim_
            if c == 0 or B == 0:
                return []
            rd = (2 - d) * B * d / c
            if rd <= 0:
                return []
            r = rd ** (1.0 / d)
            return [r] if self.inner_radius_ < r < 1 else []
        return _sign_change_roots(self.radial_derivative, self.breaks_)

    # -- estimator API ----------------------------------------------------
    def _radii(self, X):
        check_is_fitted(self, "kind_")
        X = check_points(X, self.dim_)
        r = np.linalg.norm(X, axis=1)
        if np.any(r < self.inner_radius_ * (1 - 1e-9)) or np.any(r > 1 + 1e-9):
            raise EvaluationOutsideDomain("point outside the shell")
        return X, r

    def predict(self, X):
        _, r = self._radii(X)
        return self.radial_value(r)

    def predict_gradient(self, X):
        X, r = self._radii(X)
        du = self.radial_derivative(r)
        with np.errstate(invalid="ignore", divide="ignore"):
            G = X * (du / r)[:, None]
        G[r == 0] = 0.0
        return G


class ModalShellSolver(FieldMixin, BaseEstimator):
    """Mode ``(l, m)`` solution ``u = U(r) Y_lm`` on the three-dimensional shell.

    ``U`` solves ``U'' + 2U'/r - l(l+1)U/r^2 = -h`` with ``U(eps) = U(1) = 0``
    by variation of parameters on ``{r^l, r^(-l-1)}``; the two weighted
    integrals of ``h`` are evaluated by graded Gauss-Legendre quadrature.
    """

    def __init__(self, l=0, m=0, epsilon=0.25, quadrature=None):
        self.l = l
        self.m = m
        self.epsilon = epsilon
        self.quadrature = quadrature

    def fit(self, h, y=None):
        """``h`` is the radial profile of the divergence, or a :class:`Modal` source."""
        l, m, eps = int(self.l), int(self.m), float(self.epsilon)
        if l < 0 or abs(m) > l:
            raise ValueError("need l >= 0 and |m| <= l")
        if isinstance(h, Modal):
            if (h.l, h.m) != (l, m):
                raise ValueError("source mode does not match the solver mode")
            self.source_ = h
            h = h.profile
        else:
            self.source_ = Modal(l, m, h)
        self.dim_ = 3
        self.inner_radius_ = eps
        self.domain_ = shell_domain(eps, 3)
        cfg = self.quadrature or QuadratureConfig()
        breaks = graded_breaks(eps, 1.0, cfg.n_panels, cfg.grading_ratio)
        f1 = lambda s: s ** (1 - l) * h(s)
        f2 = lambda s: s ** (l + 2) * h(s)
        integrals = []
        for f in (f1, f2):
            coarse = _CumulativeIntegral(f, breaks, cfg.nodes_per_panel)
            fine = _CumulativeIntegral(f, breaks, 2 * cfg.nodes_per_panel)
            scale = max(abs(fine.total), 1e-300)
            if abs(fine.total - coarse.total) > 1e-8 * scale and abs(fine.total) > 1e-300:
                raise QuadratureNotConverged("modal integrals did not converge")
            integrals.append(fine)
        self._I1, self._I2 = integrals
        self.breaks_ = breaks
        up1 = self._particular(np.array([1.0]))[0]
        b = up1 / (eps ** (-2 * l - 1) - 1.0)
        self.coef_ = (-b * eps ** (-2 * l - 1), b)
        return self

    def _particular(self, r):
        l = int(self.l)
        return (-r ** l * self._I1(r) + r ** (-l - 1) * self._I2(r)) / (2 * l + 1)

    def _particular_derivative(self, r):
        l = int(self.l)
        return (-l * r ** (l - 1.0) * self._I1(r)
                - (l + 1) * r ** (-l - 2.0) * self._I2(r)) / (2 * l + 1)

    def radial_value(self, r):
        check_is_fitted(self, "coef_")
        r = np.asarray(r, dtype=float)
        a, b = self.coef_
        l = int(self.l)
        return self._particular(r) + a * r ** l + b * r ** (-l - 1.0)

    def radial_derivative(self, r):
        check_is_fitted(self, "coef_")
        r = np.asarray(r, dtype=float)
        a, b = self.coef_
        l = int(self.l)
        return self._particular_derivative(r) + a * l * r ** (l - 1.0) - b * (l + 1) * r ** (-l - 2.0)

    def _radii(self, X):
        check_is_fitted(self, "coef_")
        X = check_points(X, 3)
        r = np.linalg.norm(X, axis=1)
        if np.any(r < self.inner_radius_ * (1 - 1e-9)) or np.any(r > 1 + 1e-9):
            raise EvaluationOutsideDomain("point outside the shell")
        return X, r

    def predict(self, X):
        X, r = self._radii(X)
        Y, _ = real_harmonic(self.l, self.m, X)
        return self.radial_value(r) * Y

    def predict_gradient(self, X):
        X, r = self._radii(X)
        Y, gS = real_harmonic(self.l, self.m, X)
        U, dU = self.radial_value(r), self.radial_derivative(r)
        return (dU * Y / r)[:, None] * X + (U / r)[:, None] * gS


# --------------------------------------------------------------------------
# functional interface
# --------------------------------------------------------------------------

def solve_constant_source(c, epsilon, dim=3):
    """Closed-form shell solution for ``div f == c``."""
    return RadialShellSolver(epsilon=epsilon, dim=dim).fit(float(c))


def solve_radial_source(g, epsilon, dim=3, derivative=None, quadrature=None):
    """Shell solution for ``f = g(r) e_r``; ``g`` may be a callable or a :class:`RadialVector`."""
    if not isinstance(g, RadialVector):
        g = RadialVector(profile=g, derivative=derivative, epsilon=epsilon)
    return RadialShellSolver(epsilon=epsilon, dim=dim, quadrature=quadrature).fit(g)


def solve_modal(l, m, h, epsilon, quadrature=None):
    return ModalShellSolver(l=l, m=m, epsilon=epsilon, quadrature=quadrature).fit(h)


def limit_ball_solution(c, dim=3):
    """``u = c (1 - r^2) / (2d)`` on the unit ball."""
    return RadialShellSolver(epsilon=0.0, dim=dim).fit(float(c))


def evaluate(sol, X):
    return sol.evaluate(X)
