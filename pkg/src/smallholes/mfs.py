"""Method of fundamental solutions on perforated balls.

Charges sit outside the closed domain: one layer on the hole surface shrunk
toward the hole center, one layer on a sphere enlarged beyond the outer
boundary. Weights come from a column-scaled truncated-SVD least-squares fit
at collocation points on both boundaries.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from ._validation import check_points
from .core import ConstantVector, DomainSpec, LinearX1, validate_domain
from .exceptions import EvaluationOutsideDomain, IllConditioned, TooCloseToCharge
from .kernel import KernelConfig
from .quadrature import sphere_points
from .shell import FieldMixin

MIN_CHARGE_DISTANCE = 1e-3
_CHUNK_ENTRIES = 4_000_000


def _boundary_points(domain, n, rng=None):
    """``n`` points on the outer sphere and ``n`` on the hole boundary."""
    d = domain.dim
    w_out = sphere_points(n, d, rng)
    w_in = sphere_points(n, d, rng)
    if rng is None and d == 3:
        # rotate the hole layer so it does not mirror the outer layer
        w_in = w_in[:, [1, 2, 0]]
    outer = domain.outer_radius * w_out
    inner = domain.hole_center + domain.inner_distance(w_in)[:, None] * w_in
    return outer, inner


def _random_boundary_points(domain, n, rng):
    d = domain.dim
    w = rng.standard_normal((2 * n, d))
    w /= np.linalg.norm(w, axis=1, keepdims=True)
    outer = domain.outer_radius * w[:n]
    inner = domain.hole_center + domain.inner_distance(w[n:])[:, None] * w[n:]
    return outer, inner


class MFSSolver(FieldMixin, BaseEstimator):
    """Harmonic function on a perforated ball with prescribed Dirichlet data.

    Parameters
    ----------
    domain : DomainSpec
    n_charges : int
        Charges per boundary layer (hole and outer sphere).
    n_collocation : int, optional
        Collocation points per boundary; defaults to ``2 * n_charges``.
    inner_scale : float
        Hole charges lie on the hole surface scaled by this factor toward
        the hole center.
    outer_scale : float
        Outer charges lie on a sphere of ``outer_scale`` times the outer radius.
    rcond : float
        Relative singular-value cut-off of the truncated SVD.
    residual_tol : float
        Largest acceptable validation residual, relative to the data scale.
    seed : int
        Seed for the validation points (and for charge layouts when ``d > 3``).
    """

    def __init__(self, domain=None, n_charges=400, n_collocation=None, inner_scale=0.5,
                 outer_scale=2.5, rcond=1e-12, residual_tol=1e-6, seed=0):
        self.domain = domain
        self.n_charges = n_charges
        self.n_collocation = n_collocation
        self.inner_scale = inner_scale
        self.outer_scale = outer_scale
        self.rcond = rcond
        self.residual_tol = residual_tol
        self.seed = seed

    def _layout(self):
        domain = validate_domain(self.domain or DomainSpec(3, 0.25))
        n = int(self.n_charges)
        if n < 4:
            raise ValueError("need at least 4 charges per boundary")
        n_col = int(self.n_collocation or 2 * n)
        if n_col < n:
            raise ValueError("need at least as many collocation points as charges")
        rng = np.random.default_rng(self.seed)
        cfg = KernelConfig(domain.dim)
        c = domain.hole_center
        out_q, in_q = _boundary_points(domain, n, rng if domain.dim > 3 else None)
        charges = np.vstack([c + self.inner_scale * (in_q - c), self.outer_scale * out_q])
        col = np.vstack(_boundary_points(domain, n_col, rng if domain.dim > 3 else None))
        val = np.vstack(_random_boundary_points(domain, max(n_col // 2, 8), rng))
        return domain, cfg, charges, col, val

    def _kernel_matrix(self, X, charges=None):
        charges = self.charges_ if charges is None else charges
        cfg = self._kernel
        D = np.linalg.norm(X[:, None, :] - charges[None, :, :], axis=2)
        return cfg.alpha * D ** (2 - cfg.dim)

    def _data(self, func, X):
        if callable(func):
            return np.asarray(func(X), dtype=float).reshape(-1)
        return np.full(X.shape[0], float(func))

    def fit(self, boundary_data, y=None):
        """``boundary_data`` is a constant or a callable ``(n, d) -> (n,)``
        evaluated on both boundaries."""
        domain, cfg, charges, col, val = self._layout()
        self.domain_ = domain
        self.dim_ = domain.dim
        self._kernel = cfg
        self.charges_ = charges
        self.collocation_ = col
        self.validation_points_ = val
        b = self._data(boundary_data, col)
        A = self._kernel_matrix(col, charges)
        scale = np.linalg.norm(A, axis=0)
        U, s, Vt = np.linalg.svd(A / scale, full_matrices=False)
        keep = s > self.rcond * s[0]
        coef = Vt[keep].T @ ((U[:, keep].T @ b) / s[keep])
        self.weights_ = coef / scale
        self.rank_ = int(keep.sum())
        self.condition_ = float(s[0] / s[-1]) if s[-1] > 0 else float("inf")
        self.truncated_condition_ = float(s[0] / s[keep][-1])
        data_scale = max(float(np.max(np.abs(b))), 1.0)
        self.lsq_residual_ = float(np.max(np.abs(A @ self.weights_ - b)))
        v = self._data(boundary_data, val)
        self.boundary_residual_ = float(np.max(np.abs(self._harmonic(val) - v)))
        if self.boundary_residual_ > self.residual_tol * data_scale:
            raise IllConditioned(
                f"validation residual {self.boundary_residual_:.3e} exceeds "
                f"{self.residual_tol:g} x data scale",
                condition=self.condition_, residual=self.boundary_residual_,
                rank=self.rank_)
        return self

    # -- evaluation -------------------------------------------------------
    def _chunks(self, X):
        step = max(1, _CHUNK_ENTRIES // len(self.charges_))
        for i in range(0, X.shape[0], step):
            yield slice(i, i + step)

    def _check_eval(self, X):
        check_is_fitted(self, "weights_")
        X = check_points(X, self.dim_)
        if not np.all(self.domain_.contains(X, rtol=1e-6)):
            raise EvaluationOutsideDomain("point outside the perforated ball")
        return X

    def _sq_dist(self, X):
        Y = self.charges_
        r2 = (np.einsum("ij,ij->i", X, X)[:, None] + np.einsum("ij,ij->i", Y, Y)[None, :]
              - 2.0 * X @ Y.T)
        if np.any(r2 < MIN_CHARGE_DISTANCE ** 2):
            raise TooCloseToCharge(f"evaluation point within {MIN_CHARGE_DISTANCE} of a charge")
        return r2

    def _harmonic(self, X):
        d, alpha = self.dim_, self._kernel.alpha
        out = np.empty(X.shape[0])
        for sl in self._chunks(X):
            r2 = self._sq_dist(X[sl])
            K = 1.0 / np.sqrt(r2) if d == 3 else r2 ** ((2 - d) / 2.0)
            out[sl] = alpha * K @ self.weights_
        return out

    def _harmonic_gradient(self, X):
        d, alpha = self.dim_, self._kernel.alpha
        wy = self.weights_[:, None] * self.charges_
        out = np.empty_like(X)
        for sl in self._chunks(X):
            r2 = self._sq_dist(X[sl])
            K = 1.0 / (r2 * np.sqrt(r2)) if d == 3 else r2 ** (-d / 2.0)
            out[sl] = -alpha * (d - 2) * (X[sl] * (K @ self.weights_)[:, None] - K @ wy)
        return out

    def predict(self, X):
        X = self._check_eval(X)
        return self._harmonic(X)

    def predict_gradient(self, X):
        X = self._check_eval(X)
        return self._harmonic_gradient(X)


class MFSPoissonSolver(MFSSolver):
    """``-Laplace u = c`` with zero Dirichlet data: ``u = -c|x|^2/(2d) + harmonic part``."""

    def fit(self, source, y=None):
        if isinstance(source, (LinearX1, ConstantVector)):
            c = source.constant_divergence
            self.source_ = source
        elif getattr(source, "constant_divergence", None) is None and not np.isscalar(source):
            raise TypeError("MFS particular solutions need a constant divergence")
        else:
            c = float(source)
            self.source_ = None
        self.constant_ = float(c)
        d = (self.domain.dim if self.domain is not None else 3)
        super().fit(lambda X: self.constant_ * np.einsum("ij,ij->i", X, X) / (2 * d))
        return self

    def _particular(self, X):
        return -self.constant_ * np.einsum("ij,ij->i", X, X) / (2 * self.dim_)

    def predict(self, X):
        X = self._check_eval(X)
        return self._harmonic(X) + self._particular(X)

    def predict_gradient(self, X):
        X = self._check_eval(X)
        return self._harmonic_gradient(X) - self.constant_ * X / self.dim_


def solve_dirichlet_harmonic(domain, boundary_data, n_collocation=None, n_charges=400, **kw):
    return MFSSolver(domain=domain, n_charges=n_charges, n_collocation=n_collocation,
                     **kw).fit(boundary_data)


def solve_divergence_source(domain, f, n_charges=400, **kw):
    return MFSPoissonSolver(domain=domain, n_charges=n_charges, **kw).fit(f)


def evaluate(sol, X):
    return sol.evaluate(X)
