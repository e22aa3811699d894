"""Fundamental solution of the Laplacian and the Dirichlet Green's function of a ball.

The normalisation is ``Phi(x) = alpha_d |x|^(2-d)`` with
``alpha_d = 1 / ((d - 2) |S^(d-1)|)`` so that ``-Laplace Phi = delta``.

The image term of the ball Green's function is evaluated through
``|x/(eps|x|) - eps|x| y|^2 = R^2 - 2 x.y + |x|^2 |y|^2 / R^2`` (``R = 1/eps``),
which is smooth at ``x = 0`` and symmetric in ``x`` and ``y``.
"""

from dataclasses import dataclass
import math

import numpy as np

from ._validation import check_points
from .exceptions import CoincidentPoints, PointOutsideBall, SingularPoint


def sphere_area(dim):
    """Surface measure of the unit sphere in ``R^dim``."""
    return 2.0 * math.pi ** (dim / 2.0) / math.gamma(dim / 2.0)


@dataclass(frozen=True)
class KernelConfig:
    dim: int = 3

    @property
    def alpha(self):
        return 1.0 / ((self.dim - 2) * sphere_area(self.dim))


def _cfg(cfg, dim):
    if cfg is None:
        return KernelConfig(dim)
    if cfg.dim != dim:
        raise ValueError(f"kernel configured for d={cfg.dim}, points have d={dim}")
    return cfg


def fundamental_solution(x, cfg=None):
    """``alpha_d |x|^(2-d)``; scalar for a single point, array otherwise."""
    single = np.ndim(x) == 1
    X = check_points(x)
    cfg = _cfg(cfg, X.shape[1])
    r = np.linalg.norm(X, axis=1)
    if np.any(r == 0):
        raise SingularPoint("fundamental solution evaluated at the origin")
    out = cfg.alpha * r ** (2 - cfg.dim)
    return float(out[0]) if single else out


def grad_fundamental_solution(x, cfg=None):
    X = check_points(x)
    cfg = _cfg(cfg, X.shape[1])
    r = np.linalg.norm(X, axis=1)
    if np.any(r == 0):
        raise SingularPoint("fundamental solution evaluated at the origin")
    return -cfg.alpha * (cfg.dim - 2) * X / r[:, None] ** cfg.dim


def _pairs(x, y, R):
    single = np.ndim(x) == 1 and np.ndim(y) == 1
    X = check_points(x, name="x")
    Y = check_points(y, X.shape[1], name="y")
    X, Y = np.broadcast_arrays(X, Y)
    tol = 1e-12 * R
    if np.any(np.linalg.norm(X, axis=1) > R + tol) or np.any(np.linalg.norm(Y, axis=1) > R + tol):
        raise PointOutsideBall(f"points must lie in the closed ball of radius {R}")
    if np.any(np.linalg.norm(X - Y, axis=1) == 0):
        raise CoincidentPoints("Green's function is singular at x == y")
    return single, X, Y


def _image_sq(X, Y, R):
    xx = np.einsum("ij,ij->i", X, X)
    yy = np.einsum("ij,ij->i", Y, Y)
    xy = np.einsum("ij,ij->i", X, Y)
    return R * R - 2.0 * xy + xx * yy / (R * R)


def image_term(x, y, R, cfg=None):
    """Second (reflected) term of the ball Green's function, ``Phi(image(x, y))``."""
    single, X, Y = _pairs(x, y, R)
    cfg = _cfg(cfg, X.shape[1])
    out = cfg.alpha * _image_sq(X, Y, R) ** ((2 - cfg.dim) / 2.0)
    return float(out[0]) if single else out


def grad_image_term_x(x, y, R, cfg=None):
    _, X, Y = _pairs(x, y, R)
    cfg = _cfg(cfg, X.shape[1])
    d = cfg.dim
    s = _image_sq(X, Y, R)
    yy = np.einsum("ij,ij->i", Y, Y)
    ds = -2.0 * Y + 2.0 * X * (yy / (R * R))[:, None]
    return (cfg.alpha * (2 - d) / 2.0 * s ** (-d / 2.0))[:, None] * ds


def green_ball(x, y, R, cfg=None):
    """Dirichlet Green's function of ``B(0, R)``.

    Raises
    ------
    CoincidentPoints, PointOutsideBall
    """
    single, X, Y = _pairs(x, y, R)
    cfg = _cfg(cfg, X.shape[1])
    d = cfg.dim
    direct = cfg.alpha * np.linalg.norm(X - Y, axis=1) ** (2 - d)
    image = cfg.alpha * _image_sq(X, Y, R) ** ((2 - d) / 2.0)
    out = direct - image
    return float(out[0]) if single else out


def grad_green_ball_x(x, y, R, cfg=None):
    """Gradient of :func:`green_ball` with respect to ``x``; shape ``(n, d)``
    (or ``(d,)`` for a single pair)."""
    single, X, Y = _pairs(x, y, R)
    cfg = _cfg(cfg, X.shape[1])
    d = cfg.dim
    diff = X - Y
    r = np.linalg.norm(diff, axis=1)
    g_direct = -cfg.alpha * (d - 2) * diff / r[:, None] ** d
    g = g_direct - grad_image_term_x(X, Y, R, cfg)
    return g[0] if single else g


@dataclass(frozen=True)
class BoundReport:
    epsilon: float
    dim: int
    sample_count: int
    ratio: float
    worst_x: tuple
    worst_y: tuple


def _uniform_ball(rng, n, dim, r_min, r_max):
    w = rng.standard_normal((n, dim))
    w /= np.linalg.norm(w, axis=1, keepdims=True)
    u = rng.random(n)
    r = (r_min ** dim + u * (r_max ** dim - r_min ** dim)) ** (1.0 / dim)
    return w * r[:, None]


def image_gradient_bound_report(epsilon, sample_count=10_000, dim=3, seed=0):
    """Empirical constant in the bound on the image-term gradient.

    Samples ``x`` uniformly in ``B(0, 1/eps) minus B(0, 1)`` and ``y`` in
    ``B(0, 2)`` (a unit point mass) and returns the largest value of
    ``|grad_x Phi_image(x, y)| / (eps^(d-1)/|x| + eps^d)``.
    """
    eps = float(epsilon)
    if not 0 < eps <= 0.25:
        raise ValueError("epsilon must lie in (0, 1/4]")
    rng = np.random.default_rng(seed)
    R = 1.0 / eps
    X = _uniform_ball(rng, sample_count, dim, 1.0, R)
    Y = _uniform_ball(rng, sample_count, dim, 0.0, 2.0)
    g = np.linalg.norm(grad_image_term_x(X, Y, R, KernelConfig(dim)), axis=1)
    weight = eps ** (dim - 1) / np.linalg.norm(X, axis=1) + eps ** dim
    ratio = g / weight
    k = int(np.argmax(ratio))
    return BoundReport(eps, dim, sample_count, float(ratio[k]),
                       tuple(X[k]), tuple(Y[k]))
