"""Domain descriptions, validation and the catalog of source fields.

The perforated domain is ``B(0, 1) minus eps*T`` (original frame) or
``B(0, 1/eps) minus T`` (rescaled frame). Hole shapes are described in the
units of ``T``; :class:`DomainSpec` applies the frame scaling.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable, Optional, Union

import numpy as np
from scipy.interpolate import CubicSpline
from scipy.special import roots_legendre, sph_harm_y

from ._validation import check_points
from .exceptions import (BadDimension, DomainError, EpsOutOfRange,
                         EvaluationOutsideDomain, HoleNotContained)

EPS_MAX = 0.25
CONTAINMENT_RADIUS = 0.5
FRAMES = ("original", "rescaled")


# --------------------------------------------------------------------------
# hole shapes
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class ConcentricBall:
    radius: float = 1.0

    def center(self, dim):
        return np.zeros(dim)

    def max_semi_axis(self):
        return float(self.radius)

    def boundary_distance(self, directions):
        directions = np.atleast_2d(directions)
        return np.full(directions.shape[0], float(self.radius))

    def inside(self, X):
        return np.linalg.norm(X, axis=1) < self.radius

    def _check(self, dim):
        if not self.radius > 0:
            raise DomainError("hole radius must be positive")
        if self.radius > 1.0:
            raise DomainError("concentric hole radius must be <= 1")


@dataclass(frozen=True)
class OffCenterBall:
    center_point: tuple
    radius: float = 1.0

    def center(self, dim):
        return np.asarray(self.center_point, dtype=float)

    def max_semi_axis(self):
        return float(self.radius)

    def boundary_distance(self, directions):
        directions = np.atleast_2d(directions)
        return np.full(directions.shape[0], float(self.radius))

    def inside(self, X):
        return np.linalg.norm(X - self.center(X.shape[1]), axis=1) < self.radius

    def _check(self, dim):
        if len(self.center_point) != dim:
            raise DomainError(f"hole center must have {dim} coordinates")
        if not self.radius > 0:
            raise DomainError("hole radius must be positive")


@dataclass(frozen=True)
class Ellipsoid:
    center_point: tuple
    semi_axes: tuple

    def center(self, dim):
        return np.asarray(self.center_point, dtype=float)

    def max_semi_axis(self):
        return float(max(self.semi_axes))

    def boundary_distance(self, directions):
        directions = np.atleast_2d(directions)
        a = np.asarray(self.semi_axes, dtype=float)
        return 1.0 / np.sqrt(np.sum((directions / a) ** 2, axis=1))

    def inside(self, X):
        a = np.asarray(self.semi_axes, dtype=float)
        return np.sum(((X - self.center(X.shape[1])) / a) ** 2, axis=1) < 1.0

    def _check(self, dim):
        if len(self.center_point) != dim or len(self.semi_axes) != dim:
            raise DomainError(f"ellipsoid center and semi-axes need {dim} entries")
        if min(self.semi_axes) <= 0:
            raise DomainError("semi-axes must be positive")


HoleShape = Union[ConcentricBall, OffCenterBall, Ellipsoid]


def _normalize_hole(hole):
    if isinstance(hole, ConcentricBall):
        return ConcentricBall(float(hole.radius))
    if isinstance(hole, OffCenterBall):
        return OffCenterBall(tuple(float(c) for c in hole.center_point),
                             float(hole.radius))
    if isinstance(hole, Ellipsoid):
        return Ellipsoid(tuple(float(c) for c in hole.center_point),
                         tuple(float(a) for a in hole.semi_axes))
    raise DomainError(f"unknown hole shape {hole!r}")


# --------------------------------------------------------------------------
# domain
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class DomainSpec:
    """Perforated ball ``B(0, R) minus s*T``.

    ``R = 1, s = eps`` in the original frame and ``R = 1/eps, s = 1`` in the
    rescaled frame. ``bounding_radius`` and ``outer_radius`` are filled in by
    :func:`validate_domain`.
    """

    dim: int
    epsilon: float
    hole: HoleShape = field(default_factory=ConcentricBall)
    frame: str = "original"
    bounding_radius: Optional[float] = None
    outer_radius: Optional[float] = None

    @property
    def hole_scale(self):
        return self.epsilon if self.frame == "original" else 1.0

    @property
    def hole_center(self):
        return self.hole_scale * self.hole.center(self.dim)

    @property
    def is_concentric(self):
        return isinstance(self.hole, ConcentricBall)

    @property
    def inner_radius(self):
        """Radius of the hole; only meaningful for ball-shaped holes."""
        return self.hole_scale * self.hole.max_semi_axis()

    def inner_distance(self, directions):
        """Distance from the hole center to the hole boundary along unit ``directions``."""
        return self.hole_scale * self.hole.boundary_distance(directions)

    def outer_distance(self, directions):
        """Distance from the hole center to the outer sphere along unit ``directions``."""
        directions = np.atleast_2d(directions)
        c = self.hole_center
        R = self.outer_radius if self.outer_radius is not None else _frame_radius(self)
        cw = directions @ c
        return -cw + np.sqrt(cw ** 2 - c @ c + R ** 2)

    def contains(self, X, rtol=1e-9):
        """Boolean mask of points in the closure of the domain."""
        X = check_points(X, self.dim)
        R = _frame_radius(self)
        outer_ok = np.linalg.norm(X, axis=1) <= R * (1 + rtol)
        s = self.hole_scale
        c = self.hole_center
        # shrink the hole slightly so boundary points count as inside the closure
        Y = self.hole.center(self.dim) + (X - c) / (s * (1 - rtol))
        return outer_ok & ~self.hole.inside(Y)

    def to_frame(self, frame):
        if frame == self.frame:
            return self
        return validate_domain(replace(self, frame=frame, bounding_radius=None,
                                       outer_radius=None))


def _frame_radius(spec):
    return 1.0 if spec.frame == "original" else 1.0 / spec.epsilon


def validate_domain(spec: DomainSpec) -> DomainSpec:
    """Check the domain invariants and fill in derived radii.

    Raises
    ------
    BadDimension, EpsOutOfRange, HoleNotContained, DomainError
    """
    if int(spec.dim) != spec.dim or spec.dim < 3:
        raise BadDimension(f"dimension must be an integer >= 3, got {spec.dim}")
    eps = float(spec.epsilon)
    if not (0.0 < eps <= EPS_MAX):
        raise EpsOutOfRange(f"epsilon must lie in (0, {EPS_MAX}], got {eps}")
    if spec.frame not in FRAMES:
        raise DomainError(f"frame must be one of {FRAMES}, got {spec.frame!r}")
    dim = int(spec.dim)
    hole = _normalize_hole(spec.hole)
    hole._check(dim)
    extent = float(np.linalg.norm(hole.center(dim))) + hole.max_semi_axis()
    if eps * extent > CONTAINMENT_RADIUS * (1 + 1e-12):
        raise HoleNotContained(
            f"scaled hole reaches radius {eps * extent:g} > {CONTAINMENT_RADIUS}")
    out = DomainSpec(dim=dim, epsilon=eps, hole=hole, frame=spec.frame)
    scale = eps if spec.frame == "original" else 1.0
    return replace(out, bounding_radius=scale * extent,
                   outer_radius=_frame_radius(out))


def concentric_domain(epsilon, dim=3, radius=1.0):
    return validate_domain(DomainSpec(dim, epsilon, ConcentricBall(radius)))


def shell_domain(epsilon, dim=3):
    """Concentric shell ``epsilon < |x| < 1`` for any ``epsilon`` in ``(0, 1)``.

    Exact shell solutions are meaningful beyond the ``eps <= 1/4`` working
    range, so this skips the cap enforced by :func:`validate_domain`.
    """
    eps = float(epsilon)
    if eps <= EPS_MAX:
        return concentric_domain(eps, dim)
    if not 0 < eps < 1:
        raise EpsOutOfRange(f"shell inner radius must lie in (0, 1), got {eps}")
    if int(dim) != dim or dim < 3:
        raise BadDimension(f"dimension must be an integer >= 3, got {dim}")
    return DomainSpec(int(dim), eps, ConcentricBall(1.0), "original",
                      bounding_radius=eps, outer_radius=1.0)


# --------------------------------------------------------------------------
# real spherical harmonics (d = 3)
# --------------------------------------------------------------------------

def real_harmonic(l, m, directions):
    """Real orthonormal spherical harmonic and its surface gradient.

    Returns ``(Y, grad_S)`` where ``grad_S`` is the tangential gradient as a
    Cartesian ``(n, 3)`` array. At the poles the azimuthal part is set to zero.
    """
    w = np.atleast_2d(directions)
    w = w / np.linalg.norm(w, axis=1, keepdims=True)
    theta = np.arccos(np.clip(w[:, 2], -1.0, 1.0))
    phi = np.arctan2(w[:, 1], w[:, 0])
    y, dy = sph_harm_y(l, abs(m), theta, phi, diff_n=1)
    if m > 0:
        fac = math.sqrt(2.0) * (-1) ** m
        Y, dth, dph = fac * y.real, fac * dy[..., 0].real, fac * dy[..., 1].real
    elif m < 0:
        fac = math.sqrt(2.0) * (-1) ** m
        Y, dth, dph = fac * y.imag, fac * dy[..., 0].imag, fac * dy[..., 1].imag
    else:
        Y, dth, dph = y.real, dy[..., 0].real, dy[..., 1].real
    st, ct = np.sin(theta), np.cos(theta)
    sp, cp = np.sin(phi), np.cos(phi)
    e_theta = np.stack([ct * cp, ct * sp, -st], axis=1)
    e_phi = np.stack([-sp, cp, np.zeros_like(sp)], axis=1)
    safe = st > 1e-14
    dph_s = np.where(safe, dph / np.where(safe, st, 1.0), 0.0)
    grad = dth[:, None] * e_theta + dph_s[:, None] * e_phi
    return Y, grad


# --------------------------------------------------------------------------
# sources
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class LinearX1:
    """``f(x) = (x_1, 0, ..., 0)``; divergence identically one."""

    constant_divergence = 1.0

    def __call__(self, X):
        X = check_points(X)
        F = np.zeros_like(X)
        F[:, 0] = X[:, 0]
        return F

    def divergence(self, X):
        return np.ones(check_points(X).shape[0])


@dataclass(frozen=True)
class ConstantVector:
    vector: tuple

    constant_divergence = 0.0

    def __call__(self, X):
        X = check_points(X, len(self.vector))
        return np.broadcast_to(np.asarray(self.vector, float), X.shape).copy()

    def divergence(self, X):
        return np.zeros(check_points(X).shape[0])


@dataclass(frozen=True)
class RadialVector:
    """``f(x) = g(|x|) x/|x|``.

    ``profile`` is ``g``; ``derivative`` is ``g'`` if known. Without it the
    divergence uses a central difference with step ``1e-6 * (1 - eps)``.
    """

    profile: Callable
    derivative: Optional[Callable] = None
    epsilon: float = 0.0
    breakpoints: tuple = ()
    name: str = "radial"

    constant_divergence = None

    @classmethod
    def from_table(cls, r, g, **kw):
        spline = CubicSpline(np.asarray(r, float), np.asarray(g, float))
        return cls(profile=spline, derivative=spline.derivative(), **kw)

    def __call__(self, X):
        X = check_points(X)
        r = np.linalg.norm(X, axis=1)
        g = np.asarray(self.profile(r), dtype=float)
        with np.errstate(invalid="ignore", divide="ignore"):
            F = X * (g / r)[:, None]
        F[r == 0] = 0.0
        return F

    def profile_derivative(self, r):
        r = np.asarray(r, dtype=float)
        if self.derivative is not None:
            return np.asarray(self.derivative(r), dtype=float)
        h = 1e-6 * (1.0 - self.epsilon)
        return (np.asarray(self.profile(r + h)) - np.asarray(self.profile(r - h))) / (2 * h)

    def divergence(self, X):
        X = check_points(X)
        d = X.shape[1]
        r = np.linalg.norm(X, axis=1)
        if np.any(r == 0):
            raise EvaluationOutsideDomain("radial field divergence is undefined at the origin")
        return self.profile_derivative(r) + (d - 1) * np.asarray(self.profile(r)) / r


@dataclass(frozen=True)
class Modal:
    """Source whose divergence is ``h(|x|) Y_lm(x/|x|)`` in three dimensions.

    The field itself is ``F(r) Y_lm e_r`` with ``(r^2 F)' = r^2 h``, ``F(0) = 0``.
    """

    l: int
    m: int
    profile: Callable

    constant_divergence = None

    def __post_init__(self):
        if self.l < 0 or abs(self.m) > self.l:
            raise ValueError("need l >= 0 and |m| <= l")

    def flux_profile(self, r, n_nodes=48):
        r = np.asarray(r, dtype=float)
        t, w = roots_legendre(n_nodes)
        s = 0.5 * (t[None, :] + 1.0) * r[:, None]
        vals = s ** 2 * np.asarray(self.profile(s), dtype=float)
        integral = 0.5 * r * (vals @ w)
        with np.errstate(invalid="ignore", divide="ignore"):
            F = np.where(r > 0, integral / r ** 2, 0.0)
        return F

    def __call__(self, X):
        X = check_points(X, 3)
        r = np.linalg.norm(X, axis=1)
        Y, _ = real_harmonic(self.l, self.m, X)
        with np.errstate(invalid="ignore", divide="ignore"):
            F = X * (self.flux_profile(r) * Y / r)[:, None]
        F[r == 0] = 0.0
        return F

    def divergence(self, X):
        X = check_points(X, 3)
        r = np.linalg.norm(X, axis=1)
        Y, _ = real_harmonic(self.l, self.m, X)
        return np.asarray(self.profile(r), dtype=float) * Y


SourceSpec = Union[LinearX1, ConstantVector, RadialVector, Modal]


def divergence(f, x, domain: Optional[DomainSpec] = None):
    """Divergence of the source ``f`` at one point or an array of points.

    Returns a float for a single point and an array otherwise.
    """
    single = np.ndim(x) == 1
    X = check_points(x)
    if domain is not None and not np.all(domain.contains(X)):
        raise EvaluationOutsideDomain("point outside the closed domain")
    if isinstance(f, RadialVector) and domain is not None and f.derivative is None:
        f = replace(f, epsilon=domain.epsilon)
    out = f.divergence(X)
    return float(out[0]) if single else out


def fd_divergence(f, X, h):
    """Central-difference divergence, used as an independent check."""
    X = check_points(X)
    d = X.shape[1]
    total = np.zeros(X.shape[0])
    for i in range(d):
        e = np.zeros(d)
        e[i] = h
        total += (f(X + e)[:, i] - f(X - e)[:, i]) / (2 * h)
    return total
