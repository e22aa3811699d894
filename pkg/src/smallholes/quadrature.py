"""Graded Gauss-Legendre panels and cubature over perforated balls."""

from dataclasses import dataclass, replace
from functools import lru_cache
import math
from typing import Optional

import numpy as np
from scipy.special import roots_legendre


@dataclass(frozen=True)
class QuadratureConfig:
    """Node layout for radial panels and the spherical rule.

    ``n_panels=None`` picks ``ceil(log2(b/a)) + 4`` geometric panels on
    ``[a, b]``. ``max_refinements`` is the number of node-doubling passes
    allowed while chasing ``tol``.
    """

    grading_ratio: float = 2.0
    n_panels: Optional[int] = None
    nodes_per_panel: int = 16
    n_polar: int = 32
    n_azimuth: int = 64
    tol: float = 1e-7
    max_refinements: int = 1

    def __post_init__(self):
        if min(self.nodes_per_panel, self.n_polar, self.n_azimuth) < 4:
            raise ValueError("node counts must be >= 4")
        if not self.grading_ratio > 1.0:
            raise ValueError("grading ratio must exceed 1")
        if self.n_panels is not None and self.n_panels < 1:
            raise ValueError("n_panels must be positive")

    def doubled(self):
        return replace(self, nodes_per_panel=2 * self.nodes_per_panel,
                       n_polar=2 * self.n_polar, n_azimuth=2 * self.n_azimuth)


@lru_cache(maxsize=64)
def gauss_legendre(n):
    t, w = roots_legendre(n)
    t.setflags(write=False)
    w.setflags(write=False)
    return t, w


def default_panel_count(a, b):
    return int(math.ceil(math.log2(b / a))) + 4


def graded_breaks(a, b, n_panels=None, ratio=2.0):
    """Breakpoints on ``[a, b]`` whose widths grow geometrically away from ``a``.

    With ``a == 0`` the panels are uniform (the integrands are then regular).
    """
    if a == 0:
        return np.linspace(0.0, b, (n_panels or 4) + 1)
    n = n_panels or default_panel_count(a, b)
    w = (b - a) * (ratio - 1.0) / (ratio ** n - 1.0)
    k = np.arange(n + 1)
    breaks = a + w * (ratio ** k - 1.0) / (ratio - 1.0)
    breaks[-1] = b
    return breaks


def panel_rule(breaks, n):
    """Composite Gauss-Legendre nodes and weights on consecutive panels."""
    t, w = gauss_legendre(n)
    breaks = np.asarray(breaks, dtype=float)
    lo, hi = breaks[:-1, None], breaks[1:, None]
    half = 0.5 * (hi - lo)
    nodes = (lo + half * (t + 1.0)).ravel()
    weights = (half * w).ravel()
    return nodes, weights


def insert_breaks(breaks, extra):
    extra = [float(e) for e in extra if breaks[0] < e < breaks[-1]]
    if not extra:
        return np.asarray(breaks)
    return np.unique(np.concatenate([breaks, extra]))


def sphere_rule(n_polar, n_azimuth, rotation=None):
    """Product rule on ``S^2`` with its polar axis along ``x_1``.

    Gauss-Legendre in ``cos(theta)`` on ``[-1, 0]`` and ``[0, 1]`` separately
    (so integrands such as ``|x_1|^p`` stay smooth on each half), uniform in
    ``phi``. Returns unit directions ``(m, 3)`` and weights summing to ``4 pi``.
    """
    half = max(n_polar // 2, 2)
    t, w = panel_rule(np.array([-1.0, 0.0, 1.0]), half)
    phi = (np.arange(n_azimuth) + 0.5) * (2.0 * np.pi / n_azimuth)
    st = np.sqrt(1.0 - t ** 2)
    dirs = np.stack([
        np.repeat(t, n_azimuth),
        np.outer(st, np.cos(phi)).ravel(),
        np.outer(st, np.sin(phi)).ravel(),
    ], axis=1)
    weights = np.repeat(w, n_azimuth) * (2.0 * np.pi / n_azimuth)
    if rotation is not None:
        dirs = dirs @ np.asarray(rotation, dtype=float).T
    return dirs, weights


def fibonacci_sphere(n):
    """Quasi-uniform points on ``S^2``."""
    k = np.arange(n) + 0.5
    z = 1.0 - 2.0 * k / n
    r = np.sqrt(1.0 - z ** 2)
    phi = np.pi * (3.0 - np.sqrt(5.0)) * k
    return np.stack([r * np.cos(phi), r * np.sin(phi), z], axis=1)


def sphere_points(n, dim, rng=None):
    """Quasi-uniform (``dim == 3``) or random (``dim > 3``) unit vectors."""
    if dim == 3:
        return fibonacci_sphere(n)
    rng = np.random.default_rng(0) if rng is None else rng
    w = rng.standard_normal((n, dim))
    return w / np.linalg.norm(w, axis=1, keepdims=True)


@dataclass
class Cubature:
    points: np.ndarray
    weights: np.ndarray
    nodes_radial: int
    nodes_angular: int


def domain_cubature(domain, cfg, rotation=None, *, no_hole=False):
    """Cubature over a three-dimensional perforated ball.

    Spherical coordinates are centred at the hole center, so any hole that
    is star-shaped about its center is handled; radial panels are graded
    toward the hole along every ray. ``no_hole=True`` integrates over the
    whole ball of the domain's frame.
    """
    if domain.dim != 3:
        raise NotImplementedError("cubature is only available for d = 3")
    dirs, wdir = sphere_rule(cfg.n_polar, cfg.n_azimuth, rotation)
    if no_hole:
        center = np.zeros(3)
        r_in = np.zeros(len(dirs))
        r_out = np.full(len(dirs), domain.outer_radius)
        n_panels = cfg.n_panels or 4
        base = np.linspace(0.0, 1.0, n_panels + 1)
    else:
        center = domain.hole_center
        r_in = domain.inner_distance(dirs)
        r_out = domain.outer_distance(dirs)
        n_panels = cfg.n_panels or default_panel_count(r_in.min(), r_out.max())
        ratio = cfg.grading_ratio
        k = np.arange(n_panels + 1)
        base = (ratio ** k - 1.0) / (ratio ** n_panels - 1.0)
    t, w = panel_rule(base, cfg.nodes_per_panel)
    span = (r_out - r_in)[:, None]
    r = r_in[:, None] + span * t[None, :]
    wr = span * w[None, :] * r ** 2
    points = center + (r[:, :, None] * dirs[:, None, :]).reshape(-1, 3)
    weights = (wdir[:, None] * wr).ravel()
    return Cubature(points, weights, len(t), len(dirs))
