"""Shared plumbing: error types, quadrature settings, residual reports and
composite Gauss-Legendre rules used by every module."""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
import math

import numpy as np


class FracBubbleError(Exception):
    """Base class for all library errors."""


class ParameterError(FracBubbleError, ValueError):
    """Raised when a parameter violates its admissible range."""


class DomainError(FracBubbleError, ValueError):
    """Raised when an argument lies outside the domain of an operation."""


class NumericError(FracBubbleError, ArithmeticError):
    """Raised when a numerical procedure fails to meet its error budget.

    The best available estimate and its error bound are attached so callers
    can still inspect the partial result.
    """

    def __init__(self, message, estimate=None, error_bound=None):
        super().__init__(message)
        self.estimate = estimate
        self.error_bound = error_bound


@dataclass(frozen=True)
class QuadratureSpec:
    """Numerical settings shared by the quadrature routines.

    Attributes
    ----------
    tol : float
        Relative accuracy target for the convolution integrals.
    order : int
        Gauss-Legendre nodes per panel in the radial/polar convolution rules.
    max_refine : int
        Number of panel bisections the convolution rules may attempt before
        giving up with a :class:`NumericError`.
    t0 : float
        Largest height in the geometric ladder used for trace limits.
    levels : int
        Number of ladder heights ``t0 * 2**-j`` (``j = 0 .. levels-1``).
    hemi_panels, hemi_order : int
        Panels and nodes per panel for the polar angle on weighted
        hemispheres (the angle measured from the flat boundary).
    hemi_grading : float or None
        Grading exponent of the polar-angle substitution; ``None`` picks
        ``1/s`` which turns the weight singularity into a smooth factor.
    sphere_order : int
        Nodes per angle for the product rule on the boundary sphere.
    """

    tol: float = 1e-10
    order: int = 16
    max_refine: int = 3
    t0: float = 0.5
    levels: int = 7
    hemi_panels: int = 4
    hemi_order: int = 4
    hemi_grading: float | None = None
    sphere_order: int = 8

    def __post_init__(self):
        if not (0 < self.tol < 1):
            raise ParameterError("quadrature tolerance must lie in (0, 1)")
        for name in ("order", "levels", "hemi_panels", "hemi_order", "sphere_order"):
            if getattr(self, name) < 2:
                raise ParameterError(f"{name} must be at least 2")
        if self.max_refine < 0:
            raise ParameterError("max_refine must be non-negative")
        if self.t0 <= 0:
            raise ParameterError("t0 must be positive")

    def refined(self) -> "QuadratureSpec":
        """Return a copy with the hemisphere mesh halved in every direction."""
        return QuadratureSpec(
            tol=self.tol,
            order=self.order,
            max_refine=self.max_refine,
            t0=self.t0,
            levels=self.levels,
            hemi_panels=2 * self.hemi_panels,
            hemi_order=self.hemi_order,
            hemi_grading=self.hemi_grading,
            sphere_order=2 * self.sphere_order,
        )


@dataclass
class ResidualReport:
    """Outcome of a numerical identity or inequality check.

    ``lhs`` and ``rhs`` are the two evaluated sides; ``scale`` is the largest
    magnitude among the individual terms entering either side, which is the
    reference for ``rel_residual``.  For bound checks ``lhs`` holds the
    largest implied constant and ``rhs`` the admissible bound.
    """

    label: str
    lhs: float
    rhs: float
    abs_residual: float
    rel_residual: float
    scale: float
    passed: bool | None = None
    terms: dict = field(default_factory=dict)
    details: dict = field(default_factory=dict)

    @classmethod
    def from_sides(cls, label, lhs, rhs, terms=None, rtol=None, details=None):
        terms = dict(terms or {})
        mags = [abs(lhs), abs(rhs)] + [abs(v) for v in terms.values()]
        scale = max(mags) if mags else 0.0
        abs_res = abs(lhs - rhs)
        rel = abs_res / scale if scale > 0 else 0.0
        passed = None if rtol is None else bool(rel <= rtol)
        return cls(label, float(lhs), float(rhs), float(abs_res), float(rel),
                   float(scale), passed, terms, dict(details or {}))


@lru_cache(maxsize=None)
def gauss_legendre(n: int):
    """Nodes and weights of the n-point Gauss-Legendre rule on [0, 1]."""
    x, w = np.polynomial.legendre.leggauss(n)
    return 0.5 * (x + 1.0), 0.5 * w


def composite_rule(edges, n):
    """Composite Gauss-Legendre rule over consecutive intervals of ``edges``."""
    edges = np.asarray(edges, dtype=float)
    x, w = gauss_legendre(n)
    lo, hi = edges[:-1, None], edges[1:, None]
    nodes = lo + (hi - lo) * x[None, :]
    weights = (hi - lo) * w[None, :]
    return nodes.ravel(), weights.ravel()


def sphere_area(n: int) -> float:
    """Surface area of the unit sphere S^{n-1} in R^n."""
    return 2.0 * math.pi ** (n / 2.0) / math.gamma(n / 2.0)


@lru_cache(maxsize=None)
def _sphere_rule_cached(dim: int, n: int):
    if dim == 1:
        return np.array([[1.0], [-1.0]]), np.array([1.0, 1.0])
    if dim == 2:
        phi = 2.0 * math.pi * (np.arange(2 * n) + 0.5) / (2 * n)
        pts = np.stack([np.cos(phi), np.sin(phi)], axis=1)
        return pts, np.full(2 * n, 2.0 * math.pi / (2 * n))
    # first angle theta in [0, pi] with weight sin^{dim-2}; recurse on the rest
    edges = np.linspace(0.0, math.pi, 3)
    th, wt = composite_rule(edges, n)
    wt = wt * np.sin(th) ** (dim - 2)
    sub_pts, sub_w = _sphere_rule_cached(dim - 1, n)
    pts = np.concatenate(
        [np.repeat(np.cos(th), len(sub_w))[:, None],
         (np.sin(th)[:, None, None] * sub_pts[None, :, :]).reshape(-1, dim - 1)],
        axis=1,
    )
    return pts, np.outer(wt, sub_w).ravel()


def sphere_rule(dim: int, n: int):
    """Product quadrature on the unit sphere S^{dim-1} in R^dim.

    The first coordinate is ``cos(theta)`` with theta integrated by a
    two-panel Gauss-Legendre rule, so the point set is symmetric under
    ``y_1 -> -y_1``.  Returns ``(points, weights)``; weights sum to the area.
    """
    pts, w = _sphere_rule_cached(dim, n)
    return pts.copy(), w.copy()
