"""Lattice sums over the configuration, their large-k asymptotics and the
two-bubble interaction integral."""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
import math

import numpy as np
from scipy import integrate, special

from ._common import DomainError, NumericError, ParameterError, QuadratureSpec, composite_rule, sphere_area
from .bubble import DEFAULT_QUAD, SpectralParams, _angular_rule, _bisect, _radial_edges
from .configuration import CylinderConfig, cross_circle_distance, same_circle_distance

SAME_CIRCLE = "same_circle"
CROSS_CIRCLE = "cross_circle"


@dataclass(frozen=True)
class SumSpec:
    tau: float
    kind: str = SAME_CIRCLE

    def __post_init__(self):
        if not self.tau > 0:
            raise ParameterError(f"tau must be positive, got {self.tau!r}")
        if self.kind not in (SAME_CIRCLE, CROSS_CIRCLE):
            raise ParameterError(f"kind must be '{SAME_CIRCLE}' or '{CROSS_CIRCLE}', got {self.kind!r}")


class FlaggedValue(float):
    """A float carrying a regime flag and an alternative normalization."""

    in_regime: bool
    alt_value: float

    def __new__(cls, value, in_regime=True, alt_value=math.nan, note=""):
        obj = super().__new__(cls, value)
        obj.in_regime = bool(in_regime)
        obj.alt_value = float(alt_value)
        obj.note = note
        return obj


def lattice_sum_exact(cfg: CylinderConfig, spec: SumSpec) -> float:
    """Exact sum of inverse powers of distances from the first upper point."""
    tau = spec.tau
    if spec.kind == SAME_CIRCLE:
        d = np.array([same_circle_distance(cfg, j) for j in range(2, cfg.k + 1)])
        if np.any(d <= 0):
            raise DomainError("coincident points in same-circle sum")
        return float(np.sum(d ** -tau))
    if cfg.h <= 0:
        raise DomainError("cross-circle sum needs h > 0")
    d = np.array([cross_circle_distance(cfg, j) for j in range(1, cfg.k + 1)])
    return float(np.sum(d ** -tau))


def d1_closed_form(tau: float) -> float:
    """``(sqrt(pi)/2) Gamma((tau-1)/2) / Gamma(tau/2)``."""
    if not tau > 1:
        raise DomainError(f"D1 diverges for tau <= 1, got {tau!r}")
    return 0.5 * math.sqrt(math.pi) * math.exp(math.lgamma((tau - 1) / 2) - math.lgamma(tau / 2))


@lru_cache(maxsize=None)
def d1_constant(tau: float) -> float:
    """``D1 = int_0^inf (1 + x^2)^(-tau/2) dx`` by quadrature.

    The half-line is folded onto [0, 1] by ``x = 1/u``; the algebraic
    endpoint factor ``u^(tau-2)`` is integrated exactly by a weighted rule,
    so there is no truncated tail.
    """
    if not tau > 1:
        raise DomainError(f"D1 diverges for tau <= 1, got {tau!r}")
    inner, e1 = integrate.quad(lambda x: (1 + x * x) ** (-tau / 2), 0.0, 1.0, epsabs=0, epsrel=2e-14, limit=200)
    outer, e2 = integrate.quad(lambda u: (1 + u * u) ** (-tau / 2), 0.0, 1.0, weight="alg", wvar=(tau - 2.0, 0.0),
                               epsabs=0, epsrel=2e-14, limit=200)
    total = inner + outer
    if e1 + e2 > 1e-11 * total:
        raise NumericError("D1 quadrature did not converge", estimate=total, error_bound=e1 + e2)
    return total


def _same_circle_continuum(k, tau):
    """Continuum approximation of ``sum_{j=1}^{k-1} sin(j pi / k)^(-tau)``."""
    if tau > 1:
        return 2 * special.zeta(tau) * (k / math.pi) ** tau
    if tau == 1:
        return (2 * k / math.pi) * (math.log(2 * k / math.pi) + np.euler_gamma)
    return (k / math.pi) * math.sqrt(math.pi) * math.exp(math.lgamma((1 - tau) / 2) - math.lgamma(1 - tau / 2))


def lattice_sum_asymptotic(cfg: CylinderConfig, spec: SumSpec) -> FlaggedValue:
    """Leading large-k form of :func:`lattice_sum_exact`.

    Same circle: ``(2 r sqrt(1-h^2))^(-tau)`` times the continuum value of
    the sine sum (``2 zeta(tau) (k/pi)^tau`` for ``tau > 1``).  Cross circle:
    ``2 (2 r h)^(-tau) h k D1 / (pi sqrt(1-h^2))``; the alternative
    normalization ``(r h)^(-tau) D1 h k / sqrt(1-h^2)`` is attached as
    ``alt_value``.  ``in_regime`` is False when the expansion is not expected
    to be accurate (small k, or ``h k`` not large, or ``tau <= 1``).
    """
    tau, k, r, h = spec.tau, cfg.k, cfg.r, cfg.h
    if spec.kind == SAME_CIRCLE:
        val = (2 * r * math.sqrt(1 - h * h)) ** -tau * _same_circle_continuum(k, tau)
        return FlaggedValue(val, in_regime=k >= 8)
    if h <= 0:
        raise DomainError("cross-circle asymptotics need h > 0")
    if tau <= 1:
        raise DomainError("cross-circle asymptotics need tau > 1")
    d1 = d1_constant(tau)
    val = 2.0 / (2 * r * h) ** tau * h * k / (math.sqrt(1 - h * h) * math.pi) * d1
    alt = (r * h) ** -tau * d1 * h * k / math.sqrt(1 - h * h)
    return FlaggedValue(val, in_regime=h * k >= 4, alt_value=alt)


# ---------------------------------------------------------------------------
# two-bubble interaction


def radial_integral(fn, N: int, decay: float) -> float:
    """``int_{R^N} fn(|y|) dy`` for a radial integrand decaying like ``|y|^-decay``.

    The unit ball is integrated directly; the exterior is mapped to (0, 1]
    by ``rho = 1/u`` and the power ``u^(decay - N - 1)`` is treated as an
    exact algebraic weight.
    """
    if not decay > N:
        raise DomainError("radial integrand is not integrable at infinity")
    inner, e1 = integrate.quad(lambda r: fn(r) * r ** (N - 1), 0.0, 1.0, epsabs=0, epsrel=1e-13, limit=200)

    def tail(u):
        if u == 0.0:
            return _tail_limit(fn, decay)
        return fn(1.0 / u) * u ** (-decay)

    outer, e2 = integrate.quad(tail, 0.0, 1.0, weight="alg", wvar=(decay - N - 1.0, 0.0),
                               epsabs=0, epsrel=1e-13, limit=200)
    total = sphere_area(N) * (inner + outer)
    if (e1 + e2) > 1e-10 * abs(inner + outer):
        raise NumericError("radial quadrature did not converge", estimate=total,
                           error_bound=sphere_area(N) * (e1 + e2))
    return total


def _tail_limit(fn, decay):
    big = 1e8
    return fn(big) * big ** decay


def _polar_product(params: SpectralParams, weight, prof, a: float, quad: QuadratureSpec):
    """``int_{R^N} weight(|z|) prof(|z + a e|^2) dz`` via (radius, angle) quadrature."""
    N = params.N
    area = sphere_area(N - 1)
    width = prof.width
    R = 16.0 * (a + 2.0 * width)
    redges = _radial_edges(a, width, width, R)
    cphi, wphi = _angular_rule(a, width, N, quad.order)

    def one_pass(edges):
        rho, wr = composite_rule(edges, quad.order)
        x2 = a * a + rho[:, None] ** 2 + 2 * a * rho[:, None] * cphi[None, :]
        near = (prof(x2) @ wphi) @ (weight(rho) * wr * rho ** (N - 1))
        u, wu = composite_rule(np.array([0.0, 1 / 32, 1 / 16, 1 / 8, 1 / 4, 1 / 2, 1.0]), quad.order)
        rf = R / u
        x2f = a * a + rf[:, None] ** 2 + 2 * a * rf[:, None] * cphi[None, :]
        far = (prof(x2f) @ wphi) @ (weight(rf) * wu * R / u ** 2 * rf ** (N - 1))
        return area * (near + far)

    prev = one_pass(redges)
    for level in range(1, quad.max_refine + 1):
        cur = one_pass(_bisect(redges, level))
        err = abs(cur - prev)
        prev = cur
        if err <= quad.tol * abs(cur):
            return float(cur)
    raise NumericError(f"interaction quadrature did not converge at distance {a:g}", estimate=prev, error_bound=err)


@lru_cache(maxsize=4096)
def _pairwise_cached(params, d, quad):
    from .bubble import bubble_profile

    prof = bubble_profile(params)
    c, p = params.c_norm, params.p_crit
    e = (params.N + 2 * params.s) / 2

    def weight(rho):
        return c ** (p - 1) * (1 + rho * rho) ** (-e)

    return _polar_product(params, weight, prof, d, quad)


def pairwise_interaction(params: SpectralParams, d: float, quad: QuadratureSpec = DEFAULT_QUAD) -> float:
    """``int U^(p-1)(y) U(y - d e_1) dy`` for two unit bubbles at distance ``d``."""
    if not d >= 0:
        raise DomainError(f"distance must be non-negative, got {d!r}")
    return _pairwise_cached(params, float(d), quad)


def interaction_constant_B0(params: SpectralParams, quad: QuadratureSpec = DEFAULT_QUAD) -> float:
    """``B0 = c * int U^(p-1)``, the far-field coefficient of the interaction."""
    c, p = params.c_norm, params.p_crit
    e = (params.N + 2 * params.s) / 2
    integral = radial_integral(lambda r: c ** (p - 1) * (1 + r * r) ** (-e), params.N, 2 * e)
    return c * integral


def interaction_constant_B0_closed_form(params: SpectralParams) -> float:
    """Beta-function value ``c^p |S^(N-1)| B(N/2, s) / 2`` of ``B0``."""
    return params.c_norm ** params.p_crit * sphere_area(params.N) * 0.5 * special.beta(params.N / 2, params.s)
