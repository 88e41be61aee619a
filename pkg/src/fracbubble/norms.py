"""Weighted sup norms attached to a configuration and the convolution
estimates they rely on, checked as sampled inequalities."""

from __future__ import annotations

from dataclasses import dataclass
import math

import numpy as np
from scipy import integrate, special

from ._common import DomainError, NumericError, ParameterError, ResidualReport, sphere_area, sphere_rule
from .bubble import SpectralParams, bubble_profile
from .configuration import CylinderConfig, default_m

DEFAULT_EPS = 0.1


def tau_interval(params: SpectralParams, m: float, eps: float = DEFAULT_EPS):
    """Open interval of admissible norm exponents ``tau``."""
    tN = params.tau
    lo = (tN - m) / tN
    hi = min((params.N + 2 * params.s) / 2 - 4 * params.s / tN, 1 + eps)
    return lo, hi


@dataclass(frozen=True)
class NormSpec:
    """Norm exponent ``tau`` together with the configuration whose points
    centre the weights.  ``tau=None`` selects the midpoint of the admissible
    interval."""

    params: SpectralParams
    cfg: CylinderConfig
    tau: float | None = None
    m: float | None = None
    eps: float = DEFAULT_EPS

    def __post_init__(self):
        if self.cfg.N != self.params.N:
            raise ParameterError("configuration dimension does not match N")
        m = default_m(self.params) if self.m is None else float(self.m)
        object.__setattr__(self, "m", m)
        lo, hi = tau_interval(self.params, m, self.eps)
        if not lo < hi:
            raise ParameterError(f"empty tau interval ({lo:g}, {hi:g}) for these parameters")
        if self.tau is None:
            object.__setattr__(self, "tau", 0.5 * (lo + hi))
        if not lo < self.tau < hi:
            raise ParameterError(f"tau must lie in ({lo:g}, {hi:g}), got {self.tau!r}")

    def weight(self, y, dual: bool = False) -> np.ndarray:
        """``sum_j (1 + |y - x_j|)^-e`` over both circles with
        ``e = (N -+ 2s)/2 + tau`` (``dual`` selects the ``+`` sign)."""
        s, N = self.params.s, self.params.N
        e = ((N + 2 * s) if dual else (N - 2 * s)) / 2 + self.tau
        y = np.atleast_2d(np.asarray(y, dtype=float))
        out = np.zeros(len(y))
        for x in self.cfg.points:
            out += (1.0 + np.linalg.norm(y - x, axis=1)) ** (-e)
        return out


@dataclass(frozen=True)
class SampledField:
    """Field values at sample points (``points`` has shape ``(M, N)``)."""

    points: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        pts = np.atleast_2d(np.asarray(self.points, dtype=float))
        vals = np.asarray(self.values, dtype=float).reshape(-1)
        if len(pts) != len(vals):
            raise ParameterError(f"{len(pts)} points but {len(vals)} values")
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "values", vals)

    @classmethod
    def from_function(cls, fn, points):
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        return cls(pts, fn(pts))


def bubble_spacing(cfg: CylinderConfig) -> float:
    """Smallest distance between distinct configuration points."""
    same = 2 * cfg.r * math.sqrt(1 - cfg.h ** 2) * math.sin(math.pi / cfg.k) if cfg.k > 1 else math.inf
    cross = 2 * cfg.r * cfg.h if cfg.h > 0 else math.inf
    d = min(same, cross)
    if not math.isfinite(d):
        raise DomainError("configuration has a single point")
    return d


def _layer(cfg: CylinderConfig, level: int):
    N = cfg.N
    pts = cfg.points
    spacing = bubble_spacing(cfg)
    out = []
    if level == 1:
        out.append(pts)
        # midpoints between neighbours on each circle and across the circles
        for circ in (cfg.upper_points, cfg.lower_points):
            out.append(0.5 * (circ + np.roll(circ, -1, axis=0)))
        out.append(0.5 * (cfg.upper_points + cfg.lower_points))
        radii = [2.0, 10.0, 100.0]
        far = [f * spacing for f in radii]
        near = [0.5, 1.0, 2.0, 4.0, 8.0, 16.0]
    else:
        # intermediate points on the segments and on the radial grids
        fracs = np.arange(1, 2 ** (level - 1), 2) / 2 ** level
        for circ in (cfg.upper_points, cfg.lower_points):
            nxt = np.roll(circ, -1, axis=0)
            out.extend(circ + f * (nxt - circ) for f in fracs)
        out.extend(cfg.upper_points + f * (cfg.lower_points - cfg.upper_points) for f in fracs)
        step = 2.0 ** (-(level - 1))
        far_f = [2.0 * 50.0 ** f for f in np.arange(step, 1.0, 2 * step)]
        far_f += [10.0 * 10.0 ** f for f in np.arange(step, 1.0, 2 * step)]
        far = [f * spacing for f in far_f]
        near = [0.5 * 2.0 ** e for e in np.arange(step, 5.0, 2 * step)]
    dirs, _ = sphere_rule(N, 1 + level)
    scale = 1.0 / cfg.lam
    for rad in [scale * v for v in near] + far:
        out.append((pts[:, None, :] + rad * dirs[None, :, :]).reshape(-1, N))
    return np.vstack(out)


def sample_design(cfg: CylinderConfig, density: int = 1) -> np.ndarray:
    """Fixed sample set for sup-norm estimates.

    Density one contains the configuration points, midpoints between
    neighbouring points, shells around every point at radii
    ``{0.5, 1, ..., 16} / Lambda`` and at ``{2, 10, 100}`` times the bubble
    spacing.  Each further density level adds the intermediate segment
    points, radii and directions; the sets are nested so norms can only
    grow with the density.
    """
    if int(density) != density or density < 1:
        raise ParameterError(f"density must be a positive integer, got {density!r}")
    return np.vstack([_layer(cfg, j) for j in range(1, int(density) + 1)])


def configuration_field(params: SpectralParams, cfg: CylinderConfig, points, power: float = 1.0) -> np.ndarray:
    """``W^power`` at ``points`` where ``W`` is the sum of bubbles of
    concentration ``cfg.lam`` centred at the configuration points."""
    prof = bubble_profile(params, cfg.lam)
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    W = np.zeros(len(pts))
    for x in cfg.points:
        d = pts - x
        W += prof(np.einsum("ij,ij->i", d, d))
    return W ** power


def _ratio_max(field: SampledField, spec: NormSpec, dual: bool) -> float:
    if len(field.values) == 0:
        raise DomainError("empty sample set")
    return float(np.max(np.abs(field.values) / spec.weight(field.points, dual)))


def star_norm(field: SampledField, spec: NormSpec) -> float:
    """Sampled ``||u||_*``: the largest ratio of ``|u|`` to the weight with
    exponent ``(N - 2s)/2 + tau``.  A lower bound for the true supremum."""
    return _ratio_max(field, spec, False)


def dstar_norm(field: SampledField, spec: NormSpec) -> float:
    """Sampled ``||u||_**`` with exponent ``(N + 2s)/2 + tau``."""
    return _ratio_max(field, spec, True)


def error_terms(params: SpectralParams, cfg: CylinderConfig, potential, points):
    """Pointwise ``(J1, J2)`` of the first-order error.

    ``J1 = K (W^(p-1) - sum U_j^(p-1))`` and ``J2 = (K - 1) sum U_j^(p-1)``
    with ``K`` evaluated at ``|y| / mu``.
    """
    p = params.p_crit
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    prof = bubble_profile(params, cfg.lam)
    W = np.zeros(len(pts))
    S = np.zeros(len(pts))
    for x in cfg.points:
        d = pts - x
        U = prof(np.einsum("ij,ij->i", d, d))
        W += U
        S += U ** (p - 1)
    K = np.asarray(potential.profile(np.linalg.norm(pts, axis=1) / cfg.mu), dtype=float)
    return K * (W ** (p - 1) - S), (K - 1.0) * S


# ---------------------------------------------------------------------------
# convolution estimates


def riesz_convolution(params: SpectralParams, sigma: float, y_norm: float) -> float:
    """``int |y - z|^-(N-2s) (1 + |z|)^-(2s + sigma) dz`` for ``|y| = y_norm``.

    Polar coordinates about ``y`` turn the integral into
    ``int_0^inf rho^(2s-1) A(rho) d rho`` with ``A`` the spherical mean of
    the second factor.  On ``[0, |y|]`` the power is an exact algebraic
    weight; beyond, ``rho = |y| / u`` leaves the weight ``u^(sigma-1)``.
    At ``y = 0`` the Beta-function value is returned.
    """
    N, s = params.N, params.s
    a = float(y_norm)
    ex = 2 * s + sigma
    if a == 0.0:
        return sphere_area(N) * special.beta(2 * s, sigma)
    ring = sphere_area(N - 1)

    def mean(rho):
        def f(th):
            z = math.sqrt(max(a * a + rho * rho - 2 * a * rho * math.cos(th), 0.0))
            return (1 + z) ** (-ex) * math.sin(th) ** (N - 2)
        v, _ = integrate.quad(f, 0.0, math.pi, epsabs=0, epsrel=1e-11, limit=200)
        return ring * v

    def folded(u):
        if u == 0.0:
            return sphere_area(N) * a ** (-ex)
        return u ** (-ex) * mean(a / u)

    near, e1 = integrate.quad(mean, 0.0, a, weight="alg", wvar=(2 * s - 1, 0.0), epsabs=0, epsrel=1e-9, limit=200)
    far, e2 = integrate.quad(folded, 0.0, 1.0, weight="alg", wvar=(sigma - 1, 0.0), epsabs=0, epsrel=1e-9, limit=200)
    total = near + a ** (2 * s) * far
    err = e1 + a ** (2 * s) * e2
    if not math.isfinite(total) or err > 1e-6 * abs(total):
        raise NumericError("convolution quadrature did not converge", estimate=total, error_bound=err)
    return total


def convolution_estimate_check(params: SpectralParams, sigma: float, sample_ys=(0.0, 1.0, 10.0, 100.0),
                               growth_tol: float = 1.5) -> ResidualReport:
    """Implied constants ``C(y) = I(y) (1 + |y|)^sigma`` of the Riesz-type
    convolution bound over ``|y|`` in ``sample_ys``.

    ``lhs`` is the largest implied constant and ``rhs`` the quotient of the
    last two constants; the check passes when that quotient does not
    exceed ``growth_tol`` (no growth in the far field).
    """
    N, s = params.N, params.s
    if not 0 < sigma < N - 2 * s:
        raise ParameterError(f"sigma must lie in (0, {N - 2 * s:g}), got {sigma!r}")
    ys = sorted(float(v) for v in sample_ys)
    if len(ys) < 2 or ys[0] < 0:
        raise DomainError("need at least two non-negative sample radii")
    consts = {f"C(|y|={v:g})": riesz_convolution(params, sigma, v) * (1 + v) ** sigma for v in ys}
    vals = list(consts.values())
    quotient = vals[-1] / vals[-2]
    rep = ResidualReport("convolution_A2", max(vals), quotient, abs(max(vals) - quotient), 0.0, max(vals),
                         bool(quotient <= growth_tol and all(v > 0 for v in vals)), consts,
                         {"sigma": sigma, "growth_tol": growth_tol})
    return rep


def _check_pair_exponents(alpha, beta, sigma):
    if not (alpha >= 1 and beta >= 1):
        raise ParameterError("alpha and beta must be at least 1")
    if not (0 < sigma <= min(alpha, beta)):
        raise ParameterError("sigma must lie in (0, min(alpha, beta)]")


def pair_product_implied_constants(x_i, x_j, alpha, beta, sigma, sample_ys) -> np.ndarray:
    """Pointwise ``g_ij(y) / bound(y)`` for the two-centre product bound."""
    _check_pair_exponents(alpha, beta, sigma)
    xi, xj = np.asarray(x_i, dtype=float), np.asarray(x_j, dtype=float)
    d = float(np.linalg.norm(xi - xj))
    if d == 0:
        raise DomainError("the two centres coincide")
    ys = np.atleast_2d(np.asarray(sample_ys, dtype=float))
    di = np.linalg.norm(ys - xi, axis=1)
    dj = np.linalg.norm(ys - xj, axis=1)
    g = (1 + di) ** (-alpha) * (1 + dj) ** (-beta)
    ex = alpha + beta - sigma
    bound = d ** (-sigma) * ((1 + di) ** (-ex) + (1 + dj) ** (-ex))
    return g / bound


def default_pair_samples(x_i, x_j, n: int = 41) -> np.ndarray:
    """Points on the line through both centres (extending past each by the
    separation) plus an orthogonal line through the midpoint."""
    xi, xj = np.asarray(x_i, dtype=float), np.asarray(x_j, dtype=float)
    d = xj - xi
    if not np.any(d):
        raise DomainError("the two centres coincide")
    t = np.linspace(-1.0, 2.0, n)
    line = xi + t[:, None] * d
    e = np.zeros_like(d)
    e[np.argmin(np.abs(d))] = 1.0
    e -= (e @ d) / (d @ d) * d
    e /= np.linalg.norm(e)
    span = np.linalg.norm(d) * np.linspace(-2.0, 2.0, n)
    ortho = 0.5 * (xi + xj) + span[:, None] * e
    return np.vstack([line, ortho])


def pair_product_bound_check(params: SpectralParams, x_i, x_j, alpha, beta, sigma, sample_ys=None,
                             bound: float | None = None) -> ResidualReport:
    """Largest implied constant of the two-centre product bound over samples.

    ``lhs`` is the maximum implied constant; when ``bound`` is given the
    report passes if it does not exceed ``bound``, otherwise it passes when
    the constant is finite.
    """
    if sample_ys is None:
        sample_ys = default_pair_samples(x_i, x_j)
    ratios = pair_product_implied_constants(x_i, x_j, alpha, beta, sigma, sample_ys)
    cmax = float(np.max(ratios))
    ok = math.isfinite(cmax) and (bound is None or cmax <= bound)
    rhs = math.inf if bound is None else float(bound)
    return ResidualReport("pair_product_A1", cmax, rhs, 0.0, 0.0, cmax, bool(ok),
                          {"max_implied_C": cmax, "min_implied_C": float(np.min(ratios))},
                          {"alpha": alpha, "beta": beta, "sigma": sigma,
                           "separation": float(np.linalg.norm(np.asarray(x_i) - np.asarray(x_j))),
                           "samples": int(len(ratios))})
