"""Expansion constants, the reduced energy of the 2k-bubble configuration,
its gradients and the closed-form critical equations.

Notation: ``tau_N = N - 2s`` is the bubble decay exponent, ``p = 2N/(N-2s)``,
``mu = k^(tau_N/(tau_N - m))`` and ``W`` is the sum of the 2k bubbles.  The
truncated expansion reads

    F = k (A + A1/(L^m mu^m) + A2 (mu r0 - r)^2/(L^(m-2) mu^m)
           - B1 k^tau_N/(L^tau_N (r sqrt(1-h^2))^tau_N)
           - B2 h k/(L^tau_N (r h)^tau_N sqrt(1-h^2))).

Since ``A`` dominates every other term by many orders of magnitude, the
helpers work with the normalized landscape ``(F - k A) mu^m / k``.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
import math

import numpy as np
from scipy import integrate, special

from ._common import DomainError, NumericError, ParameterError, QuadratureSpec, composite_rule, sphere_area
from .bubble import DEFAULT_QUAD, SpectralParams
from .configuration import CylinderConfig, build_cylinder_config, default_m, mu_of_k
from .interactions import (
    CROSS_CIRCLE,
    SAME_CIRCLE,
    SumSpec,
    d1_constant,
    interaction_constant_B0,
    lattice_sum_exact,
    pairwise_interaction,
    radial_integral,
)


def smooth_cutoff(x):
    """C-infinity function equal to 1 on [0, 1/2] and 0 on [1, inf)."""
    x = np.asarray(x, dtype=float)

    def g(z):
        out = np.zeros_like(z)
        pos = z > 0
        out[pos] = np.exp(-1.0 / z[pos])
        return out

    a = g(1.0 - x)
    b = g(x - 0.5)
    return np.where(x <= 0.5, 1.0, np.where(x >= 1.0, 0.0, a / np.where(a + b > 0, a + b, 1.0)))


@dataclass(frozen=True)
class PotentialModel:
    """Radial potential with a flat-ish maximum ``K(r0) = 1``.

    ``K(r) = max(floor, 1 - c0 * cutoff(|r - r0| / delta) * |r - r0|^m)``, so
    the prescribed local behaviour holds exactly for ``|r - r0| <= delta/2``.
    ``theta_k`` is the remainder exponent of the local expansion; the default
    profile has no remainder on that interval, so it is only carried along.
    """

    m: float
    r0: float = 1.0
    c0: float = 1.0
    theta_k: float = 1.0
    delta: float = 0.5
    floor: float = 0.5

    def __post_init__(self):
        for name in ("r0", "c0", "theta_k", "delta"):
            if not getattr(self, name) > 0:
                raise ParameterError(f"{name} must be positive")
        if not (0 < self.floor < 1):
            raise ParameterError("floor must lie in (0, 1)")

    @classmethod
    def default(cls, params: SpectralParams, **kw):
        return cls(m=kw.pop("m", None) or default_m(params), **kw)

    def validate(self, params: SpectralParams):
        tau = params.tau
        if not (tau / 2 < self.m < tau):
            raise ParameterError(f"m must lie in ({tau / 2:g}, {tau:g}), got {self.m!r}")

    def profile(self, r):
        """``K(r)``."""
        return 1.0 + self.deficit(r)

    def deficit(self, r):
        """``K(r) - 1`` computed without cancellation."""
        d = np.abs(np.asarray(r, dtype=float) - self.r0)
        val = -self.c0 * smooth_cutoff(d / self.delta) * d ** self.m
        return np.maximum(val, self.floor - 1.0)

    def gradient_radial(self, r):
        """``K'(r)`` for the default profile (finite differences outside delta/2)."""
        r = np.asarray(r, dtype=float)
        d = r - self.r0
        inner = np.abs(d) <= self.delta / 2
        out = np.where(inner, -self.c0 * self.m * np.sign(d) * np.abs(d) ** (self.m - 1), 0.0)
        if not np.all(inner):
            hstep = 1e-6 * self.delta
            fd = (self.profile(r + hstep) - self.profile(r - hstep)) / (2 * hstep)
            out = np.where(inner, out, fd)
        return out


class ConstantPotential:
    """``K = 1`` everywhere; convenient for identity checks."""

    def profile(self, r):
        return np.ones_like(np.asarray(r, dtype=float))

    def deficit(self, r):
        return np.zeros_like(np.asarray(r, dtype=float))

    def gradient_radial(self, r):
        return np.zeros_like(np.asarray(r, dtype=float))


@dataclass(frozen=True)
class ConstantsTable:
    """Expansion constants; ``provenance`` tags each entry with its method.

    ``B3``..``B7`` depend on ``k`` (through ``mu`` and ``h0``), which is
    recorded together with the exponents used to define them.
    """

    A: float
    A1: float
    A2: float
    B0: float
    B1: float
    B2: float
    B3: float
    B4: float
    B5: float
    B6: float
    B7: float
    D1_at_tau: float
    N: int
    s: float
    m: float
    r0: float
    c0: float
    k: int
    mu: float
    h0: float
    exponents: dict = field(default_factory=dict, compare=False)
    provenance: dict = field(default_factory=dict, compare=False)
    diagnostics: dict = field(default_factory=dict, compare=False)

    def rows(self):
        names = ["A", "A1", "A2", "B0", "B1", "B2", "B3", "B4", "B5", "B6", "B7", "D1_at_tau"]
        return [(n, getattr(self, n), self.provenance.get(n, "")) for n in names]


def _sphere_abs_moment(N, m):
    """``int_{S^(N-1)} |omega_1|^m`` by quadrature over the polar angle."""
    val, err = integrate.quad(lambda ph: abs(math.cos(ph)) ** m * math.sin(ph) ** (N - 2), 0, math.pi / 2,
                              epsabs=0, epsrel=1e-13, limit=200)
    return 2.0 * sphere_area(N - 1) * val


def _sphere_abs_moment_closed(N, m):
    return 2.0 * math.pi ** ((N - 1) / 2) * math.exp(math.lgamma((m + 1) / 2) - math.lgamma((N + m) / 2))


def bubble_moment(params: SpectralParams, m: float) -> float:
    """``int |y_1|^m U^p`` for the unit bubble (needs ``-1 < m < N``)."""
    N = params.N
    if not (-1 < m < N):
        raise DomainError(f"moment order must lie in (-1, {N}), got {m!r}")
    c, p = params.c_norm, params.p_crit
    radial = radial_integral(lambda r: r ** m * c ** p * (1 + r * r) ** (-N), N, 2 * N - m) / sphere_area(N)
    return _sphere_abs_moment(N, m) * radial


def bubble_moment_closed(params: SpectralParams, m: float) -> float:
    N = params.N
    return (_sphere_abs_moment_closed(N, m) * params.c_norm ** params.p_crit
            * 0.5 * special.beta((N + m) / 2, (N - m) / 2))


def exponent_e(params: SpectralParams, m: float) -> float:
    """Exponent of ``mu`` that measures the cross-circle term at ``h = h0``."""
    t = params.tau
    return t - (t - m) / t - (t - m) * (t - 1) ** 2 / (t * (t + 1))


def exponent_e7(params: SpectralParams, m: float) -> float:
    t = params.tau
    return t - (t - m) / t - t * (t - m) / (t + 1)


def exponent_eps(params: SpectralParams, m: float) -> float:
    """``h0^2`` behaves like ``mu^-eps``."""
    t = params.tau
    return 2 * (t - 1) * (t - m) / (t * (t + 1))


def compute_constants(params: SpectralParams, potential: PotentialModel, quad: QuadratureSpec = DEFAULT_QUAD,
                      k: int = 50, fit_halfwidth: float = 0.2, fit_points: int = 21) -> ConstantsTable:
    """Evaluate all expansion constants.

    ``A``, ``A1``, ``A2`` and ``B0`` come from radial quadrature; ``B1`` and
    ``B2`` combine ``B0`` with the lattice-sum normalizations.  ``B3``,
    ``B4``, ``B5`` are the exact values at ``k`` of the three pieces of the
    interaction at ``(mu r0, h0)``; ``B6``, ``B7`` are fitted from the exact
    interaction sums for ``h`` in ``h0 (1 +- fit_halfwidth)``.
    """
    potential.validate(params)
    m, c0, r0 = potential.m, potential.c0, potential.r0
    if not m > 1:
        raise ParameterError(f"A2 needs m > 1 for an integrable moment, got m = {m!r}")
    N, tau, p = params.N, params.tau, params.p_crit
    ip = bubble_moment(params, 0.0)
    A = (1 - 2 / p) * ip
    A1 = 2 * c0 / p * bubble_moment(params, m)
    A2 = c0 * m * (m - 1) / p * bubble_moment(params, m - 2)
    B0 = interaction_constant_B0(params, quad)
    B1 = B0 * 2 * special.zeta(tau) / (2 * math.pi) ** tau if tau > 1 else math.nan
    D1 = d1_constant(tau)
    B2 = B0 * 2 ** (1 - tau) * D1 / math.pi
    mu = mu_of_k(params, k, m)
    h0 = _h0_formula(tau, B1, B2, k)
    e, e7, eps = exponent_e(params, m), exponent_e7(params, m), exponent_eps(params, m)
    r = mu * r0
    same = B1 * k ** tau / (r * math.sqrt(1 - h0 * h0)) ** tau
    cross = B2 * h0 * k / ((r * h0) ** tau * math.sqrt(1 - h0 * h0))
    B3 = B1 / r0 ** tau
    B5 = B3 * ((1 - h0 * h0) ** (-tau / 2) - 1) * mu ** eps
    B4 = cross * mu ** e
    # least-squares fit of the exact interaction sums in powers of (1 - h/h0)
    hs = h0 * (1 + fit_halfwidth * np.linspace(-1, 1, fit_points))
    vals = np.array([_exact_interaction(params, B0, k, r, h) for h in hs])
    base = _exact_interaction(params, B0, k, r, h0)
    x = 1 - hs / h0
    design = np.stack([x, x ** 2, x ** 3, x ** 4], axis=1)
    coef, *_ = np.linalg.lstsq(design, vals - base, rcond=None)
    B6 = coef[1] * mu ** e
    B7 = 2 * coef[1] / h0 * mu ** e7
    prov = {"A": "quadrature", "A1": "quadrature", "A2": "quadrature", "B0": "quadrature",
            "B1": "closed-form", "B2": "closed-form", "B3": "closed-form", "B4": "closed-form",
            "B5": "closed-form", "B6": "fitted", "B7": "fitted", "D1_at_tau": "quadrature"}
    table = ConstantsTable(A, A1, A2, B0, B1, B2, B3, B4, B5, B6, B7, D1, N, params.s, m, r0, c0, int(k), mu, h0,
                           exponents={"e": e, "e7": e7, "eps": eps}, provenance=prov,
                           diagnostics={"fit_linear_coeff": float(coef[0] * mu ** e),
                                        "fit_cubic_coeff": float(coef[2] * mu ** e),
                                        "interaction_at_h0_times_mu_m": float(base * mu ** m),
                                        "B3_B4_B5_sum_at_h0": float((same + cross) * mu ** m)})
    for n in ("A", "A1", "A2", "B0", "B1", "B2", "B3", "B4", "B6", "B7"):
        v = getattr(table, n)
        if not (math.isfinite(v) and v > 0):
            raise NumericError(f"constant {n} is not positive ({v!r})", estimate=v)
    return table


def with_k(constants: ConstantsTable, params: SpectralParams, potential: PotentialModel, k: int,
           quad: QuadratureSpec = DEFAULT_QUAD) -> ConstantsTable:
    """Return a table whose k-dependent entries are recomputed at ``k``."""
    if k == constants.k:
        return constants
    return compute_constants(params, potential, quad, k=k)


def _exact_interaction(params, B0, k, r, h):
    """``B0 (S_same + S_cross)`` from the exact lattice sums at ``Lambda = 1``."""
    cfg = build_cylinder_config(params, k, r, h, 1.0)
    tau = params.tau
    return B0 * (lattice_sum_exact(cfg, SumSpec(tau, SAME_CIRCLE)) + lattice_sum_exact(cfg, SumSpec(tau, CROSS_CIRCLE)))


# ---------------------------------------------------------------------------
# the truncated expansion


@dataclass(frozen=True)
class ReducedPoint:
    """A point ``(r, h, Lambda)`` of the reduced problem at ``k``.

    ``r`` is of size ``mu`` while the interesting offsets ``r - mu r0`` are
    far below one, so the offset may be supplied exactly as ``r_offset``;
    it then takes precedence over ``r`` in the quadratic potential term.
    """

    r: float
    h: float
    lam: float
    k: int
    r_offset: float | None = None

    def as_tuple(self):
        return (self.r, self.h, self.lam)


def _check_point(pt: ReducedPoint):
    if not (0.0 < pt.h < 1.0):
        raise DomainError(f"h must lie in (0, 1), got {pt.h!r}")
    if not (pt.r > 0 and pt.lam > 0):
        raise DomainError("r and lambda must be positive")


def _mu(params, constants, k):
    return mu_of_k(params, k, constants.m)


def _dr(point, mu, constants):
    """``mu r0 - r``."""
    if point.r_offset is not None:
        return -float(point.r_offset)
    return mu * constants.r0 - point.r


def interaction_terms(point: ReducedPoint, constants: ConstantsTable, params: SpectralParams):
    """The same-circle and cross-circle terms (positive numbers, without ``k``)."""
    tau = params.tau
    r, h, L, k = point.r, point.h, point.lam, point.k
    same = constants.B1 * k ** tau / (L ** tau * (r * math.sqrt(1 - h * h)) ** tau)
    cross = constants.B2 * h * k / (L ** tau * (r * h) ** tau * math.sqrt(1 - h * h))
    return same, cross


def landscape(point: ReducedPoint, constants: ConstantsTable, params: SpectralParams, potential=None) -> float:
    """``(F - k A) mu^m / k`` for the truncated expansion."""
    _check_point(point)
    m = constants.m
    mu = _mu(params, constants, point.k)
    L = point.lam
    dr = _dr(point, mu, constants)
    same, cross = interaction_terms(point, constants, params)
    return (constants.A1 / L ** m + constants.A2 * dr * dr / L ** (m - 2)) - mu ** m * (same + cross)


def energy_expansion(point: ReducedPoint, constants: ConstantsTable, params: SpectralParams, potential=None) -> float:
    """Truncated expansion ``F(r, h, Lambda)`` (remainder terms omitted)."""
    mu = _mu(params, constants, point.k)
    return point.k * constants.A + point.k * landscape(point, constants, params) / mu ** constants.m


def grad_lambda(point: ReducedPoint, constants: ConstantsTable, params: SpectralParams) -> float:
    """``dF/dLambda`` of the truncated expansion."""
    _check_point(point)
    m, tau = constants.m, params.tau
    mu = _mu(params, constants, point.k)
    L, k = point.lam, point.k
    dr = _dr(point, mu, constants)
    same, cross = interaction_terms(point, constants, params)
    return k * (-m * constants.A1 / (L ** (m + 1) * mu ** m)
                - constants.A2 * (m - 2) * dr * dr / (L ** (m - 1) * mu ** m)
                + tau * (same + cross) / L)


def grad_h(point: ReducedPoint, constants: ConstantsTable, params: SpectralParams, full: bool = False) -> float:
    """``dF/dh`` keeping the two leading interaction terms.

    With ``full=True`` the term from differentiating ``1/sqrt(1-h^2)`` in the
    cross-circle contribution is added, giving the exact h-derivative of
    :func:`energy_expansion`.
    """
    _check_point(point)
    tau = params.tau
    r, h, L, k = point.r, point.h, point.lam, point.k
    base = L ** tau * r ** tau
    g = (constants.B2 * (tau - 1) * k / (base * h ** tau * math.sqrt(1 - h * h))
         - constants.B1 * tau * k ** tau * h / (base * math.sqrt(1 - h * h) ** (tau + 2)))
    if full:
        g -= constants.B2 * k * h ** (2 - tau) / (base * (1 - h * h) ** 1.5)
    return k * g


def _h0_formula(tau, B1, B2, k):
    ratio = B1 * tau * k ** (tau - 1) / (B2 * (tau - 1))
    return (1.0 + ratio ** (2.0 / (tau + 1))) ** -0.5


def solve_h0(params: SpectralParams, constants: ConstantsTable, k: int, check: bool = True) -> float:
    """Root of the leading-order h-equation.

    ``h0 = (1 + (B1 tau k^(tau-1) / (B2 (tau - 1)))^(2/(tau+1)))^(-1/2)``.
    """
    tau = params.tau
    if not tau > 1:
        raise DomainError("h-equation needs N - 2s > 1")
    h0 = _h0_formula(tau, constants.B1, constants.B2, k)
    if check:
        res = h_equation_residual(params, constants, k, h0)
        if res > 1e-12:
            raise NumericError(f"h0 does not solve its equation (relative residual {res:.3e})", estimate=h0)
    return h0


def h_equation_residual(params, constants, k, h):
    """Relative residual of the two balanced terms of the h-equation at ``h``."""
    tau = params.tau
    t1 = constants.B2 * (tau - 1) * k / (h ** tau * math.sqrt(1 - h * h))
    t2 = constants.B1 * tau * k ** tau * h / math.sqrt(1 - h * h) ** (tau + 2)
    return abs(t1 - t2) / max(t1, t2)


def solve_lambda0(params: SpectralParams, constants: ConstantsTable, k: int, r: float, h0: float,
                  check: bool = True) -> float:
    """Root in ``Lambda`` of the Lambda-equation at ``(r, h0)`` without the A2 term."""
    tau, m = params.tau, constants.m
    mu = mu_of_k(params, k, m)
    S = (constants.B1 * tau * k ** tau / math.sqrt(1 - h0 * h0) ** tau
         + constants.B2 * tau * k / (h0 ** (tau - 1) * math.sqrt(1 - h0 * h0)))
    lam0 = (mu ** m * S / (m * constants.A1 * r ** tau)) ** (1.0 / (tau - m))
    if check:
        res = lambda_equation_residual(params, constants, k, r, h0, lam0)
        if res > 1e-10:
            raise NumericError(f"Lambda0 does not solve its equation (relative residual {res:.3e})", estimate=lam0)
    return lam0


def lambda_equation_residual(params, constants, k, r, h0, lam):
    tau, m = params.tau, constants.m
    mu = mu_of_k(params, k, m)
    t1 = m * constants.A1 / (lam ** (m + 1) * mu ** m)
    t2 = (constants.B1 * tau * k ** tau / (lam ** (tau + 1) * (r * math.sqrt(1 - h0 * h0)) ** tau)
          + constants.B2 * tau * h0 * k / (lam ** (tau + 1) * (r * h0) ** tau * math.sqrt(1 - h0 * h0)))
    return abs(t1 - t2) / max(t1, t2)


def reference_point(params: SpectralParams, constants: ConstantsTable, k: int) -> ReducedPoint:
    """``(mu r0, h0, Lambda0)`` at ``k``."""
    mu = mu_of_k(params, k, constants.m)
    h0 = solve_h0(params, constants, k)
    r = mu * constants.r0
    return ReducedPoint(r, h0, solve_lambda0(params, constants, k, r, h0), int(k))


# ---------------------------------------------------------------------------
# direct evaluation of the energy of W


class EnergyValue(float):
    """Energy value with its decomposition attached as ``components``."""

    def __new__(cls, value, components):
        obj = super().__new__(cls, value)
        obj.components = dict(components)
        return obj

    @property
    def excess(self) -> float:
        """``I(W) - k A`` computed from the components (no cancellation)."""
        return self.components["excess"]


def single_bubble_energy(params: SpectralParams) -> float:
    """``I(U) = (s/N) int U^p`` for one bubble with ``K = 1``."""
    return params.s / params.N * bubble_moment(params, 0.0)


def _frame(x1):
    """Orthonormal basis whose first vector is ``x1/|x1|``."""
    n = len(x1)
    e = x1 / np.linalg.norm(x1)
    M = np.eye(n)
    M[:, 0] = e
    q, _ = np.linalg.qr(M)
    if q[:, 0] @ e < 0:
        q = -q
    return q


def energy_direct(cfg: CylinderConfig, potential, params: SpectralParams, quad: QuadratureSpec = DEFAULT_QUAD,
                  radial_panels_per_octave: int = 1, angular_order: int = 12) -> EnergyValue:
    """Energy ``I(W)`` of the configuration by direct quadrature.

    The quadratic part uses ``int |(-Delta)^(s/2) W|^2 = sum_ij int U_i^(p-1) U_j``
    with pairwise interaction integrals.  The nonlinear part is integrated
    over all of space against the weight ``U_1^p / sum_j U_j^p`` centred at
    the first upper point and multiplied by ``2k``; the integrand is written
    so that the small excess over ``sum_j U_j^p`` is never formed by
    cancellation.
    """
    if cfg.h <= 0:
        raise DomainError("energy_direct needs h > 0")
    N, p, tau = params.N, params.p_crit, params.tau
    if cfg.N != N:
        raise ParameterError("configuration dimension does not match params")
    k, L = cfg.k, cfg.lam
    pts = cfg.points
    x1 = pts[0]
    n_pts = len(pts)
    # quadratic part: distances from x1 to every other centre
    dists = np.linalg.norm(pts[1:] - x1, axis=1)
    pair_sum = sum(pairwise_interaction(params, float(L * d), quad) for d in dists)
    self_int = pairwise_interaction(params, 0.0, quad)

    # nonlinear part: hyperspherical coordinates about x1, polar axis along x1
    frame = _frame(x1)
    w = 1.0 / L
    far = 64.0 * (np.max(np.linalg.norm(pts, axis=1)) + 1.0) + 64.0 * w
    edges = [0.0, w / 16]
    while edges[-1] < far:
        for j in range(1, radial_panels_per_octave + 1):
            edges.append(edges[-1] * 2 ** (1.0 / radial_panels_per_octave))
    rho, wr = composite_rule(np.array(edges), quad.order)
    u_t, w_t = composite_rule(np.array([0.0, 1 / 8, 1 / 4, 1 / 2, 1.0]), quad.order)
    rho = np.concatenate([rho, far / u_t])
    wr = np.concatenate([wr, w_t * far / u_t ** 2])
    th_edges = np.linspace(0.0, math.pi, 5)
    th, wth = composite_rule(th_edges, angular_order)
    wth = wth * np.sin(th) ** (N - 2)
    if N == 2:
        raise ParameterError("N >= 3 required")
    from ._common import sphere_rule

    sub_pts, sub_w = sphere_rule(N - 1, angular_order)
    dirs = np.concatenate([np.repeat(np.cos(th), len(sub_w))[:, None],
                           (np.sin(th)[:, None, None] * sub_pts[None]).reshape(-1, N - 1)], axis=1)
    dirs = dirs @ frame.T
    dw = np.outer(wth, sub_w).ravel()

    excess_sum = 0.0
    pot_sum = 0.0
    mu = cfg.mu
    for i0 in range(0, len(rho), 16):
        rr = rho[i0:i0 + 16]
        ww = wr[i0:i0 + 16]
        y = x1[None, None, :] + rr[:, None, None] * dirs[None, :, :]
        q1 = 1.0 + (L * rr[:, None]) ** 2
        u1p = params.c_norm ** p * L ** N * q1 ** (-N)
        R = np.zeros((len(rr), len(dirs)))
        Q = np.zeros_like(R)
        for j in range(1, n_pts):
            dj = y - pts[j]
            ratio = (q1 / (1.0 + L * L * np.einsum("abk,abk->ab", dj, dj))) ** (tau / 2)
            R += ratio
            Q += ratio ** p
        logfac = p * np.log1p(R) - np.log1p(Q)
        ex = u1p * np.expm1(logfac)
        base = u1p * np.exp(logfac)
        radius = np.linalg.norm(y, axis=2)
        pot = np.asarray(potential.deficit(radius / mu)) * base
        jac = (ww * rr ** (N - 1))[:, None] * dw[None, :]
        excess_sum += float(np.sum(ex * jac))
        pot_sum += float(np.sum(pot * jac))

    n2 = 2 * k
    quad_part = 0.5 * n2 * (self_int + pair_sum)
    nonlin_excess = n2 * excess_sum
    pot_part = n2 * pot_sum
    ip = bubble_moment(params, 0.0)
    A = (1 - 2 / p) * ip
    excess = 0.5 * n2 * pair_sum - (nonlin_excess + pot_part) / p
    value = k * A + excess
    comps = {"kA": k * A, "quadratic": quad_part, "pair_sum_first_point": pair_sum,
             "nonlinear_excess": nonlin_excess, "potential": pot_part, "excess": excess,
             "interaction": 0.5 * n2 * pair_sum - nonlin_excess / p, "potential_term": -pot_part / p}
    return EnergyValue(value, comps)
