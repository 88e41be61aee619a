"""Local Pohozaev identities on half-balls for the weighted extension problem.

Both identities are checked on ``B_delta(center) x (0, inf)`` truncated to the
half-ball of radius ``delta`` in ``R^{N+1}_+``.  The lateral boundary is the
upper hemisphere, parametrized by the angle ``psi`` measured from the flat
boundary::

    (y, t) = (center + delta cos(psi) omega, delta sin(psi)),
    dS = delta^N cos(psi)^(N-1) dpsi domega.

Extensions are normalized so that ``-lim t^(1-2s) d_t u~ = d_s (-Delta)^s u``;
hemisphere integrals are therefore divided by ``d_s`` before they are compared
with the flat terms.

Flat-boundary coefficient
-------------------------
Integrating by parts, the flat part of the half-ball contributes
``f_u d xi + f_xi d u`` where ``f`` denotes the fractional Laplacian of each
field.  When ``xi`` solves the linearized equation
``(-Delta)^s xi = (p-1) K u^(p-2) xi`` this collapses to a derivative of
``K u^(p-1) xi`` and the flat terms have coefficient one.  When ``xi`` is
``u`` itself the same computation produces ``(2/p) d(K u^p)``, so every flat
term carries the factor ``2/p`` instead.  :class:`FieldPair` records which of
the two equations ``xi`` satisfies.
"""

from __future__ import annotations

from dataclasses import dataclass
import math

import numpy as np
from scipy import special

from ._common import DomainError, ParameterError, QuadratureSpec, ResidualReport, composite_rule, sphere_area, sphere_rule
from .bubble import DEFAULT_QUAD, BubbleSpec, KernelIndex, SpectralParams, as_field

LINEARIZED = "linearized"
SAME = "same"

DEFAULT_RTOL = 1e-3


@dataclass(frozen=True)
class HalfBallDomain:
    """Half-ball of radius ``radius`` over the flat ball ``B_radius(center)``."""

    center: tuple
    radius: float

    def __post_init__(self):
        if not self.radius > 0:
            raise ParameterError(f"radius must be positive, got {self.radius!r}")
        object.__setattr__(self, "center", tuple(float(c) for c in np.ravel(self.center)))

    @property
    def dim(self) -> int:
        return len(self.center)

    def center_array(self) -> np.ndarray:
        return np.array(self.center)


class FieldPair:
    """The solution ``u`` and the test field ``xi`` entering the identities.

    ``u`` is assumed to solve ``(-Delta)^s u = K u^(p-1)``.  ``xi_equation``
    is ``"linearized"`` when ``xi`` solves the linearized equation about
    ``u`` and ``"same"`` when ``xi`` coincides with ``u``.  Field arguments
    accept anything :func:`~fracbubble.bubble.as_field` understands; kernel
    indices refer to ``bubble``.
    """

    def __init__(self, params: SpectralParams, u=None, xi=None, bubble: BubbleSpec | None = None,
                 xi_equation: str = LINEARIZED):
        if xi_equation not in (LINEARIZED, SAME):
            raise ParameterError(f"xi_equation must be '{LINEARIZED}' or '{SAME}', got {xi_equation!r}")
        self.params = params
        bubble = bubble or BubbleSpec()
        self.u_field = as_field(params, bubble if u is None else u, bubble)
        self.xi_field = as_field(params, xi, bubble)
        self.xi_equation = xi_equation

    @classmethod
    def bubble_and_kernel(cls, params: SpectralParams, index: int, bubble: BubbleSpec | None = None):
        """``u = U`` and ``xi = Z_index`` for the same bubble."""
        bubble = bubble or BubbleSpec()
        return cls(params, bubble, KernelIndex(index), bubble)

    @classmethod
    def bubble_with_itself(cls, params: SpectralParams, bubble: BubbleSpec | None = None):
        bubble = bubble or BubbleSpec()
        return cls(params, bubble, bubble, bubble, xi_equation=SAME)

    @property
    def flat_factor(self) -> float:
        """Coefficient of the flat-boundary terms (see the module docstring)."""
        return 1.0 if self.xi_equation == LINEARIZED else 2.0 / self.params.p_crit


# ---------------------------------------------------------------------------
# quadrature rules


def _psi_rule(params: SpectralParams, quad: QuadratureSpec):
    """Nodes and weights in ``psi`` on ``(0, pi/2)`` after the grading
    ``psi = (pi/2) v^q``; the Jacobian is folded into the weights."""
    q = quad.hemi_grading if quad.hemi_grading is not None else 1.0 / params.s
    v, wv = composite_rule(np.linspace(0.0, 1.0, quad.hemi_panels + 1), quad.hemi_order)
    psi = 0.5 * math.pi * v ** q
    wpsi = 0.5 * math.pi * q * v ** (q - 1) * wv
    return psi, wpsi


def hemisphere_nodes(params: SpectralParams, domain: HalfBallDomain, quad: QuadratureSpec = DEFAULT_QUAD):
    """Quadrature nodes on the lateral hemisphere.

    Returns ``(Y, T, normal, weights)`` where ``normal`` is the outward unit
    normal in ``R^{N+1}`` and ``weights`` include the surface element but not
    the ``t^(1-2s)`` weight.
    """
    if domain.dim != params.N:
        raise DomainError(f"domain dimension {domain.dim} does not match N = {params.N}")
    delta = domain.radius
    psi, wpsi = _psi_rule(params, quad)
    omega, womega = sphere_rule(params.N, quad.sphere_order)
    cp, sp = np.cos(psi), np.sin(psi)
    Y = domain.center_array() + delta * (cp[:, None, None] * omega[None, :, :]).reshape(-1, params.N)
    T = np.repeat(delta * sp, len(womega))
    normal = np.concatenate([(cp[:, None, None] * omega[None, :, :]).reshape(-1, params.N),
                             np.repeat(sp, len(womega))[:, None]], axis=1)
    w = np.outer(delta ** params.N * cp ** (params.N - 1) * wpsi, womega).ravel()
    return Y, T, normal, w


def weighted_hemisphere_integral(f, domain: HalfBallDomain, quad: QuadratureSpec = DEFAULT_QUAD,
                                 params: SpectralParams | None = None, s: float | None = None) -> float:
    """``int t^(1-2s) f(y, t) dS`` over the lateral hemisphere of ``domain``.

    ``f`` is called once with arrays ``Y`` of shape ``(M, N)`` and ``T`` of
    shape ``(M,)`` and must return ``M`` values (or ``(M, K)`` for several
    integrands at once).  Either ``params`` or ``s`` must be given; with only
    ``s`` the dimension is taken from the domain.
    """
    if params is None:
        if s is None:
            raise ParameterError("give params or s")
        params = SpectralParams(domain.dim, s)
    Y, T, _, w = hemisphere_nodes(params, domain, quad)
    vals = np.asarray(f(Y, T), dtype=float)
    wt = w * T ** (1 - 2 * params.s)
    if vals.ndim == 1:
        return float(vals @ wt)
    return wt @ vals


def weighted_hemisphere_area(params: SpectralParams, delta: float) -> float:
    """Closed form of the integral of ``t^(1-2s)`` over the hemisphere."""
    return delta ** (params.N + 1 - 2 * params.s) * sphere_area(params.N) * 0.5 * special.beta(params.N / 2, 1 - params.s)


def _ball_nodes(params: SpectralParams, domain: HalfBallDomain, quad: QuadratureSpec):
    rho, wr = composite_rule(np.linspace(0.0, domain.radius, quad.hemi_panels + 1), 2 * quad.hemi_order)
    omega, womega = sphere_rule(params.N, quad.sphere_order)
    Y = domain.center_array() + (rho[:, None, None] * omega[None, :, :]).reshape(-1, params.N)
    w = np.outer(wr * rho ** (params.N - 1), womega).ravel()
    return Y, w


def _sphere_nodes(params: SpectralParams, domain: HalfBallDomain, quad: QuadratureSpec):
    omega, womega = sphere_rule(params.N, quad.sphere_order)
    return domain.center_array() + domain.radius * omega, omega, domain.radius ** (params.N - 1) * womega


def _potential_parts(potential, Y):
    """``K(y)`` and ``grad K(y)`` for a radial potential evaluated at ``|y|``."""
    r = np.sqrt(np.einsum("ij,ij->i", Y, Y))
    if potential is None:
        return np.ones(len(Y)), np.zeros_like(Y)
    K = np.asarray(potential.profile(r), dtype=float)
    dK = np.asarray(potential.gradient_radial(r), dtype=float)
    with np.errstate(invalid="ignore", divide="ignore"):
        unit = np.where(r[:, None] > 0, Y / r[:, None], 0.0)
    return K, dK[:, None] * unit


def _hemisphere_fields(pair: FieldPair, domain: HalfBallDomain, quad: QuadratureSpec):
    params = pair.params
    Y, T, nu, w = hemisphere_nodes(params, domain, quad)
    u, gu, wdu = pair.u_field.extension_batch(Y, T, quad)
    x, gx, wdx = pair.xi_field.extension_batch(Y, T, quad)
    # full (N+1)-gradients; the t-component is recovered from t^(1-2s) d_t
    tpow = T ** (2 * params.s - 1)
    Gu = np.concatenate([gu, (wdu * tpow)[:, None]], axis=1)
    Gx = np.concatenate([gx, (wdx * tpow)[:, None]], axis=1)
    weight = w * T ** (1 - 2 * params.s)
    return Y, T, nu, weight, u, Gu, x, Gx


def _check_ready(pair, domain):
    if domain.dim != pair.params.N:
        raise DomainError(f"domain dimension {domain.dim} does not match N = {pair.params.N}")


def translation_identity_residual(pair: FieldPair, domain: HalfBallDomain, potential=None, i: int = 1,
                                  quad: QuadratureSpec = DEFAULT_QUAD, rtol: float = DEFAULT_RTOL) -> ResidualReport:
    """Translation identity in direction ``y_i`` (``i`` is 1-based).

    ``lhs = -(1/d_s) int t^(1-2s) (d_nu u~ d_i xi~ + d_nu xi~ d_i u~ - <grad u~, grad xi~> nu_i)``
    over the hemisphere, and
    ``rhs = c (int_{dB} K u^(p-1) xi nu_i - int_B d_i K u^(p-1) xi)``
    with ``c = pair.flat_factor``.  ``potential=None`` means ``K = 1``.
    """
    params = pair.params
    _check_ready(pair, domain)
    if int(i) != i or not (1 <= i <= params.N):
        raise DomainError(f"coordinate index must lie in 1..{params.N}, got {i!r}")
    ax = int(i) - 1
    p = params.p_crit
    c = pair.flat_factor

    _, _, nu, wt, _, Gu, _, Gx = _hemisphere_fields(pair, domain, quad)
    dnu_u = np.einsum("ij,ij->i", Gu, nu)
    dnu_x = np.einsum("ij,ij->i", Gx, nu)
    inner = np.einsum("ij,ij->i", Gu, Gx)
    pieces = np.stack([dnu_u * Gx[:, ax], dnu_x * Gu[:, ax], -inner * nu[:, ax]], axis=1)
    hemi = -(wt @ pieces) / params.dtn_const

    Ys, omega, ws = _sphere_nodes(params, domain, quad)
    Ks, _ = _potential_parts(potential, Ys)
    us, xs = pair.u_field.values(Ys), pair.xi_field.values(Ys)
    surface = c * float(np.sum(ws * Ks * np.abs(us) ** (p - 1) * xs * omega[:, ax]))

    Yb, wb = _ball_nodes(params, domain, quad)
    _, gK = _potential_parts(potential, Yb)
    ub, xb = pair.u_field.values(Yb), pair.xi_field.values(Yb)
    volume = -c * float(np.sum(wb * gK[:, ax] * np.abs(ub) ** (p - 1) * xb))

    terms = {"hemi_dnu_u_di_xi": hemi[0], "hemi_dnu_xi_di_u": hemi[1], "hemi_grad_grad_nu": hemi[2],
             "flat_boundary": surface, "flat_volume": volume}
    lhs = float(np.sum(hemi))
    rhs = surface + volume
    return ResidualReport.from_sides(f"translation_i{int(i)}", lhs, rhs, terms, rtol,
                                     {"delta": domain.radius, "flat_factor": c, "N": params.N, "s": params.s,
                                      "unit_factor_residual": _unit_factor_residual([surface, volume], hemi, c)})


def _unit_factor_residual(flat_terms, hemi_terms, c):
    """Relative residual of ``sum(flat_terms) / c = sum(hemi_terms)``.

    This is the check obtained if the flat terms were given coefficient one;
    it differs from the reported residual only for pairs with ``xi = u``.
    """
    flat = [float(v) / c for v in flat_terms]
    hemi = [float(v) for v in hemi_terms]
    scale = max(abs(v) for v in flat + hemi + [sum(flat), sum(hemi)])
    return abs(sum(flat) - sum(hemi)) / scale if scale > 0 else 0.0


def dilation_identity_residual(pair: FieldPair, domain: HalfBallDomain, potential=None, x0=None,
                               quad: QuadratureSpec = DEFAULT_QUAD, rtol: float = DEFAULT_RTOL) -> ResidualReport:
    """Dilation identity about ``x0`` (default: the domain centre).

    ``lhs = c int_B u^(p-1) xi <grad K, y - x0>`` and ``rhs`` is the sum of
    ``c int_{dB} K u^(p-1) xi <nu, y - x0>`` and the five hemisphere terms
    divided by ``d_s``; ``c = pair.flat_factor``.  ``Y - X0`` and the
    gradients are taken in ``R^{N+1}``.
    """
    params = pair.params
    _check_ready(pair, domain)
    N, p, c = params.N, params.p_crit, pair.flat_factor
    x0 = domain.center_array() if x0 is None else np.asarray(x0, dtype=float).reshape(-1)
    if x0.shape[0] != N:
        raise DomainError(f"x0 has dimension {x0.shape[0]}, expected {N}")
    if np.linalg.norm(x0 - domain.center_array()) > domain.radius * (1 + 1e-12):
        raise DomainError("x0 must lie in the closed ball")

    Y, T, nu, wt, u, Gu, x, Gx = _hemisphere_fields(pair, domain, quad)
    Z = np.concatenate([Y - x0, T[:, None]], axis=1)
    dnu_u = np.einsum("ij,ij->i", Gu, nu)
    dnu_x = np.einsum("ij,ij->i", Gx, nu)
    pieces = np.stack([
        dnu_u * np.einsum("ij,ij->i", Gx, Z),
        dnu_x * np.einsum("ij,ij->i", Gu, Z),
        -np.einsum("ij,ij->i", Gu, Gx) * np.einsum("ij,ij->i", nu, Z),
        0.5 * (N - 2 * params.s) * x * dnu_u,
        0.5 * (N - 2 * params.s) * u * dnu_x,
    ], axis=1)
    hemi = (wt @ pieces) / params.dtn_const

    Ys, omega, ws = _sphere_nodes(params, domain, quad)
    Ks, _ = _potential_parts(potential, Ys)
    us, xs = pair.u_field.values(Ys), pair.xi_field.values(Ys)
    surface = c * float(np.sum(ws * Ks * np.abs(us) ** (p - 1) * xs * np.einsum("ij,ij->i", omega, Ys - x0)))

    Yb, wb = _ball_nodes(params, domain, quad)
    _, gK = _potential_parts(potential, Yb)
    ub, xb = pair.u_field.values(Yb), pair.xi_field.values(Yb)
    lhs = c * float(np.sum(wb * np.abs(ub) ** (p - 1) * xb * np.einsum("ij,ij->i", gK, Yb - x0)))

    names = ("hemi_dnu_u_z_xi", "hemi_dnu_xi_z_u", "hemi_grad_grad_nu_z", "hemi_xi_dnu_u", "hemi_u_dnu_xi")
    terms = {"flat_boundary": surface}
    terms.update({n: float(v) for n, v in zip(names, hemi)})
    rhs = surface + float(np.sum(hemi))
    return ResidualReport.from_sides("dilation", lhs, rhs, terms, rtol,
                                     {"delta": domain.radius, "flat_factor": c, "N": N, "s": params.s,
                                      "x0": tuple(float(v) for v in x0),
                                      "unit_factor_residual": _unit_factor_residual([surface, -lhs], -hemi, c)})


def large_domain_trend(params: SpectralParams, deltas=(4.0, 8.0, 16.0), index: int = 1,
                       quad: QuadratureSpec = DEFAULT_QUAD):
    """Magnitudes of both sides of the translation identity for ``u = U``,
    ``xi = Z_index`` on growing balls about the bubble centre.

    Returns a list of ``(delta, |lhs|, |rhs|)``; both should decay as the
    balls exhaust the whole space.
    """
    pair = FieldPair.bubble_and_kernel(params, index)
    out = []
    for d in deltas:
        rep = translation_identity_residual(pair, HalfBallDomain(np.zeros(params.N), d), None, index, quad)
        out.append((float(d), abs(rep.lhs), abs(rep.rhs)))
    return out
