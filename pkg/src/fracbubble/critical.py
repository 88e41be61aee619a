"""Stationary point of the truncated reduced energy inside the parameter box
and the sign structure of its gradient on the faces of the box."""

from __future__ import annotations

from dataclasses import dataclass, field
import math

import numpy as np

from ._common import DomainError, NumericError
from .bubble import SpectralParams
from .configuration import ParameterBox, mu_of_k
from .energy import (
    ConstantsTable,
    ReducedPoint,
    grad_h,
    grad_lambda,
    landscape,
    reference_point,
)


def parameter_box(params: SpectralParams, constants: ConstantsTable, k: int, theta_box: float = 0.1) -> ParameterBox:
    ref = reference_point(params, constants, k)
    mu = mu_of_k(params, k, constants.m)
    return ParameterBox.around(mu, constants.r0, ref.h, ref.lam, theta_box)


def normalized_gradient(point: ReducedPoint, constants: ConstantsTable, params: SpectralParams,
                        box: ParameterBox, full_h: bool = False) -> np.ndarray:
    """Gradient components scaled by the box half-widths and by ``k mu^-m``.

    The r-component is a centred difference of the landscape with step
    ``0.1`` half-widths, taken in the offset ``r - mu r0`` (exact for the
    quadratic term; the interaction varies on the scale ``mu``).  The h- and
    Lambda-components use :func:`grad_h` and :func:`grad_lambda`.
    """
    k = point.k
    mu = mu_of_k(params, k, constants.m)
    wr, wh, wl = box.half_widths
    scale = mu ** constants.m / k
    step = 0.1 * wr
    off = point.r_offset if point.r_offset is not None else point.r - mu * constants.r0
    up = ReducedPoint(point.r + step, point.h, point.lam, k, off + step)
    dn = ReducedPoint(point.r - step, point.h, point.lam, k, off - step)
    g_r = (landscape(up, constants, params) - landscape(dn, constants, params)) / (2 * step)
    return np.array([
        g_r * wr,
        grad_h(point, constants, params, full=full_h) * scale * wh,
        grad_lambda(point, constants, params) * scale * wl,
    ])


@dataclass
class FlowState:
    """Solver state: last point, last step length (box units), iteration count,
    gradient norms and optional trajectory."""

    point: ReducedPoint
    step: float
    iterations: int
    grad: np.ndarray = None
    trajectory: list = field(default_factory=list)
    exited: bool = False
    converged: bool = False


def _to_unit(box, x, r_center):
    c, w = box.center, box.half_widths
    out = np.array([(x[i] - c[i]) / w[i] for i in range(3)])
    out[0] = (x[0] - r_center) / w[0]
    return out


def _from_unit(box, u, k, r_center):
    c, w = box.center, box.half_widths
    return ReducedPoint(r_center + u[0] * w[0], c[1] + u[1] * w[1], c[2] + u[2] * w[2], k, float(u[0] * w[0]))


def _residual_weights(u, box, tau):
    """Positive factors that turn the h- and Lambda-equations into nearly
    monotone polynomials (the zero set is unchanged).  The h-factor also
    removes the ``Lambda^-tau`` prefactor so the h-equation decouples."""
    c, w = box.center, box.half_widths
    h, hc = c[1] + u[1] * w[1], c[1]
    lam, lc = c[2] + u[2] * w[2], c[2]
    wh = (h / hc) ** tau * ((1 - h * h) / (1 - hc * hc)) ** ((tau + 2) / 2)
    return np.array([1.0, wh * (lam / lc) ** tau, (lam / lc) ** (tau + 1)])


def find_critical_point(params: SpectralParams, constants: ConstantsTable, potential, k: int,
                        init: ReducedPoint | None = None, tol: float = 1e-10, theta_box: float = 0.1,
                        max_iter: int = 100, trace: bool = False, return_state: bool = False):
    """Solve ``grad = 0`` for the truncated energy inside the parameter box.

    Newton's method with a finite-difference Jacobian, applied to the
    normalized gradient after rescaling its h- and Lambda-components by
    positive factors (``(Lambda h)^tau (1-h^2)^((tau+2)/2)`` and
    ``Lambda^(tau+1)``) that make both equations close to monotone
    polynomials.  Each step is
    halved (at most 60 times) until it stays in the box and the residual
    norm decreases; if that fails, or the Jacobian is singular, a
    steepest-descent step of ``1e-2`` box widths on the squared residual is
    taken and projected back into the box.  Convergence is judged on the
    unscaled normalized gradient.
    """
    box = parameter_box(params, constants, k, theta_box)
    if init is None:
        init = reference_point(params, constants, k)
    if not box.contains(init.r, init.h, init.lam):
        raise DomainError("initial point lies outside the parameter box")
    # unit coordinates measure r from mu r0 so the offset is carried exactly
    rc = mu_of_k(params, k, constants.m) * constants.r0
    inner = np.nextafter(1.0, 0.0)

    def point(u):
        return _from_unit(box, u, k, rc)

    def evaluate(u):
        g = normalized_gradient(point(u), constants, params, box)
        return g, g * _residual_weights(u, box, params.tau)

    u = _to_unit(box, init.as_tuple(), rc)
    if init.r_offset is not None:
        u[0] = init.r_offset / box.half_widths[0]
    g, gs = evaluate(u)
    state = FlowState(point(u), 0.0, 0, g, [point(u)] if trace else [])
    for it in range(max_iter):
        if np.max(np.abs(g)) <= tol:
            state.converged = True
            break
        hstep = 1e-4
        J = np.empty((3, 3))
        for j in range(3):
            e = np.zeros(3)
            e[j] = hstep
            J[:, j] = (evaluate(np.clip(u + e, -inner, inner))[1] - evaluate(np.clip(u - e, -inner, inner))[1]) / (2 * hstep)
        norm0 = np.linalg.norm(gs)
        accepted = False
        try:
            delta = -np.linalg.solve(J, gs)
            if not np.all(np.isfinite(delta)):
                raise np.linalg.LinAlgError
            t = 1.0
            for _ in range(61):
                cand = u + t * delta
                if np.all(np.abs(cand) <= 1.0):
                    gc, gsc = evaluate(cand)
                    if np.linalg.norm(gsc) < norm0:
                        accepted = True
                        break
                t *= 0.5
        except np.linalg.LinAlgError:
            pass
        if not accepted:
            d = -J.T @ gs
            nd = np.linalg.norm(d)
            if nd == 0:
                break
            t = 2e-2  # 1e-2 box widths; unit coordinates span a width of 2
            cand = np.clip(u + t * d / nd, -1.0, 1.0)
            gc, gsc = evaluate(cand)
        raw = u + t * (delta if accepted else d / nd)
        state.exited = state.exited or bool(np.any(np.abs(raw) > 1.0))
        u, g, gs = cand, gc, gsc
        state.step = float(t)
        state.iterations = it + 1
        state.point = point(u)
        state.grad = g
        if trace:
            state.trajectory.append(state.point)
    state.point = point(u)
    state.grad = g
    if np.max(np.abs(g)) <= tol:
        state.converged = True
    if not state.converged:
        err = NumericError(f"critical point search did not converge (|grad| = {np.max(np.abs(g)):.3e})",
                           estimate=state.point, error_bound=float(np.max(np.abs(g))))
        err.state = state
        raise err
    return state if return_state else state.point


def hessian_h_lambda(point: ReducedPoint, constants: ConstantsTable, params: SpectralParams,
                     box: ParameterBox, step: float = 1e-3) -> np.ndarray:
    """Finite-difference Hessian of the landscape in box units for (h, Lambda)."""
    wr, wh, wl = box.half_widths
    k = point.k

    def f(dh, dl):
        return landscape(ReducedPoint(point.r, point.h + dh * wh, point.lam + dl * wl, k), constants, params)

    H = np.empty((2, 2))
    f0 = f(0, 0)
    H[0, 0] = (f(step, 0) - 2 * f0 + f(-step, 0)) / step ** 2
    H[1, 1] = (f(0, step) - 2 * f0 + f(0, -step)) / step ** 2
    H[0, 1] = H[1, 0] = (f(step, step) - f(step, -step) - f(-step, step) + f(-step, -step)) / (4 * step ** 2)
    return H


# ---------------------------------------------------------------------------
# boundary signs


@dataclass
class FaceResult:
    name: str
    claim: str
    min_margin: float
    max_margin: float
    passed: bool | None
    literal_claim: str = ""
    literal_passed: bool | None = None
    values: list = field(default_factory=list)


@dataclass
class BoundaryReport:
    k: int
    theta_box: float
    faces: list
    h_range_clipped: bool = False

    @property
    def passed(self) -> bool:
        return all(f.passed for f in self.faces) and not self.h_range_clipped

    def face(self, name) -> FaceResult:
        for f in self.faces:
            if f.name == name:
                return f
        raise KeyError(name)


def boundary_sign_report(params: SpectralParams, constants: ConstantsTable, k: int, theta_box: float = 0.1,
                         grid: int = 5) -> BoundaryReport:
    """Evaluate the flow-invariance signs of ``Fbar = -F`` on the box faces.

    On the faces ``Lambda = Lambda0 +- mu^(-3 theta/2)`` the claim is
    ``+- dFbar/dLambda > 0``; on ``h = h0 +- mu^-theta`` it is
    ``+- dFbar/dh > 0`` (the gradient of ``Fbar`` points out of the box, so
    its descent flow points inwards).  On ``|r - mu r0| = mu^-theta`` the
    level ``Fbar`` must lie below ``alpha1``.  Values are reported in units
    of ``k mu^-m``; a positive margin means the claim holds.  The h-face
    results also record the opposite sign convention as ``literal_claim``.
    """
    mu = mu_of_k(params, k, constants.m)
    ref = reference_point(params, constants, k)
    box = ParameterBox.around(mu, constants.r0, ref.h, ref.lam, theta_box)
    scale = mu ** constants.m / k
    rs = np.linspace(box.r_lo, box.r_hi, grid)
    hs = np.linspace(box.h_lo, box.h_hi, grid)
    clipped = bool(np.any((hs <= 0) | (hs >= 1)))
    if clipped:
        hs = np.linspace(max(box.h_lo, 1e-3 * ref.h), min(box.h_hi, 1 - 1e-3 * (1 - ref.h)), grid)
    lam_clipped = box.lam_lo <= 0
    ls = np.linspace(max(box.lam_lo, 1e-3 * ref.lam), box.lam_hi, grid)
    clipped = clipped or lam_clipped
    faces = []

    def make(name, claim, vals, literal="", literal_sign=None):
        vals = np.asarray(vals, dtype=float)
        lit_pass = None if literal_sign is None else bool(np.all(literal_sign * vals < 0))
        faces.append(FaceResult(name, claim, float(vals.min()), float(vals.max()), bool(np.all(vals > 0)),
                                literal, lit_pass, vals.tolist()))

    for sign, lam, name in ((1, box.lam_hi, "lambda_upper"), (-1, box.lam_lo, "lambda_lower")):
        if not lam > 0:
            faces.append(FaceResult(name, "skipped: face outside Lambda > 0", math.nan, math.nan, None))
            continue
        vals = [sign * -grad_lambda(ReducedPoint(r, h, lam, k), constants, params) * scale for r in rs for h in hs]
        make(name, "dFbar/dLambda > 0" if sign > 0 else "dFbar/dLambda < 0", vals)

    for sign, h, name in ((1, box.h_hi, "h_upper"), (-1, box.h_lo, "h_lower")):
        if not (0 < h < 1):
            faces.append(FaceResult(name, "skipped: face outside 0 < h < 1", math.nan, math.nan, None))
            continue
        vals = [sign * -grad_h(ReducedPoint(r, h, lam, k), constants, params) * scale for r in rs for lam in ls]
        claim = "dFbar/dh > 0" if sign > 0 else "dFbar/dh < 0"
        literal = "dFbar/dh < 0" if sign > 0 else "dFbar/dh > 0"
        make(name, claim, vals, literal, literal_sign=np.array(1.0))

    lam0 = ref.lam
    alpha1_excess = (constants.A1 / lam0 ** constants.m - constants.B3 / lam0 ** params.tau) + mu ** (-2.5 * theta_box)
    for r, name in ((box.r_lo, "level_r_lower"), (box.r_hi, "level_r_upper")):
        # Fbar - alpha1 in units of k mu^-m is  -landscape + alpha1_excess
        vals = [landscape(ReducedPoint(r, h, lam, k), constants, params) - alpha1_excess for h in hs for lam in ls]
        make(name, "Fbar < alpha1", vals)
    return BoundaryReport(int(k), float(theta_box), faces, h_range_clipped=clipped)
