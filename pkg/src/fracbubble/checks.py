"""The acceptance checks, shared by the ``verify`` command and the test suite.

Each check returns a :class:`CheckResult`; :func:`run_checks` evaluates them
in a fixed order and :func:`results_to_csv` renders them reproducibly.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
import io
import math

import numpy as np

from ._common import NumericError, QuadratureSpec
from .bubble import (
    DEFAULT_QUAD,
    BubbleSpec,
    KernelIndex,
    SpectralParams,
    bubble_nonlinear_image,
    extension_trace_derivative,
    kernel_value,
    linearized_image,
)
from .configuration import build_cylinder_config, mu_of_k
from .critical import boundary_sign_report, parameter_box
from .energy import (
    PotentialModel,
    ReducedPoint,
    compute_constants,
    grad_lambda,
    h_equation_residual,
    lambda_equation_residual,
    landscape,
    solve_h0,
    solve_lambda0,
)
from .interactions import (
    CROSS_CIRCLE,
    SAME_CIRCLE,
    SumSpec,
    d1_closed_form,
    d1_constant,
    interaction_constant_B0,
    lattice_sum_asymptotic,
    lattice_sum_exact,
    pairwise_interaction,
)
from .pohozaev import FieldPair, HalfBallDomain, dilation_identity_residual, translation_identity_residual

SAMPLE_SEED = 20240607


@dataclass(frozen=True)
class CheckResult:
    criterion: int
    name: str
    passed: bool
    metric: float
    threshold: float
    detail: str = ""


def _fmt(x) -> str:
    return repr(float(x))


def sample_points(params: SpectralParams, count: int = 20, radius: float = 5.0) -> np.ndarray:
    """Deterministic points with ``|y| <= radius``: radii evenly spaced
    from 0, directions drawn from a seeded generator."""
    rng = np.random.default_rng(SAMPLE_SEED)
    dirs = rng.standard_normal((count, params.N))
    dirs /= np.linalg.norm(dirs, axis=1)[:, None]
    radii = np.linspace(0.0, radius, count)
    return radii[:, None] * dirs


def check_bubble_identity(params: SpectralParams, quad: QuadratureSpec = DEFAULT_QUAD, rtol: float = 1e-3) -> CheckResult:
    spec = BubbleSpec()
    worst = 0.0
    for y in sample_points(params):
        exact = bubble_nonlinear_image(params, spec, y)
        worst = max(worst, abs(extension_trace_derivative(params, spec, y, quad) - exact) / exact)
    return CheckResult(1, "bubble_pde_identity", worst <= rtol, worst, rtol, "max relative residual over 20 points")


def check_kernel_identity(params: SpectralParams, quad: QuadratureSpec = DEFAULT_QUAD, rtol: float = 1e-3) -> CheckResult:
    pts = sample_points(params)
    worst = 0.0
    used = 0
    for idx in (0, 1):
        which = KernelIndex(idx)
        z = np.array([kernel_value(params, which, y) for y in pts])
        keep = np.abs(z) > 1e-3 * np.max(np.abs(z))
        for y in pts[keep]:
            exact = linearized_image(params, which, y)
            worst = max(worst, abs(extension_trace_derivative(params, which, y, quad) - exact) / abs(exact))
            used += 1
    return CheckResult(2, "linearized_kernel_identity", worst <= rtol, worst, rtol,
                       f"Z0 and Z1; {used} points above the 1e-3 cut")


def check_interaction_constant(params: SpectralParams, quad: QuadratureSpec = DEFAULT_QUAD, tol: float = 0.05) -> CheckResult:
    B0 = interaction_constant_B0(params, quad)
    ds = (20.0, 50.0, 100.0)
    devs = [d ** params.tau * pairwise_interaction(params, d, quad) / B0 - 1 for d in ds]
    monotone = all(abs(b) < abs(a) for a, b in zip(devs, devs[1:]))
    ok = abs(devs[-1]) <= tol and monotone
    return CheckResult(3, "interaction_constant", ok, abs(devs[-1]), tol,
                       "deviations at d=20,50,100: " + " ".join(_fmt(v) for v in devs))


def _sum_deviation(params, k, h, tau, kind):
    cfg = build_cylinder_config(params, k, 1.0, h)
    spec = SumSpec(tau, kind)
    return abs(lattice_sum_exact(cfg, spec) / float(lattice_sum_asymptotic(cfg, spec)) - 1)


def check_same_circle_sum(params: SpectralParams, tau: float = 3.0, h: float = 0.1) -> CheckResult:
    ks = (16, 32, 64, 128)
    devs = [_sum_deviation(params, k, h, tau, SAME_CIRCLE) for k in ks]
    slope = float(np.polyfit(np.log(ks), np.log(devs), 1)[0])
    decreasing = all(b < a for a, b in zip(devs, devs[1:]))
    ok = decreasing and abs(slope + 2) <= 0.5
    return CheckResult(4, "same_circle_sum_rate", ok, slope, -2.0,
                       "log-log slope; deviations " + " ".join(_fmt(v) for v in devs))


def cross_check_height(params: SpectralParams, k: int) -> float:
    t = params.tau
    return float(k) ** (-(t - 1) / (t + 1))


def check_cross_circle_sum(params: SpectralParams, tau: float = 3.0) -> CheckResult:
    """Cross-circle sums at ``h = k^(-(N-2s-1)/(N-2s+1))`` for ``k = 16, 128``.

    The exponent defaults to the same ``tau = 3`` as the same-circle check;
    the detail string also reports the ratio for ``tau = N - 2s``.
    """
    def devs(t):
        return [_sum_deviation(params, k, cross_check_height(params, k), t, CROSS_CIRCLE) for k in (16, 128)]

    d16, d128 = devs(tau)
    alt16, alt128 = devs(params.tau)
    ok = d128 <= 0.5 * d16
    return CheckResult(5, "cross_circle_sum_limit", ok, d128 / d16, 0.5,
                       f"deviation k=16 {_fmt(d16)}; k=128 {_fmt(d128)}; ratio at tau=N-2s {_fmt(alt128 / alt16)}")


def check_d1() -> CheckResult:
    worst = max(abs(d1_constant(t) / d1_closed_form(t) - 1) for t in (2.0, 2.5, 3.0, 4.0))
    anchors = max(abs(d1_constant(2.0) / (math.pi / 2) - 1), abs(d1_constant(3.0) - 1))
    ok = worst <= 1e-10 and anchors <= 1e-12
    return CheckResult(6, "d1_closed_form", ok, worst, 1e-10, f"anchor deviation {_fmt(anchors)}")


def _constants(params, k=50, quad=DEFAULT_QUAD):
    return compute_constants(params, PotentialModel.default(params), quad, k=k)


def check_critical_equations(params: SpectralParams, quad: QuadratureSpec = DEFAULT_QUAD) -> CheckResult:
    C = _constants(params, quad=quad)
    worst = 0.0
    for k in (16, 64, 256):
        h0 = solve_h0(params, C, k, check=False)
        r = C.r0 * mu_of_k(params, k, C.m)
        lam0 = solve_lambda0(params, C, k, r, h0, check=False)
        worst = max(worst, h_equation_residual(params, C, k, h0), lambda_equation_residual(params, C, k, r, h0, lam0))
    ks = (16, 32, 64, 128, 256)
    hs = [solve_h0(params, C, k, check=False) for k in ks]
    slope = float(np.polyfit(np.log(ks), np.log(hs), 1)[0])
    target = -(params.tau - 1) / (params.tau + 1)
    slope_dev = abs(slope / target - 1)
    ok = worst <= 1e-10 and slope_dev <= 0.02
    return CheckResult(7, "critical_equations", ok, slope_dev, 0.02,
                       f"h0 slope {_fmt(slope)} vs {_fmt(target)}; max equation residual {_fmt(worst)}")


def check_boundary_signs(params: SpectralParams, quad: QuadratureSpec = DEFAULT_QUAD, k: int = 50,
                         theta_box: float = 0.1) -> CheckResult:
    C = _constants(params, k=k, quad=quad)
    rep = boundary_sign_report(params, C, k, theta_box=theta_box, grid=5)
    failing = [f.name for f in rep.faces if not f.passed]
    margins = [f.min_margin for f in rep.faces if f.passed is not None]
    detail = "failing faces: " + (" ".join(failing) if failing else "none")
    if rep.h_range_clipped:
        detail += "; sample grid clipped to the admissible range"
    return CheckResult(8, "boundary_signs", rep.passed, min(margins), 0.0, detail)


def check_translation_identity(params: SpectralParams, quad: QuadratureSpec = DEFAULT_QUAD, rtol: float = 1e-3) -> CheckResult:
    pair = FieldPair.bubble_and_kernel(params, 1)
    dom = HalfBallDomain(np.zeros(params.N), 3.0)
    coarse = translation_identity_residual(pair, dom, None, 1, quad)
    fine = translation_identity_residual(pair, dom, None, 1, quad.refined())
    drop = coarse.rel_residual / fine.rel_residual if fine.rel_residual > 0 else math.inf
    ok = coarse.rel_residual <= rtol and drop >= 4
    return CheckResult(9, "pohozaev_translation", ok, coarse.rel_residual, rtol,
                       f"refined residual {_fmt(fine.rel_residual)}; reduction factor {_fmt(drop)}")


def check_dilation_identity(params: SpectralParams, quad: QuadratureSpec = DEFAULT_QUAD, rtol: float = 1e-3) -> CheckResult:
    pair = FieldPair.bubble_with_itself(params)
    worst = 0.0
    for delta in (3.0, 6.0):
        rep = dilation_identity_residual(pair, HalfBallDomain(np.zeros(params.N), delta), None, np.zeros(params.N), quad)
        worst = max(worst, rep.rel_residual)
    return CheckResult(10, "pohozaev_dilation", worst <= rtol, worst, rtol, "delta 3 and 6; residual over largest term")


def check_gradient_consistency(params: SpectralParams, quad: QuadratureSpec = DEFAULT_QUAD, k: int = 32,
                               points: int = 10, band: float = 0.1) -> CheckResult:
    """Centred differences of the k-normalized energy excess in Lambda
    against :func:`grad_lambda`; the error must drop by about four when the
    step halves."""
    C = _constants(params, k=k, quad=quad)
    box = parameter_box(params, C, k)
    rng = np.random.default_rng(SAMPLE_SEED)
    c, w = box.center, box.half_widths
    scale = C.mu ** C.m / k
    ratios = []
    for _ in range(points):
        u = rng.uniform(-1, 1, 3)
        pt = ReducedPoint(c[0] + u[0] * w[0], c[1] + u[1] * w[1], c[2] + u[2] * w[2], k, float(u[0] * w[0]))
        g = grad_lambda(pt, C, params) * scale
        errs = []
        for step in (0.05 * w[2], 0.025 * w[2]):
            up = landscape(ReducedPoint(pt.r, pt.h, pt.lam + step, k, pt.r_offset), C, params)
            dn = landscape(ReducedPoint(pt.r, pt.h, pt.lam - step, k, pt.r_offset), C, params)
            errs.append(abs((up - dn) / (2 * step) - g))
        ratios.append(errs[0] / errs[1])
    worst = max(abs(r / 4 - 1) for r in ratios)
    return CheckResult(11, "gradient_consistency", worst <= band, worst, band,
                       "error ratios " + " ".join(f"{r:.4f}" for r in ratios))


def check_determinism(params: SpectralParams, quad: QuadratureSpec = DEFAULT_QUAD) -> CheckResult:
    """Render a constants table twice with cold caches and compare bytes."""
    from . import bubble, interactions

    outputs = []
    for _ in range(2):
        bubble._moments_cached.cache_clear()
        interactions._pairwise_cached.cache_clear()
        C = _constants(params, quad=quad)
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        for name, value, prov in C.rows():
            w.writerow([name, repr(float(value)), prov])
        outputs.append(buf.getvalue().encode())
    same = outputs[0] == outputs[1]
    return CheckResult(12, "determinism", same, 0.0 if same else 1.0, 0.0, "constants table rendered twice")


CHECKS = (
    (1, check_bubble_identity),
    (2, check_kernel_identity),
    (3, check_interaction_constant),
    (4, check_same_circle_sum),
    (5, check_cross_circle_sum),
    (6, lambda params, quad=DEFAULT_QUAD: check_d1()),
    (7, check_critical_equations),
    (8, check_boundary_signs),
    (9, check_translation_identity),
    (10, check_dilation_identity),
    (11, check_gradient_consistency),
    (12, check_determinism),
)

NAMES = {1: "bubble_pde_identity", 2: "linearized_kernel_identity", 3: "interaction_constant",
         4: "same_circle_sum_rate", 5: "cross_circle_sum_limit", 6: "d1_closed_form", 7: "critical_equations",
         8: "boundary_signs", 9: "pohozaev_translation", 10: "pohozaev_dilation", 11: "gradient_consistency",
         12: "determinism"}


def run_check(criterion: int, params: SpectralParams, quad: QuadratureSpec = DEFAULT_QUAD) -> CheckResult:
    fn = dict(CHECKS)[criterion]
    if criterion in (4, 5):
        return fn(params)
    try:
        return fn(params, quad=quad)
    except NumericError as exc:
        return CheckResult(criterion, NAMES[criterion], False, math.nan, math.nan, f"numeric failure: {exc}")


def run_checks(params: SpectralParams, quad: QuadratureSpec = DEFAULT_QUAD, criteria=None) -> list:
    """Evaluate the selected checks in criterion order."""
    selected = sorted(criteria) if criteria else [c for c, _ in CHECKS]
    return [run_check(c, params, quad) for c in selected]


def results_to_csv(results) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["criterion", "name", "passed", "metric", "threshold", "detail"])
    for r in results:
        w.writerow([r.criterion, r.name, "pass" if r.passed else "FAIL", _fmt(r.metric), _fmt(r.threshold), r.detail])
    return buf.getvalue()
