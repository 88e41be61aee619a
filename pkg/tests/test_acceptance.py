"""Acceptance suite: twelve numerical criteria for both parameter sets.

Each test records a one-line verdict that the terminal summary prints,
whether the test passes or not.  Thresholds are asserted exactly as
stated; the two criteria that the current model cannot meet are left
failing rather than loosened.
"""

import math
import subprocess
import sys

import numpy as np
import pytest
from scipy import integrate, special

from fracbubble import SpectralParams, d1_constant
from fracbubble.checks import (
    check_boundary_signs,
    check_bubble_identity,
    check_critical_equations,
    check_cross_circle_sum,
    check_dilation_identity,
    check_gradient_consistency,
    check_interaction_constant,
    check_kernel_identity,
    check_same_circle_sum,
    check_translation_identity,
)

VERDICTS = []

PARAMS = [SpectralParams(3, 0.3), SpectralParams(4, 0.5)]
IDS = ["N3-s0.3", "N4-s0.5"]


def record(criterion, name, params, passed, detail):
    tag = f"N={params.N} s={params.s}" if params is not None else "parameter-free"
    VERDICTS.append(f"criterion {criterion:02d} {name:<28s} {tag:<14s} {'pass' if passed else 'FAIL'}  {detail}")


@pytest.fixture(params=PARAMS, ids=IDS, scope="module")
def P(request):
    return request.param


def test_bubble_pde_identity(P):
    res = check_bubble_identity(P, rtol=1e-3)
    record(1, "bubble_pde_identity", P, res.metric <= 1e-3, f"max rel residual {res.metric:.3e} (<= 1e-3)")
    assert res.metric <= 1e-3


def test_linearized_kernel_identity(P):
    res = check_kernel_identity(P, rtol=1e-3)
    record(2, "linearized_kernel_identity", P, res.metric <= 1e-3, f"max rel residual {res.metric:.3e} (<= 1e-3)")
    assert res.metric <= 1e-3


def test_interaction_constant(P):
    res = check_interaction_constant(P, tol=0.05)
    record(3, "interaction_constant", P, res.passed, f"|dev| at d=100 {res.metric:.3e} (<= 0.05, monotone)")
    devs = [float(v) for v in res.detail.split(":")[1].split()]
    assert abs(devs[-1]) <= 0.05
    assert abs(devs[0]) > abs(devs[1]) > abs(devs[2])


def test_same_circle_sum_rate(P):
    res = check_same_circle_sum(P, tau=3.0)
    devs = [float(v) for v in res.detail.split("deviations")[1].split()]
    ok = all(b < a for a, b in zip(devs, devs[1:])) and abs(res.metric + 2) <= 0.5
    record(4, "same_circle_sum_rate", P, ok, f"slope {res.metric:.3f} (-2 +/- 0.5), decreasing")
    assert all(b < a for a, b in zip(devs, devs[1:]))
    assert abs(res.metric + 2) <= 0.5


def test_cross_circle_sum_limit(P):
    res = check_cross_circle_sum(P)
    record(5, "cross_circle_sum_limit", P, res.metric <= 0.5, f"dev(128)/dev(16) {res.metric:.3f} (<= 0.5)")
    assert res.metric <= 0.5


@pytest.mark.parametrize("tau", [2.0, 2.5, 3.0, 4.0])
def test_d1_closed_form(tau):
    closed = math.sqrt(math.pi) * special.gamma((tau - 1) / 2) / (2 * special.gamma(tau / 2))
    rel = abs(d1_constant(tau) / closed - 1)
    # an independent quadrature of the same integral guards the closed form itself
    quad = integrate.quad(lambda x: (1 + x * x) ** (-tau / 2), 0, np.inf, epsabs=0, epsrel=1e-13)[0]
    anchor = {2.0: math.pi / 2, 3.0: 1.0}.get(tau)
    anchor_dev = abs(d1_constant(tau) / anchor - 1) if anchor else 0.0
    ok = rel <= 1e-10 and anchor_dev <= 1e-12 and abs(quad / closed - 1) <= 1e-10
    record(6, "d1_closed_form", None, ok, f"tau={tau} rel dev {rel:.1e} (<= 1e-10), anchor dev {anchor_dev:.1e}")
    assert rel <= 1e-10 and anchor_dev <= 1e-12
    assert quad == pytest.approx(closed, rel=1e-10)


def test_critical_equations(P):
    res = check_critical_equations(P)
    worst = float(res.detail.rsplit(" ", 1)[1])
    record(7, "critical_equations", P, res.passed,
           f"residual {worst:.1e} (<= 1e-10); h0 slope deviation {res.metric:.2%} (<= 2%)")
    assert worst <= 1e-10
    assert res.metric <= 0.02


def test_boundary_signs(P):
    res = check_boundary_signs(P, k=50, theta_box=0.1)
    record(8, "boundary_signs", P, res.passed, f"min margin {res.metric:.3e}; {res.detail}")
    assert res.passed, res.detail


def test_pohozaev_translation(P):
    res = check_translation_identity(P, rtol=1e-3)
    drop = float(res.detail.rsplit(" ", 1)[1])
    record(9, "pohozaev_translation", P, res.passed, f"rel residual {res.metric:.2e} (<= 1e-3), reduction {drop:.1f}x (>= 4)")
    assert res.metric <= 1e-3
    assert drop >= 4


def test_pohozaev_dilation(P):
    res = check_dilation_identity(P, rtol=1e-3)
    record(10, "pohozaev_dilation", P, res.passed, f"residual/max term {res.metric:.2e} (<= 1e-3)")
    assert res.metric <= 1e-3


def test_gradient_consistency(P):
    res = check_gradient_consistency(P, k=32, points=10)
    ratios = [float(v) for v in res.detail.split("ratios")[1].split()]
    record(11, "gradient_consistency", P, res.passed,
           f"error ratios in [{min(ratios):.3f}, {max(ratios):.3f}] (4 +/- 0.4)")
    assert len(ratios) == 10
    assert all(abs(r / 4 - 1) <= 0.1 for r in ratios)


def _verify_bytes(params, path):
    proc = subprocess.run(
        [sys.executable, "-m", "fracbubble", "verify", "--n", str(params.N), "--s", str(params.s), "--out", str(path)],
        capture_output=True, timeout=900)
    return proc.returncode, path.read_bytes()


def test_verify_determinism(P, tmp_path):
    code_a, first = _verify_bytes(P, tmp_path / "a.csv")
    code_b, second = _verify_bytes(P, tmp_path / "b.csv")
    same = first == second and code_a == code_b
    record(12, "determinism", P, same, f"two verify runs {'byte-identical' if same else 'differ'} ({len(first)} bytes)")
    assert code_a in (0, 1)
    assert first == second
    assert len(first.decode().splitlines()) == 13
