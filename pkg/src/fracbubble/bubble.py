"""Bubble profiles, their linearization kernels and their degenerate-harmonic
extensions to the upper half-space.

The bubble centred at ``x`` with scale ``lam`` is

    U(y) = c * (lam / (1 + lam^2 |y - x|^2)) ** ((N - 2s) / 2),

the positive solution of ``(-Delta)^s U = U^(p - 1)`` with ``p = 2N/(N - 2s)``.
Its extension ``U~(y, t)`` is the convolution with the Poisson-type kernel
``beta * t^(2s) / (|z|^2 + t^2)^((N + 2s)/2)``; the weighted normal derivative
``-t^(1-2s) d_t U~`` tends to ``d_s * (-Delta)^s U`` as ``t -> 0`` with the
Dirichlet-to-Neumann constant ``d_s = 2^(1-2s) Gamma(1-s) / Gamma(s)``.

All inputs handled here are radial profiles (or coordinate derivatives of
radial profiles), which reduces every N-dimensional convolution to a 2-D
integral over the distance from the evaluation point and the angle to the
profile centre.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property, lru_cache
import math

import numpy as np
from scipy import special

from ._common import (
    DomainError,
    NumericError,
    ParameterError,
    QuadratureSpec,
    ResidualReport,
    composite_rule,
    sphere_area,
)

DEFAULT_QUAD = QuadratureSpec()


@dataclass(frozen=True)
class SpectralParams:
    """Dimension ``N`` and fractional order ``s`` with derived constants.

    Raises :class:`ParameterError` unless ``N >= 3`` and ``0 < s < 1``, with
    the stronger restriction ``s < 1/2`` when ``N = 3``.
    """

    N: int
    s: float

    def __post_init__(self):
        if int(self.N) != self.N or self.N < 3:
            raise ParameterError(f"dimension must be an integer >= 3, got {self.N!r}")
        if not (0.0 < self.s < 1.0):
            raise ParameterError(f"order s must lie in (0, 1), got {self.s!r}")
        if self.N == 3 and not self.s < 0.5:
            raise ParameterError(f"for N = 3 the order s must lie in (0, 1/2), got {self.s!r}")
        object.__setattr__(self, "N", int(self.N))
        object.__setattr__(self, "s", float(self.s))

    @property
    def tau(self) -> float:
        """The decay exponent ``N - 2s`` of the bubble."""
        return self.N - 2.0 * self.s

    @property
    def p_crit(self) -> float:
        return 2.0 * self.N / (self.N - 2.0 * self.s)

    @cached_property
    def gamma(self) -> float:
        return math.exp(math.lgamma((self.N + 2 * self.s) / 2) - math.lgamma((self.N - 2 * self.s) / 2))

    @cached_property
    def c_norm(self) -> float:
        """Peak value of the unit bubble, ``(4^s gamma)^((N-2s)/(4s))``."""
        return (4.0 ** self.s * self.gamma) ** (self.tau / (4.0 * self.s))

    @cached_property
    def beta_ext(self) -> float:
        """Normalizer of the extension kernel (unit mass on each slice)."""
        return math.exp(math.lgamma((self.N + 2 * self.s) / 2) - math.lgamma(self.s)) / math.pi ** (self.N / 2)

    @cached_property
    def dtn_const(self) -> float:
        """Dirichlet-to-Neumann constant ``2^(1-2s) Gamma(1-s) / Gamma(s)``."""
        return 2.0 ** (1 - 2 * self.s) * math.gamma(1 - self.s) / math.gamma(self.s)


@dataclass(frozen=True)
class BubbleSpec:
    """Centre and scale of a bubble."""

    center: tuple = None
    lam: float = 1.0

    def __post_init__(self):
        if not (self.lam > 0 and math.isfinite(self.lam)):
            raise ParameterError(f"bubble scale must be positive, got {self.lam!r}")
        if self.center is not None:
            object.__setattr__(self, "center", tuple(float(c) for c in self.center))

    def center_array(self, N: int) -> np.ndarray:
        if self.center is None:
            return np.zeros(N)
        if len(self.center) != N:
            raise ParameterError(f"bubble centre has dimension {len(self.center)}, expected {N}")
        return np.asarray(self.center, dtype=float)


@dataclass(frozen=True)
class KernelIndex:
    """Selects ``Z_0`` (scale derivative) or ``Z_i`` (derivative in ``y_i``)."""

    index: int


# ---------------------------------------------------------------------------
# radial profiles of the form  sum_k A_k (1 + lam2 * q)^(-e_k),  q = |y|^2


@dataclass(frozen=True)
class PowerProfile:
    """Radial profile ``f(r) = sum_k A_k (1 + lam2 r^2)^(-e_k)``.

    Evaluation is in terms of ``q = r^2``; ``d1`` and ``d2`` are derivatives
    with respect to ``q``.
    """

    terms: tuple
    lam2: float = 1.0

    def __call__(self, q):
        q = np.asarray(q, dtype=float)
        base = 1.0 + self.lam2 * q
        return sum(a * base ** (-e) for a, e in self.terms)

    def d1(self, q):
        base = 1.0 + np.asarray(q, dtype=float) * self.lam2
        return sum(-e * a * self.lam2 * base ** (-e - 1) for a, e in self.terms)

    def d2(self, q):
        base = 1.0 + np.asarray(q, dtype=float) * self.lam2
        return sum(e * (e + 1) * a * self.lam2 ** 2 * base ** (-e - 2) for a, e in self.terms)

    @property
    def width(self) -> float:
        return 1.0 / math.sqrt(self.lam2)


def bubble_profile(params: SpectralParams, lam: float = 1.0) -> PowerProfile:
    e = params.tau / 2
    return PowerProfile(((params.c_norm * lam ** e, e),), lam * lam)


def scale_kernel_profile(params: SpectralParams, lam: float = 1.0) -> PowerProfile:
    """Profile of the derivative of the bubble with respect to its scale."""
    e = params.tau / 2
    a = params.c_norm * e * lam ** (e - 1)
    return PowerProfile(((2 * a, e + 1), (-a, e)), lam * lam)


# ---------------------------------------------------------------------------
# fields: objects that know their trace values and their extensions


@dataclass(frozen=True)
class ExtensionSample:
    """Extension data at one point ``(y, t)``.

    ``grad_y`` is the gradient in the flat variables and ``wdt`` is the
    weighted vertical derivative ``t^(1-2s) d_t``.
    """

    value: float
    grad_y: np.ndarray
    wdt: float
    t: float
    s: float

    @property
    def dt(self) -> float:
        return self.wdt * self.t ** (2 * self.s - 1)


class RadialField:
    """A radial profile placed at ``center``."""

    def __init__(self, params: SpectralParams, profile: PowerProfile, center=None):
        self.params = params
        self.profile = profile
        self.center = np.zeros(params.N) if center is None else np.asarray(center, dtype=float)

    def values(self, y):
        d = np.atleast_2d(y) - self.center
        return self.profile(np.einsum("ij,ij->i", d, d))

    def _geometry(self, y):
        d = np.asarray(y, dtype=float) - self.center
        a = float(np.linalg.norm(d))
        e = d / a if a > 0 else np.zeros_like(d)
        return a, e

    def extension(self, y, t, quad=DEFAULT_QUAD) -> ExtensionSample:
        a, e = self._geometry(y)
        m = radial_extension_moments(self.params, self.profile, a, t, quad)
        return ExtensionSample(m[0], m[1] * e, m[3], t, self.params.s)

    def weighted_dt_ladder(self, y, quad):
        a, _ = self._geometry(y)
        return np.array([radial_extension_moments(self.params, self.profile, a, t, quad)[3]
                         for t in trace_ladder(quad)])

    def _batch_moments(self, Y, T, quad):
        d = np.atleast_2d(np.asarray(Y, dtype=float)) - self.center
        a = np.sqrt(np.einsum("ij,ij->i", d, d))
        with np.errstate(invalid="ignore", divide="ignore"):
            e = np.where(a[:, None] > 0, d / a[:, None], 0.0)
        return a, e, _unique_moments(self.params, self.profile, a, np.asarray(T, dtype=float), quad)

    def extension_batch(self, Y, T, quad=DEFAULT_QUAD):
        """Vectorized :meth:`extension`: ``(value, grad_y, wdt)`` arrays."""
        _, e, m = self._batch_moments(Y, T, quad)
        return m[:, 0], m[:, 1, None] * e, m[:, 3]


class PartialField:
    """The derivative ``d/dy_i`` of a :class:`RadialField` (axis is 0-based)."""

    def __init__(self, base: RadialField, axis: int):
        self.base = base
        self.params = base.params
        self.axis = int(axis)

    def values(self, y):
        d = np.atleast_2d(y) - self.base.center
        q = np.einsum("ij,ij->i", d, d)
        return 2.0 * self.base.profile.d1(q) * d[:, self.axis]

    def extension(self, y, t, quad=DEFAULT_QUAD) -> ExtensionSample:
        a, e = self.base._geometry(y)
        m = radial_extension_moments(self.params, self.base.profile, a, t, quad)
        i = self.axis
        if a > 1e-9 * self.base.profile.width:
            row = m[2] * e[i] * e - (m[1] / a) * e[i] * e
            row[i] += m[1] / a
        else:
            row = np.zeros(self.params.N)
            row[i] = m[2]
        return ExtensionSample(m[1] * e[i], row, m[4] * e[i], t, self.params.s)

    def weighted_dt_ladder(self, y, quad):
        a, e = self.base._geometry(y)
        return np.array([radial_extension_moments(self.params, self.base.profile, a, t, quad)[4]
                         for t in trace_ladder(quad)]) * e[self.axis]

    def extension_batch(self, Y, T, quad=DEFAULT_QUAD):
        a, e, m = self.base._batch_moments(Y, T, quad)
        i = self.axis
        ei = e[:, i]
        small = a <= 1e-9 * self.base.profile.width
        over_a = np.where(small, 0.0, m[:, 1] / np.where(small, 1.0, a))
        grad = (m[:, 2] - over_a)[:, None] * ei[:, None] * e
        grad[:, i] += np.where(small, m[:, 2], over_a)
        return m[:, 1] * ei, grad, m[:, 4] * ei


class ZeroField:
    def __init__(self, params: SpectralParams):
        self.params = params

    def values(self, y):
        return np.zeros(len(np.atleast_2d(y)))

    def extension(self, y, t, quad=DEFAULT_QUAD) -> ExtensionSample:
        return ExtensionSample(0.0, np.zeros(self.params.N), 0.0, t, self.params.s)

    def weighted_dt_ladder(self, y, quad):
        return np.zeros(quad.levels)

    def extension_batch(self, Y, T, quad=DEFAULT_QUAD):
        n = len(np.atleast_2d(Y))
        return np.zeros(n), np.zeros((n, self.params.N)), np.zeros(n)


def as_field(params: SpectralParams, obj, bubble: BubbleSpec | None = None):
    """Coerce a bubble spec, kernel index or field object into a field.

    Kernel indices refer to the bubble ``bubble`` (the unit bubble at the
    origin when omitted).
    """
    if obj is None:
        return ZeroField(params)
    if isinstance(obj, BubbleSpec):
        return RadialField(params, bubble_profile(params, obj.lam), obj.center_array(params.N))
    if isinstance(obj, KernelIndex):
        _check_kernel_index(params, obj)
        b = bubble or BubbleSpec()
        if obj.index == 0:
            return RadialField(params, scale_kernel_profile(params, b.lam), b.center_array(params.N))
        return PartialField(as_field(params, b), obj.index - 1)
    if hasattr(obj, "extension") and hasattr(obj, "values"):
        return obj
    raise TypeError(f"cannot interpret {obj!r} as a field")


def _check_kernel_index(params, which):
    if int(which.index) != which.index or not (0 <= which.index <= params.N):
        raise DomainError(f"kernel index must lie in 0..{params.N}, got {which.index!r}")


# ---------------------------------------------------------------------------
# closed-form evaluations


def _point(params, y):
    y = np.asarray(y, dtype=float).reshape(-1)
    if y.shape[0] != params.N:
        raise ParameterError(f"point has dimension {y.shape[0]}, expected {params.N}")
    return y


def bubble_value(params: SpectralParams, spec: BubbleSpec, y) -> float:
    """Closed-form bubble value at ``y``."""
    y = _point(params, y)
    d = y - spec.center_array(params.N)
    return float(params.c_norm * (spec.lam / (1.0 + spec.lam ** 2 * d @ d)) ** (params.tau / 2))


def bubble_nonlinear_image(params: SpectralParams, spec: BubbleSpec, y) -> float:
    """``U^(p-1)``, which is the fractional Laplacian of the bubble."""
    return bubble_value(params, spec, y) ** (params.p_crit - 1.0)


def kernel_value(params: SpectralParams, which: KernelIndex, y, spec: BubbleSpec | None = None) -> float:
    """Closed-form kernel ``Z_0`` (index 0) or ``Z_i`` (index i) at ``y``."""
    _check_kernel_index(params, which)
    y = _point(params, y)
    return float(as_field(params, which, spec).values(y[None, :])[0])


def linearized_image(params: SpectralParams, which: KernelIndex, y, spec: BubbleSpec | None = None) -> float:
    """``(p - 1) U^(p-2) Z``, the fractional Laplacian of a kernel."""
    spec = spec or BubbleSpec()
    u = bubble_value(params, spec, y)
    return (params.p_crit - 1.0) * u ** (params.p_crit - 2.0) * kernel_value(params, which, y, spec)


# ---------------------------------------------------------------------------
# extension quadrature


def extension_kernel(params: SpectralParams, rho, t):
    """Extension kernel ``beta t^(2s) (rho^2 + t^2)^(-(N+2s)/2)``."""
    rho = np.asarray(rho, dtype=float)
    return params.beta_ext * t ** (2 * params.s) * (rho * rho + t * t) ** (-(params.N + 2 * params.s) / 2)


def _weighted_dt_kernel(params, rho, t):
    N, s = params.N, params.s
    r2 = rho * rho
    return params.beta_ext * (2 * s * r2 - N * t * t) * (r2 + t * t) ** (-(N + 2 * s + 2) / 2)


def _tail_masses(params, R, t):
    """Kernel mass outside radius R and its weighted t-derivative."""
    N, s = params.N, params.s
    w0 = t * t / (t * t + R * R)
    mass = special.betainc(s, N / 2, w0)
    dens = math.exp((s - 1) * math.log(w0) + (N / 2 - 1) * math.log1p(-w0) - special.betaln(s, N / 2))
    wdmass = t ** (1 - 2 * s) * dens * 2 * t * R * R / (t * t + R * R) ** 2
    return mass, wdmass


def _radial_edges(a, t, width, R):
    pts = {0.0, R}
    x = t / 8
    while x < R:
        pts.add(x)
        x *= 2
    c = 0.125
    while c * width < max(a, width):
        for sgn in (-1, 1):
            v = a + sgn * c * width
            if 0 < v < R:
                pts.add(v)
        c *= 2
    if 0 < a < R:
        pts.add(a)
    edges = sorted(pts)
    # keep neighbouring edges within a factor two of each other away from 0
    out = [edges[0]]
    for hi in edges[1:]:
        lo = out[-1]
        while lo > 0 and hi / lo > 2.0:
            lo *= 2.0
            out.append(lo)
        if hi > out[-1]:
            out.append(hi)
    return np.array(out)


def _angular_rule(a, width, N, order):
    """Polar-angle rule graded toward the angle where |y + z| is smallest."""
    depth = 3
    if a > 0:
        depth = max(3, int(math.ceil(math.log2(max(math.pi * a / width, 1.0)))) + 4)
    edges = [math.pi * (1 - 2.0 ** (-j)) for j in range(depth + 1)] + [math.pi]
    phi, w = composite_rule(edges, order)
    return np.cos(phi), w * np.sin(phi) ** (N - 2)


def _bisect(edges, levels):
    for _ in range(levels):
        mid = 0.5 * (edges[:-1] + edges[1:])
        edges = np.insert(edges, np.arange(1, len(edges)), mid)
    return edges


def _moment_pass(params, prof, a, t, R, redges, cphi, wphi, order):
    """One evaluation of the five convolution moments on a fixed mesh."""
    N = params.N
    area = sphere_area(N - 1)
    F0 = float(prof(a * a))
    G1_0 = 2.0 * float(prof.d1(a * a)) * a
    G2_0 = 2.0 * float(prof.d1(a * a)) + 4.0 * float(prof.d2(a * a)) * a * a

    def inner(rho, subtract):
        x2 = a * a + rho[:, None] ** 2 + 2 * a * rho[:, None] * cphi[None, :]
        proj = a + rho[:, None] * cphi[None, :]
        f1 = prof.d1(x2)
        g0 = prof(x2)
        g1 = 2.0 * f1 * proj
        g2 = 2.0 * f1 + 4.0 * prof.d2(x2) * proj * proj
        if subtract:
            g0, g1, g2 = g0 - F0, g1 - G1_0, g2 - G2_0
        return np.stack([g0 @ wphi, g1 @ wphi, g2 @ wphi])

    rho, wr = composite_rule(redges, order)
    mom = inner(rho, True)
    meas = area * wr * rho ** (N - 1)
    kp = extension_kernel(params, rho, t) * meas
    kd = _weighted_dt_kernel(params, rho, t) * meas
    near = np.array([mom[0] @ kp, mom[1] @ kp, mom[2] @ kp, mom[0] @ kd, mom[1] @ kd])

    # far field: rho = R / u with u in (0, 1]
    u, wu = composite_rule(np.array([0.0, 1 / 32, 1 / 16, 1 / 8, 1 / 4, 1 / 2, 1.0]), order)
    rho_f = R / u
    momf = inner(rho_f, False)
    measf = area * wu * R / u ** 2 * rho_f ** (N - 1)
    kpf = extension_kernel(params, rho_f, t) * measf
    kdf = _weighted_dt_kernel(params, rho_f, t) * measf
    far = np.array([momf[0] @ kpf, momf[1] @ kpf, momf[2] @ kpf, momf[0] @ kdf, momf[1] @ kdf])

    mass, wdmass = _tail_masses(params, R, t)
    base = np.array([F0 * (1 - mass), G1_0 * (1 - mass), G2_0 * (1 - mass), -F0 * wdmass, -G1_0 * wdmass])
    return base + near + far


@lru_cache(maxsize=200_000)
def _moments_cached(params, prof, a, t, quad):
    width = prof.width
    R = 16.0 * (a + width + t)
    redges = _radial_edges(a, t, width, R)
    cphi, wphi = _angular_rule(a, width, params.N, quad.order)
    prev = _moment_pass(params, prof, a, t, R, redges, cphi, wphi, quad.order)
    floor = 1e-300
    err = np.inf
    for level in range(1, quad.max_refine + 1):
        cur = _moment_pass(params, prof, a, t, R, _bisect(redges, level), cphi, wphi, quad.order)
        err = np.abs(cur - prev)
        scale = np.maximum(np.abs(cur), floor)
        prev = cur
        if np.all(err <= quad.tol * scale + 1e-15 * abs(prof(0.0))):
            return cur
    raise NumericError(
        f"extension quadrature did not reach tolerance {quad.tol:g} at a={a:g}, t={t:g}",
        estimate=prev, error_bound=err)


def radial_extension_moments(params: SpectralParams, prof: PowerProfile, a: float, t: float,
                             quad: QuadratureSpec = DEFAULT_QUAD) -> np.ndarray:
    """Extension data of a radial profile at distance ``a`` and height ``t``.

    Returns ``[V, V_a, V_aa, t^(1-2s) V_t, t^(1-2s) V_at]`` where ``V(a, t)``
    is the extension as a function of the distance to the profile centre.
    """
    if not t > 0:
        raise DomainError(f"extension height must be positive, got {t!r}")
    return _moments_cached(params, prof, float(a), float(t), quad).copy()


def _unique_moments(params, prof, a, t, quad):
    """Moments at many ``(a, t)`` pairs, computing each distinct pair once.

    Distances that agree to twelve significant digits share a node; the
    resulting perturbation is far below the quadrature tolerance.
    """
    if np.any(t <= 0):
        raise DomainError("extension height must be positive")
    key = np.stack([np.round(a, 12), t], axis=1)
    uniq, inv = np.unique(key, axis=0, return_inverse=True)
    table = np.array([_moments_cached(params, prof, float(ua), float(ut), quad) for ua, ut in uniq])
    return table[np.ravel(inv)]


def extension_value(params: SpectralParams, spec, y, t: float, quad: QuadratureSpec = DEFAULT_QUAD) -> float:
    """Extension of a bubble (or kernel/field) at ``(y, t)``."""
    y = _point(params, y)
    return float(as_field(params, spec).extension(y, float(t), quad).value)


def trace_ladder(quad: QuadratureSpec) -> np.ndarray:
    return quad.t0 * 2.0 ** (-np.arange(quad.levels))


def _richardson_exponents(s, count):
    exps = sorted({2 * n - 2 * s for n in range(1, count + 1)} | {2 * n for n in range(1, count + 1)})
    return exps[:count]


def richardson_limit(values, s: float):
    """Extrapolate ``g(t_j)`` on a halving ladder to ``t = 0``.

    ``g`` is assumed to expand in powers ``t^(2n - 2s)`` and ``t^(2n)``.
    Returns the limit and the size of the last correction.
    """
    vals = np.asarray(values, dtype=float)
    n = len(vals)
    exps = _richardson_exponents(s, n - 1)
    table = [vals.copy()]
    for k, e in enumerate(exps, start=1):
        prev = table[-1]
        fac = 2.0 ** e
        table.append((fac * prev[1:] - prev[:-1]) / (fac - 1.0))
    best = table[-1][-1]
    err = abs(best - table[-2][-1])
    return float(best), float(err)


def extension_trace_derivative(params: SpectralParams, spec, y, quad: QuadratureSpec = DEFAULT_QUAD) -> float:
    """``-lim t^(1-2s) d_t U~(y, t) / d_s``, which equals ``(-Delta)^s`` of the input.

    The limit is Richardson-extrapolated from the ladder ``t0 * 2^-j``.
    """
    y = _point(params, y)
    field = as_field(params, spec)
    ladder = field.weighted_dt_ladder(y, quad)
    limit, err = richardson_limit(ladder, params.s)
    scale = max(np.max(np.abs(ladder)), 1e-300)
    if not np.isfinite(limit) or err > 1e-2 * scale:
        raise NumericError("trace extrapolation diverged", estimate=-limit / params.dtn_const,
                           error_bound=err / params.dtn_const)
    return -limit / params.dtn_const


def hemisphere_samples(params: SpectralParams, center, delta: float, n: int = 16):
    """Deterministic points ``(y, t)`` with ``|y - center|^2 + t^2 = delta^2``.

    Points spread over polar heights and azimuths in the first two
    coordinate directions.
    """
    center = np.asarray(center, dtype=float)
    out = []
    n_psi = max(2, int(round(math.sqrt(n))))
    n_az = int(math.ceil(n / n_psi))
    for i in range(n_psi):
        psi = (i + 0.5) / n_psi * (math.pi / 2)
        for j in range(n_az):
            if len(out) == n:
                break
            az = 2 * math.pi * j / n_az
            y = center.copy()
            y[0] += delta * math.cos(psi) * math.cos(az)
            y[1] += delta * math.cos(psi) * math.sin(az)
            out.append((y, delta * math.sin(psi)))
    return out


def extension_gradient_bound_check(params: SpectralParams, spec, samples, quad: QuadratureSpec = DEFAULT_QUAD,
                                   bound: float | None = None, sphere_rtol: float = 1e-8) -> ResidualReport:
    """Largest value of ``|grad U~| (1 + |y - x|)^(N - 2s + 1)`` over samples.

    ``samples`` must lie on a common half-sphere about the bubble centre.
    When ``bound`` is given the report passes if the largest value does not
    exceed it.
    """
    field = as_field(params, spec)
    center = spec.center_array(params.N) if isinstance(spec, BubbleSpec) else np.zeros(params.N)
    radii = [math.sqrt(float(np.sum((np.asarray(y) - center) ** 2)) + t * t) for y, t in samples]
    if not samples:
        raise DomainError("no samples given")
    delta = radii[0]
    if max(abs(r - delta) for r in radii) > sphere_rtol * max(delta, 1.0):
        raise DomainError("samples do not lie on a common half-sphere")
    ratios = []
    for y, t in samples:
        ext = field.extension(np.asarray(y, dtype=float), float(t), quad)
        g = math.sqrt(float(ext.grad_y @ ext.grad_y) + ext.dt ** 2)
        dist = float(np.linalg.norm(np.asarray(y) - center))
        ratios.append(g * (1 + dist) ** (params.tau + 1))
    worst = max(ratios)
    passed = None if bound is None else bool(worst <= bound)
    return ResidualReport("extension_gradient_bound", worst, bound if bound is not None else math.nan,
                          0.0, 0.0, worst, passed, details={"delta": delta, "ratios": ratios})
