"""The 2k-point configuration on two parallel circles of a sphere, its
parameter box and its symmetry group."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
import math

import numpy as np

from ._common import DomainError, ParameterError
from .bubble import SpectralParams


def default_m(params: SpectralParams) -> float:
    """Midpoint ``3(N - 2s)/4`` of the admissible flatness interval."""
    return 0.75 * params.tau


def mu_of_k(params: SpectralParams, k: int, m: float | None = None) -> float:
    """Scaling ``mu = k^((N - 2s)/(N - 2s - m))``."""
    m = default_m(params) if m is None else m
    tau = params.tau
    if not (tau / 2 < m < tau):
        raise ParameterError(f"m must lie in ({tau / 2:g}, {tau:g}), got {m!r}")
    return float(k) ** (tau / (tau - m))


@dataclass(frozen=True)
class CylinderConfig:
    """Two circles of ``k`` points each at heights ``+r h`` and ``-r h``.

    Points are stored as ``(k, N)`` arrays; the j-th upper point sits at
    azimuth ``2 pi j / k`` (0-based) on the circle of radius ``r sqrt(1-h^2)``.
    """

    N: int
    k: int
    r: float
    h: float
    lam: float
    mu: float
    upper_points: np.ndarray
    lower_points: np.ndarray

    @property
    def points(self) -> np.ndarray:
        return np.vstack([self.upper_points, self.lower_points])

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["circle", "index"] + [f"y{i + 1}" for i in range(self.N)])
        for tag, pts in (("upper", self.upper_points), ("lower", self.lower_points)):
            for j, p in enumerate(pts, start=1):
                w.writerow([tag, j] + [repr(float(v)) for v in p])
        return buf.getvalue()


def build_cylinder_config(params: SpectralParams, k: int, r: float, h: float, lam: float = 1.0,
                          m: float | None = None) -> CylinderConfig:
    """Construct the configuration; ``h = 0`` is allowed as a degenerate limit."""
    if int(k) != k or k < 1:
        raise ParameterError(f"k must be a positive integer, got {k!r}")
    if not r > 0:
        raise ParameterError(f"r must be positive, got {r!r}")
    if not lam > 0:
        raise ParameterError(f"lambda must be positive, got {lam!r}")
    if not (0.0 <= h < 1.0):
        raise DomainError(f"h must lie in [0, 1), got {h!r}")
    k = int(k)
    N = params.N
    ang = 2.0 * math.pi * np.arange(k) / k
    rad = r * math.sqrt(1.0 - h * h)
    up = np.zeros((k, N))
    up[:, 0] = rad * np.cos(ang)
    up[:, 1] = rad * np.sin(ang)
    up[:, 2] = r * h
    lo = up.copy()
    lo[:, 2] = -r * h
    up.setflags(write=False)
    lo.setflags(write=False)
    return CylinderConfig(N, k, float(r), float(h), float(lam), mu_of_k(params, max(k, 2), m) if k >= 2 else 1.0, up, lo)


def _check_j(cfg, j, lo):
    if int(j) != j or not (lo <= j <= cfg.k):
        raise DomainError(f"index j must lie in {lo}..{cfg.k}, got {j!r}")


def same_circle_distance(cfg: CylinderConfig, j: int) -> float:
    """Distance between the first and the j-th point (1-based) of one circle."""
    _check_j(cfg, j, 2)
    return 2.0 * cfg.r * math.sqrt(1.0 - cfg.h ** 2) * math.sin((j - 1) * math.pi / cfg.k)


def cross_circle_distance(cfg: CylinderConfig, j: int) -> float:
    """Distance between the first upper point and the j-th lower point."""
    _check_j(cfg, j, 1)
    return 2.0 * cfg.r * math.sqrt((1.0 - cfg.h ** 2) * math.sin((j - 1) * math.pi / cfg.k) ** 2 + cfg.h ** 2)


def symmetry_generators(cfg: CylinderConfig):
    """Orthogonal maps generating the symmetry class of the configuration.

    The list contains the rotation by ``2 pi / k`` in the first two
    coordinates, the reflections ``y_2 -> -y_2`` and ``y_3 -> -y_3``, and the
    sign flips of coordinates 4..N.
    """
    N = cfg.N
    gens = []
    c, s = math.cos(2 * math.pi / cfg.k), math.sin(2 * math.pi / cfg.k)
    rot = np.eye(N)
    rot[:2, :2] = [[c, -s], [s, c]]
    gens.append(rot)
    for axis in [1, 2] + list(range(3, N)):
        g = np.eye(N)
        g[axis, axis] = -1.0
        gens.append(g)
    return gens


def orbit(cfg: CylinderConfig, y) -> np.ndarray:
    """All images of ``y`` under the group generated by :func:`symmetry_generators`."""
    gens = symmetry_generators(cfg)
    pts = [np.asarray(y, dtype=float)]
    seen = {tuple(np.round(pts[0], 12))}
    frontier = list(pts)
    while frontier:
        nxt = []
        for p in frontier:
            for g in gens:
                q = g @ p
                key = tuple(np.round(q, 12))
                if key not in seen:
                    seen.add(key)
                    pts.append(q)
                    nxt.append(q)
        frontier = nxt
    return np.array(pts)


def symmetry_residual(cfg: CylinderConfig, field_samples: dict, atol: float = 1e-9) -> float:
    """Largest spread of sampled values over symmetry orbits.

    ``field_samples`` maps point tuples to values.  Every generator image of
    every sampled point must itself be sampled (matched within ``atol``).
    """
    if not field_samples:
        return 0.0
    keys = [np.asarray(p, dtype=float) for p in field_samples]
    vals = np.array(list(field_samples.values()), dtype=float)
    pts = np.array(keys)

    def lookup(q):
        d = np.max(np.abs(pts - q), axis=1)
        i = int(np.argmin(d))
        if d[i] > atol:
            raise DomainError(f"orbit image {tuple(q)} missing from samples")
        return i

    worst = 0.0
    for i, p in enumerate(pts):
        for g in symmetry_generators(cfg):
            j = lookup(g @ p)
            worst = max(worst, abs(vals[i] - vals[j]))
    return float(worst)


@dataclass(frozen=True)
class ParameterBox:
    """Box around ``(r0 mu, h0, Lambda0)`` with half-widths ``mu^-theta``,
    ``mu^-theta`` and ``mu^(-3 theta / 2)``."""

    r_lo: float
    r_hi: float
    h_lo: float
    h_hi: float
    lam_lo: float
    lam_hi: float
    theta_box: float

    @classmethod
    def around(cls, mu, r0, h0, lam0, theta_box=0.1):
        if not theta_box > 0:
            raise ParameterError("theta_box must be positive")
        w = mu ** (-theta_box)
        wl = mu ** (-1.5 * theta_box)
        return cls(r0 * mu - w, r0 * mu + w, h0 - w, h0 + w, lam0 - wl, lam0 + wl, theta_box)

    @property
    def center(self):
        return (0.5 * (self.r_lo + self.r_hi), 0.5 * (self.h_lo + self.h_hi), 0.5 * (self.lam_lo + self.lam_hi))

    @property
    def half_widths(self):
        return (0.5 * (self.r_hi - self.r_lo), 0.5 * (self.h_hi - self.h_lo), 0.5 * (self.lam_hi - self.lam_lo))

    def contains(self, r, h, lam, strict=False) -> bool:
        if strict:
            return self.r_lo < r < self.r_hi and self.h_lo < h < self.h_hi and self.lam_lo < lam < self.lam_hi
        return self.r_lo <= r <= self.r_hi and self.h_lo <= h <= self.h_hi and self.lam_lo <= lam <= self.lam_hi

    def project(self, r, h, lam):
        return (min(max(r, self.r_lo), self.r_hi), min(max(h, self.h_lo), self.h_hi),
                min(max(lam, self.lam_lo), self.lam_hi))
