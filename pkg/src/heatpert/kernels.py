"""Gaussian transition densities g_a and their elementary properties.

``g_a(s, x, t, y) = [4 pi (t - s) / a]^(-d/2) exp(-a |y - x|^2 / (4 (t - s)))``
for ``s < t`` and zero otherwise. All evaluators broadcast over leading axes;
points carry the space coordinate on the last axis.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError
from .numerics import DEFAULT_QUAD, QuadConfig, RngStream, integrate_1d, normal_rule

LOG_4PI = math.log(4.0 * math.pi)


@dataclass(frozen=True)
class GaussianKernel:
    a: float
    d: int

    def __post_init__(self):
        if not self.a > 0:
            raise DomainError(f"kernel scale a must be positive, got {self.a!r}")
        if int(self.d) != self.d or self.d < 1:
            raise DomainError(f"dimension must be a positive integer, got {self.d!r}")

    def log(self, s, x, t, y):
        """Natural log of the kernel; ``-inf`` where ``s >= t``."""
        s = np.asarray(s, dtype=float)
        t = np.asarray(t, dtype=float)
        r2 = _sqdist(x, y, self.d)
        dt = t - s
        pos = dt > 0
        safe = np.where(pos, dt, 1.0)
        out = (-0.5 * self.d * (LOG_4PI + np.log(safe) - math.log(self.a))
               - self.a * r2 / (4.0 * safe))
        out = np.where(pos, out, -np.inf)
        return out[()] if out.ndim == 0 else out

    def __call__(self, s, x, t, y):
        # exp underflows to 0 below about -745, matching the analytic limit
        return np.exp(self.log(s, x, t, y))

    def to_dict(self) -> dict:
        return {"a": self.a, "d": self.d}


@dataclass(frozen=True)
class SpaceTimePoint:
    t: float
    x: tuple

    def __post_init__(self):
        object.__setattr__(self, "x", tuple(float(v) for v in np.atleast_1d(self.x)))


def _sqdist(x, y, d):
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if d == 1 and (x.ndim == 0 or x.shape[-1] != 1):
        x = x[..., None]
    if d == 1 and (y.ndim == 0 or y.shape[-1] != 1):
        y = y[..., None]
    if x.shape[-1] != d or y.shape[-1] != d:
        raise DomainError(f"points must have {d} coordinates")
    diff = y - x
    return np.einsum("...i,...i->...", diff, diff)


def gauss_eval(k: GaussianKernel, s, x, t, y):
    return k(s, x, t, y)


def _product_integral_1d(k, s, xi, u, t, yi, cfg):
    """One coordinate of the Chapman-Kolmogorov integral by adaptive quadrature."""
    k1 = GaussianKernel(k.a, 1)
    v1 = 2.0 * (u - s) / k.a
    v2 = 2.0 * (t - u) / k.a
    # The integrand is a Gaussian in z; integrate over +/- 40 standard deviations.
    m = (xi * v2 + yi * v1) / (v1 + v2)
    sd = math.sqrt(v1 * v2 / (v1 + v2))
    lo, hi = m - 40.0 * sd, m + 40.0 * sd

    def f(z):
        return k1(s, xi, u, z[..., None]) * k1(u, z[..., None], t, yi)

    return integrate_1d(f, lo, hi, cfg)


def ck_residual(k: GaussianKernel, s, u, t, x, y, cfg: QuadConfig | None = None) -> float:
    """``|∫ g(s,x,u,z) g(u,z,t,y) dz - g(s,x,t,y)|`` computed coordinate-wise."""
    cfg = cfg or DEFAULT_QUAD
    if not s < u < t:
        raise DomainError("ck_residual requires s < u < t")
    x = np.atleast_1d(np.asarray(x, dtype=float))
    y = np.atleast_1d(np.asarray(y, dtype=float))
    if x.shape != (k.d,) or y.shape != (k.d,):
        raise DomainError(f"x and y must have {k.d} coordinates")
    lhs = 1.0
    for i in range(k.d):
        val, _ = _product_integral_1d(k, s, x[i], u, t, y[i], cfg)
        lhs *= val
    return abs(lhs - float(k(s, x, t, y)))


def total_mass(k: GaussianKernel, s, x, t, cfg: QuadConfig | None = None,
               method: str = "quadrature") -> float:
    """``∫ g(s,x,t,y) dy`` by tensorized adaptive quadrature or Gauss-Hermite."""
    cfg = cfg or DEFAULT_QUAD
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if not s < t:
        return 0.0
    sd = math.sqrt(2.0 * (t - s) / k.a)
    k1 = GaussianKernel(k.a, 1)
    mass = 1.0
    for i in range(k.d):
        if method == "quadrature":
            val, _ = integrate_1d(lambda y: k1(s, x[i], t, y[..., None]),
                                  x[i] - 40 * sd, x[i] + 40 * sd, cfg)
        elif method == "hermite":
            z, w = normal_rule(cfg.hermite_order)
            ys = x[i] + sd * z
            dens = k1(s, x[i], t, ys[..., None])
            # divide out the standard normal weight built into the rule
            phi = np.exp(-0.5 * z * z) / math.sqrt(2 * math.pi)
            val = float(np.sum(w * dens * sd / phi))
        else:
            raise DomainError(f"unknown method {method!r}")
        mass *= val
    return mass


def scaling_bound_check(a: float, b: float, d: int, samples: int, rng: RngStream) -> float:
    """Largest sampled value of ``g_b - (b/a)^(d/2) g_a`` (should be <= 0)."""
    if not (0 < a <= b):
        raise DomainError("scaling check requires 0 < a <= b")
    gen = rng.generator()
    s = gen.uniform(-5.0, 5.0, samples)
    t = s + np.exp(gen.uniform(math.log(1e-3), math.log(10.0), samples))
    x = gen.normal(0.0, 2.0, (samples, d))
    y = x + gen.normal(0.0, 1.0, (samples, d)) * np.sqrt(t - s)[:, None]
    gb = GaussianKernel(b, d)(s, x, t, y)
    ga = GaussianKernel(a, d)(s, x, t, y)
    return float(np.max(gb - (b / a) ** (d / 2) * ga))


def three_g_failure(a: float, d: int, t: float, y) -> tuple[float, float]:
    """Return ``(direct, closed_form)`` for the 3G ratio at the given ``y``.

    ``direct`` evaluates the three kernels; ``closed_form`` is
    ``2^(d/2) exp(a |y|^2 / (4 t))``.
    """
    if not t > 0:
        raise DomainError("t must be positive")
    k = GaussianKernel(a, d)
    y = np.atleast_1d(np.asarray(y, dtype=float))
    o = np.zeros(d)
    num = min(float(k.log(0.0, o, t, y)), float(k.log(t, y, 2 * t, 2 * y)))
    den = float(k.log(0.0, o, 2 * t, 2 * y))
    direct = math.exp(num - den)
    closed = 2.0 ** (d / 2) * math.exp(a * float(y @ y) / (4.0 * t))
    return direct, closed


def three_g_radius(a: float, d: int, t: float, level: float) -> float:
    """Smallest ``|y|`` at which the 3G ratio reaches ``level``."""
    excess = math.log(level) - 0.5 * d * math.log(2.0)
    return math.sqrt(max(excess, 0.0) * 4.0 * t / a)
