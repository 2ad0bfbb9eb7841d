"""Shared numerical primitives.

Adaptive Gauss-Kronrod quadrature with endpoint substitutions, Gauss-Hermite
and Gauss-Legendre rules, a grid-plus-golden-section scalar maximizer, seeded
random streams and a few geometric constants.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable

import numpy as np
from numpy.polynomial.hermite import hermgauss
from numpy.polynomial.legendre import leggauss

from .errors import ConvergenceError, DomainError

# Kronrod 15-point extension of the 7-point Gauss rule (QUADPACK qk15 tables).
_XGK = np.array([
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
])
_WGK = np.array([
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
])
_WG = np.array([
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
])
_NODES = np.concatenate([-_XGK[:-1], _XGK[::-1]])
_KW = np.concatenate([_WGK[:-1], _WGK[::-1]])
_GW = np.zeros(15)
_GW[1:7:2] = _WG[:3]
_GW[7] = _WG[3]
_GW[9:15:2] = _WG[2::-1]

_EPS = np.finfo(float).eps

INV_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True)
class QuadConfig:
    abs_tol: float = 1e-12
    rel_tol: float = 1e-10
    max_subdivisions: int = 2000
    hermite_order: int = 40

    def __post_init__(self):
        if not (self.abs_tol > 0 and self.rel_tol > 0):
            raise DomainError("quadrature tolerances must be positive")
        if self.max_subdivisions < 1:
            raise DomainError("max_subdivisions must be >= 1")
        if self.hermite_order < 2:
            raise DomainError("hermite_order must be >= 2")

    def to_dict(self) -> dict:
        return {
            "abs_tol": self.abs_tol,
            "rel_tol": self.rel_tol,
            "max_subdivisions": self.max_subdivisions,
            "hermite_order": self.hermite_order,
        }


DEFAULT_QUAD = QuadConfig()


@dataclass(frozen=True)
class RngStream:
    """Seeded PCG64 stream; equal (seed, stream_id) give equal draws."""

    seed: int
    stream_id: int = 0

    def generator(self, block: int | None = None) -> np.random.Generator:
        key = (self.stream_id,) if block is None else (self.stream_id, block)
        ss = np.random.SeedSequence(self.seed, spawn_key=key)
        return np.random.Generator(np.random.PCG64(ss))

    def child(self, offset: int) -> "RngStream":
        # Disjoint stream ids for sub-tasks of one run.
        return RngStream(self.seed, self.stream_id * 1_000_003 + offset + 1)


@dataclass(frozen=True)
class OptResult:
    argmax: float
    value: float
    bracket: tuple[float, float]
    tolerance_achieved: float


def _eval(f, x):
    y = np.asarray(f(x), dtype=float)
    if y.shape != x.shape:
        y = np.broadcast_to(y, x.shape).astype(float)
    return y


def _gk15(f, a, b):
    c = 0.5 * (a + b)
    h = 0.5 * (b - a)
    fx = _eval(f, c + h * _NODES)
    if not np.all(np.isfinite(fx)):
        if np.any(np.isnan(fx)):
            raise DomainError(f"integrand returned NaN on [{a}, {b}]")
        raise DomainError(f"integrand not finite on [{a}, {b}]")
    rk = h * np.dot(_KW, fx)
    rg = h * np.dot(_GW, fx)
    resabs = abs(h) * np.dot(_KW, np.abs(fx))
    mean = 0.5 * rk / h if h != 0 else 0.0
    resasc = abs(h) * np.dot(_KW, np.abs(fx - mean))
    err = abs(rk - rg)
    if resasc != 0.0 and err != 0.0:
        err = resasc * min(1.0, (200.0 * err / resasc) ** 1.5)
    if resabs > np.finfo(float).tiny / (50 * _EPS):
        err = max(err, 50 * _EPS * resabs)
    return rk, err


def _adaptive(f, a, b, cfg: QuadConfig):
    val, err = _gk15(f, a, b)
    heap = [(-err, a, b, val, err)]
    total, total_err = val, err
    n = 1
    while total_err > max(cfg.abs_tol, cfg.rel_tol * abs(total)):
        if n >= cfg.max_subdivisions:
            raise ConvergenceError(
                f"quadrature budget exhausted on [{a}, {b}]: "
                f"value={total!r}, err_est={total_err!r}"
            )
        _, lo, hi, v, e = heapq.heappop(heap)
        mid = 0.5 * (lo + hi)
        if not (lo < mid < hi):
            raise ConvergenceError(f"interval [{lo}, {hi}] cannot be bisected further")
        v1, e1 = _gk15(f, lo, mid)
        v2, e2 = _gk15(f, mid, hi)
        heapq.heappush(heap, (-e1, lo, mid, v1, e1))
        heapq.heappush(heap, (-e2, mid, hi, v2, e2))
        # Re-sum instead of updating incrementally to keep round-off bounded.
        total = math.fsum(item[3] for item in heap)
        total_err = math.fsum(item[4] for item in heap)
        n += 1
    return float(total), float(total_err)


def integrate_1d(
    f: Callable,
    lo: float,
    hi: float,
    cfg: QuadConfig | None = None,
    *,
    singular: str | None = None,
    vectorized: bool = True,
) -> tuple[float, float]:
    """Adaptive 15-point Gauss-Kronrod quadrature of ``f`` over ``[lo, hi]``.

    ``f`` receives numpy arrays when ``vectorized`` is true. Infinite limits
    are mapped to a finite interval (``u = lo + v/(1-v)`` for a half line).
    ``singular`` selects a square-root substitution at ``"lo"``, ``"hi"`` or
    ``"both"`` ends, applied after the infinite-range map; it removes
    ``(u-lo)^(-1/2)``-type endpoint singularities.

    Returns ``(value, err_est)``. Raises ``ConvergenceError`` when the
    subdivision budget runs out and ``DomainError`` on NaN integrand values.
    """
    cfg = cfg or DEFAULT_QUAD
    if singular not in (None, "lo", "hi", "both"):
        raise DomainError(f"unknown singular mode {singular!r}")
    if not lo < hi:
        raise DomainError(f"integrate_1d requires lo < hi, got [{lo}, {hi}]")

    if not vectorized:
        scalar = f

        def f(x, scalar=scalar):
            x = np.atleast_1d(np.asarray(x, dtype=float))
            return np.array([scalar(float(xi)) for xi in x])

    g = f
    a, b = lo, hi
    if math.isinf(lo) and math.isinf(hi):
        def g(v, f=f):
            v = np.asarray(v, dtype=float)
            w = 1.0 - v * v
            return f(v / w) * (1.0 + v * v) / (w * w)
        a, b = -1.0, 1.0
    elif math.isinf(hi):
        def g(v, f=f, lo=lo):
            v = np.asarray(v, dtype=float)
            w = 1.0 - v
            return f(lo + v / w) / (w * w)
        a, b = 0.0, 1.0
    elif math.isinf(lo):
        def g(v, f=f, hi=hi):
            v = np.asarray(v, dtype=float)
            w = 1.0 - v
            return f(hi - v / w) / (w * w)
        a, b = 0.0, 1.0

    if singular is None:
        return _adaptive(g, a, b, cfg)
    if singular == "lo":
        return _adaptive(_sqrt_lo(g, a), 0.0, math.sqrt(b - a), cfg)
    if singular == "hi":
        return _adaptive(_sqrt_hi(g, b), 0.0, math.sqrt(b - a), cfg)
    m = 0.5 * (a + b)
    half = QuadConfig(cfg.abs_tol / 2, cfg.rel_tol, cfg.max_subdivisions, cfg.hermite_order)
    v1, e1 = _adaptive(_sqrt_lo(g, a), 0.0, math.sqrt(m - a), half)
    v2, e2 = _adaptive(_sqrt_hi(g, b), 0.0, math.sqrt(b - m), half)
    return v1 + v2, e1 + e2


def _sqrt_lo(g, a):
    def h(w):
        w = np.asarray(w, dtype=float)
        return g(a + w * w) * 2.0 * w
    return h


def _sqrt_hi(g, b):
    def h(w):
        w = np.asarray(w, dtype=float)
        return g(b - w * w) * 2.0 * w
    return h


@lru_cache(maxsize=None)
def _hermite_cached(n: int):
    x, w = hermgauss(n)
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


def gauss_hermite(n: int) -> tuple[np.ndarray, np.ndarray]:
    """Nodes and weights for ``∫ e^{-x^2} g(x) dx`` (cached, read-only)."""
    if not (isinstance(n, (int, np.integer)) and 2 <= n <= 200):
        raise DomainError(f"Gauss-Hermite order must be in [2, 200], got {n!r}")
    return _hermite_cached(int(n))


def normal_rule(n: int) -> tuple[np.ndarray, np.ndarray]:
    """Nodes/weights for the standard normal expectation ``E g(Z)``."""
    x, w = gauss_hermite(n)
    return math.sqrt(2.0) * x, w / math.sqrt(math.pi)


@lru_cache(maxsize=None)
def _legendre_cached(n: int):
    x, w = leggauss(n)
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


def gauss_legendre(n: int, lo: float = -1.0, hi: float = 1.0):
    x, w = _legendre_cached(int(n))
    h = 0.5 * (hi - lo)
    return lo + h * (x + 1.0), h * w


def _golden_max(f, lo, hi, tol, max_iter=400):
    a, b = lo, hi
    c = b - INV_GOLDEN * (b - a)
    d = a + INV_GOLDEN * (b - a)
    fc, fd = f(c), f(d)
    it = 0
    while b - a > tol and it < max_iter:
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - INV_GOLDEN * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + INV_GOLDEN * (b - a)
            fd = f(d)
        it += 1
    if fc >= fd:
        return c, fc, (a, b)
    return d, fd, (a, b)


def maximize_scalar(
    f: Callable[[float], float],
    lo: float,
    hi: float,
    grid: int = 512,
    tol: float = 1e-10,
) -> OptResult:
    """Dense grid scan, then golden-section refinement around the best node.

    The returned value is never below the best grid sample; the endpoints of
    the refinement bracket are evaluated as candidates too.
    """
    if not lo < hi:
        raise DomainError(f"maximize_scalar requires lo < hi, got [{lo}, {hi}]")
    if grid < 8:
        raise DomainError("grid must be >= 8")
    xs = np.linspace(lo, hi, grid)
    ys = np.array([f(float(x)) for x in xs])
    if not np.all(np.isfinite(ys)):
        raise DomainError("objective returned non-finite values on the scan grid")
    i = int(np.argmax(ys))
    a = xs[max(i - 1, 0)]
    b = xs[min(i + 1, grid - 1)]

    def checked(x):
        y = f(x)
        if not math.isfinite(y):
            raise DomainError(f"objective not finite at {x!r}")
        return y

    x_best, y_best, (ga, gb) = _golden_max(checked, float(a), float(b), tol)
    for x, y in ((float(xs[i]), float(ys[i])), (float(a), checked(float(a))),
                 (float(b), checked(float(b)))):
        if y > y_best:
            x_best, y_best = x, y
    return OptResult(float(x_best), float(y_best), (float(a), float(b)), float(gb - ga))


def ln_gamma(x: float) -> float:
    if not x > 0:
        raise DomainError(f"ln_gamma requires x > 0, got {x!r}")
    return math.lgamma(x)


def sphere_area(d: int) -> float:
    """Surface area of the unit sphere in R^d, i.e. sigma_{d-1}."""
    return 2.0 * math.pi ** (d / 2) / math.gamma(d / 2)


def ball_volume(d: int, r: float = 1.0) -> float:
    return math.pi ** (d / 2) / math.gamma(d / 2 + 1) * r**d
