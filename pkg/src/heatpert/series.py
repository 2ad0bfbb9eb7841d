"""Perturbation series of a Gaussian kernel by a nonnegative potential.

Two engines compute the terms ``p_n``:

* ``grid_recursion`` works with ``r_n(u, z) = p_n(u, z, t, y) / p(u, z, t, y)``,
  which satisfies ``r_n(u, z) = ∫_u^t E[q(v, W_v) r_{n-1}(v, W_v)] dv`` over
  the bridge ``W`` from ``(u, z)`` to ``(t, y)``. ``r_{n-1}`` is tabulated on
  Chebyshev-Lobatto time nodes (one panel per smooth piece of q) times a
  uniform grid of offsets from the straight line joining the endpoints.
* ``monte_carlo`` samples the same bridges and averages ``exp(∫ q)``.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.special import betainc, gammaln

from . import _accel
from .errors import ConvergenceError, DomainError
from .kato import Potential
from .kernels import GaussianKernel
from .numerics import (DEFAULT_QUAD, QuadConfig, RngStream, gauss_legendre, integrate_1d,
                       normal_rule)

ENGINES = ("grid_recursion", "monte_carlo")
CLIP_LEVEL = 1e6


@dataclass(frozen=True)
class GridSpec:
    time_nodes: int = 24
    v_nodes: int = 24
    space_nodes: int = 301
    hermite_nodes: int = 32
    half_width: float = 4.0  # in units of sqrt(2 (t - s) / b)
    # double hermite_nodes (up to max_hermite) while err_est > refine_rtol * sum
    refine_rtol: float = 1e-4
    max_hermite: int = 128

    def __post_init__(self):
        if self.time_nodes < 3 or self.v_nodes < 2 or self.hermite_nodes < 2:
            raise DomainError("grid sizes too small")
        if self.space_nodes < 5 or self.space_nodes % 2 == 0:
            raise DomainError("space_nodes must be odd and >= 5")

    def coarse(self) -> "GridSpec":
        half = (self.space_nodes // 2) | 1
        return GridSpec(max(3, self.time_nodes // 2 + 1), max(2, self.v_nodes // 2),
                        max(5, half), max(2, self.hermite_nodes // 2), self.half_width,
                        self.refine_rtol, self.max_hermite)

    def refined(self) -> "GridSpec":
        return replace(self, hermite_nodes=2 * self.hermite_nodes)

    def to_dict(self) -> dict:
        return {"time_nodes": self.time_nodes, "v_nodes": self.v_nodes,
                "space_nodes": self.space_nodes, "hermite_nodes": self.hermite_nodes,
                "half_width": self.half_width, "refine_rtol": self.refine_rtol,
                "max_hermite": self.max_hermite}


@dataclass(frozen=True)
class SeriesRequest:
    kernel: GaussianKernel
    q: Potential
    s: float
    t: float
    x: tuple
    y: tuple
    n_terms: int = 6
    engine: str = "grid_recursion"
    cfg: QuadConfig = DEFAULT_QUAD
    mc_paths: int = 100_000
    mc_steps: int = 128
    rng: RngStream = field(default_factory=lambda: RngStream(0))
    grid: GridSpec = field(default_factory=GridSpec)
    workers: int = 1
    richardson: bool = True

    def __post_init__(self):
        d = self.kernel.d
        object.__setattr__(self, "x", tuple(float(v) for v in np.atleast_1d(self.x)))
        object.__setattr__(self, "y", tuple(float(v) for v in np.atleast_1d(self.y)))
        if len(self.x) != d or len(self.y) != d:
            raise DomainError(f"x and y must have {d} coordinates")
        if self.q.d != d:
            raise DomainError("potential dimension does not match the kernel")
        if not self.s < self.t:
            raise DomainError("series needs s < t")
        if self.n_terms < 0:
            raise DomainError("n_terms must be >= 0")
        if self.engine not in ENGINES:
            raise DomainError(f"engine must be one of {ENGINES}")
        if self.mc_steps < 2 or self.mc_steps % 2:
            raise DomainError("mc_steps must be an even integer >= 2")
        if self.mc_paths < 2:
            raise DomainError("mc_paths must be >= 2")

    @property
    def p_value(self) -> float:
        return float(self.kernel(self.s, np.array(self.x), self.t, np.array(self.y)))

    def to_dict(self) -> dict:
        return {"kernel": self.kernel.to_dict(), "q": self.q.to_dict(), "s": self.s,
                "t": self.t, "x": list(self.x), "y": list(self.y), "n_terms": self.n_terms,
                "engine": self.engine, "cfg": self.cfg.to_dict(), "mc_paths": self.mc_paths,
                "mc_steps": self.mc_steps, "seed": self.rng.seed,
                "stream_id": self.rng.stream_id, "grid": self.grid.to_dict(),
                "richardson": self.richardson}


@dataclass
class SeriesResult:
    terms: list
    partial_sum: float
    err_est: float
    engine: str
    tail_bound: float | None = None
    mc_std_error: float | None = None
    term_errors: list = field(default_factory=list)
    rigorous_tail: bool = False
    stop_reason: str = "n_terms"
    clip_fraction: float = 0.0
    flags: list = field(default_factory=list)

    @property
    def partial_sums(self) -> list:
        return list(np.cumsum(self.terms))

    def to_dict(self) -> dict:
        return {"terms": [float(v) for v in self.terms],
                "partial_sums": [float(v) for v in self.partial_sums],
                "partial_sum": float(self.partial_sum), "err_est": float(self.err_est),
                "term_errors": [float(v) for v in self.term_errors],
                "engine": self.engine, "tail_bound": self.tail_bound,
                "rigorous_tail": self.rigorous_tail, "stop_reason": self.stop_reason,
                "mc_std_error": self.mc_std_error, "clip_fraction": self.clip_fraction,
                "flags": list(self.flags)}


# grid engine -------------------------------------------------------------------

def _lobatto(n: int):
    j = np.arange(n)
    x = 0.5 * (1.0 - np.cos(math.pi * j / (n - 1)))
    w = (-1.0) ** j
    w[0] *= 0.5
    w[-1] *= 0.5
    return x, w


class GridEngine:
    """Tables of ``r_n = p_n(u, z, t, y) / p(u, z, t, y)`` for ``n = 0, 1, ...``.

    The spatial table is indexed by the offset ``z - line(u)`` where ``line``
    runs from ``(s, x0)`` to ``(t, y)``. Potentials without a space factor use
    a single spatial node, so any dimension works; otherwise ``d`` must be 1.
    """

    def __init__(self, q: Potential, b: float, s: float, t: float, x0: float, y: float,
                 spec: GridSpec | None = None):
        spec = spec or GridSpec()
        if q.has_space_factor and q.d != 1:
            raise DomainError("grid_recursion with a space-dependent potential supports d=1 "
                              "only; use engine monte_carlo")
        if not q.bounded:
            raise DomainError(f"grid_recursion needs a bounded potential, {q.variant!r} "
                              "is singular; use engine monte_carlo")
        self.q, self.b, self.s, self.t = q, float(b), float(s), float(t)
        self.x0, self.y = float(x0), float(y)
        self.spec = spec
        breaks = [self.s] + q.time_breaks(self.s, self.t) + [self.t]
        self.plo = np.array(breaks[:-1])
        self.phi = np.array(breaks[1:])
        xs, self.bw = _lobatto(spec.time_nodes)
        self.nt = spec.time_nodes
        self.tnodes = np.concatenate([lo + (hi - lo) * xs for lo, hi in zip(self.plo, self.phi)])
        self.gl_x, self.gl_w = gauss_legendre(spec.v_nodes, 0.0, 1.0)
        if q.has_space_factor:
            W = spec.half_width * math.sqrt(2.0 * (self.t - self.s) / self.b)
            nz = spec.space_nodes
            self.z0, self.dz = -W, 2.0 * W / (nz - 1)
            gz, gw = normal_rule(spec.hermite_nodes)
            # outer nodes with weight below 1e-18 cannot change a double result
            keep = gw > 1e-18
            self.gz, self.gw = gz[keep], gw[keep]
        else:
            nz = 1
            self.z0, self.dz = 0.0, 1.0
            self.gz, self.gw = np.zeros(1), np.ones(1)
        self.params = q.encode() if q.d == 1 else _flatten_params(q)
        self.tables = [np.ones((len(self.tnodes), nz))]

    def step(self) -> np.ndarray:
        R = _accel.grid_step(self.tables[-1], self.tnodes, self.plo, self.phi, self.nt,
                             self.bw, self.gl_x, self.gl_w, self.z0, self.dz, self.gz, self.gw,
                             self.s, self.t, self.x0, self.y, self.b, self.params)
        self.tables.append(R)
        return R

    def ensure(self, n: int):
        while len(self.tables) <= n:
            self.step()

    def line(self, u):
        return self.x0 + (self.y - self.x0) * (np.asarray(u) - self.s) / (self.t - self.s)

    def ratio(self, n: int, u, z) -> np.ndarray:
        """Interpolated ``r_n(u, z)``; broadcasting over ``u`` and ``z``."""
        self.ensure(n)
        R = self.tables[n]
        u = np.asarray(u, dtype=float)
        z = np.asarray(z, dtype=float)
        u, z = np.broadcast_arrays(u, z)
        out = np.empty(u.shape)
        flat_u, flat_z, flat_o = u.reshape(-1), z.reshape(-1), out.reshape(-1)
        panel = np.clip(np.searchsorted(self.phi, flat_u, side="left"), 0, len(self.plo) - 1)
        for P in np.unique(panel):
            sel = panel == P
            nodes = self.tnodes[P * self.nt:(P + 1) * self.nt]
            coef = _accel._bary_matrix(nodes, self.bw, flat_u[sel])
            rows = coef @ R[P * self.nt:(P + 1) * self.nt]
            if R.shape[1] == 1:
                flat_o[sel] = rows[:, 0]
            else:
                off = flat_z[sel] - self.line(flat_u[sel])
                flat_o[sel] = [_accel._cubic_np(rows[i], self.z0, self.dz, off[i])
                               for i in range(rows.shape[0])]
        return out

    def at_start(self, n: int, x: float) -> float:
        return float(self.ratio(n, self.s, x))


def _flatten_params(q: Potential) -> np.ndarray:
    # spatially constant potentials ignore z, so a one-dimensional encoding suffices
    p = np.array(q.encode()[:_accel.S_DIR + 1])
    p[_accel.S_DIR:] = 0.0
    return p


def _grid_engine(req: SeriesRequest, spec: GridSpec, x0=None) -> GridEngine:
    x0 = req.x[0] if x0 is None else x0
    return GridEngine(req.q, req.kernel.a, req.s, req.t, x0, req.y[0] if req.q.has_space_factor
                      else 0.0, spec)


def _grid_start(req: SeriesRequest) -> float:
    return req.x[0] if req.q.has_space_factor else 0.0


def _with_refinement(req: SeriesRequest, once) -> SeriesResult:
    """Rerun ``once`` with doubled Gauss-Hermite order while the grid error is too large.

    The space expectation is the part that struggles when q varies on a
    scale much shorter than the bridge spread, so only that order grows.
    After a refinement the error estimate is the change from the previous
    order, which is less pessimistic than the half-size comparison.
    """
    res = once(req)
    while (req.q.has_space_factor and res.err_est > req.grid.refine_rtol * abs(res.partial_sum)
           and 2 * req.grid.hermite_nodes <= req.grid.max_hermite):
        prev = res
        req = replace(req, grid=req.grid.refined())
        res = once(req)
        n = max(len(res.terms), len(prev.terms))
        a = res.terms + [0.0] * (n - len(res.terms))
        b = prev.terms + [0.0] * (n - len(prev.terms))
        res.term_errors = [abs(u - v) for u, v in zip(a, b)]
        res.err_est = abs(res.partial_sum - prev.partial_sum)
        res.flags.append(f"hermite_nodes_refined_to_{req.grid.hermite_nodes}")
    if req.q.has_space_factor and res.err_est > req.grid.refine_rtol * abs(res.partial_sum):
        res.flags.append("grid_error_above_tolerance")
    return res


def term_grid(req: SeriesRequest) -> SeriesResult:
    """Terms ``p_0 .. p_{n_terms}`` by the grid recursion.

    ``err_est`` compares with the same recursion on a grid of half the size.
    """
    if req.engine != "grid_recursion":
        raise DomainError("term_grid needs engine grid_recursion")
    return _with_refinement(req, _term_grid_once)


def _term_grid_once(req: SeriesRequest) -> SeriesResult:
    p = req.p_value
    if req.q.variant == "zero":
        terms = [p] + [0.0] * req.n_terms
        return SeriesResult(terms, p, 0.0, req.engine, term_errors=[0.0] * len(terms))
    fine = _grid_engine(req, req.grid, _grid_start(req))
    coarse = _grid_engine(req, req.grid.coarse(), _grid_start(req))
    xs = _grid_start(req)
    terms, errs = [], []
    for n in range(req.n_terms + 1):
        f = fine.at_start(n, xs) * p
        c = coarse.at_start(n, xs) * p
        terms.append(max(f, 0.0))
        errs.append(abs(f - c))
    return SeriesResult(terms, math.fsum(terms), math.fsum(errs), req.engine, term_errors=errs)


# tail certificates -------------------------------------------------------------

@dataclass(frozen=True)
class TailCertificate:
    """Geometric domination ``p_n <= binom(n+k-1, k-1) θ^n C^k p*`` at one point."""

    C: float
    eta: float
    theta: float
    k: int
    pstar: float

    def __post_init__(self):
        if not (0 <= self.theta < 1):
            raise DomainError(f"tail certificate needs theta < 1, got {self.theta!r}")
        if self.k < 1 or self.C < 1:
            raise DomainError("tail certificate needs k >= 1 and C >= 1")

    @classmethod
    def from_membership(cls, C: float, eta: float, Q_value: float, pstar: float,
                        k: int | None = None) -> "TailCertificate":
        if not 0 <= eta < 1:
            raise DomainError("eta must lie in [0, 1)")
        if k is None:
            k = int(math.floor(Q_value / (1.0 - eta))) + 1
        return cls(C, eta, eta + Q_value / k, k, pstar)

    def term_bound(self, n: int) -> float:
        logb = (gammaln(n + self.k) - gammaln(self.k) - gammaln(n + 1)
                + (n * math.log(self.theta) if n else 0.0) + self.k * math.log(self.C))
        return math.exp(logb) * self.pstar

    def tail(self, N: int) -> float:
        """``∑_{n > N}`` of the term bounds, via the regularized incomplete beta."""
        if self.theta == 0.0:
            return 0.0
        return (self.C ** self.k * self.pstar * (1.0 - self.theta) ** (-self.k)
                * float(betainc(N + 1, self.k, self.theta)))

    def to_dict(self) -> dict:
        return {"C": self.C, "eta": self.eta, "theta": self.theta, "k": self.k,
                "pstar": self.pstar}


def tilde_p(req: SeriesRequest, cert: TailCertificate | None = None, tol: float = 1e-12,
            max_terms: int = 200) -> SeriesResult:
    """Sum of the series at ``(s, x, t, y)``.

    With a certificate the sum stops once the certified tail is below
    ``tol`` times the partial sum. Without one it stops on relative term
    decay below ``tol``, which is a heuristic and is flagged as such.
    """
    if req.engine == "monte_carlo":
        return feynman_kac_mc(req)
    return _with_refinement(req, lambda r: _tilde_once(r, cert, tol, max_terms))


def _tilde_once(req, cert, tol, max_terms):
    p = req.p_value
    if req.q.variant == "zero":
        return SeriesResult([p], p, 0.0, req.engine, tail_bound=0.0 if cert else None,
                            rigorous_tail=cert is not None, stop_reason="zero_potential",
                            term_errors=[0.0])
    fine = _grid_engine(req, req.grid, _grid_start(req))
    coarse = _grid_engine(req, req.grid.coarse(), _grid_start(req))
    xs = _grid_start(req)
    terms, errs = [], []
    tail = None
    for n in range(max_terms + 1):
        f = fine.at_start(n, xs) * p
        c = coarse.at_start(n, xs) * p
        terms.append(max(f, 0.0))
        errs.append(abs(f - c))
        total = math.fsum(terms)
        if cert is not None:
            tail = cert.tail(n)
            if tail <= tol * total:
                return SeriesResult(terms, total, math.fsum(errs), req.engine, tail_bound=tail,
                                    rigorous_tail=True, stop_reason="certified_tail",
                                    term_errors=errs)
        elif n >= 1 and terms[-1] <= tol * total and terms[-2] >= terms[-1]:
            return SeriesResult(terms, total, math.fsum(errs), req.engine,
                                stop_reason="term_decay_heuristic", term_errors=errs,
                                flags=["tail_not_certified"])
    raise ConvergenceError(f"series did not meet the stopping rule within {max_terms} terms "
                           f"(last term {terms[-1]:.3e}, tail bound {tail})")


# Monte Carlo engine ----------------------------------------------------------------

def _mc_nodes(req: SeriesRequest):
    return _accel.mc_time_nodes(req.s, req.t, req.q.time_breaks(req.s, req.t), req.mc_steps)


def _mc_block(req: SeriesRequest, block: int, pairs: int, nodes):
    times, brk = nodes
    gen = req.rng.generator(block)
    normals = gen.standard_normal((pairs, len(times) - 2, req.kernel.d))
    return _accel.mc_paths(req.q.encode(), normals, np.array(req.x), np.array(req.y),
                           times, brk, req.kernel.a, CLIP_LEVEL)


def path_integrals(req: SeriesRequest, block_pairs: int = 4096):
    """Per-pair trapezoid integrals ``I[pair, sign, fine/coarse]`` and the clip count."""
    pairs = req.mc_paths // 2
    sizes = [block_pairs] * (pairs // block_pairs)
    if pairs % block_pairs:
        sizes.append(pairs % block_pairs)
    nodes = _mc_nodes(req)
    if req.workers > 1:
        with ThreadPoolExecutor(max_workers=req.workers) as ex:
            parts = list(ex.map(lambda a: _mc_block(req, a[0], a[1], nodes), enumerate(sizes)))
    else:
        parts = [_mc_block(req, i, n, nodes) for i, n in enumerate(sizes)]
    I = np.concatenate([p[0] for p in parts])
    clipped = sum(p[1] for p in parts)
    return I, clipped


def _combine(I, fn, richardson):
    fine = fn(I[:, :, 0])
    if richardson:
        # the trapezoid bias along a bridge is first order in the step; the
        # every-other-node estimate on the same path cancels it
        fine = 2.0 * fine - fn(I[:, :, 1])
    return fine.mean(axis=1)


def feynman_kac_mc(req: SeriesRequest) -> SeriesResult:
    """``p * E[exp ∫ q]`` over bridges of the ``g_b`` process, with antithetic pairs."""
    if req.engine != "monte_carlo":
        raise DomainError("feynman_kac_mc needs engine monte_carlo")
    p = req.p_value
    I, clipped = path_integrals(req)
    vals = _combine(I, np.exp, req.richardson)
    npairs = vals.shape[0]
    mean = float(vals.mean())
    se = float(vals.std(ddof=1) / math.sqrt(npairs))
    terms = []
    for n in range(req.n_terms + 1):
        tv = _combine(I, lambda a, n=n: a**n / math.factorial(n), req.richardson)
        terms.append(float(tv.mean()) * p)
    flags = []
    if se > abs(mean):
        flags.append("variance_blowup")
    evals = 2 * npairs * len(_mc_nodes(req)[0])
    frac = clipped / evals
    if clipped:
        flags.append("clipped_potential_lower_estimate")
    return SeriesResult(terms, mean * p, se * p, req.engine, mc_std_error=se * p,
                        stop_reason="monte_carlo", clip_fraction=frac, flags=flags)


# consistency checks --------------------------------------------------------------

def _need_d1(kernel: GaussianKernel):
    if kernel.d != 1:
        raise DomainError("this check is implemented for d = 1")


def _bridge(kernel, s, x, u, t, y):
    b = kernel.a
    mean = x + (u - s) / (t - s) * (y - x)
    sd = math.sqrt(2.0 / b * (u - s) * (t - u) / (t - s))
    return mean, sd


def term_ck_residual(kernel: GaussianKernel, q: Potential, n: int, s: float, u: float,
                     t: float, x, y, cfg: QuadConfig | None = None,
                     grid: GridSpec | None = None) -> float:
    """``|∑_m ∫ p_m(s,x,u,z) p_{n-m}(u,z,t,y) dz - p_n(s,x,t,y)|``.

    The forward factors ``p_m(s, x, u, ·)`` come from the grid recursion for
    the time-reflected potential, since reflecting time swaps the roles of
    the two endpoints.
    """
    cfg = cfg or DEFAULT_QUAD
    grid = grid or GridSpec()
    _need_d1(kernel)
    if not (0 <= n <= 3):
        raise DomainError("term_ck_residual supports n <= 3")
    if not s < u < t:
        raise DomainError("term_ck_residual requires s < u < t")
    x = float(np.atleast_1d(x)[0])
    y = float(np.atleast_1d(y)[0])
    b = kernel.a
    p = float(kernel(s, x, t, y))
    A = GridEngine(q, b, s, t, x, y, grid)
    mean, sd = _bridge(kernel, s, x, u, t, y)
    wide = GridSpec(grid.time_nodes, grid.v_nodes, 2 * grid.space_nodes + 1,
                    grid.hermite_nodes, 2.0 * grid.half_width)
    B = GridEngine(q.reflect_time(s + u), b, s, u, mean, x, wide)
    gz, gw = normal_rule(cfg.hermite_order)
    z = mean + sd * gz
    total = 0.0
    for m in range(n + 1):
        total += float(np.sum(gw * B.ratio(m, s, z) * A.ratio(n - m, u, z)))
    return abs(total * p - A.at_start(n, x) * p)


def duhamel_residual(kernel: GaussianKernel, q: Potential, N: int, s: float, t: float,
                     x, y, cfg: QuadConfig | None = None, grid: GridSpec | None = None) -> float:
    """``|S_N - p - ∫∫ p q S_{N-1}|`` with the outer integral by adaptive quadrature."""
    cfg = cfg or DEFAULT_QUAD
    grid = grid or GridSpec()
    _need_d1(kernel)
    if not 1 <= N <= 6:
        raise DomainError("duhamel_residual supports 1 <= N <= 6")
    x = float(np.atleast_1d(x)[0])
    y = float(np.atleast_1d(y)[0])
    p = float(kernel(s, x, t, y))
    if q.variant == "zero":
        return 0.0
    eng = GridEngine(q, kernel.a, s, t, x, y, grid)
    S_N = sum(eng.at_start(n, x) for n in range(N + 1)) * p
    gz, gw = normal_rule(cfg.hermite_order)

    def integrand(us):
        out = np.empty_like(us)
        for i, u in enumerate(us):
            mean, sd = _bridge(kernel, s, x, u, t, y)
            z = mean + sd * gz
            r = sum(eng.ratio(n, u, z) for n in range(N))
            out[i] = np.sum(gw * q(u, z) * r)
        return out

    pts = [s] + q.time_breaks(s, t) + [t]
    conv = math.fsum(integrate_1d(integrand, a, c, cfg)[0] for a, c in zip(pts[:-1], pts[1:]))
    return abs(S_N - p - conv * p)


@dataclass(frozen=True)
class TestFunction:
    """``φ(u, z) = A(u) B(z)`` with a smooth time bump on ``(t_lo, t_hi)`` and a Gaussian ``B``."""

    __test__ = False  # not a pytest class

    t_lo: float
    t_hi: float
    center: float = 0.0
    width: float = 1.0
    amplitude: float = 1.0

    def __post_init__(self):
        if not (self.t_lo < self.t_hi and self.width > 0):
            raise DomainError("test function needs t_lo < t_hi and width > 0")

    def _w(self, u):
        return (2.0 * np.asarray(u, dtype=float) - self.t_lo - self.t_hi) / (self.t_hi - self.t_lo)

    def time_part(self, u):
        w = self._w(u)
        inside = np.abs(w) < 1
        ws = np.where(inside, w, 0.0)
        return np.where(inside, self.amplitude * np.exp(-1.0 / (1.0 - ws * ws)), 0.0)

    def time_deriv(self, u):
        w = self._w(u)
        inside = np.abs(w) < 1
        ws = np.where(inside, w, 0.0)
        g = 1.0 - ws * ws
        dA = self.time_part(u) * (-2.0 * ws / (g * g)) * 2.0 / (self.t_hi - self.t_lo)
        return np.where(inside, dA, 0.0)

    def space_part(self, z):
        return np.exp(-((np.asarray(z) - self.center) ** 2) / (2.0 * self.width**2))

    def space_dd(self, z):
        dz = np.asarray(z) - self.center
        w2 = self.width**2
        return (dz * dz / (w2 * w2) - 1.0 / w2) * self.space_part(z)

    def __call__(self, u, z):
        return self.time_part(u) * self.space_part(z)

    def to_dict(self) -> dict:
        return {"t_lo": self.t_lo, "t_hi": self.t_hi, "center": self.center,
                "width": self.width, "amplitude": self.amplitude}


def phi_catalog(s: float, x: float) -> list[TestFunction]:
    """Test functions supported strictly after ``s`` (usable for both kernels)."""
    return [TestFunction(s + 1.0, s + 2.0, x, 0.5),
            TestFunction(s + 0.5, s + 2.5, x + 0.7, 1.0),
            TestFunction(s + 1.2, s + 1.8, x - 0.4, 0.3, 2.0)]


def left_inverse_residual(b: float, s: float, x: float, phi: TestFunction,
                          cfg: QuadConfig | None = None, alternative: bool = False) -> float:
    """``|∫_s^∞ ∫ p(s,x,u,z) [∂_u φ + (1/b) ∂_zz φ] dz du + φ(s, x)|`` in d = 1.

    ``p`` is ``g_b``; with ``alternative`` it is ``g_b + 2u + b z^2``, which
    satisfies the same identity for test functions vanishing near time ``s``.
    """
    cfg = cfg or DEFAULT_QUAD
    if not b > 0:
        raise DomainError("b must be positive")
    if alternative and phi.t_lo < s:
        raise DomainError("the alternative kernel needs a test function supported after s")
    k = GaussianKernel(b, 1)
    gz, gw = normal_rule(cfg.hermite_order)
    c, w2 = phi.center, phi.width**2

    def gauss_part(us):
        out = np.empty_like(us)
        for i, u in enumerate(us):
            v = 2.0 * (u - s) / b
            if v <= 0:
                out[i] = 0.0
                continue
            m = (x * w2 + c * v) / (v + w2)
            var = v * w2 / (v + w2)
            z = m + math.sqrt(var) * gz
            # density of N(m, var) divided out of the integrand
            dens = np.exp(-0.5 * gz * gz) / math.sqrt(2 * math.pi * var)
            f = k(s, x, u, z) * (phi.time_deriv(u) * phi.space_part(z)
                                 + phi.time_part(u) * phi.space_dd(z) / b)
            out[i] = np.sum(gw * f / dens)
        return out

    def poly_part(us):
        z = c + phi.width * gz
        dens = np.exp(-0.5 * gz * gz) / (math.sqrt(2 * math.pi) * phi.width)
        out = np.empty_like(us)
        for i, u in enumerate(us):
            h = 2.0 * u + b * z * z
            f = h * (phi.time_deriv(u) * phi.space_part(z) + phi.time_part(u) * phi.space_dd(z) / b)
            out[i] = np.sum(gw * f / dens)
        return out

    lo = max(s, phi.t_lo)
    if lo >= phi.t_hi:
        return abs(float(phi(s, x)))
    total, _ = integrate_1d(gauss_part, lo, phi.t_hi, cfg)
    if alternative:
        total += integrate_1d(poly_part, phi.t_lo, phi.t_hi, cfg)[0]
    return abs(total + float(phi(s, x)))
