"""Membership certificates and the Gaussian upper bounds built from them.

``verify_membership`` samples the majorant integral
``∫_s^t ∫ g_b(s,x,u,z) q(u,z) g_a(u,z,t,y) dz du`` against
``(eta + Q(s,t)) g_a(s,x,t,y)`` and records every sample. The remaining
functions evaluate the bound formulas and compose them into the Gaussian
bound for Kato-class potentials.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import DomainError, InvariantViolation
from .fourg import compute_M
from .kato import Potential, c0, half_ball_volume
from .kernels import GaussianKernel
from .numerics import DEFAULT_QUAD, QuadConfig, RngStream, integrate_1d, maximize_scalar, normal_rule
from .superadd import SuperadditiveQ, eval_Q, regularize

MEMBERSHIP_SLACK = 1e-8


@dataclass
class NMembership:
    p_params: GaussianKernel
    pstar_params: GaussianKernel
    C: float
    eta: float
    Q: SuperadditiveQ
    verified_at: list = field(default_factory=list)

    def __post_init__(self):
        if not self.C >= 1:
            raise DomainError("C must be >= 1")
        if not self.eta >= 0:
            raise DomainError("eta must be >= 0")

    def to_dict(self) -> dict:
        return {"p": self.p_params.to_dict(), "pstar": self.pstar_params.to_dict(),
                "C": self.C, "eta": self.eta, "Q": self.Q.to_dict(),
                "samples": len(self.verified_at), "verified_at": self.verified_at}


@dataclass(frozen=True)
class BoundCertificate:
    C: float
    eta: float
    eps: float
    Q_value: float
    bound_factor: float
    lam: float = 0.0
    Lambda: float = 1.0
    Q_slope: float | None = None

    def __post_init__(self):
        if not 0 <= self.eta < 1:
            raise DomainError("certificate needs 0 <= eta < 1")
        if not 0 < self.eps < 1 - self.eta:
            raise DomainError("certificate needs 0 < eps < 1 - eta")

    def to_dict(self) -> dict:
        return {"C": self.C, "eta": self.eta, "eps": self.eps, "Q_value": self.Q_value,
                "Q_slope": self.Q_slope, "bound_factor": self.bound_factor,
                "lambda": self.lam, "Lambda": self.Lambda}


# majorant integral -----------------------------------------------------------------

def _space_mean(q: Potential, u: float, m: np.ndarray, var: float, cfg: QuadConfig,
                gen: np.random.Generator | None, mc_samples: int) -> float:
    """``E q(u, Z)`` for ``Z ~ N(m, var I)``."""
    d = q.d
    tf = float(q.time_factor(u)) if q.has_time_factor else 1.0
    if tf == 0.0:
        return 0.0
    if not q.has_space_factor:
        return float(q(u, np.zeros(d)))
    sd = math.sqrt(var)
    if q.variant != "indicator_sum" and q.profile != "power" and d <= 2:
        gz, gw = normal_rule(cfg.hermite_order)
        if d == 1:
            pts = m[0] + sd * gz
            return tf * float(np.sum(gw * q.profile_value(np.abs(pts))))
        X, Y = np.meshgrid(m[0] + sd * gz, m[1] + sd * gz, indexing="ij")
        W = np.outer(gw, gw)
        return tf * float(np.sum(W * q.profile_value(np.hypot(X, Y))))
    if q.variant != "indicator_sum" and d == 3:
        return tf * _radial_noncentral(q, float(np.linalg.norm(m)), var, cfg)
    if gen is None:
        raise DomainError("Monte Carlo membership needs an RngStream")
    z = m + sd * gen.standard_normal((mc_samples, d))
    return float(np.mean(np.minimum(q(u, z), 1e6)))


def _radial_noncentral(q: Potential, mu: float, var: float, cfg: QuadConfig) -> float:
    """``E U(|Z|)`` for ``Z ~ N(m, var I_3)`` with ``|m| = mu`` via the radial density."""
    sd = math.sqrt(var)
    c = 1.0 / math.sqrt(2 * math.pi * var)

    def dens(r):
        if mu < 1e-12 * sd:
            return 2.0 * c * r * r / var * np.exp(-r * r / (2 * var))
        return (r / mu) * c * (np.exp(-(r - mu) ** 2 / (2 * var)) - np.exp(-(r + mu) ** 2 / (2 * var)))

    hi = mu + 40.0 * sd
    if q.profile != "gauss":
        hi = min(hi, q.radius)
    lo = max(0.0, mu - 40.0 * sd) if q.profile == "gauss" else 0.0
    if hi <= lo:
        return 0.0
    val, _ = integrate_1d(lambda r: q.profile_value(r) * dens(r), lo, hi, cfg,
                          singular="lo" if q.profile == "power" and lo == 0.0 else None)
    return val


def majorant_integral(b_kernel: GaussianKernel, a_kernel: GaussianKernel, q: Potential,
                      s: float, x, t: float, y, cfg: QuadConfig | None = None,
                      rng: RngStream | None = None, mc_samples: int = 20000) -> float:
    """``∫_s^t ∫ g_b(s,x,u,z) q(u,z) g_a(u,z,t,y) dz du``.

    The product of the two Gaussians is ``N(y - x; 0, (v1 + v2) I)`` times the
    density of ``N(m, v I)`` in ``z``, so the space integral is a Gaussian
    expectation of q.
    """
    cfg = cfg or DEFAULT_QUAD
    d = b_kernel.d
    x = np.atleast_1d(np.asarray(x, dtype=float))
    y = np.atleast_1d(np.asarray(y, dtype=float))
    if q.variant == "zero" or not s < t:
        return 0.0
    a, b = a_kernel.a, b_kernel.a
    r2 = float((y - x) @ (y - x))
    gen = rng.generator() if rng is not None else None

    def integrand(us):
        out = np.empty_like(us)
        for i, u in enumerate(us):
            v1 = 2.0 * (u - s) / b
            v2 = 2.0 * (t - u) / a
            tot = v1 + v2
            m = (x * v2 + y * v1) / tot
            v = v1 * v2 / tot
            dens = math.exp(-0.5 * d * math.log(2 * math.pi * tot) - r2 / (2 * tot))
            out[i] = dens * _space_mean(q, u, m, v, cfg, gen, mc_samples)
        return out

    pts = [s] + q.time_breaks(s, t) + [t]
    return math.fsum(integrate_1d(integrand, lo, hi, cfg)[0] for lo, hi in zip(pts[:-1], pts[1:]))


def sample_points(d: int, n: int, rng: RngStream):
    """Sample design: log-uniform ``t - s`` plus far-tail probes at 5 and 10 scales."""
    gen = rng.generator()
    out = []
    for i in range(n):
        s = float(gen.uniform(-1.0, 1.0))
        dt = float(math.exp(gen.uniform(math.log(1e-3), math.log(10.0))))
        x = gen.normal(0.0, 1.0, d)
        if i % 5 == 3:
            direction = gen.normal(size=d)
            direction /= np.linalg.norm(direction)
            y = x + (5.0 if i % 10 == 3 else 10.0) * math.sqrt(dt) * direction
        else:
            y = x + math.sqrt(dt) * gen.normal(0.0, 1.0, d)
        out.append((s, x, s + dt, y))
    return out


def verify_membership(b_kernel: GaussianKernel, a_kernel: GaussianKernel, q: Potential,
                      eta: float, Q: SuperadditiveQ, samples: int,
                      cfg: QuadConfig | None = None, rng: RngStream | None = None,
                      C: float | None = None, points=None) -> NMembership:
    """Check both membership conditions at sampled points; raise with the witness on failure."""
    cfg = cfg or DEFAULT_QUAD
    rng = rng or RngStream(0)
    if b_kernel.d != a_kernel.d or q.d != b_kernel.d:
        raise DomainError("kernel and potential dimensions differ")
    if not 0 < a_kernel.a <= b_kernel.a:
        raise DomainError("membership needs 0 < a <= b")
    d = b_kernel.d
    if C is None:
        C = (b_kernel.a / a_kernel.a) ** (d / 2)
    rec = NMembership(b_kernel, a_kernel, C, eta, Q)
    pts = points if points is not None else sample_points(d, samples, rng.child(0))
    for i, (s, x, t, y) in enumerate(pts):
        lhs = majorant_integral(b_kernel, a_kernel, q, s, x, t, y, cfg, rng.child(i + 1))
        log_pstar = float(a_kernel.log(s, x, t, y))
        rhs = (eta + eval_Q(Q, s, t)) * math.exp(log_pstar)
        log_ratio = float(b_kernel.log(s, x, t, y)) - log_pstar
        entry = {"s": s, "x": [float(v) for v in np.atleast_1d(x)], "t": t,
                 "y": [float(v) for v in np.atleast_1d(y)], "lhs": lhs, "rhs": rhs,
                 "p_over_pstar": math.exp(log_ratio)}
        if lhs > rhs * (1 + MEMBERSHIP_SLACK) + 1e-300:
            raise InvariantViolation(f"majorant condition fails at sample {i}", witness=entry)
        if log_ratio > math.log(C) + 1e-12:
            raise InvariantViolation(f"p <= C p* fails at sample {i}", witness=entry)
        rec.verified_at.append(entry)
    return rec


def regularized_majorant_check(rec: NMembership, continuous_in_t: bool = False) -> float:
    """Largest ``lhs / (C (eta + Q^-(s,t)) p*)`` over the recorded samples.

    ``continuous_in_t=True`` asserts that ``t -> p(s,x,t,y)`` is continuous, in
    which case regularization costs no factor and C is dropped. The caller
    vouches for that; it is not checked here.
    """
    Qm = regularize(rec.Q)
    scale = 1.0 if continuous_in_t else rec.C
    worst = 0.0
    for e in rec.verified_at:
        pstar = float(rec.pstar_params(e["s"], np.array(e["x"]), e["t"], np.array(e["y"])))
        bound = scale * (rec.eta + eval_Q(Qm, e["s"], e["t"])) * pstar
        if e["lhs"] > 0:
            worst = max(worst, e["lhs"] / bound if bound > 0 else math.inf)
    return worst


# bound formulas ------------------------------------------------------------------

def split_series_bound(n: int, k: int, theta: float, C: float) -> float:
    """``binom(n+k-1, k-1) θ^n C^k`` evaluated in log space."""
    if n < 0 or k < 1 or theta < 0 or C < 1:
        raise DomainError("split_series_bound needs n >= 0, k >= 1, theta >= 0, C >= 1")
    if theta == 0.0:
        return C**k if n == 0 else 0.0
    logv = (math.lgamma(n + k) - math.lgamma(k) - math.lgamma(n + 1)
            + n * math.log(theta) + k * math.log(C))
    if logv > 709.0:
        raise DomainError(f"term bound overflows double precision (log = {logv:.1f})")
    return math.exp(logv)


def _check_factor_domain(C, eta, eps, Q_value):
    if not C >= 1:
        raise DomainError("C must be >= 1")
    if not 0 <= eta < 1:
        raise DomainError("eta must lie in [0, 1)")
    if not 0 < eps < 1 - eta:
        raise DomainError("eps must lie in (0, 1 - eta)")
    if not Q_value >= 0:
        raise DomainError("Q must be nonnegative")


def log_bound_factor(C: float, eta: float, eps: float, Q_value: float) -> float:
    _check_factor_domain(C, eta, eps, Q_value)
    return (1.0 + Q_value / eps) * (math.log(C) - math.log1p(-(eta + eps)))


def bound_factor(C: float, eta: float, eps: float, Q_value: float) -> float:
    """``(C / (1 - eta - eps))^(1 + Q/eps)``."""
    logv = log_bound_factor(C, eta, eps, Q_value)
    if logv > 709.0:
        raise DomainError(f"bound factor overflows double precision (log = {logv:.1f})")
    return math.exp(logv)


def standard_eps_choices(eta: float) -> list[float]:
    out = [(1.0 - eta) / 2.0]
    if 0 < eta < 0.5:
        out.insert(0, eta)
    return out


def optimize_eps(C: float, eta: float, Q_value: float) -> tuple[float, float]:
    """Minimize the factor over ``eps``; never worse than the standard choices."""
    _check_factor_domain(C, eta, (1 - eta) / 2, Q_value)
    span = 1.0 - eta
    lo, hi = 1e-9 * span, (1.0 - 1e-9) * span

    # search in log eps: the optimum can sit close to zero when Q is small
    def neg(le):
        return -log_bound_factor(C, eta, math.exp(le), Q_value)

    res = maximize_scalar(neg, math.log(lo), math.log(hi), grid=512, tol=1e-12)
    cands = [(math.exp(res.argmax), -res.value)]
    cands += [(e, log_bound_factor(C, eta, e, Q_value)) for e in standard_eps_choices(eta)]
    eps, logv = min(cands, key=lambda c: c[1])
    # an astronomically large factor is still a valid (if useless) bound
    return eps, math.exp(logv) if logv <= 709.0 else math.inf


def kato_bound_factor(b: float, a: float, d: int, I_sqrt_h: float, h: float,
                   t_minus_s: float) -> float:
    """``I M [b c0(d) + 2 (t-s) / (h |B(0,1/2)|)]``."""
    eta, slope = kato_bound_parts(b, a, d, I_sqrt_h, h)
    return eta + slope * t_minus_s


def kato_bound_parts(b: float, a: float, d: int, I_sqrt_h: float, h: float,
                   Lambda: float = 1.0) -> tuple[float, float]:
    if not 0 < a < b:
        raise DomainError("need 0 < a < b")
    if not (h > 0 and I_sqrt_h >= 0):
        raise DomainError("need h > 0 and I >= 0")
    M = compute_M(a, b, d).M
    eta = Lambda * b * c0(d) * M * I_sqrt_h
    slope = Lambda * 2.0 * M * I_sqrt_h / (h * half_ball_volume(d))
    return eta, slope


@dataclass(frozen=True)
class GaussianBound:
    """``(s, x, t, y) -> factor(Q(s,t)) e^{λ(t-s)} g_a(s, x, t, y)``."""

    C: float
    eta: float
    slope: float
    lam: float
    a_kernel: GaussianKernel
    eps: float | None = None

    def Q_value(self, s, t) -> float:
        return self.slope * max(t - s, 0.0)

    def factor(self, s: float, t: float) -> float:
        Qv = self.Q_value(s, t)
        if self.eps is not None:
            return bound_factor(self.C, self.eta, self.eps, Qv)
        return optimize_eps(self.C, self.eta, Qv)[1]

    def __call__(self, s, x, t, y) -> float:
        return (self.factor(s, t) * math.exp(self.lam * (t - s))
                * float(self.a_kernel(s, x, t, y)))


def kato_gaussian_bound(Lambda: float, lam: float, b: float, a: float, h: float, d: int,
                     I_sqrt_h: float, t_ref: float = 1.0) -> tuple[BoundCertificate, GaussianBound]:
    """Certificate and bound callable for a Kato potential with ``I_{√h}(q) = I_sqrt_h``."""
    if not Lambda >= 1:
        raise DomainError("Lambda must be >= 1")
    eta, slope = kato_bound_parts(b, a, d, I_sqrt_h, h, Lambda)
    if eta >= 1:
        M = compute_M(a, b, d).M
        admissible = 1.0 / (Lambda * b * c0(d) * M)
        raise DomainError(f"eta = {eta:.6g} >= 1: the bound does not apply. Reduce I_sqrt(h) "
                          f"below {admissible:.6g} (for example by shrinking h), or reduce b.")
    C = Lambda * (b / a) ** (d / 2)
    Q_ref = slope * t_ref
    eps, factor = optimize_eps(C, eta, Q_ref)
    cert = BoundCertificate(C, eta, eps, Q_ref, factor, lam, Lambda, slope)
    return cert, GaussianBound(C, eta, slope, lam, GaussianKernel(a, d))


def admissible_I(Lambda: float, b: float, a: float, d: int) -> float:
    return 1.0 / (Lambda * b * c0(d) * compute_M(a, b, d).M)


def step1_parabolic_bound(b: float, a: float, d: int, N_value: float) -> float:
    """``M' N`` with ``M' = max((b-a)/a, a/(b-a))^(d/2) M``."""
    if not 0 < a < b:
        raise DomainError("need 0 < a < b")
    if N_value < 0:
        raise DomainError("N must be nonnegative")
    M = compute_M(a, b, d).M
    ratio = max((b - a) / a, a / (b - a))
    return ratio ** (d / 2) * M * N_value


# drifted kernel example --------------------------------------------------------

def drift_log_kernel(s, x, t, y):
    """Log of ``g_1(s, x - s, t, y - t)``, a d=1 Gaussian kernel with unit drift."""
    return GaussianKernel(1.0, 1).log(s, np.asarray(x) - s, t, np.asarray(y) - t)


def drift_bound_check(b: float, samples: int, rng: RngStream) -> float:
    """Largest ``log p - log(b^(-1/2) e^{b(t-s)/(4(1-b))} g_b)`` over samples (<= 0 expected)."""
    if not 0 < b < 1:
        raise DomainError("drift bound needs 0 < b < 1")
    gen = rng.generator()
    s = gen.uniform(-2, 2, samples)
    tau = np.exp(gen.uniform(math.log(1e-3), math.log(20.0), samples))
    x = gen.normal(0, 2, samples)
    # a third of the samples sit on the maximizing ray y - x = tau / (1 - b)
    r = np.where(np.arange(samples) % 3 == 0, tau / (1 - b), gen.normal(tau, 3 * np.sqrt(tau)))
    t, y = s + tau, x + r
    lhs = drift_log_kernel(s, x, t, y)
    rhs = -0.5 * math.log(b) + b * tau / (4 * (1 - b)) + GaussianKernel(b, 1).log(s, x, t, y)
    return float(np.max(lhs - rhs))


def drift_no_gaussian_bound(c1_grid, c2_grid) -> list[dict]:
    """For each ``(c1, c2)`` find a point with ``p > c1 g_{c2}`` along the drift."""
    out = []
    for c1 in c1_grid:
        for c2 in c2_grid:
            found = None
            for tau in (1.0, 10.0, 100.0, 1e3, 1e4, 1e5):
                r = tau / (1 - c2) if c2 < 1 else 4.0 * tau
                lp = float(drift_log_kernel(0.0, 0.0, tau, r))
                lg = math.log(c1) + float(GaussianKernel(c2, 1).log(0.0, 0.0, tau, r))
                if lp > lg:
                    found = {"c1": c1, "c2": c2, "t_minus_s": tau, "y_minus_x": r,
                             "log_margin": lp - lg}
                    break
            out.append(found or {"c1": c1, "c2": c2, "t_minus_s": None})
    return out
