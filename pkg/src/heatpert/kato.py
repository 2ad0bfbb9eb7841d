"""Potentials and Kato-type functionals with explicit constants.

The ``Potential`` catalog covers the zero, constant, time-only, radial,
separable and indicator-sum potentials. Every variant has a flat numeric
encoding consumed by the accelerated kernels in ``_accel``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial import Polynomial
from scipy.special import gammaincc
from scipy.stats import ncx2

from . import _accel
from .errors import DomainError
from .numerics import (DEFAULT_QUAD, QuadConfig, RngStream, ball_volume, gauss_legendre,
                       integrate_1d, ln_gamma, maximize_scalar, sphere_area)

VARIANTS = ("zero", "constant", "time_only", "radial", "separable", "indicator_sum")
PROFILES = ("indicator", "gauss", "power")
_BIG = 1e300


@dataclass(frozen=True)
class Potential:
    """Nonnegative potential ``q(u, z) = amplitude * f(u) * U(z)``.

    ``f`` is a polynomial (ascending ``time_coefs``) restricted to
    ``time_window = [lo, hi)``; ``U`` is a radial profile about the origin:
    ``indicator`` (1 on ``|z| < radius``), ``gauss`` (``exp(-|z|^2/radius^2)``)
    or ``power`` (``|z|^-power`` on ``|z| < radius``). ``indicator_sum`` is
    ``sum_{n=2}^{n_max} n |z - n e|^-1`` on the balls ``B(n e, 1/n)``.
    """

    variant: str
    d: int = 1
    amplitude: float = 1.0
    time_coefs: tuple = ()
    time_window: tuple = (-math.inf, math.inf)
    profile: str = ""
    radius: float = 1.0
    power: float = 1.0
    n_max: int = 50
    direction: tuple = ()
    _params: np.ndarray = field(default=None, init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise DomainError(f"unknown potential variant {self.variant!r}")
        if int(self.d) != self.d or self.d < 1:
            raise DomainError("dimension must be a positive integer")
        if not (self.amplitude >= 0 and math.isfinite(self.amplitude)):
            raise DomainError("amplitude must be finite and nonnegative")
        coefs = tuple(float(c) for c in self.time_coefs)
        object.__setattr__(self, "time_coefs", coefs)
        lo, hi = (float(v) for v in self.time_window)
        object.__setattr__(self, "time_window", (lo, hi))
        if self.variant in ("time_only", "separable"):
            if not coefs or len(coefs) > _accel.N_COEF:
                raise DomainError(f"time polynomial needs 1..{_accel.N_COEF} coefficients")
            if not lo < hi:
                raise DomainError("time window must satisfy lo < hi")
            if len(coefs) > 1 and not (math.isfinite(lo) and math.isfinite(hi)):
                raise DomainError("a non-constant time polynomial needs a bounded window")
            self._check_time_nonneg()
        if self.variant in ("radial", "separable"):
            if self.profile not in PROFILES:
                raise DomainError(f"radial profile must be one of {PROFILES}")
            if not self.radius > 0:
                raise DomainError("radius must be positive")
            if self.profile == "power" and not self.power > 0:
                raise DomainError("power must be positive")
        if self.variant == "indicator_sum":
            if self.n_max < 2:
                raise DomainError("n_max must be >= 2")
            e = np.asarray(self.direction if self.direction else np.eye(self.d)[0], float)
            if e.shape != (self.d,) or not math.isclose(float(e @ e), 1.0, rel_tol=1e-12):
                raise DomainError("direction must be a unit vector of length d")
            object.__setattr__(self, "direction", tuple(e))
        object.__setattr__(self, "_params", self._encode())

    # constructors -----------------------------------------------------
    @classmethod
    def zero(cls, d: int = 1):
        return cls("zero", d, amplitude=0.0)

    @classmethod
    def constant(cls, q0: float, d: int = 1):
        return cls("constant", d, amplitude=q0)

    @classmethod
    def time_only(cls, coefs, window=(-math.inf, math.inf), d: int = 1, amplitude: float = 1.0):
        return cls("time_only", d, amplitude, tuple(coefs), tuple(window))

    @classmethod
    def radial(cls, profile: str, d: int, amplitude: float = 1.0, radius: float = 1.0,
               power: float = 1.0):
        return cls("radial", d, amplitude, profile=profile, radius=radius, power=power)

    @classmethod
    def separable(cls, coefs, window, profile: str, d: int, amplitude: float = 1.0,
                  radius: float = 1.0, power: float = 1.0):
        return cls("separable", d, amplitude, tuple(coefs), tuple(window), profile, radius, power)

    @classmethod
    def indicator_sum(cls, d: int, n_max: int = 50, direction=(), amplitude: float = 1.0):
        return cls("indicator_sum", d, amplitude, n_max=n_max, direction=tuple(direction))

    # structure --------------------------------------------------------
    @property
    def has_time_factor(self) -> bool:
        return self.variant in ("time_only", "separable")

    @property
    def has_space_factor(self) -> bool:
        return self.variant in ("radial", "separable", "indicator_sum")

    @property
    def time_independent(self) -> bool:
        return not self.has_time_factor

    @property
    def bounded(self) -> bool:
        if self.variant == "indicator_sum":
            return False
        return not (self.has_space_factor and self.profile == "power")

    def _poly(self) -> Polynomial:
        return Polynomial(self.time_coefs or (1.0,))

    def _check_time_nonneg(self):
        lo, hi = self.time_window
        if not (math.isfinite(lo) and math.isfinite(hi)):
            if self.time_coefs[0] < 0:
                raise DomainError("time factor must be nonnegative")
            return
        xs = lo + (hi - lo) * 0.5 * (1 - np.cos(np.linspace(0, math.pi, 257)))
        if np.min(self._poly()(xs)) < -1e-12 * max(1.0, np.max(np.abs(self.time_coefs))):
            raise DomainError("time factor must be nonnegative on its window")

    def _encode(self) -> np.ndarray:
        p = np.zeros(_accel.S_DIR + self.d)
        p[_accel.AMP] = self.amplitude
        if self.has_time_factor:
            p[_accel.T_KIND] = 1.0
            lo, hi = self.time_window
            p[_accel.T_LO] = max(lo, -_BIG)
            p[_accel.T_HI] = min(hi, _BIG)
            p[_accel.T_COEF:_accel.T_COEF + len(self.time_coefs)] = self.time_coefs
        if self.variant == "zero":
            p[_accel.AMP] = 0.0
        if self.variant in ("radial", "separable"):
            p[_accel.S_KIND] = {"indicator": _accel.S_INDICATOR, "gauss": _accel.S_GAUSS,
                                "power": _accel.S_POWER}[self.profile]
            p[_accel.S_P1] = self.radius
            p[_accel.S_P2] = self.power
        if self.variant == "indicator_sum":
            p[_accel.S_KIND] = _accel.S_INDSUM
            p[_accel.S_NMAX] = self.n_max
            p[_accel.S_DIR:] = self.direction
        p.setflags(write=False)
        return p

    def encode(self) -> np.ndarray:
        return self._params

    def __call__(self, u, z):
        z = np.asarray(z, dtype=float)
        if self.d == 1 and (z.ndim == 0 or z.shape[-1] != 1):
            z = z[..., None]
        return _accel.q_eval(self._params, u, z)

    def time_factor(self, u):
        """``amplitude * f(u)`` for time-dependent variants (1 for the others)."""
        u = np.asarray(u, dtype=float)
        if not self.has_time_factor:
            return np.ones_like(u)
        lo, hi = self.time_window
        vals = np.maximum(self._poly()(u), 0.0)
        return np.where((u >= lo) & (u < hi), vals, 0.0)

    def profile_value(self, r):
        """Radial space factor ``U(r)``, amplitude included, for radial/separable."""
        r = np.asarray(r, dtype=float)
        if self.profile == "indicator":
            out = (r < self.radius).astype(float)
        elif self.profile == "gauss":
            out = np.exp(-(r / self.radius) ** 2)
        else:
            with np.errstate(divide="ignore"):
                out = np.where(r < self.radius, r ** (-self.power), 0.0)
        return self.amplitude * out

    def time_breaks(self, s: float, t: float) -> list[float]:
        """Points of ``(s, t)`` where the time factor may jump."""
        if not self.has_time_factor:
            return []
        return sorted(v for v in self.time_window if s < v < t)

    def time_integral(self, s: float, t: float) -> float:
        """``∫_s^t q du`` for spatially constant potentials (the closed-form Q)."""
        if self.has_space_factor:
            raise DomainError("time_integral needs a spatially constant potential")
        if self.variant == "zero" or t <= s:
            return 0.0
        if self.variant == "constant":
            return self.amplitude * (t - s)
        lo, hi = max(s, self.time_window[0]), min(t, self.time_window[1])
        if hi <= lo:
            return 0.0
        F = self._poly().integ()
        return self.amplitude * float(F(hi) - F(lo))

    def reflect_time(self, c: float) -> "Potential":
        """The potential ``(u, z) -> q(c - u, z)``."""
        if not self.has_time_factor:
            return self
        coefs = self._poly()(Polynomial([c, -1.0])).coef
        coefs = tuple(np.pad(coefs, (0, max(0, len(self.time_coefs) - len(coefs)))))
        lo, hi = self.time_window
        return Potential(self.variant, self.d, self.amplitude, coefs, (c - hi, c - lo),
                         self.profile, self.radius, self.power, self.n_max, self.direction)

    def to_dict(self) -> dict:
        out = {"variant": self.variant, "d": self.d, "amplitude": self.amplitude}
        if self.has_time_factor:
            out["time_coefs"] = list(self.time_coefs)
            out["time_window"] = [_json_float(v) for v in self.time_window]
        if self.variant in ("radial", "separable"):
            out.update(profile=self.profile, radius=self.radius)
            if self.profile == "power":
                out["power"] = self.power
        if self.variant == "indicator_sum":
            out.update(n_max=self.n_max, direction=list(self.direction))
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "Potential":
        allowed = {"variant", "d", "amplitude", "time_coefs", "time_window", "profile",
                   "radius", "power", "n_max", "direction", "q0"}
        unknown = set(data) - allowed
        if unknown:
            raise DomainError(f"unknown potential fields: {sorted(unknown)}")
        data = dict(data)
        if "q0" in data:
            data["amplitude"] = data.pop("q0")
        window = tuple(_parse_float(v) for v in data.pop("time_window", (-math.inf, math.inf)))
        return cls(
            variant=data["variant"], d=int(data.get("d", 1)),
            amplitude=float(data.get("amplitude", 0.0 if data["variant"] == "zero" else 1.0)),
            time_coefs=tuple(data.get("time_coefs", ())), time_window=window,
            profile=data.get("profile", ""), radius=float(data.get("radius", 1.0)),
            power=float(data.get("power", 1.0)), n_max=int(data.get("n_max", 50)),
            direction=tuple(data.get("direction", ())),
        )


def _json_float(v: float):
    if math.isinf(v):
        return "inf" if v > 0 else "-inf"
    return v


def _parse_float(v) -> float:
    return float(v)


@dataclass(frozen=True)
class KatoEstimate:
    delta: float
    value: float
    err_est: float
    method: str

    def __post_init__(self):
        if self.value < 0 or self.err_est < 0:
            raise DomainError("Kato estimate must be nonnegative")

    def to_dict(self) -> dict:
        return {"delta": self.delta, "value": self.value, "err_est": self.err_est,
                "method": self.method}


# constants -------------------------------------------------------------

def _need_d3(d: int):
    if int(d) != d or d < 3:
        raise DomainError(f"this constant needs d >= 3, got d={d}")


def c0(d: int) -> float:
    """Newtonian constant ``Γ(d/2 - 1) π^(-d/2) / 4``."""
    _need_d3(d)
    return math.exp(ln_gamma(d / 2 - 1) - 0.5 * d * math.log(math.pi)) / 4.0


def half_ball_volume(d: int) -> float:
    """``|B(0, 1/2)| = π^(d/2) / (Γ(d/2 + 1) 2^d)``."""
    return ball_volume(d, 0.5)


def C1(d: int, c: float) -> float:
    """Upper constant ``Γ(d/2-1) π^(-d/2) [c + 2^d d (d-2)] / 4``."""
    _need_d3(d)
    if not c > 0:
        raise DomainError("c must be positive")
    return c0(d) * (c + 2.0**d * d * (d - 2))


def heat_potential(c: float, d: int, x, cfg: QuadConfig | None = None) -> float:
    """``∫_0^∞ g_c(0, 0, u, x) du`` by improper quadrature."""
    _need_d3(d)
    cfg = cfg or DEFAULT_QUAD
    x = np.atleast_1d(np.asarray(x, dtype=float))
    r2 = float(x @ x)
    if r2 == 0.0:
        raise DomainError("heat potential is infinite at x = 0")

    def f(u):
        with np.errstate(divide="ignore", over="ignore"):
            logv = -0.5 * d * np.log(4 * math.pi * u / c) - c * r2 / (4.0 * u)
        return np.where(u > 0, np.exp(logv), 0.0)

    # the scale r^2 c / 4 puts the bulk of the integrand near u = 1
    scale = c * r2 / 4.0
    val, _ = integrate_1d(lambda v: f(scale * v) * scale, 0.0, math.inf, cfg, singular="hi")
    return val


def truncated_heat_potential(c: float, d: int, r, tau: float):
    """``∫_0^τ g_c(0, 0, u, x) du`` at ``|x| = r`` via the upper incomplete gamma."""
    _need_d3(d)
    r = np.asarray(r, dtype=float)
    with np.errstate(divide="ignore"):
        return c * c0(d) * r ** (2.0 - d) * gammaincc(d / 2 - 1, c * r * r / (4.0 * tau))


def prop_nice_bound(c: float, tau: float, r: float, I_r: float, d: int) -> float:
    """``(c c0(d) + τ / (r^2 |B(0,1/2)|)) I_r``."""
    _need_d3(d)
    if min(c, tau, r) <= 0 or I_r < 0:
        raise DomainError("prop_nice_bound needs positive c, tau, r and I_r >= 0")
    return (c * c0(d) + tau / (r * r * half_ball_volume(d))) * I_r


# indicator-sum geometry -----------------------------------------------------

def _newton_shell(rho, D, d, cutoff):
    """``∫ sin^(d-2)θ |z-x|^(2-d) 1{|z-x|<cutoff} dθ`` for the axial geometry.

    ``z`` sits at distance ``rho`` from a ball centre and ``x`` at distance
    ``D`` from it; the integral is written in the distance variable.
    """
    lo = np.abs(rho - D)
    hi = np.minimum(rho + D, cutoff)
    out = np.zeros_like(rho)
    ok = hi > lo
    if d == 3:
        out[ok] = (hi[ok] - lo[ok]) / (rho[ok] * D)
        return out
    return _shell_quad(rho, D, d, lo, hi, ok, lambda s: s ** (2.0 - d))


def _shell_quad(rho, D, d, lo, hi, ok, kernel, n=96):
    x, w = gauss_legendre(n, 0.0, 1.0)
    out = np.zeros_like(rho)
    r = rho[ok][:, None]
    a = lo[ok][:, None]
    span = (hi[ok] - lo[ok])[:, None]
    # squared map clusters nodes at both ends of the distance range
    v = 0.5 - 0.5 * np.cos(math.pi * x)
    jac = 0.5 * math.pi * np.sin(math.pi * x)
    s = a + span * v[None, :]
    cos_t = np.clip((r * r + D * D - s * s) / (2 * r * D), -1.0, 1.0)
    sin2 = np.maximum(1.0 - cos_t * cos_t, 0.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        f = s / (r * D) * sin2 ** ((d - 3) / 2.0) * kernel(s)
    f = np.where(np.isfinite(f), f, 0.0)
    out[ok] = np.sum(f * (span * jac[None, :] * w[None, :]), axis=1)
    return out


def _ball_term(m: int, D: float, d: int, cutoff: float, kernel, radial_kernel_int, cfg):
    """``∫_{B(c_m, 1/m)} m |z - c_m|^-1 K(|z - x|) 1{|z-x| < cutoff} dz`` with ``|x - c_m| = D``."""
    R = 1.0 / m
    if D < 1e-14:
        return m * sphere_area(d) * radial_kernel_int(min(R, cutoff))
    if D - R >= cutoff:
        return 0.0
    sig = sphere_area(d - 1)

    def outer(rho):
        rho = np.atleast_1d(rho)
        return rho ** (d - 2) * kernel(rho, D)

    pieces = [0.0, R] if not (0 < D < R) else [0.0, D, R]
    total = 0.0
    for a, b in zip(pieces[:-1], pieces[1:]):
        val, _ = integrate_1d(outer, a, b, cfg, singular="both" if d > 3 else None)
        total += val
    return m * sig * total


def _indsum_candidates(U: Potential, rng: RngStream, n_random: int = 64):
    gen = rng.generator()
    centres = [float(n) for n in range(2, U.n_max + 1)]
    centres += list(gen.uniform(1.5, U.n_max + 0.5, n_random))
    return centres


def _indsum_at(U: Potential, tau: float, d: int, cutoff: float, kernel, radial_int, cfg):
    total = 0.0
    for m in range(2, U.n_max + 1):
        D = abs(m - tau)
        if D - 1.0 / m >= cutoff:
            continue
        total += _ball_term(m, D, d, cutoff, kernel, radial_int, cfg)
    return U.amplitude * total


def kato_I(U: Potential, delta: float, cfg: QuadConfig | None = None,
           rng: RngStream | None = None) -> KatoEstimate:
    """``sup_x ∫_{|z-x|<δ} U(z) |z-x|^(2-d) dz``.

    Radial catalog profiles are radially decreasing, so the sup sits at the
    origin and a 1-D radial integral is exact. For the indicator sum the sup
    is taken over a candidate set (ball centres and seeded random points on
    the axis), which bounds the true sup from below.
    """
    cfg = cfg or DEFAULT_QUAD
    d = U.d
    _need_d3(d)
    if not delta > 0:
        raise DomainError("delta must be positive")
    if not U.time_independent:
        raise DomainError("kato_I needs a time-independent potential")
    sig = sphere_area(d)
    if U.variant == "zero":
        return KatoEstimate(delta, 0.0, 0.0, "closed_form")
    if U.variant == "constant":
        return KatoEstimate(delta, U.amplitude * sig * delta**2 / 2.0, 0.0, "closed_form")
    if U.variant == "radial":
        hi = min(delta, U.radius) if U.profile != "gauss" else delta
        if U.profile == "power" and U.power >= 2:
            raise DomainError("power profile with power >= 2 has infinite Kato norm")
        val, err = integrate_1d(lambda r: U.profile_value(r) * r, 0.0, hi, cfg,
                                singular="lo" if U.profile == "power" else None)
        return KatoEstimate(delta, sig * val, sig * err, "radial_quadrature")

    def kernel(rho, D):
        return _newton_shell(rho, D, d, delta)

    best = 0.0
    for tau in _indsum_candidates(U, rng or RngStream(0)):
        best = max(best, _indsum_at(U, tau, d, delta, kernel, lambda c: c, cfg))
    return KatoEstimate(delta, best, cfg.rel_tol * best, "grid_sup_monte_carlo")


def _radial_moment(U: Potential, var: float, cfg: QuadConfig) -> float:
    """``E U(|Z|)`` for ``Z ~ N(0, var I_d)`` (spatial factor only)."""
    d = U.d
    if var <= 0:
        return float(U.profile_value(0.0)) if U.profile != "power" else math.inf
    lognorm = -(0.5 * d - 1) * math.log(2.0) - ln_gamma(d / 2) - 0.5 * d * math.log(var)

    def dens(r):
        with np.errstate(divide="ignore"):
            return np.exp(lognorm + (d - 1) * np.log(r) - r * r / (2 * var))

    sd = math.sqrt(var)
    hi = U.radius if U.profile != "gauss" else math.inf
    if U.profile == "gauss":
        hi = min(hi, 40.0 * sd + 10 * U.radius)
    else:
        hi = min(hi, 40.0 * sd)
    val, _ = integrate_1d(lambda r: U.profile_value(r) * dens(r), 0.0, hi, cfg,
                          singular="lo" if U.profile == "power" else None)
    return val


def lhs_psup(U: Potential, c: float, h: float, cfg: QuadConfig | None = None,
             rng: RngStream | None = None) -> float:
    """``sup_x ∫_0^h ∫ g_c(0, x, u, z) U(z) dz du`` for time-independent ``U``."""
    cfg = cfg or DEFAULT_QUAD
    if not (c > 0 and h > 0):
        raise DomainError("c and h must be positive")
    if not U.time_independent:
        raise DomainError("lhs_psup needs a time-independent potential")
    d = U.d
    if U.variant == "zero":
        return 0.0
    if U.variant == "constant":
        return U.amplitude * h
    if U.variant == "radial":
        if d >= 3:
            sig = sphere_area(d)
            hi = U.radius if U.profile != "gauss" else math.inf
            val, _ = integrate_1d(
                lambda r: truncated_heat_potential(c, d, r, h) * U.profile_value(r) * r ** (d - 1),
                0.0, hi, cfg, singular="lo")
            return sig * val
        val, _ = integrate_1d(lambda u: np.array([_radial_moment(U, 2 * ui / c, cfg) for ui in u]),
                              0.0, h, cfg)
        return val
    _need_d3(d)
    reach = math.sqrt(4.0 * h / c) * 8.0

    def kernel(rho, D):
        lo = np.abs(rho - D)
        hi = np.minimum(rho + D, reach)
        ok = hi > lo
        return _shell_quad(rho, D, d, lo, hi, ok,
                           lambda s: truncated_heat_potential(c, d, s, h))

    def radial_int(R):
        val, _ = integrate_1d(lambda r: truncated_heat_potential(c, d, r, h) * r ** (d - 2),
                              0.0, R, cfg, singular="lo")
        return val

    best = 0.0
    for tau in _indsum_candidates(U, rng or RngStream(0)):
        best = max(best, _indsum_at(U, tau, d, reach, kernel, radial_int, cfg))
    return best


def _window_sup(func, lo: float, hi: float) -> float:
    if not lo < hi:
        return func(lo)
    return maximize_scalar(func, lo, hi, grid=128, tol=1e-9).value


def parabolic_N(V: Potential, c: float, h: float, cfg: QuadConfig | None = None,
                rng: RngStream | None = None) -> float:
    """Forward plus backward parabolic Kato functional ``N_h^c(V)``."""
    fwd, bwd = parabolic_N_parts(V, c, h, cfg, rng)
    return fwd + bwd


def parabolic_N_parts(V: Potential, c: float, h: float, cfg: QuadConfig | None = None,
                      rng: RngStream | None = None) -> tuple[float, float]:
    cfg = cfg or DEFAULT_QUAD
    if not (c > 0 and h > 0):
        raise DomainError("c and h must be positive")
    if V.variant == "zero":
        return 0.0, 0.0
    if V.variant == "constant":
        return V.amplitude * h, V.amplitude * h
    if V.variant == "indicator_sum":
        val = lhs_psup(V, c, h, cfg, rng)
        return val, val
    if V.variant == "radial":
        def w(tau):
            return np.array([_radial_moment(V, 2.0 * ti / c, cfg) for ti in np.atleast_1d(tau)])
        fwd, _ = integrate_1d(w, 0.0, h, cfg)
        bwd, _ = integrate_1d(lambda u: w(-u), -h, 0.0, cfg)
        return fwd, bwd

    lo, hi = V.time_window
    if not (math.isfinite(lo) and math.isfinite(hi)):
        lo, hi = 0.0, h
    if V.variant == "time_only":
        def fwd_at(s):
            return V.time_integral(s, s + h)

        def bwd_at(t):
            return V.time_integral(t - h, t)
    else:
        def moment(tau):
            return np.array([_radial_moment(V, 2.0 * ti / c, cfg) if ti > 0 else
                             float(V.profile_value(0.0)) for ti in np.atleast_1d(tau)])

        def fwd_at(s):
            a, b = max(s, lo), min(s + h, hi)
            if b <= a:
                return 0.0
            return integrate_1d(lambda u: V.time_factor(u) * moment(u - s), a, b, cfg)[0]

        def bwd_at(t):
            a, b = max(t - h, lo), min(t, hi)
            if b <= a:
                return 0.0
            return integrate_1d(lambda u: V.time_factor(u) * moment(t - u), a, b, cfg)[0]

    fwd = _window_sup(fwd_at, lo - h, hi)
    bwd = _window_sup(bwd_at, lo, hi + h)
    return fwd, bwd


# convolution bounds -----------------------------------------------------------

def _kernel_value(spec: dict, d: int, r: float) -> float:
    kind = spec.get("kind")
    if kind == "zero":
        return 0.0
    if kind == "heat":
        return spec["c"] * c0(d) * r ** (2.0 - d)
    if kind == "truncated_heat":
        return float(truncated_heat_potential(spec["c"], d, r, spec["tau"]))
    raise DomainError(f"unknown kernel spec {spec!r}")


def _kernel_mass(spec: dict, d: int, cfg: QuadConfig) -> float:
    kind = spec.get("kind")
    if kind == "zero":
        return 0.0
    if kind == "heat":
        return math.inf
    sig = sphere_area(d)
    val, _ = integrate_1d(lambda r: truncated_heat_potential(spec["c"], d, r, spec["tau"])
                          * r ** (d - 1), 0.0, math.inf, cfg, singular="lo")
    return sig * val


def convolution_bounds(r: float, d: int, k_spec: dict, K_spec: dict,
                             cfg: QuadConfig | None = None) -> tuple[float, float, float]:
    """``(c1, c2, c3)`` with ``c1 = ∫k``, ``c2 = K(r e_1) |B(0, r/2)|``, ``c3 = 1 + c1/c2``."""
    cfg = cfg or DEFAULT_QUAD
    _need_d3(d)
    if not r > 0:
        raise DomainError("r must be positive")
    c1 = _kernel_mass(k_spec, d, cfg)
    c2 = _kernel_value(K_spec, d, r) * ball_volume(d, r / 2)
    c3 = 1.0 if (c2 == 0.0 or math.isinf(c2)) else 1.0 + c1 / c2
    return c1, c2, c3


def ball_average_margin(r: float, d: int, radii) -> float:
    """``min_x [f * 1_{B(0,r)}](x) - |B(0,r/2)| f(x)`` for ``f(z) = exp(-|z|^2/2)``.

    ``f * 1_{B(0,r)}(x)`` equals ``(2π)^(d/2) P(|Z - x| < r)`` for a standard
    normal ``Z``, a noncentral chi-square probability.
    """
    radii = np.asarray(radii, dtype=float)
    conv = (2 * math.pi) ** (d / 2) * ncx2.cdf(r * r, d, np.maximum(radii**2, 1e-300))
    return float(np.min(conv - ball_volume(d, r / 2) * np.exp(-0.5 * radii**2)))
