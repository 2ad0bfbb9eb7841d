"""Superadditive interval functions Q(s, t) in structural form.

A ``SuperadditiveQ`` is ``beta (t - s)`` plus the mass that a measure (point
atoms and a nonnegative step density) gives to the interval between ``s``
and ``t``. With the ``open`` convention the interval is ``(s, t)`` and Q is
regular (right-continuous in s, left-continuous in t); ``half_open`` uses
``[s, t)``. Regularization and splitting are exact on this representation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import DomainError, InvariantViolation
from .numerics import RngStream

OPEN = "open"
HALF_OPEN = "half_open_left_closed"
_CONVENTIONS = (OPEN, HALF_OPEN)


@dataclass(frozen=True)
class SuperadditiveQ:
    beta: float = 0.0
    atoms: tuple = ()
    # step density: value density[i] on [knots[i], knots[i+1])
    knots: tuple = ()
    density: tuple = ()
    interval_convention: str = OPEN

    def __post_init__(self):
        if not self.beta >= 0:
            raise DomainError("linear slope must be nonnegative")
        atoms = tuple(sorted((float(loc), float(m)) for loc, m in self.atoms))
        if any(m <= 0 for _, m in atoms):
            raise DomainError("atom masses must be positive")
        object.__setattr__(self, "atoms", atoms)
        knots = tuple(float(k) for k in self.knots)
        dens = tuple(float(v) for v in self.density)
        if knots or dens:
            if len(knots) != len(dens) + 1 or list(knots) != sorted(knots):
                raise DomainError("step density needs increasing knots, one more than values")
            if any(v < 0 for v in dens):
                raise DomainError("density values must be nonnegative")
        object.__setattr__(self, "knots", knots)
        object.__setattr__(self, "density", dens)
        if self.interval_convention not in _CONVENTIONS:
            raise DomainError(f"unknown interval convention {self.interval_convention!r}")

    @classmethod
    def linear(cls, beta: float) -> "SuperadditiveQ":
        return cls(beta=beta)

    @classmethod
    def measure(cls, atoms=(), knots=(), density=(), convention: str = OPEN):
        return cls(atoms=tuple(atoms), knots=tuple(knots), density=tuple(density),
                   interval_convention=convention)

    @property
    def variant(self) -> str:
        parts = (self.beta > 0, bool(self.atoms) or bool(self.density))
        if all(parts):
            return "composite"
        if parts[1]:
            return "measure"
        return "linear"

    def __call__(self, s: float, t: float) -> float:
        return eval_Q(self, s, t)

    def _continuous(self, s: float, t: float) -> float:
        val = self.beta * (t - s)
        for i, v in enumerate(self.density):
            lo = max(s, self.knots[i])
            hi = min(t, self.knots[i + 1])
            if hi > lo:
                val += v * (hi - lo)
        return val

    def _atom_mass(self, s: float, t: float) -> float:
        if self.interval_convention == OPEN:
            return math.fsum(m for loc, m in self.atoms if s < loc < t)
        return math.fsum(m for loc, m in self.atoms if s <= loc < t)

    def scaled(self, factor: float) -> "SuperadditiveQ":
        """``factor * Q``; a zero factor drops the measure part entirely."""
        if not factor >= 0:
            raise DomainError("scale factor must be nonnegative")
        if factor == 0:
            return SuperadditiveQ(interval_convention=self.interval_convention)
        return SuperadditiveQ(self.beta * factor, tuple((loc, m * factor) for loc, m in self.atoms),
                              self.knots, tuple(v * factor for v in self.density),
                              self.interval_convention)

    def to_dict(self) -> dict:
        return {
            "variant": self.variant,
            "beta": self.beta,
            "atoms": [list(a) for a in self.atoms],
            "knots": list(self.knots),
            "density": list(self.density),
            "interval_convention": self.interval_convention,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "SuperadditiveQ":
        allowed = {"variant", "beta", "atoms", "knots", "density", "interval_convention"}
        unknown = set(data) - allowed
        if unknown:
            raise DomainError(f"unknown Q fields: {sorted(unknown)}")
        return cls(
            beta=float(data.get("beta", 0.0)),
            atoms=tuple(tuple(a) for a in data.get("atoms", ())),
            knots=tuple(data.get("knots", ())),
            density=tuple(data.get("density", ())),
            interval_convention=data.get("interval_convention", OPEN),
        )


@dataclass(frozen=True)
class OpaqueQ:
    """Adapter wrapping an arbitrary callable; supported by checks only."""

    func: Callable[[float, float], float] = field(compare=False)

    def __call__(self, s: float, t: float) -> float:
        return 0.0 if s >= t else float(self.func(s, t))


def eval_Q(Q, s: float, t: float) -> float:
    if s >= t:
        return 0.0
    if isinstance(Q, OpaqueQ):
        return Q(s, t)
    return Q._continuous(s, t) + Q._atom_mass(s, t)


def regularize(Q: SuperadditiveQ) -> SuperadditiveQ:
    """Exact ``Q^-(s,t) = lim_{h->0+} Q(s+h, t-h)``: atoms move to the open convention."""
    if isinstance(Q, OpaqueQ):
        raise DomainError("regularize needs the structural form of Q")
    if Q.interval_convention == OPEN:
        return Q
    return SuperadditiveQ(Q.beta, Q.atoms, Q.knots, Q.density, OPEN)


@dataclass(frozen=True)
class Splitting:
    breakpoints: tuple
    theta: float

    @property
    def k(self) -> int:
        return len(self.breakpoints) - 1


def _first_reach(Q: SuperadditiveQ, s: float, t: float, level: float) -> float:
    """``inf{u in [s, t]: Q(s, u) >= level}`` for an open-convention Q.

    ``u -> Q(s, u)`` is piecewise linear with upward jumps just after atoms,
    so the infimum is found by walking the breakpoints.
    """
    points = {s, t}
    points.update(loc for loc, _ in Q.atoms if s < loc < t)
    points.update(k for k in Q.knots if s < k < t)
    pts = sorted(points)
    for lo, hi in zip(pts[:-1], pts[1:]):
        at_lo_right = Q(s, lo) + sum(m for loc, m in Q.atoms if loc == lo and loc > s)
        if at_lo_right >= level:
            return lo
        slope = Q.beta + _density_at(Q, 0.5 * (lo + hi))
        at_hi = Q(s, hi)
        if at_hi >= level:
            if slope <= 0:
                return hi
            return min(hi, lo + (level - at_lo_right) / slope)
    return t


def _density_at(Q, u):
    for i, v in enumerate(Q.density):
        if Q.knots[i] <= u < Q.knots[i + 1]:
            return v
    return 0.0


def _bisect_reach(Q, s, t, level, rtol=1e-12):
    lo, hi = s, t
    while hi - lo > rtol * (t - s):
        mid = 0.5 * (lo + hi)
        if Q(s, mid) >= level:
            hi = mid
        else:
            lo = mid
    return hi


def split(Q, s: float, t: float, theta: float) -> Splitting:
    """Breakpoints ``s = s_0 <= ... <= s_k = t`` with ``Q(s_{i-1}, s_i) <= theta``.

    ``k = ceil(Q(s,t)/theta)`` and ``s_i = inf{u: Q(s,u) >= i theta}``.
    Structural Q is inverted exactly; an opaque Q falls back to bisection.
    """
    if not theta > 0:
        raise DomainError("theta must be positive")
    if not s <= t:
        raise DomainError("split requires s <= t")
    total = eval_Q(Q, s, t)
    if total == 0.0:
        return Splitting((s, t), theta)
    k = max(1, math.ceil(total / theta))
    if (k - 1) * theta >= total:
        k -= 1
    bps = [s]
    for i in range(1, k):
        if isinstance(Q, OpaqueQ):
            u = _bisect_reach(Q, s, t, i * theta)
        else:
            u = _first_reach(Q, s, t, i * theta)
        bps.append(max(u, bps[-1]))
    bps.append(t)
    for lo, hi in zip(bps[:-1], bps[1:]):
        if eval_Q(Q, lo, hi) > theta * (1.0 + 1e-12):
            raise InvariantViolation(
                f"split postcondition failed on [{lo}, {hi}]: Q={eval_Q(Q, lo, hi)!r} > "
                f"theta={theta!r}; regularize Q first", witness={"interval": (lo, hi)})
    return Splitting(tuple(bps), theta)


def _sample_triples(Q, samples: int, gen: np.random.Generator):
    locs = [loc for loc, _ in getattr(Q, "atoms", ())] + list(getattr(Q, "knots", ()))
    lo = min(locs, default=0.0) - 1.0
    hi = max(locs, default=1.0) + 1.0
    pts = np.sort(gen.uniform(lo, hi, (samples, 3)), axis=1)
    if locs:
        # put the middle point exactly on an atom or knot for a third of the samples
        m = samples // 3
        pts[:m, 1] = gen.choice(locs, m)
        pts[:m, 0] = pts[:m, 1] - gen.uniform(0.0, 1.0, m)
        pts[:m, 2] = pts[:m, 1] + gen.uniform(0.0, 1.0, m)
    keep = (pts[:, 0] < pts[:, 1]) & (pts[:, 1] < pts[:, 2])
    return pts[keep]


def check_superadditive(Q, samples: int, rng: RngStream) -> float:
    """Largest sampled ``Q(s,u) + Q(u,t) - Q(s,t)`` over ``s < u < t``."""
    pts = _sample_triples(Q, samples, rng.generator())
    worst = -math.inf
    for s, u, t in pts:
        worst = max(worst, eval_Q(Q, s, u) + eval_Q(Q, u, t) - eval_Q(Q, s, t))
    return worst
