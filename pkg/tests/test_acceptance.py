"""The ten acceptance criteria at their stated tolerances and time budgets."""

import math
import time

import numpy as np
import pytest

from heatpert.bounds import (
    optimize_eps, standard_eps_choices, bound_factor, verify_membership,
)
from heatpert.fourg import (
    E_HALF, SIMPLE_RATIO, compute_L, compute_M, four_g_log_sides, log_ratio_at, maximize_gap,
    reduced_to_configuration, sample_4g, tightness_witness,
)
from heatpert.kato import C1, Potential, c0, heat_potential, kato_I, lhs_psup
from heatpert.kernels import GaussianKernel, ck_residual, three_g_failure, three_g_radius, total_mass
from heatpert.numerics import RngStream, sphere_area
from heatpert.series import (
    SeriesRequest, feynman_kac_mc, left_inverse_residual, phi_catalog, term_grid, tilde_p,
)
from heatpert.superadd import SuperadditiveQ, eval_Q, regularize, split

SEED = 0  # the CLI default seed


def test_01_L_threshold(acceptance):
    t0 = time.perf_counter()
    equal = [abs(compute_L(a)[0] - math.log1p(a)) for a in (E_HALF, 2.0, 3.0, 10.0)]
    above = [compute_L(a)[0] - math.log1p(a) for a in (0.5, 1.0)]
    dt = time.perf_counter() - t0
    ok = max(equal) <= 1e-8 and min(above) >= 1e-6 and dt < 1.0
    acceptance(1, ok, dt, f"max |L-ln(1+a)|={max(equal):.2e}, min excess={min(above):.3e}")
    assert ok


def test_02_M_simple_formula(acceptance):
    t0 = time.perf_counter()
    gen = RngStream(SEED, 2).generator()
    worst = 0.0
    for _ in range(20):
        ratio = gen.uniform(SIMPLE_RATIO, 0.999)
        b = float(np.exp(gen.uniform(-2, 2)))
        d = int(gen.integers(1, 6))
        M = compute_M(ratio * b, b, d).M
        worst = max(worst, abs(M - (1 - ratio) ** (-d)) / M)
    dt = time.perf_counter() - t0
    ok = worst <= 1e-10 and dt < 1.0
    acceptance(2, ok, dt, f"max relative error {worst:.2e}")
    assert ok


def test_03_fourg_validity_and_optimality(acceptance):
    t0 = time.perf_counter()
    details, ok = [], True
    for i, (d, a, b) in enumerate([(1, 1.0, 2.0), (2, 3.0, 4.0), (3, 0.9, 1.0)]):
        const = compute_M(a, b, d)
        rng = RngStream(SEED, 30 + i)
        rep = sample_4g(a, b, d, 100_000, rng.child(0), const.M)
        gap = maximize_gap(const.alpha, const.L, rng.child(1), starts=64)["sup_gap"]
        w, _ = tightness_witness(const.alpha, const.L, const.tau_star)
        s, u, t, x, z, y = reduced_to_configuration(w, a, d)
        lhs, rhs = four_g_log_sides(a, b, d, s, u, t, x, z, y, 0.99 * const.M)
        violated = float(lhs) > float(rhs) and log_ratio_at(w, a, b, d, 0.99 * const.M) > 0
        ok &= rep["violations"] == 0 and -1e-6 <= gap <= 1e-6 and violated
        details.append(f"d={d}: viol={rep['violations']} sup={gap:.1e} scaled_violation={violated}")
    dt = time.perf_counter() - t0
    ok &= dt < 60.0
    acceptance(3, ok, dt, "; ".join(details))
    assert ok


def test_04_ck_and_normalization(acceptance):
    t0 = time.perf_counter()
    gen = RngStream(SEED, 4).generator()
    worst_ck = worst_mass = 0.0
    for i in range(100):
        d = 1 + i % 2
        k = GaussianKernel(float(np.exp(gen.uniform(-1.5, 1.5))), d)
        s = gen.uniform(-1, 1)
        t = s + float(np.exp(gen.uniform(-3, 2)))
        u = s + gen.uniform(0.05, 0.95) * (t - s)
        x = gen.normal(0, 1, d)
        y = x + gen.normal(0, 1, d) * math.sqrt(t - s)
        worst_ck = max(worst_ck, ck_residual(k, s, u, t, x, y))
        worst_mass = max(worst_mass, abs(total_mass(k, s, x, t) - 1.0))
    dt = time.perf_counter() - t0
    ok = worst_ck <= 1e-8 and worst_mass <= 1e-8 and dt < 30.0
    acceptance(4, ok, dt, f"max CK residual {worst_ck:.2e}, max |mass-1| {worst_mass:.2e}")
    assert ok


def test_05_closed_form_series(acceptance):
    t0 = time.perf_counter()
    k = GaussianKernel(1.0, 1)
    cases = [(Potential.constant(1.0), 0.0, 1.0, 0.0, 0.0),
             (Potential.constant(0.3), -1.0, 2.0, 0.5, -1.0),
             (Potential.time_only([1.0, 2.0], (0.2, 0.9)), 0.0, 1.0, 0.3, -0.2),
             (Potential.time_only([0.5, 0.0, 1.5], (-0.5, 1.5)), -1.0, 1.0, 0.0, 1.0)]
    worst = 0.0
    for q, s, t, x, y in cases:
        req = SeriesRequest(k, q, s, t, x, y, n_terms=6)
        Qv, p = q.time_integral(s, t), req.p_value
        for n, term in enumerate(term_grid(req).terms):
            exact = Qv**n / math.factorial(n) * p
            worst = max(worst, abs(term - exact) / exact)
        worst = max(worst, abs(tilde_p(req).partial_sum - math.exp(Qv) * p) / (math.exp(Qv) * p))
    dt = time.perf_counter() - t0
    ok = worst <= 1e-8 and dt < 60.0
    acceptance(5, ok, dt, f"max relative error {worst:.2e}")
    assert ok


def test_06_cross_engine(acceptance):
    t0 = time.perf_counter()
    gen = RngStream(SEED, 6).generator()
    k = GaussianKernel(1.0, 1)
    worst_z = worst_rel_se = 0.0
    for i in range(20):
        amp = float(gen.uniform(0.2, 1.5))
        radius = float(gen.uniform(0.3, 1.5))
        if i % 2:
            q = Potential.radial("gauss", 1, amp, radius)
        else:
            lo = float(gen.uniform(0.0, 0.4))
            q = Potential.separable([1.0, -0.5], (lo, lo + 0.6), "gauss", 1, amp, radius)
        t = float(gen.uniform(0.5, 1.5))
        x, y = float(gen.normal(0, 0.5)), float(gen.normal(0, 0.8))
        grid = tilde_p(SeriesRequest(k, q, 0.0, t, x, y)).partial_sum
        mc = feynman_kac_mc(SeriesRequest(k, q, 0.0, t, x, y, engine="monte_carlo",
                                          mc_paths=100_000, mc_steps=128,
                                          rng=RngStream(SEED, 600 + i)))
        worst_z = max(worst_z, abs(grid - mc.partial_sum) / mc.mc_std_error)
        worst_rel_se = max(worst_rel_se, mc.mc_std_error / mc.partial_sum)
    dt = time.perf_counter() - t0
    ok = worst_z <= 3.0 and worst_rel_se <= 0.01 and dt < 300.0
    acceptance(6, ok, dt, f"max |grid-mc|/se {worst_z:.2f}, max se/mean {worst_rel_se:.2e}")
    assert ok


def test_07_kato_constants(acceptance):
    t0 = time.perf_counter()
    worst_hp = 0.0
    for d in (3, 4, 5):
        for r in (0.3, 1.0, 2.5):
            x = np.zeros(d)
            x[0] = r
            exact = 1.0 * c0(d) * r ** (2 - d)
            worst_hp = max(worst_hp, abs(heat_potential(1.0, d, x) - exact) / exact)
    catalog = [Potential.constant(1.0, 3), Potential.radial("indicator", 3, 1.0, 1.0),
               Potential.radial("gauss", 3, 2.0, 0.5), Potential.radial("power", 3, 1.0, 1.0, 1.0),
               Potential.indicator_sum(3, 10)]
    worst_ratio = 0.0
    for h in (0.1, 1.0, 10.0):
        for q in catalog:
            rng = RngStream(SEED, 7)
            lhs = lhs_psup(q, 1.0, h, rng=rng)
            worst_ratio = max(worst_ratio, lhs / (C1(3, 1.0) * kato_I(q, math.sqrt(h), rng=rng).value))
    example = Potential.indicator_sum(3, 10)
    sig = sphere_area(3)
    lows = [kato_I(example, delta, rng=RngStream(SEED, 8)).value / sig for delta in (1.0, 0.5, 0.2)]
    I1 = kato_I(example, 1.0, rng=RngStream(SEED, 8)).value
    dt = time.perf_counter() - t0
    ok = (worst_hp <= 1e-6 and worst_ratio <= 1.0 and min(lows) >= 0.95
          and math.isfinite(I1) and dt < 120.0)
    acceptance(7, ok, dt, f"heat potential rel err {worst_hp:.1e}; max lhs/(C1 I) {worst_ratio:.3f}; "
               f"min I_delta/sigma {min(lows):.4f}; I_1={I1:.4f}")
    assert ok


def test_08_domination(acceptance):
    t0 = time.perf_counter()
    q0, eta = 0.5, 0.1
    gb, ga = GaussianKernel(1.0, 1), GaussianKernel(0.9, 1)
    C = math.sqrt(1.0 / 0.9)
    Q = SuperadditiveQ.linear(q0 * C)
    rng = RngStream(SEED, 8)
    rec = verify_membership(gb, ga, Potential.constant(q0), eta, Q, 100, rng=rng, C=C)
    worst = worst_exp = 0.0
    for e in rec.verified_at:
        s, x, t, y = e["s"], np.array(e["x"]), e["t"], np.array(e["y"])
        res = tilde_p(SeriesRequest(gb, Potential.constant(q0), s, t, x, y))
        pstar = float(ga(s, x, t, y))
        Qv = eval_Q(Q, s, t)
        epss = standard_eps_choices(eta) + [optimize_eps(C, eta, Qv)[0]]
        if eta not in epss:
            epss.append(eta)
        top = max(res.partial_sums)
        for eps in epss:
            worst = max(worst, top / (bound_factor(C, eta, eps, Qv) * pstar))
        # C = 1, p* = p: the exponential bound
        worst_exp = max(worst_exp, top / (math.exp(q0 * (t - s)) * float(gb(s, x, t, y))))
    dt = time.perf_counter() - t0
    ok = worst <= 1.0 and worst_exp <= 1.0 + 1e-12 and dt < 120.0
    acceptance(8, ok, dt, f"max partial/bound {worst:.3f}; max partial/(e^Q p) {worst_exp:.15f}")
    assert ok


def test_09_splitting(acceptance):
    t0 = time.perf_counter()
    gen = RngStream(SEED, 9).generator()
    worst, idem, below = 0.0, True, True
    for i in range(100):
        kind = i % 3
        beta = float(gen.uniform(0.1, 3.0)) if kind != 1 else 0.0
        atoms = () if kind == 0 else tuple(
            (float(gen.uniform(-2, 2)), float(gen.uniform(0.05, 1.5)))
            for _ in range(int(gen.integers(1, 5))))
        conv = "open" if gen.uniform() < 0.5 else "half_open_left_closed"
        Q = SuperadditiveQ(beta, atoms, interval_convention=conv)
        Qm = regularize(Q)
        idem &= regularize(Qm) == Qm
        s = float(gen.uniform(-3, 0))
        t = s + float(gen.uniform(0.1, 5))
        theta = float(gen.uniform(0.05, 2.0))
        sp = split(Qm, s, t, theta)
        for lo, hi in zip(sp.breakpoints[:-1], sp.breakpoints[1:]):
            worst = max(worst, eval_Q(Qm, lo, hi) / theta)
        for _ in range(10):
            a, b = np.sort(gen.uniform(-3, 3, 2))
            below &= Qm(a, b) <= Q(a, b)
    dt = time.perf_counter() - t0
    ok = worst <= 1.0 + 1e-12 and idem and below and dt < 5.0
    acceptance(9, ok, dt, f"max piece/theta {worst:.15f}; idempotent={idem}; Q- <= Q: {below}")
    assert ok


def test_10_three_g_and_left_inverse(acceptance):
    t0 = time.perf_counter()
    worst_rel, ok_level = 0.0, True
    for a, d, t in [(1.0, 1, 1.0), (2.0, 2, 0.5), (0.5, 3, 2.0)]:
        for r in (0.0, 0.7, 2.0):
            y = np.zeros(d)
            y[0] = r
            direct, closed = three_g_failure(a, d, t, y)
            worst_rel = max(worst_rel, abs(direct - closed) / closed)
        radius = three_g_radius(a, d, t, 1e6)
        y = np.zeros(d)
        y[0] = radius * (1 + 1e-9)
        ok_level &= three_g_failure(a, d, t, y)[0] > 1e6 * (1 - 1e-9)
    worst_li = max(left_inverse_residual(1.0, 0.0, 0.0, phi, alternative=alt)
                   for phi in phi_catalog(0.0, 0.0) for alt in (False, True))
    dt = time.perf_counter() - t0
    ok = worst_rel <= 1e-12 and ok_level and worst_li <= 1e-6 and dt < 60.0
    acceptance(10, ok, dt, f"3G rel err {worst_rel:.1e}; reaches 1e6: {ok_level}; "
               f"max left-inverse residual {worst_li:.1e}")
    assert ok
