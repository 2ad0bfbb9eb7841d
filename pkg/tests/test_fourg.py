import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from heatpert.errors import DomainError
from heatpert.fourg import (
    E_HALF, ReducedPoint, compute_L, compute_M, log_ratio_at, maximize_gap, reduced_gap,
    sample_4g, sharpness_search, tightness_witness, verify_4g_pointwise,
)
from heatpert.numerics import RngStream


@pytest.mark.parametrize("alpha", [E_HALF, 2.0, 3.0, 10.0])
def test_L_equals_log1p_alpha_above_threshold(alpha):
    L, _ = compute_L(alpha)
    assert abs(L - math.log1p(alpha)) <= 1e-8


@pytest.mark.parametrize("alpha", [0.5, 1.0])
def test_L_exceeds_log1p_alpha_below_threshold(alpha):
    L, _ = compute_L(alpha)
    assert L - math.log1p(alpha) >= 1e-6


def test_alpha_three_gives_log_four():
    assert compute_L(3.0)[0] == pytest.approx(math.log(4.0), abs=1e-12)


def test_M_simple_formula():
    c = compute_M(0.9, 1.0, 1)
    assert c.M == pytest.approx(10.0, rel=1e-12)
    assert c.simple_formula == pytest.approx(10.0)


def test_M_domain():
    with pytest.raises(DomainError):
        compute_M(1.0, 1.0, 1)
    with pytest.raises(DomainError):
        compute_M(0.5, 1.0, 0)


def test_witness_is_tight():
    for alpha in (0.5, 1.0, 3.0):
        p, g = tightness_witness(alpha)
        assert abs(g) <= 1e-6


def test_gap_nonpositive_at_random_points(rng):
    alpha = 0.7
    L, _ = compute_L(alpha)
    gen = rng.generator()
    for _ in range(500):
        p = ReducedPoint(float(np.exp(gen.uniform(-4, 4))), float(gen.uniform(0, 20)),
                         float(gen.uniform(0, 20)))
        assert reduced_gap(alpha, p, L) <= 1e-12


def test_maximize_gap_near_zero(rng):
    L, _ = compute_L(1.0)
    res = maximize_gap(1.0, L, rng, starts=8)
    assert -1e-6 <= res["sup_gap"] <= 1e-6


def test_log_ratio_matches_gap():
    # the mapped collinear configuration reproduces the reduced gap
    a, b, d = 1.0, 2.0, 2
    c = compute_M(a, b, d)
    p = ReducedPoint(0.8, 1.3, 0.6)
    assert log_ratio_at(p, a, b, d, c.M) == pytest.approx(reduced_gap(c.alpha, p, c.L), abs=1e-10)


def test_pointwise_and_sampled(rng):
    c = compute_M(1.0, 2.0, 1)
    _, _, ok = verify_4g_pointwise(1.0, 2.0, 1, 0.0, 0.5, 1.0, 0.0, 0.3, 1.0, c.M)
    assert ok
    rep = sample_4g(1.0, 2.0, 1, 5000, rng, c.M)
    assert rep["violations"] == 0


def test_scaled_M_is_violated(rng):
    c = compute_M(3.0, 4.0, 2)
    p, _ = tightness_witness(c.alpha, c.L, c.tau_star)
    assert log_ratio_at(p, 3.0, 4.0, 2, 0.99 * c.M) > 0


def test_sharpness_search_finds_violation(rng):
    res = sharpness_search(1.0, 2.0, 1, 0.5, rng, tries=500)
    assert res is not None and res["log_lhs"] > res["log_rhs"]


@settings(max_examples=25, deadline=None)
@given(st.floats(1 / (1 + math.exp(-0.5)) + 1e-6, 0.999), st.integers(1, 5), st.floats(0.1, 10))
def test_simple_formula_property(ratio, d, b):
    c = compute_M(ratio * b, b, d)
    assert c.simple_formula is not None
    assert abs(c.M - c.simple_formula) / c.M <= 1e-10


@settings(max_examples=40, deadline=None)
@given(st.floats(0.05, 20.0), st.floats(-6, 6), st.floats(0, 30), st.floats(0, 30))
def test_gap_property(alpha, ltau, xi, eta):
    L, _ = compute_L(alpha)
    assert reduced_gap(alpha, ReducedPoint(math.exp(ltau), xi, eta), L) <= 1e-9
