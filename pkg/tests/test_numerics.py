import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from heatpert.errors import DomainError
from heatpert.numerics import (
    QuadConfig, RngStream, ball_volume, gauss_hermite, gauss_legendre, integrate_1d,
    ln_gamma, maximize_scalar, normal_rule, sphere_area,
)


def test_integrate_polynomial_exact():
    val, err = integrate_1d(lambda x: 3 * x**2, 0.0, 2.0)
    assert val == pytest.approx(8.0, rel=1e-14)
    assert err < 1e-10


def test_integrate_half_line_gaussian():
    val, _ = integrate_1d(lambda x: np.exp(-x * x), 0.0, math.inf)
    assert val == pytest.approx(math.sqrt(math.pi) / 2, rel=1e-10)


def test_integrate_whole_line():
    val, _ = integrate_1d(lambda x: np.exp(-x * x / 2), -math.inf, math.inf)
    assert val == pytest.approx(math.sqrt(2 * math.pi), rel=1e-10)


def test_integrate_sqrt_singularity():
    val, _ = integrate_1d(lambda x: 1 / np.sqrt(x), 0.0, 1.0, singular="lo")
    assert val == pytest.approx(2.0, rel=1e-10)


def test_integrate_scalar_callable():
    val, _ = integrate_1d(math.cos, 0.0, math.pi / 2, vectorized=False)
    assert val == pytest.approx(1.0, rel=1e-12)


def test_quadconfig_validation():
    with pytest.raises(DomainError):
        QuadConfig(abs_tol=0)
    with pytest.raises(DomainError):
        QuadConfig(hermite_order=1)


def test_hermite_moments():
    x, w = gauss_hermite(20)
    assert np.sum(w) == pytest.approx(math.sqrt(math.pi), rel=1e-14)
    z, v = normal_rule(20)
    assert np.sum(v) == pytest.approx(1.0, rel=1e-14)
    assert np.sum(v * z**2) == pytest.approx(1.0, rel=1e-13)
    assert np.sum(v * z**4) == pytest.approx(3.0, rel=1e-12)


def test_legendre_interval():
    x, w = gauss_legendre(10, 1.0, 3.0)
    assert np.sum(w) == pytest.approx(2.0)
    assert np.sum(w * x**5) == pytest.approx((3**6 - 1) / 6, rel=1e-13)


def test_maximize_scalar_sin():
    res = maximize_scalar(math.sin, 0.0, 3.0)
    assert res.argmax == pytest.approx(math.pi / 2, abs=1e-7)
    assert res.value == pytest.approx(1.0, abs=1e-14)


def test_maximize_rejects_bad_bracket():
    with pytest.raises(DomainError):
        maximize_scalar(math.sin, 1.0, 1.0)


def test_special_constants():
    assert sphere_area(3) == pytest.approx(4 * math.pi)
    assert sphere_area(2) == pytest.approx(2 * math.pi)
    assert ball_volume(3, 0.5) == pytest.approx(math.pi / 6)
    assert ln_gamma(5.0) == pytest.approx(math.log(24.0))
    with pytest.raises(DomainError):
        ln_gamma(0.0)


def test_rng_reproducible_and_distinct():
    a = RngStream(7).generator(3).standard_normal(5)
    b = RngStream(7).generator(3).standard_normal(5)
    c = RngStream(7).generator(4).standard_normal(5)
    assert np.array_equal(a, b)
    assert not np.array_equal(a, c)
    assert RngStream(7).child(1) != RngStream(7).child(2)


@settings(max_examples=40, deadline=None)
@given(st.floats(0.1, 5.0), st.floats(0.1, 5.0))
def test_integrate_exponential_property(lam, hi):
    val, _ = integrate_1d(lambda x: lam * np.exp(-lam * x), 0.0, hi)
    assert val == pytest.approx(-math.expm1(-lam * hi), rel=1e-10, abs=1e-14)


@settings(max_examples=30, deadline=None)
@given(st.floats(-3.0, 3.0), st.floats(0.2, 3.0))
def test_maximize_parabola_property(center, width):
    res = maximize_scalar(lambda x: -(x - center) ** 2, center - width, center + 2 * width)
    assert res.argmax == pytest.approx(center, abs=1e-5)
    assert res.value <= 0.0
