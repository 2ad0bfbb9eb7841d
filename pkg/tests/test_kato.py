import math

import numpy as np
import pytest

from heatpert.errors import DomainError
from heatpert.kato import (
    C1, Potential, ball_average_margin, c0, half_ball_volume, heat_potential, kato_I,
    convolution_bounds, lhs_psup, parabolic_N, truncated_heat_potential,
)
from heatpert.numerics import ball_volume, sphere_area


def test_constants():
    assert c0(3) == pytest.approx(1 / (4 * math.pi), rel=1e-14)
    assert C1(4, 2.0) == pytest.approx(130 / (4 * math.pi**2), rel=1e-13)
    assert half_ball_volume(3) == pytest.approx(math.pi / 6)
    with pytest.raises(DomainError):
        c0(2)


@pytest.mark.parametrize("d", [3, 4, 5])
def test_heat_potential_closed_form(d):
    x = np.zeros(d)
    x[0] = 1.3
    val = heat_potential(2.0, d, x)
    assert val == pytest.approx(2.0 * c0(d) * 1.3 ** (2 - d), rel=1e-10)


def test_heat_potential_origin_rejected():
    with pytest.raises(DomainError):
        heat_potential(1.0, 3, [0, 0, 0])


def test_truncated_tends_to_full():
    full = c0(3) * 0.5 ** (-1)
    assert float(truncated_heat_potential(1.0, 3, 0.5, 1e8)) == pytest.approx(full, rel=1e-4)


def test_kato_constant_and_radial():
    q = Potential.constant(2.0, d=3)
    assert kato_I(q, 0.5).value == pytest.approx(2.0 * 4 * math.pi * 0.125)
    ind = Potential.radial("indicator", 3, radius=1.0)
    # ∫_{|z|<δ} |z|^{-1} dz = 4π δ^2 / 2 for δ <= radius
    assert kato_I(ind, 0.5).value == pytest.approx(4 * math.pi * 0.125, rel=1e-10)


def test_kato_power_infinite():
    with pytest.raises(DomainError):
        kato_I(Potential.radial("power", 3, power=2.5), 1.0)


def test_indicator_sum_lower_bound():
    q = Potential.indicator_sum(3, n_max=10)
    sig = sphere_area(3)
    for delta in (1.0, 0.5, 0.2):
        assert kato_I(q, delta).value >= sig * (1 - 0.05)


@pytest.mark.parametrize("h", [0.1, 1.0, 10.0])
def test_psup_bounded_by_C1(h):
    for q in (Potential.constant(1.0, 3), Potential.radial("gauss", 3),
              Potential.radial("power", 3, power=1.0)):
        lhs = lhs_psup(q, 1.0, h)
        assert lhs <= C1(3, 1.0) * kato_I(q, math.sqrt(h)).value * (1 + 1e-9)


def test_parabolic_N_constant():
    assert parabolic_N(Potential.constant(2.0, 3), 1.0, 0.5) == pytest.approx(2.0)


def test_convolution_bounds():
    c1, c2, c3 = convolution_bounds(1.0, 3, {"kind": "zero"}, {"kind": "heat", "c": 1.0})
    assert c1 == 0.0
    assert c2 == pytest.approx(c0(3) * ball_volume(3, 0.5))
    assert c3 == 1.0


def test_ball_average_margin_positive():
    assert ball_average_margin(1.0, 3, np.linspace(0, 6, 200)) > 0


def test_potential_roundtrip():
    for q in (Potential.zero(2), Potential.constant(1.5), Potential.time_only([1.0, 2.0], (0, 1)),
              Potential.radial("gauss", 3, 2.0, 0.5), Potential.indicator_sum(3, 12)):
        assert Potential.from_dict(q.to_dict()) == q
    with pytest.raises(DomainError):
        Potential.from_dict({"variant": "constant", "zeta": 1})


def test_potential_rejects_negative():
    with pytest.raises(DomainError):
        Potential.constant(-1.0)
    with pytest.raises(DomainError):
        Potential.time_only([-1.0], (0, 1))
