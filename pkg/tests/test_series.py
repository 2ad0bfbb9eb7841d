import math

import numpy as np
import pytest

from heatpert.errors import DomainError
from heatpert.kato import Potential
from heatpert.kernels import GaussianKernel
from heatpert.numerics import RngStream
from heatpert.series import (
    GridSpec, SeriesRequest, TailCertificate, duhamel_residual, feynman_kac_mc,
    left_inverse_residual, phi_catalog, term_ck_residual, term_grid, tilde_p,
)

K1 = GaussianKernel(1.0, 1)
SMALL = GridSpec(12, 12, 121, 20, 4.0)


def test_constant_closed_form():
    req = SeriesRequest(K1, Potential.constant(1.0), 0.0, 1.0, 0.0, 0.0, n_terms=6)
    res = term_grid(req)
    p = req.p_value
    for n, term in enumerate(res.terms):
        assert term == pytest.approx(p / math.factorial(n), rel=1e-8)


def test_time_only_closed_form():
    q = Potential.time_only([1.0, 2.0], (0.2, 0.9))
    req = SeriesRequest(K1, q, 0.0, 1.0, 0.3, -0.2, n_terms=5)
    res = term_grid(req)
    Qv = q.time_integral(0.0, 1.0)
    for n, term in enumerate(res.terms):
        assert term == pytest.approx(Qv**n / math.factorial(n) * req.p_value, rel=1e-8)


def test_tilde_matches_exponential():
    req = SeriesRequest(GaussianKernel(1.0, 2), Potential.constant(0.7, 2), 0.0, 1.0,
                        [0, 0], [0.5, 0])
    res = tilde_p(req)
    assert res.partial_sum == pytest.approx(math.exp(0.7) * req.p_value, rel=1e-10)
    assert "tail_not_certified" in res.flags


def test_tilde_with_certificate():
    req = SeriesRequest(K1, Potential.constant(0.5), 0.0, 1.0, 0.0, 0.0)
    cert = TailCertificate.from_membership(1.0, 0.0, 0.5, req.p_value)
    res = tilde_p(req, cert)
    assert res.rigorous_tail and res.stop_reason == "certified_tail"
    assert res.partial_sum == pytest.approx(math.exp(0.5) * req.p_value, rel=1e-10)


def test_zero_potential():
    req = SeriesRequest(K1, Potential.zero(), 0.0, 1.0, 0.0, 0.0)
    res = term_grid(req)
    assert res.terms[0] == pytest.approx(req.p_value)
    assert all(t == 0.0 for t in res.terms[1:])


def test_tail_certificate_bounds():
    cert = TailCertificate.from_membership(1.5, 0.2, 1.0, 1.0)
    total = sum(cert.term_bound(n) for n in range(3, 400))
    assert cert.tail(2) == pytest.approx(total, rel=1e-9)
    with pytest.raises(DomainError):
        TailCertificate(1.0, 0.0, 1.0, 1, 1.0)


def test_unbounded_potential_needs_mc():
    q = Potential.radial("power", 1, power=0.5)
    with pytest.raises(DomainError, match="monte_carlo"):
        term_grid(SeriesRequest(K1, q, 0.0, 1.0, 0.0, 0.0))


def test_bump_grid_vs_mc():
    q = Potential.radial("gauss", 1, amplitude=1.0, radius=1.0)
    g = tilde_p(SeriesRequest(K1, q, 0.0, 1.0, 0.0, 0.3, grid=SMALL))
    m = feynman_kac_mc(SeriesRequest(K1, q, 0.0, 1.0, 0.0, 0.3, engine="monte_carlo",
                                     mc_paths=20000, mc_steps=64, rng=RngStream(5)))
    assert abs(g.partial_sum - m.partial_sum) <= 4 * m.mc_std_error + 1e-4
    assert m.mc_std_error <= 0.01 * m.partial_sum


def test_mc_reproducible():
    q = Potential.radial("indicator", 1, amplitude=0.5)
    req = SeriesRequest(K1, q, 0.0, 1.0, 0.0, 0.0, engine="monte_carlo", mc_paths=2000,
                        mc_steps=32, rng=RngStream(9))
    assert feynman_kac_mc(req).partial_sum == feynman_kac_mc(req).partial_sum


def test_term_ck_and_duhamel():
    q = Potential.radial("gauss", 1, amplitude=1.0, radius=1.0)
    assert term_ck_residual(K1, q, 2, 0.0, 0.4, 1.0, 0.0, 0.2, grid=SMALL) <= 1e-6
    assert duhamel_residual(K1, Potential.constant(1.0), 3, 0.0, 1.0, 0.0, 0.0) <= 1e-12


@pytest.mark.parametrize("alternative", [False, True])
def test_left_inverse(alternative):
    for phi in phi_catalog(0.0, 0.0):
        assert left_inverse_residual(1.0, 0.0, 0.0, phi, alternative=alternative) <= 1e-6


def test_request_validation():
    with pytest.raises(DomainError):
        SeriesRequest(K1, Potential.zero(), 1.0, 1.0, 0.0, 0.0)
    with pytest.raises(DomainError):
        SeriesRequest(K1, Potential.zero(2), 0.0, 1.0, 0.0, 0.0)
    with pytest.raises(DomainError):
        SeriesRequest(K1, Potential.zero(), 0.0, 1.0, 0.0, 0.0, engine="bogus")
