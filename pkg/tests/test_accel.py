import numpy as np
import pytest

from heatpert import _accel
from heatpert.kato import Potential

pytestmark = pytest.mark.skipif(not _accel.HAVE_NUMBA, reason="numba not installed")

POTENTIALS = [
    Potential.constant(1.3),
    Potential.time_only([1.0, -0.5, 0.25], (0.1, 0.8)),
    Potential.radial("gauss", 1, 2.0, 0.7),
    Potential.radial("indicator", 1, 1.0, 0.5),
    Potential.radial("power", 1, 1.0, 1.0, 0.5),
    Potential.separable([1.0, 1.0], (0.0, 1.0), "gauss", 1),
    Potential.indicator_sum(3, 6),
]


@pytest.mark.parametrize("q", POTENTIALS, ids=lambda q: q.variant + q.profile)
def test_q_eval_parity(q):
    gen = np.random.default_rng(0)
    u = gen.uniform(-0.5, 1.5, 200)
    z = gen.normal(0, 2, (200, q.d))
    a = _accel.q_eval_np(q.encode(), u, z)
    b = _accel.q_eval_nb(q.encode(), u, z)
    np.testing.assert_allclose(a, b, rtol=1e-13, atol=0)


@pytest.mark.parametrize("q", POTENTIALS[:6], ids=lambda q: q.variant + q.profile)
def test_mc_paths_parity(q):
    gen = np.random.default_rng(1)
    times, brk = _accel.mc_time_nodes(0.0, 1.0, q.time_breaks(0.0, 1.0), 16)
    normals = gen.standard_normal((64, len(times) - 2, 1))
    args = (q.encode(), normals, np.zeros(1), np.array([0.4]), times, brk, 1.0, 1e6)
    I1, c1 = _accel.mc_paths_np(*args)
    I2, c2 = _accel.mc_paths_nb(*args)
    np.testing.assert_allclose(I1, I2, rtol=1e-12, atol=1e-14)
    assert c1 == c2


def test_time_nodes_put_breaks_on_even_indices():
    times, brk = _accel.mc_time_nodes(0.0, 1.0, [0.3, 0.9], 16)
    assert len(times) == 17 and times[0] == 0.0 and times[-1] == 1.0
    idx = np.flatnonzero(brk)
    assert np.all(idx % 2 == 0)
    np.testing.assert_allclose(times[idx], [0.3, 0.9])


def _step_args(q):
    from heatpert.series import GridEngine, GridSpec
    eng = GridEngine(q, 1.0, 0.0, 1.0, 0.1, -0.3, GridSpec(6, 6, 41, 12, 4.0))
    R = np.random.default_rng(2).uniform(0.5, 1.5, eng.tables[0].shape)
    return (R, eng.tnodes, eng.plo, eng.phi, eng.nt, eng.bw, eng.gl_x, eng.gl_w, eng.z0,
            eng.dz, eng.gz, eng.gw, eng.s, eng.t, eng.x0, eng.y, eng.b, eng.params)


@pytest.mark.parametrize("q", POTENTIALS[:4] + POTENTIALS[5:6], ids=lambda q: q.variant + q.profile)
def test_grid_step_parity(q):
    args = _step_args(q)
    np.testing.assert_allclose(_accel.grid_step_np(*args), _accel.grid_step_nb(*args),
                               rtol=1e-12, atol=1e-15)
