"""Time the numba and numpy backends on the two hot loops.

    python3 benchmarks/bench_accel.py [--repeat 3] [--paths 20000]

Both backends get identical inputs; the script also reports the largest
difference between their outputs.
"""

import argparse
import time

import numpy as np

from heatpert import _accel
from heatpert.kato import Potential
from heatpert.series import GridEngine, GridSpec


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t0)
    return min(times), out


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--paths", type=int, default=20_000)
    ap.add_argument("--steps", type=int, default=128)
    args = ap.parse_args()

    if not _accel.HAVE_NUMBA:
        print("numba is not installed; only the numpy backend is available")
        return

    q = Potential.radial("gauss", 1, 1.0, 0.7)
    eng = GridEngine(q, 1.0, 0.0, 1.0, 0.0, 0.3, GridSpec())
    grid_args = (eng.tables[0], eng.tnodes, eng.plo, eng.phi, eng.nt, eng.bw, eng.gl_x,
                 eng.gl_w, eng.z0, eng.dz, eng.gz, eng.gw, eng.s, eng.t, eng.x0, eng.y,
                 eng.b, eng.params)
    times, brk = _accel.mc_time_nodes(0.0, 1.0, [], args.steps)
    normals = np.random.default_rng(0).standard_normal((args.paths // 2, len(times) - 2, 1))
    mc_args = (q.encode(), normals, np.zeros(1), np.array([0.3]), times, brk, 1.0, 1e6)

    # compile outside the timed region
    _accel.grid_step_nb(*grid_args)
    _accel.mc_paths_nb(*mc_args)

    rows = []
    for name, f_np, f_nb, a in (("grid_step", _accel.grid_step_np, _accel.grid_step_nb, grid_args),
                                ("mc_paths", _accel.mc_paths_np, _accel.mc_paths_nb, mc_args)):
        t_np, o_np = best_of(lambda: f_np(*a), args.repeat)
        t_nb, o_nb = best_of(lambda: f_nb(*a), args.repeat)
        if isinstance(o_np, tuple):
            o_np, o_nb = o_np[0], o_nb[0]
        rows.append((name, t_np, t_nb, float(np.max(np.abs(o_np - o_nb)))))

    print(f"{'kernel':<10} {'numpy [s]':>10} {'numba [s]':>10} {'speedup':>8} {'max diff':>10}")
    for name, t_np, t_nb, diff in rows:
        print(f"{name:<10} {t_np:>10.3f} {t_nb:>10.3f} {t_np / t_nb:>8.1f} {diff:>10.1e}")


if __name__ == "__main__":
    main()
