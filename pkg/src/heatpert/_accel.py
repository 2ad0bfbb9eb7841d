"""Hot loops for the series engines, with a numba and a pure-numpy backend.

The backend is picked by ``HEATPERT_BACKEND`` (``numba`` or ``numpy``). When
unset, numba is used if it imports. Both backends take the same flat
potential encoding (see ``kato.Potential.encode``) and return the same
numbers up to floating-point rounding.
"""

from __future__ import annotations

import math
import os

import numpy as np

# layout of the flat potential encoding
T_KIND, T_LO, T_HI, T_COEF = 0, 1, 2, 3
N_COEF = 8
S_KIND, AMP, S_P1, S_P2, S_NMAX, S_DIR = 11, 12, 13, 14, 15, 16

S_CONST, S_INDICATOR, S_GAUSS, S_POWER, S_INDSUM = 0, 1, 2, 3, 4

try:
    import numba
    from numba import njit
    # the parallel kernels skip TBB, which is often too old to load quietly
    if "NUMBA_THREADING_LAYER" not in os.environ:
        numba.config.THREADING_LAYER_PRIORITY = ["omp", "workqueue", "tbb"]
    HAVE_NUMBA = True
except ImportError:  # pragma: no cover
    HAVE_NUMBA = False

_requested = os.environ.get("HEATPERT_BACKEND", "").strip().lower()
if _requested not in ("", "numba", "numpy"):
    raise ImportError(f"HEATPERT_BACKEND must be 'numba' or 'numpy', got {_requested!r}")
BACKEND = "numpy" if (_requested == "numpy" or not HAVE_NUMBA) else "numba"


# ---------------------------------------------------------------- numpy ----

def q_eval_np(params, u, z):
    """Vectorized potential: ``u`` shape (...), ``z`` shape (..., d)."""
    u = np.asarray(u, dtype=float)
    z = np.asarray(z, dtype=float)
    out = np.full(np.broadcast_shapes(u.shape, z.shape[:-1]), params[AMP])
    if params[T_KIND] == 1.0:
        tf = np.zeros_like(u)
        for k in range(N_COEF - 1, -1, -1):
            tf = tf * u + params[T_COEF + k]
        inside = (u >= params[T_LO]) & (u < params[T_HI])
        out = out * np.where(inside, np.maximum(tf, 0.0), 0.0)
    kind = params[S_KIND]
    if kind == S_CONST:
        return out
    r2 = np.einsum("...i,...i->...", z, z)
    if kind == S_INDICATOR:
        sf = (r2 < params[S_P1] ** 2).astype(float)
    elif kind == S_GAUSS:
        sf = np.exp(-r2 / params[S_P1] ** 2)
    elif kind == S_POWER:
        r = np.sqrt(r2)
        with np.errstate(divide="ignore"):
            sf = np.where(r < params[S_P1], r ** (-params[S_P2]), 0.0)
    else:
        d = z.shape[-1]
        e = params[S_DIR:S_DIR + d]
        n = np.rint(z @ e)
        dist2 = np.einsum("...i,...i->...", z - n[..., None] * e, z - n[..., None] * e)
        ok = (n >= 2) & (n <= params[S_NMAX]) & (dist2 * n * n < 1.0)
        with np.errstate(divide="ignore", invalid="ignore"):
            sf = np.where(ok, n / np.sqrt(dist2), 0.0)
    return out * sf


def _bary_matrix(nodes, weights, v):
    """Rows of barycentric interpolation weights for points ``v``."""
    diff = v[:, None] - nodes[None, :]
    exact = diff == 0.0
    diff = np.where(exact, 1.0, diff)
    c = weights[None, :] / diff
    c = c / c.sum(axis=1, keepdims=True)
    hit = exact.any(axis=1)
    if hit.any():
        c[hit] = exact[hit].astype(float)
    return c


def _cubic_np(row, z0, dz, pos):
    n = row.shape[-1]
    p = np.clip((pos - z0) / dz, 0.0, n - 1.0)
    j = np.clip(np.floor(p).astype(np.int64), 1, n - 3)
    t = p - j
    w0 = -t * (t - 1) * (t - 2) / 6.0
    w1 = (t + 1) * (t - 1) * (t - 2) / 2.0
    w2 = -(t + 1) * t * (t - 2) / 2.0
    w3 = (t + 1) * t * (t - 1) / 6.0
    return w0 * row[j - 1] + w1 * row[j] + w2 * row[j + 1] + w3 * row[j + 2]


def grid_step_np(R, tnodes, plo, phi, nt, bw, gl_x, gl_w, z0, dz, gz, gw,
                 s, t, x0, y, b, params):
    """One application of the bridge-averaged Volterra operator.

    ``R[i, k]`` holds ``p_{n-1}/p`` at time node ``tnodes[i]`` and spatial
    offset ``z0 + k dz`` from the straight line joining ``(s, x0)`` and
    ``(t, y)``. Returns the same table for ``p_n/p``.
    """
    NT, NZ = R.shape
    out = np.zeros_like(R)
    zk = z0 + dz * np.arange(NZ)
    slope = (y - x0) / (t - s)
    for i in range(NT):
        u = tnodes[i]
        if u >= t:
            continue
        zs = x0 + slope * (u - s) + zk
        acc = np.zeros(NZ)
        for P in range(len(plo)):
            lo = max(u, plo[P])
            hi = phi[P]
            if hi <= lo:
                continue
            v = lo + (hi - lo) * gl_x
            wv = (hi - lo) * gl_w
            rows = _bary_matrix(tnodes[P * nt:(P + 1) * nt], bw, v) @ R[P * nt:(P + 1) * nt]
            frac = (v - u) / (t - u)
            sd = np.sqrt(np.maximum(2.0 / b * (v - u) * (t - v) / (t - u), 0.0))
            lv = x0 + slope * (v - s)
            mu = zs[None, :] + frac[:, None] * (y - zs[None, :])
            w = mu[:, :, None] + sd[:, None, None] * gz[None, None, :]
            qv = q_eval_np(params, np.broadcast_to(v[:, None, None], w.shape), w[..., None])
            if NZ == 1:
                vals = np.broadcast_to(rows[:, :1, None], w.shape)
            else:
                vals = np.stack([_cubic_np(rows[m], z0, dz, w[m] - lv[m]) for m in range(len(v))])
            acc += np.einsum("m,mkh,h->k", wv, qv * vals, gw)
        out[i] = acc
    return out


def mc_paths_np(params, normals, x, y, times, brk, b, clip):
    """Trapezoid integrals of q along antithetic bridge pairs.

    ``normals`` has shape (P, m-1, d) and ``times`` holds the m+1 nodes.
    Where ``brk[j]`` is set the potential may jump at ``times[j]``, so it is
    evaluated just before the node for the step ending there and just after
    it for the step starting there. Returns ``(I, clipped)`` where
    ``I[p, sign, 0]`` uses all m steps and ``I[p, sign, 1]`` every second node.
    """
    P, K, d = normals.shape
    m = K + 1
    s, t = times[0], times[m]
    out = np.zeros((P, 2, 2))
    clipped = 0
    for si, sgn in enumerate((1.0, -1.0)):
        pos = np.broadcast_to(x, (P, d)).copy()
        q0 = q_eval_np(params, np.full(P, _after(times, brk, 0)), pos)
        clipped += int(np.count_nonzero(q0 > clip))
        qprev = np.minimum(q0, clip)
        qeven = qprev.copy()
        fine = np.zeros(P)
        coarse = np.zeros(P)
        for j in range(1, m + 1):
            up = times[j - 1]
            u = times[j]
            dt = u - up
            if j < m:
                sd = math.sqrt(2.0 / b * dt * (t - u) / (t - up))
                pos = pos + (y - pos) * (dt / (t - up)) + sd * sgn * normals[:, j - 1, :]
            else:
                pos = np.broadcast_to(y, (P, d)).copy()
            qc = q_eval_np(params, np.full(P, _before(times, brk, j)), pos)
            clipped += int(np.count_nonzero(qc > clip))
            qc = np.minimum(qc, clip)
            fine += 0.5 * dt * (qprev + qc)
            if j % 2 == 0:
                coarse += 0.5 * (u - times[j - 2]) * (qeven + qc)
            if brk[j] and j < m:
                qc = np.minimum(q_eval_np(params, np.full(P, _after(times, brk, j)), pos), clip)
            if j % 2 == 0:
                qeven = qc
            qprev = qc
        out[:, si, 0] = fine
        out[:, si, 1] = coarse
    return out, clipped


def _before(times, brk, j):
    return times[j] - 1e-12 * (times[j] - times[j - 1]) if brk[j] else times[j]


def _after(times, brk, j):
    return times[j] + 1e-12 * (times[j + 1] - times[j]) if brk[j] else times[j]


def mc_time_nodes(s, t, breaks, steps):
    """``steps`` (even) nodes spread over panels split at ``breaks``.

    Each panel gets an even number of steps (at least two) roughly in
    proportion to its length, so breaks land on even node indices.
    Returns ``(times, brk)``.
    """
    edges = [s] + sorted(v for v in breaks if s < v < t) + [t]
    lengths = np.diff(edges)
    pairs = np.maximum(1, np.floor(lengths / (t - s) * (steps // 2)).astype(int))
    # hand leftover step pairs to the panels with the largest steps
    while pairs.sum() < steps // 2:
        pairs[int(np.argmax(lengths / pairs))] += 1
    times, brk = [s], [False]
    for i, n in enumerate(pairs):
        times.extend(np.linspace(edges[i], edges[i + 1], 2 * n + 1)[1:])
        brk.extend([False] * (2 * n - 1) + [i < len(pairs) - 1])
    return np.array(times), np.array(brk, dtype=np.bool_)


# ---------------------------------------------------------------- numba ----

if HAVE_NUMBA:
    from numba import prange

    @njit(cache=True, nogil=True)
    def _time_factor(params, u):
        if params[T_KIND] != 1.0:
            return 1.0
        if u < params[T_LO] or u >= params[T_HI]:
            return 0.0
        tf = 0.0
        for k in range(N_COEF - 1, -1, -1):
            tf = tf * u + params[T_COEF + k]
        return tf if tf > 0.0 else 0.0

    @njit(cache=True, nogil=True)
    def _space_factor(params, z):
        kind = params[S_KIND]
        if kind == S_CONST:
            return 1.0
        r2 = 0.0
        for i in range(z.shape[0]):
            r2 += z[i] * z[i]
        if kind == S_GAUSS:
            return math.exp(-r2 / (params[S_P1] * params[S_P1]))
        if kind == S_INDICATOR:
            return 1.0 if r2 < params[S_P1] * params[S_P1] else 0.0
        if kind == S_POWER:
            r = math.sqrt(r2)
            if r >= params[S_P1]:
                return 0.0
            return math.inf if r == 0.0 else r ** (-params[S_P2])
        proj = 0.0
        for i in range(z.shape[0]):
            proj += z[i] * params[S_DIR + i]
        n = math.floor(proj + 0.5)
        if n < 2 or n > params[S_NMAX]:
            return 0.0
        dist2 = 0.0
        for i in range(z.shape[0]):
            dd = z[i] - n * params[S_DIR + i]
            dist2 += dd * dd
        if dist2 * n * n >= 1.0:
            return 0.0
        return math.inf if dist2 == 0.0 else n / math.sqrt(dist2)

    @njit(cache=True, nogil=True)
    def _space_factor_1d(params, z):
        kind = params[S_KIND]
        if kind == S_CONST:
            return 1.0
        if kind == S_GAUSS:
            return math.exp(-z * z / (params[S_P1] * params[S_P1]))
        if kind == S_INDICATOR:
            return 1.0 if abs(z) < params[S_P1] else 0.0
        buf = np.empty(1)
        buf[0] = z
        return _space_factor(params, buf)

    @njit(cache=True, nogil=True)
    def _q_point(params, u, z):
        tf = _time_factor(params, u)
        if tf == 0.0:
            return 0.0
        return params[AMP] * tf * _space_factor(params, z)

    @njit(cache=True, nogil=True)
    def q_eval_nb(params, u, z):
        n = u.shape[0]
        out = np.empty(n)
        for i in range(n):
            out[i] = _q_point(params, u[i], z[i])
        return out

    @njit(cache=True, nogil=True)
    def _cubic(row, z0, dz, pos):
        n = row.shape[0]
        if n == 1:
            return row[0]
        p = (pos - z0) / dz
        if p < 0.0:
            p = 0.0
        elif p > n - 1.0:
            p = n - 1.0
        j = int(math.floor(p))
        if j < 1:
            j = 1
        elif j > n - 3:
            j = n - 3
        t = p - j
        return (-t * (t - 1) * (t - 2) / 6.0 * row[j - 1]
                + (t + 1) * (t - 1) * (t - 2) / 2.0 * row[j]
                - (t + 1) * t * (t - 2) / 2.0 * row[j + 1]
                + (t + 1) * t * (t - 1) / 6.0 * row[j + 2])

    @njit(cache=True, nogil=True, parallel=True)
    def grid_step_nb(R, tnodes, plo, phi, nt, bw, gl_x, gl_w, z0, dz, gz, gw,
                     s, t, x0, y, b, params):
        NT, NZ = R.shape
        out = np.zeros_like(R)
        slope = (y - x0) / (t - s)
        # rows are independent, so they are split across threads
        for i in prange(NT):
            u = tnodes[i]
            if u >= t:
                continue
            row = np.empty(NZ)
            coef = np.empty(nt)
            base = x0 + slope * (u - s)
            for P in range(plo.shape[0]):
                lo = max(u, plo[P])
                hi = phi[P]
                if hi <= lo:
                    continue
                for m in range(gl_x.shape[0]):
                    v = lo + (hi - lo) * gl_x[m]
                    qt = params[AMP] * _time_factor(params, v)
                    if qt == 0.0:
                        continue
                    wv = (hi - lo) * gl_w[m] * qt
                    # barycentric time interpolation of the stored rows
                    hit = -1
                    tot = 0.0
                    for j in range(nt):
                        dv = v - tnodes[P * nt + j]
                        if dv == 0.0:
                            hit = j
                            break
                        coef[j] = bw[j] / dv
                        tot += coef[j]
                    if hit >= 0:
                        for j in range(nt):
                            coef[j] = 0.0
                        coef[hit] = 1.0
                        tot = 1.0
                    for k in range(NZ):
                        acc = 0.0
                        for j in range(nt):
                            acc += coef[j] * R[P * nt + j, k]
                        row[k] = acc / tot
                    frac = (v - u) / (t - u)
                    var = 2.0 / b * (v - u) * (t - v) / (t - u)
                    sd = math.sqrt(var) if var > 0.0 else 0.0
                    lv = x0 + slope * (v - s)
                    for k in range(NZ):
                        z = base + z0 + k * dz
                        mu = z + frac * (y - z)
                        acc = 0.0
                        for h in range(gz.shape[0]):
                            w = mu + sd * gz[h]
                            sf = _space_factor_1d(params, w)
                            if sf != 0.0:
                                acc += gw[h] * sf * _cubic(row, z0, dz, w - lv)
                        out[i, k] += wv * acc
        return out

    @njit(cache=True, nogil=True, parallel=True)
    def mc_paths_nb(params, normals, x, y, times, brk, b, clip):
        P, K, d = normals.shape
        m = K + 1
        t = times[m]
        # everything that does not depend on the path is tabulated per node
        sdv = np.zeros(m + 1)
        frac = np.zeros(m + 1)
        qb = np.empty(m + 1)
        qa = np.empty(m + 1)
        for j in range(m + 1):
            u = times[j]
            ub = u - 1e-12 * (u - times[j - 1]) if (brk[j] and j > 0) else u
            ua = u + 1e-12 * (times[j + 1] - u) if (brk[j] and j < m) else u
            qb[j] = params[AMP] * _time_factor(params, ub)
            qa[j] = params[AMP] * _time_factor(params, ua)
            if 0 < j < m:
                up = times[j - 1]
                dt = u - up
                sdv[j] = math.sqrt(2.0 / b * dt * (t - u) / (t - up))
                frac[j] = dt / (t - up)
        out = np.zeros((P, 2, 2))
        clipped = np.zeros(P, dtype=np.int64)
        for p in prange(P):
            pos = np.empty(d)
            for si in range(2):
                sgn = 1.0 if si == 0 else -1.0
                for i in range(d):
                    pos[i] = x[i]
                qprev = qa[0] * _space_factor(params, pos) if qa[0] != 0.0 else 0.0
                if qprev > clip:
                    qprev = clip
                    clipped[p] += 1
                qeven = qprev
                fine = 0.0
                coarse = 0.0
                for j in range(1, m + 1):
                    dt = times[j] - times[j - 1]
                    if j < m:
                        for i in range(d):
                            pos[i] += (y[i] - pos[i]) * frac[j] + sdv[j] * sgn * normals[p, j - 1, i]
                    else:
                        for i in range(d):
                            pos[i] = y[i]
                    sf = -1.0
                    qc = 0.0
                    if qb[j] != 0.0:
                        sf = _space_factor(params, pos)
                        qc = qb[j] * sf
                    if qc > clip:
                        qc = clip
                        clipped[p] += 1
                    fine += 0.5 * dt * (qprev + qc)
                    if j % 2 == 0:
                        coarse += 0.5 * (times[j] - times[j - 2]) * (qeven + qc)
                    if brk[j] and j < m:
                        qc = 0.0
                        if qa[j] != 0.0:
                            if sf < 0.0:
                                sf = _space_factor(params, pos)
                            qc = min(qa[j] * sf, clip)
                    if j % 2 == 0:
                        qeven = qc
                    qprev = qc
                out[p, si, 0] = fine
                out[p, si, 1] = coarse
        return out, int(clipped.sum())


def q_eval(params, u, z):
    if BACKEND == "numba":
        u = np.asarray(u, dtype=float)
        z = np.asarray(z, dtype=float)
        shape = np.broadcast_shapes(u.shape, z.shape[:-1])
        uu = np.ascontiguousarray(np.broadcast_to(u, shape).reshape(-1))
        zz = np.ascontiguousarray(np.broadcast_to(z, shape + z.shape[-1:]).reshape(-1, z.shape[-1]))
        return q_eval_nb(params, uu, zz).reshape(shape)
    return q_eval_np(params, u, z)


def grid_step(*args):
    if BACKEND == "numba":
        return grid_step_nb(*args)
    return grid_step_np(*args)


def mc_paths(params, normals, x, y, times, brk, b, clip):
    if BACKEND == "numba":
        return mc_paths_nb(params, np.ascontiguousarray(normals), x, y,
                           np.ascontiguousarray(times, dtype=float),
                           np.ascontiguousarray(brk, dtype=np.bool_), float(b), float(clip))
    return mc_paths_np(params, normals, x, y, times, brk, b, clip)


def set_threads(n: int | None) -> None:
    if n and HAVE_NUMBA:
        numba.set_num_threads(max(1, min(int(n), numba.config.NUMBA_NUM_THREADS)))
