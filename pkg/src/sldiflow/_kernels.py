"""Compiled inner loops for the max-plus routines.

All kernels take float64 arrays whose entries are finite or -inf (the
max-plus ring); none of them ever sees +inf, so IEEE addition is safe here.
"""

import numba
import numpy as np

NEG_INF = -np.inf


@numba.njit(cache=True)
def mp_matmul(a, b):
    m, n = a.shape
    p = b.shape[1]
    out = np.full((m, p), NEG_INF)
    for i in range(m):
        for k in range(n):
            aik = a[i, k]
            if aik == NEG_INF:
                continue
            for h in range(p):
                bkh = b[k, h]
                if bkh == NEG_INF:
                    continue
                v = aik + bkh
                if v > out[i, h]:
                    out[i, h] = v
    return out


@numba.njit(cache=True)
def mp_matvec(a, x):
    m, n = a.shape
    out = np.full(m, NEG_INF)
    for k in range(n):
        xk = x[k]
        if xk == NEG_INF:
            continue
        for i in range(m):
            v = a[i, k] + xk
            if v > out[i]:
                out[i] = v
    return out


TILE = 128


@numba.njit(cache=True)
def _relax(d, i0, i1, j0, j1, k0, k1):
    # d[i, j] = max(d[i, j], d[i, k] + d[k, j]) with the pivot k outermost.
    # The pivot row segment is copied first so the inner loop reads a buffer
    # that cannot alias the row being written, which lets it vectorize.
    buf = np.empty(j1 - j0)
    for k in range(k0, k1):
        for j in range(j0, j1):
            buf[j - j0] = d[k, j]
        for i in range(i0, i1):
            dik = d[i, k]
            rowi = d[i, j0:j1]
            for j in range(j1 - j0):
                rowi[j] = max(rowi[j], dik + buf[j])


@numba.njit(cache=True)
def closure_inplace(d):
    """Floyd-Warshall sweep for longest paths; ``d`` must already hold E (+) A.

    Dense and tiled: every one of the n^3 relaxations is performed whatever
    the sparsity (-inf + finite stays -inf, no NaN can arise), in the usual
    three-phase block order so each tile stays in cache.
    """
    n = d.shape[0]
    nb = (n + TILE - 1) // TILE
    for kb in range(nb):
        k0, k1 = kb * TILE, min(n, (kb + 1) * TILE)
        _relax(d, k0, k1, k0, k1, k0, k1)
        for b in range(nb):
            if b == kb:
                continue
            b0, b1 = b * TILE, min(n, (b + 1) * TILE)
            _relax(d, k0, k1, b0, b1, k0, k1)
            _relax(d, b0, b1, k0, k1, k0, k1)
        for ib in range(nb):
            if ib == kb:
                continue
            i0, i1 = ib * TILE, min(n, (ib + 1) * TILE)
            for jb in range(nb):
                if jb == kb:
                    continue
                j0, j1 = jb * TILE, min(n, (jb + 1) * TILE)
                _relax(d, i0, i1, j0, j1, k0, k1)
    return d


@numba.njit(cache=True)
def bellman_ford_max(n_nodes, src, dst, w, dist, tol):
    """Max-relaxation sweeps over an arc list, starting from ``dist``.

    Runs at most ``n_nodes - 1`` rounds, stopping early once a round changes
    nothing, then one detection round.  Returns the index of a node that can
    still be improved (a positive circuit is present), or -1.
    """
    n_arcs = src.shape[0]
    for _ in range(max(n_nodes - 1, 0)):
        changed = False
        for e in range(n_arcs):
            du = dist[src[e]]
            if du == NEG_INF:
                continue
            v = du + w[e]
            if v > dist[dst[e]] + tol:
                dist[dst[e]] = v
                changed = True
        if not changed:
            return -1
    for e in range(n_arcs):
        du = dist[src[e]]
        if du != NEG_INF and du + w[e] > dist[dst[e]] + tol:
            return dst[e]
    return -1
