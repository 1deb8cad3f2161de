"""Compiled inner loops: union-find, Swendsen-Wang sweeps, FK enumeration,
and cluster statistics inside a coarse box.

All randomness is drawn by the caller and passed in as arrays so the kernels
are pure functions of their inputs.
"""
import numpy as np
from numba import njit


@njit(cache=True)
def _find(parent, a):
    # path halving
    while parent[a] != a:
        parent[a] = parent[parent[a]]
        a = parent[a]
    return a


@njit(cache=True)
def _union(parent, size, a, b):
    ra = _find(parent, a)
    rb = _find(parent, b)
    if ra == rb:
        return
    if size[ra] < size[rb]:
        ra, rb = rb, ra
    parent[rb] = ra
    size[ra] += size[rb]


@njit(cache=True)
def uf_labels(n_nodes, eu, ev, is_open):
    """Compact cluster labels (numbered by first node) and their count."""
    parent = np.arange(n_nodes)
    size = np.ones(n_nodes, dtype=np.int64)
    for e in range(eu.shape[0]):
        if is_open[e]:
            _union(parent, size, eu[e], ev[e])
    labels = np.empty(n_nodes, dtype=np.int64)
    remap = np.full(n_nodes, -1, dtype=np.int64)
    count = 0
    for i in range(n_nodes):
        r = _find(parent, i)
        if remap[r] < 0:
            remap[r] = count
            count += 1
        labels[i] = remap[r]
    return labels, count


@njit(cache=True)
def sw_sweeps(spins, eu, ev, n_sites, p, x, origin, u_bond, u_spin,
              out_sigma, out_rb, open_out):
    """Run ``u_bond.shape[0]`` Swendsen-Wang sweeps in place.

    ``spins`` has length ``n_sites + 1``; the last entry is the ghost spin
    and is never changed.  ``x`` is the per-site field divided by ``T``.
    ``out_sigma[t]`` receives the origin spin after sweep ``t`` and
    ``out_rb[t]`` the conditional probability of ``sigma_o = -1`` given the
    bonds of that sweep.  ``open_out`` receives the last bond configuration.
    """
    n_nodes = n_sites + 1
    m = eu.shape[0]
    parent = np.empty(n_nodes, dtype=np.int64)
    size = np.empty(n_nodes, dtype=np.int64)
    xsum = np.empty(n_nodes)
    for t in range(u_bond.shape[0]):
        for i in range(n_nodes):
            parent[i] = i
            size[i] = 1
            xsum[i] = 0.0
        for e in range(m):
            a = eu[e]
            b = ev[e]
            op = spins[a] == spins[b] and u_bond[t, e] < p
            open_out[e] = op
            if op:
                _union(parent, size, a, b)
        for i in range(n_sites):
            xsum[_find(parent, i)] += x[i]
        g = _find(parent, n_sites)
        for i in range(n_sites):
            r = _find(parent, i)
            if r == g:
                spins[i] = spins[n_sites]
            else:
                # P(plus) = e^X / (2 cosh X) = 1 / (1 + e^{-2X})
                spins[i] = 1 if u_spin[t, r] * (1.0 + np.exp(-2.0 * xsum[r])) < 1.0 else -1
        out_sigma[t] = spins[origin]
        ro = _find(parent, origin)
        if ro == g:
            out_rb[t] = 1.0 if spins[n_sites] < 0 else 0.0
        else:
            out_rb[t] = 1.0 / (1.0 + np.exp(2.0 * xsum[ro]))


@njit(cache=True)
def _log2cosh(z):
    a = abs(z)
    return a + np.log1p(np.exp(-2.0 * a))


@njit(cache=True)
def enumerate_fk(n_sites, eu, ev, x, logp, log1mp, origin, ghost_sign):
    """Unnormalised log FK weights and Rao-Blackwell values for every bond
    configuration (bit ``e`` of the index is edge ``e``)."""
    m = eu.shape[0]
    n_nodes = n_sites + 1
    total = 1 << m
    logw = np.empty(total)
    rb = np.empty(total)
    parent = np.empty(n_nodes, dtype=np.int64)
    size = np.empty(n_nodes, dtype=np.int64)
    xsum = np.empty(n_nodes)
    for w in range(total):
        for i in range(n_nodes):
            parent[i] = i
            size[i] = 1
            xsum[i] = 0.0
        acc = 0.0
        for e in range(m):
            if (w >> e) & 1:
                acc += logp
                _union(parent, size, eu[e], ev[e])
            else:
                acc += log1mp
        for i in range(n_sites):
            xsum[_find(parent, i)] += x[i]
        g = _find(parent, n_sites)
        for i in range(n_nodes):
            if parent[i] == i:
                if i == g:
                    acc += ghost_sign * xsum[i]
                else:
                    acc += _log2cosh(xsum[i])
        logw[w] = acc
        ro = _find(parent, origin)
        if ro == g:
            rb[w] = 1.0 if ghost_sign < 0 else 0.0
        else:
            rb[w] = 1.0 / (1.0 + np.exp(2.0 * xsum[ro]))
    return logw, rb


@njit(cache=True)
def box_cluster_stats(bx, by, bz):
    """Cluster labels of a cubic box given its three bond arrays.

    ``bx[i, j, k]`` is the bond between ``(i, j, k)`` and ``(i+1, j, k)``,
    and similarly for ``by`` and ``bz``.  Returns ``(labels, lo, hi)`` where
    ``lo[c]``/``hi[c]`` are per-axis coordinate extents of cluster ``c``.
    """
    s = bx.shape[1]
    n = s * s * s
    parent = np.arange(n)
    size = np.ones(n, dtype=np.int64)
    for i in range(s):
        for j in range(s):
            for k in range(s):
                a = (i * s + j) * s + k
                if i + 1 < s and bx[i, j, k]:
                    _union(parent, size, a, a + s * s)
                if j + 1 < s and by[i, j, k]:
                    _union(parent, size, a, a + s)
                if k + 1 < s and bz[i, j, k]:
                    _union(parent, size, a, a + 1)
    labels = np.empty(n, dtype=np.int64)
    remap = np.full(n, -1, dtype=np.int64)
    count = 0
    for a in range(n):
        r = _find(parent, a)
        if remap[r] < 0:
            remap[r] = count
            count += 1
        labels[a] = remap[r]
    lo = np.full((count, 3), s, dtype=np.int64)
    hi = np.full((count, 3), -1, dtype=np.int64)
    for i in range(s):
        for j in range(s):
            for k in range(s):
                c = labels[(i * s + j) * s + k]
                if i < lo[c, 0]:
                    lo[c, 0] = i
                if i > hi[c, 0]:
                    hi[c, 0] = i
                if j < lo[c, 1]:
                    lo[c, 1] = j
                if j > hi[c, 1]:
                    hi[c, 1] = j
                if k < lo[c, 2]:
                    lo[c, 2] = k
                if k > hi[c, 2]:
                    hi[c, 2] = k
    return labels.reshape((s, s, s)), lo, hi
