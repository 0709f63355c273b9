"""Compiled inner loops shared by the coding buffers and the trial engine.

A node buffer is three arrays: ``rows`` of shape (N, N + r) holding the
reduced basis (coefficients then payload), ``pivots`` of shape (N,), and the
dimension, which callers keep separately. Rows are stored in insertion order;
each pivot entry is 1 and its column is zero in every other row.

Field arguments are ``(poly, q, mt, it)``: the reduction polynomial, the
width, and the full product / inverse tables. The tables are empty for wide
fields, which then use carry-less multiplication.
"""

from __future__ import annotations

import numpy as np
from numba import njit

ELEMENT = np.uint16


@njit(cache=True)
def mul(a, b, poly, q, mt, it):
    if a == 0 or b == 0:
        return 0
    if mt.size > 0:
        return np.int64(mt[a, b])
    x = np.int64(a)
    y = np.int64(b)
    out = np.int64(0)
    while y:
        if y & 1:
            out ^= x
        y >>= 1
        x <<= 1
        if x >> q:
            x ^= poly
    return out


@njit(cache=True)
def inv(a, poly, q, mt, it):
    if it.size > 0:
        return np.int64(it[a])
    result = np.int64(1)
    base = np.int64(a)
    e = (1 << q) - 2
    while e:
        if e & 1:
            result = mul(result, base, poly, q, mt, it)
        base = mul(base, base, poly, q, mt, it)
        e >>= 1
    return result


@njit(cache=True)
def axpy(c, x, y, poly, q, mt, it):
    """y += c * x in place."""
    if c == 0:
        return
    if c == 1:
        for j in range(y.size):
            y[j] ^= x[j]
    elif mt.size > 0:
        row = mt[c]
        for j in range(y.size):
            y[j] ^= row[x[j]]
    else:
        for j in range(y.size):
            y[j] ^= mul(c, x[j], poly, q, mt, it)


@njit(cache=True)
def insert(rows, pivots, dim, n, vec, poly, q, mt, it):
    """Reduce ``vec`` against the basis and append it if a residual remains.

    ``vec`` is overwritten. Returns the new dimension.
    """
    for i in range(dim):
        c = vec[pivots[i]]
        if c != 0:
            axpy(c, rows[i], vec, poly, q, mt, it)
    p = -1
    for j in range(n):
        if vec[j] != 0:
            p = j
            break
    if p < 0:
        return dim
    lead = vec[p]
    if lead != 1:
        s = inv(lead, poly, q, mt, it)
        for j in range(vec.size):
            vec[j] = mul(s, vec[j], poly, q, mt, it)
    for i in range(dim):
        c = rows[i, p]
        if c != 0:
            axpy(c, vec, rows[i], poly, q, mt, it)
    rows[dim, :] = vec
    pivots[dim] = p
    return dim + 1


@njit(cache=True)
def combine(rows, dim, size, out, poly, q, mt, it):
    """out = sum_i beta_i rows[i] with beta uniform and not all zero.

    Draws from numba's global generator, so callers seed it first.
    """
    nonzero = False
    while not nonzero:
        out[:] = 0
        for i in range(dim):
            beta = np.random.randint(0, size)
            if beta != 0:
                nonzero = True
                axpy(beta, rows[i], out, poly, q, mt, it)


@njit(cache=True)
def seed(s):
    np.random.seed(s)


@njit(cache=True)
def nc_trial(probs, packets, rows, pivots, dims, max_slots, trace, poly, q, mt, it):
    """One network-coded dissemination trial.

    ``rows``, ``pivots`` and ``dims`` are preallocated node state and are left
    holding the final buffers. ``trace`` has length ``max_slots + 1`` (or 0 to
    skip recording). Returns the slot count, or -1 if ``max_slots`` ran out.
    """
    n = probs.shape[0]
    width = rows.shape[2]
    size = 1 << q
    rows[:] = 0
    pivots[:] = 0
    for u in range(n):
        rows[u, 0, u] = 1
        rows[u, 0, n:] = packets[u]
        pivots[u, 0] = u
        dims[u] = 1
    record = trace.size > 0
    if record:
        trace[0] = 0
    if n == 1:
        return 0
    complete = 0
    total = 0
    msg = np.zeros(width, dtype=rows.dtype)
    vec = np.zeros(width, dtype=rows.dtype)
    for t in range(1, max_slots + 1):
        tx = np.random.randint(0, n)
        combine(rows[tx], dims[tx], size, msg, poly, q, mt, it)
        for u in range(n):
            if u == tx:
                continue
            p = probs[tx, u]
            if p <= 0.0 or dims[u] == n:
                continue
            if np.random.random() < p:
                vec[:] = msg
                d = insert(rows[u], pivots[u], dims[u], n, vec, poly, q, mt, it)
                if d > dims[u]:
                    dims[u] = d
                    total += 1
                    if d == n:
                        complete += 1
        if record:
            trace[t] = total
        if complete == n:
            return t
    return -1


@njit(cache=True)
def baseline_trial(probs, held, counts, max_slots, trace):
    """One random-selection (uncoded) trial.

    ``held[u, :counts[u]]`` lists the packet ids node u stores.
    """
    n = probs.shape[0]
    has = np.zeros((n, n), dtype=np.bool_)
    for u in range(n):
        held[u, 0] = u
        counts[u] = 1
        has[u, u] = True
    record = trace.size > 0
    if record:
        trace[0] = 0
    if n == 1:
        return 0
    complete = 0
    total = 0
    for t in range(1, max_slots + 1):
        tx = np.random.randint(0, n)
        pkt = held[tx, np.random.randint(0, counts[tx])]
        for u in range(n):
            if u == tx:
                continue
            p = probs[tx, u]
            if p <= 0.0 or counts[u] == n:
                continue
            if np.random.random() < p and not has[u, pkt]:
                has[u, pkt] = True
                held[u, counts[u]] = pkt
                counts[u] += 1
                total += 1
                if counts[u] == n:
                    complete += 1
        if record:
            trace[t] = total
        if complete == n:
            return t
    return -1
