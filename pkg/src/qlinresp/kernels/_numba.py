"""numba @njit implementations of the hot kernels.

Same contracts as kernels._numpy; see there for the semantics.
"""

from __future__ import annotations

import math

import numpy as np
from numba import njit

BACKEND = "numba"


@njit(cache=True)
def _popcount64(x):
    n = 0
    while x != 0:
        x &= x - 1
        n += 1
    return n


@njit(cache=True)
def _one_body_fill(patterns, term_i, term_j, term_v, rows, cols, vals):
    d = patterns.shape[0]
    nt = term_i.shape[0]
    k = 0
    for a in range(d):
        p = patterns[a]
        for t in range(nt):
            j = term_j[t]
            if (p >> j) & 1 == 0:
                continue
            i = term_i[t]
            if i == j:
                rows[k] = a
                cols[k] = a
                vals[k] = term_v[t]
                k += 1
                continue
            if (p >> i) & 1 == 1:
                continue
            if i < j:
                lo, hi = i, j
            else:
                lo, hi = j, i
            between = ((np.int64(1) << hi) - 1) ^ ((np.int64(1) << (lo + 1)) - 1)
            sign = 1.0 - 2.0 * (_popcount64(p & between) & 1)
            dst = (p ^ (np.int64(1) << j)) | (np.int64(1) << i)
            rows[k] = a
            cols[k] = np.searchsorted(patterns, dst)
            vals[k] = term_v[t] * sign
            k += 1
    return k


def one_body_triplets(patterns, term_i, term_j, term_v):
    cap = patterns.shape[0] * max(term_i.shape[0], 1)
    rows = np.empty(cap, dtype=np.int64)
    cols = np.empty(cap, dtype=np.int64)
    vals = np.empty(cap, dtype=np.complex128)
    k = _one_body_fill(patterns, term_i, term_j, term_v, rows, cols, vals)
    return rows[:k], cols[:k], vals[:k]


@njit(cache=True)
def pair_popcount(patterns_up, patterns_dn):
    du = patterns_up.shape[0]
    dd = patterns_dn.shape[0]
    out = np.empty(du * dd, dtype=np.int64)
    for a in range(du):
        pu = patterns_up[a]
        base = a * dd
        for b in range(dd):
            out[base + b] = _popcount64(pu & patterns_dn[b])
    return out


@njit(cache=True)
def fejer_accumulate(lambdas, weights, w_qubits):
    n = 1 << w_qubits
    inv_n = 1.0 / n
    p = np.zeros(n, dtype=np.float64)
    for nu in range(lambdas.shape[0]):
        w = weights[nu]
        if w == 0.0:
            continue
        lam = lambdas[nu]
        f = lam * n - math.floor(lam * n)
        r1 = f if f <= 0.5 else 1.0 - f
        s1 = math.sin(math.pi * r1)
        s1sq = s1 * s1
        wn = w * inv_n
        for y in range(n):
            d = lam - y * inv_n
            if d >= 0.5:
                d -= 1.0
            elif d < -0.5:
                d += 1.0
            s2 = math.sin(math.pi * abs(d))
            if s2 == 0.0:
                p[y] += wn * n
            else:
                p[y] += wn * s1sq / (s2 * s2) * inv_n
    return p
