"""Pure-numpy implementations of the hot kernels.

Reference semantics for the numba backend: both must agree to ~1e-14 on
identical inputs (they are not required to be bit-identical because libm
and numpy's vectorized sin may differ in the last ulp).
"""

from __future__ import annotations

import numpy as np

BACKEND = "numpy"


def _popcount(a: np.ndarray) -> np.ndarray:
    return np.bitwise_count(a).astype(np.int64)


def one_body_triplets(patterns: np.ndarray, term_i: np.ndarray,
                      term_j: np.ndarray, term_v: np.ndarray):
    """COO triplets of sum_t v_t c^+_{i_t} c_{j_t} on one spin species.

    `patterns` is the sorted int64 occupation-mask list of the species'
    fixed-particle-number sector; the fermionic sign is the parity of the
    occupied modes strictly between i and j.
    """
    d = patterns.shape[0]
    all_rows = np.arange(d, dtype=np.int64)
    rows_acc, cols_acc, vals_acc = [], [], []
    for t in range(term_i.shape[0]):
        i = int(term_i[t])
        j = int(term_j[t])
        v = term_v[t]
        occ_j = ((patterns >> j) & 1) == 1
        if i == j:
            sel = np.nonzero(occ_j)[0]
            rows_acc.append(sel)
            cols_acc.append(sel)
            vals_acc.append(np.full(sel.shape[0], v, dtype=np.complex128))
            continue
        sel = np.nonzero(occ_j & (((patterns >> i) & 1) == 0))[0]
        if sel.shape[0] == 0:
            continue
        src = patterns[sel]
        lo, hi = (i, j) if i < j else (j, i)
        between = np.int64(((1 << hi) - 1) ^ ((1 << (lo + 1)) - 1))
        sign = 1.0 - 2.0 * (_popcount(src & between) & 1)
        dst = (src ^ np.int64(1 << j)) | np.int64(1 << i)
        cols = np.searchsorted(patterns, dst)
        rows_acc.append(all_rows[sel])
        cols_acc.append(cols.astype(np.int64))
        vals_acc.append(v * sign)
    if not rows_acc:
        z = np.zeros(0, dtype=np.int64)
        return z, z.copy(), np.zeros(0, dtype=np.complex128)
    return (np.concatenate(rows_acc),
            np.concatenate(cols_acc),
            np.concatenate(vals_acc).astype(np.complex128))


def pair_popcount(patterns_up: np.ndarray, patterns_dn: np.ndarray) -> np.ndarray:
    """popcount(up & dn) for every basis state, up-major order."""
    return _popcount(patterns_up[:, None] & patterns_dn[None, :]).ravel()


def fejer_accumulate(lambdas: np.ndarray, weights: np.ndarray, w_qubits: int) -> np.ndarray:
    """Exact phase-estimation outcome distribution over 2^W bins.

    P(y) = (1/N) sum_nu w_nu F_N(2 pi (lambda_nu - y/N)), N = 2^W, where
    F_N is the order-N Fejer kernel.  The numerator phase is reduced with
    frac(lambda*N), which is exact because N is a power of two; this keeps
    the evaluation stable arbitrarily close to the kernel's singularity.
    """
    n = 1 << w_qubits
    y_over_n = np.arange(n, dtype=np.float64) / n
    p = np.zeros(n, dtype=np.float64)
    for nu in range(lambdas.shape[0]):
        lam = float(lambdas[nu])
        w = float(weights[nu])
        if w == 0.0:
            continue
        f = lam * n - np.floor(lam * n)
        r1 = f if f <= 0.5 else 1.0 - f
        s1sq = np.sin(np.pi * r1) ** 2
        d = lam - y_over_n
        d = np.where(d >= 0.5, d - 1.0, d)
        d = np.where(d < -0.5, d + 1.0, d)
        s2 = np.sin(np.pi * np.abs(d))
        with np.errstate(divide="ignore", invalid="ignore"):
            fk = s1sq / (s2 * s2) / n
        fk = np.where(s2 == 0.0, float(n), fk)
        p += (w / n) * fk
    return p
