"""Exact action of analytic functions of Hermitian operators on vectors.

Three paths, picked automatically:

* diagonal operators: elementwise, exact;
* dimension <= dense_cap: dense eigendecomposition;
* otherwise: truncated Chebyshev series with Bessel-function
  coefficients and a rigorous tail bound <= `tol` (no Trotter error
  anywhere in this package, by design).
"""

from __future__ import annotations

import numpy as np
from scipy.special import jv

from .errors import NumericalError
from .model import SparseOperator

DEFAULT_DENSE_CAP = 5000
_CHEB_TOL = 1e-14
_CHEB_MAX_TERMS = 20000


def _bessel_tail_order(a: float, tol: float) -> int:
    """Smallest K with 2 sum_{k>K} |J_k(a)| <= tol, via |J_k| <= (a/2)^k/k!."""
    a = abs(a)
    if a == 0.0:
        return 0
    k = max(1, int(a))
    log_term = (k + 1) * np.log(a / 2.0) - _log_factorial(k + 1)
    while k < _CHEB_MAX_TERMS:
        # geometric majorant of the factorial-decay tail, valid once k+2 > a/2
        if k + 2 > a / 2.0:
            ratio = a / (2.0 * (k + 2))
            if ratio < 1.0:
                log_tail = np.log(2.0) + log_term - np.log1p(-ratio)
                if log_tail < np.log(tol):
                    return k
        k += 1
        log_term += np.log(a / 2.0) - np.log(k + 1)
    raise NumericalError("Chebyshev series did not reach tolerance",
                         a=a, tol=tol, max_terms=_CHEB_MAX_TERMS)


def _log_factorial(n: int) -> float:
    from scipy.special import gammaln
    return float(gammaln(n + 1))


def _chebyshev_apply(matvec, psi: np.ndarray, coeffs: np.ndarray) -> np.ndarray:
    """sum_k coeffs[k] T_k(X) psi via the three-term recurrence."""
    t_prev = psi.astype(np.complex128)
    out = coeffs[0] * t_prev
    if coeffs.shape[0] == 1:
        return out
    t_cur = matvec(t_prev)
    out = out + coeffs[1] * t_cur
    for k in range(2, coeffs.shape[0]):
        t_nxt = 2.0 * matvec(t_cur) - t_prev
        out = out + coeffs[k] * t_nxt
        t_prev, t_cur = t_cur, t_nxt
    return out


def _sin_cos_cheb(op: SparseOperator, gamma: float, psi: np.ndarray,
                  tol: float = _CHEB_TOL):
    r = op.norm_bound()
    if r == 0.0:
        return np.zeros_like(psi, dtype=np.complex128), psi.astype(np.complex128)
    a = gamma * r
    kmax = _bessel_tail_order(a, tol)
    ks = np.arange(kmax + 1)
    bess = jv(ks, a)
    sin_c = np.zeros(kmax + 1)
    cos_c = np.zeros(kmax + 1)
    cos_c[0] = bess[0]
    for k in range(1, kmax + 1):
        if k % 2 == 1:
            sin_c[k] = 2.0 * (-1.0) ** ((k - 1) // 2) * bess[k]
        else:
            cos_c[k] = 2.0 * (-1.0) ** (k // 2) * bess[k]
    inv_r = 1.0 / r
    matvec = lambda v: inv_r * op.apply(v)
    return (_chebyshev_apply(matvec, psi, sin_c.astype(np.complex128)),
            _chebyshev_apply(matvec, psi, cos_c.astype(np.complex128)))


def sin_cos_apply(op: SparseOperator, gamma: float, psi: np.ndarray,
                  dense_cap: int = DEFAULT_DENSE_CAP):
    """(sin(gamma*O) psi, cos(gamma*O) psi) for Hermitian O."""
    if op.is_diagonal():
        d = op.diagonal().real
        return np.sin(gamma * d) * psi, np.cos(gamma * d) * psi
    if op.dimension <= dense_cap:
        evals, vecs = np.linalg.eigh(op.to_dense())
        c = vecs.conj().T @ psi
        return vecs @ (np.sin(gamma * evals) * c), vecs @ (np.cos(gamma * evals) * c)
    return _sin_cos_cheb(op, gamma, psi)


def expm_apply(h: SparseOperator, t: float, psi: np.ndarray,
               interval: tuple[float, float] | None = None,
               dense_cap: int = DEFAULT_DENSE_CAP) -> np.ndarray:
    """exp(-i H t) psi for Hermitian H.

    `interval` optionally supplies known spectral bounds (e0, e_max);
    otherwise the Gershgorin bound is used for the Chebyshev path.
    """
    if t == 0.0:
        return psi.astype(np.complex128).copy()
    if h.is_diagonal():
        return np.exp(-1j * t * h.diagonal().real) * psi
    if h.dimension <= dense_cap:
        evals, vecs = np.linalg.eigh(h.to_dense())
        return vecs @ (np.exp(-1j * t * evals) * (vecs.conj().T @ psi))
    if interval is None:
        r = h.norm_bound()
        interval = (-r, r)
    lo, hi = interval
    center = 0.5 * (lo + hi)
    half = 0.5 * (hi - lo)
    if half == 0.0:
        return np.exp(-1j * t * center) * psi
    a = t * half
    kmax = _bessel_tail_order(a, _CHEB_TOL)
    ks = np.arange(kmax + 1)
    coeffs = ((-1j) ** ks) * jv(ks, a)
    coeffs[1:] *= 2.0
    inv_half = 1.0 / half

    def matvec(v):
        return inv_half * (h.apply(v) - center * v)

    out = _chebyshev_apply(matvec, psi, coeffs.astype(np.complex128))
    return np.exp(-1j * t * center) * out
