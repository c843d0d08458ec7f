"""Eigen-solvers and spectral scaling.

Ground state and spectral edges come from a seeded Lanczos iteration with
full reorthogonalization (dense LAPACK below a small cutoff); the scaled
Hamiltonian maps the spectrum into [0, 1] with a tiny configurable safety
margin so that eigensolver slack cannot push an eigenphase outside the
unit interval.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import eigh_tridiagonal

from .errors import CapacityError, ConvergenceError, DegenerateSpectrumError
from .model import SparseOperator
from scipy import sparse

__all__ = [
    "SpectralBounds", "SpectralData", "ground_state", "spectral_bounds",
    "scale_hamiltonian", "scaled_frame", "spectral_weights",
    "DEFAULT_MARGIN", "DEFAULT_DENSE_CAP",
]

DEFAULT_MARGIN = 1.0 + 1e-9
DEFAULT_DENSE_CAP = 5000
_DENSE_SHORTCUT = 64
_LANCZOS_SEED = 7
_MAX_ITER = 2000


@dataclass(frozen=True)
class SpectralBounds:
    """Certified spectral edges of a Hermitian operator."""

    e0: float
    e_max: float

    def __post_init__(self):
        if self.e_max < self.e0:
            raise DegenerateSpectrumError("e_max below e0",
                                          e0=self.e0, e_max=self.e_max)

    @property
    def delta_h(self) -> float:
        return self.e_max - self.e0


@dataclass(frozen=True)
class SpectralData:
    """Scaled eigenvalues with the overlap weights of a probe state.

    ``vectors`` is optional; column nu holds the normalized component of
    the probe state on the lambda_nu eigenspace (zero column if the
    weight vanishes), which is all that downstream collapse needs even
    when degenerate levels were merged.
    """

    lambdas: np.ndarray
    weights: np.ndarray
    vectors: np.ndarray | None = None

    def __len__(self) -> int:
        return self.lambdas.shape[0]

    def mean_lambda(self) -> float:
        return float(np.dot(self.lambdas, self.weights))

    def to_csv(self, path) -> None:
        with open(path, "w") as fh:
            fh.write("lambda,weight\n")
            for lam, w in zip(self.lambdas, self.weights):
                fh.write(f"{lam!r},{w!r}\n")


# ---------------------------------------------------------------------------
# Lanczos with full reorthogonalization
# ---------------------------------------------------------------------------

def _lanczos_tridiagonal(op: SparseOperator, start: np.ndarray,
                         max_iter: int, converged):
    """Run Lanczos from `start`; stop when `converged(alphas, betas, beta)` says so.

    Returns (alphas, betas, V, beta_final, breakdown) with V holding the
    orthonormal Krylov vectors as columns and beta_final the norm of the
    last residual vector (0 on subspace exhaustion).  Full
    reorthogonalization (two passes) keeps the basis orthonormal to
    machine precision, trading speed for reproducibility.
    """
    dim = op.dimension
    max_iter = min(max_iter, dim)
    v = start / np.linalg.norm(start)
    big_v = np.empty((dim, max_iter), dtype=np.complex128)
    big_v[:, 0] = v
    alphas: list[float] = []
    betas: list[float] = []
    scale = max(op.norm_bound(), 1e-300)
    for j in range(max_iter):
        w = op.apply(big_v[:, j])
        alpha = float(np.vdot(big_v[:, j], w).real)
        alphas.append(alpha)
        w = w - alpha * big_v[:, j]
        if j > 0:
            w = w - betas[-1] * big_v[:, j - 1]
        for _ in range(2):
            w = w - big_v[:, :j + 1] @ (big_v[:, :j + 1].conj().T @ w)
        beta = float(np.linalg.norm(w))
        breakdown = beta <= 1e-13 * scale
        if breakdown:
            beta = 0.0
        if converged(alphas, betas, beta) or breakdown or j == max_iter - 1:
            return (np.array(alphas), np.array(betas), big_v[:, :j + 1],
                    beta, breakdown)
        betas.append(beta)
        big_v[:, j + 1] = w / beta
    raise AssertionError("unreachable")


def _extreme_eigenpair(op: SparseOperator, which: str, tol: float,
                       seed: int = _LANCZOS_SEED, max_iter: int = _MAX_ITER):
    dim = op.dimension
    if dim == 1:
        val = float(op.matrix[0, 0].real)
        return val, np.ones(1, dtype=np.complex128)
    if dim <= _DENSE_SHORTCUT:
        evals, vecs = np.linalg.eigh(op.to_dense())
        idx = 0 if which == "smallest" else dim - 1
        return float(evals[idx]), vecs[:, idx]
    scale = max(op.norm_bound(), 1e-300)
    pick = (lambda th: 0) if which == "smallest" else (lambda th: th.shape[0] - 1)

    def converged(alphas, betas, beta):
        if len(alphas) < 2:
            return False
        theta, s = eigh_tridiagonal(np.array(alphas), np.array(betas))
        return beta * abs(s[-1, pick(theta)]) <= tol * scale

    rng = np.random.default_rng(seed)
    start = rng.standard_normal(dim).astype(np.complex128)
    alphas, betas, big_v, beta_final, breakdown = _lanczos_tridiagonal(
        op, start, max_iter, converged)
    theta, s = eigh_tridiagonal(alphas, betas)
    idx = pick(theta)
    vec = big_v @ s[:, idx]
    if not breakdown:
        # certify with the true residual of the returned Ritz pair
        resid = float(np.linalg.norm(op.apply(vec) - theta[idx] * vec))
        if resid > tol * scale:
            raise ConvergenceError("Lanczos did not converge",
                                   which=which, residual=resid,
                                   target=tol * scale, iterations=len(alphas))
    return float(theta[idx]), vec / np.linalg.norm(vec)


def ground_state(h: SparseOperator, tol: float = 1e-12,
                 seed: int = _LANCZOS_SEED) -> tuple[float, np.ndarray]:
    """Lowest eigenpair of a Hermitian operator, residual-certified."""
    return _extreme_eigenpair(h, "smallest", tol, seed)


def spectral_bounds(h: SparseOperator, tol: float = 1e-12,
                    seed: int = _LANCZOS_SEED) -> SpectralBounds:
    """Certified (e0, e_max); delta_h = e_max - e0 is the scaling width."""
    e0, _ = _extreme_eigenpair(h, "smallest", tol, seed)
    e_max, _ = _extreme_eigenpair(h, "largest", tol, seed)
    return SpectralBounds(e0=e0, e_max=max(e0, e_max))


def scaled_frame(bounds: SpectralBounds,
                 margin: float = DEFAULT_MARGIN) -> tuple[float, float]:
    """(offset, width) of the affine map E -> (E - offset)/width used for H-bar.

    The interval is widened symmetrically by `margin` so eigensolver
    slack on the edges cannot push an eigenphase outside [0, 1].
    """
    slack = 0.5 * (margin - 1.0) * bounds.delta_h
    return bounds.e0 - slack, margin * bounds.delta_h


def scale_hamiltonian(h: SparseOperator, bounds: SpectralBounds,
                      margin: float = DEFAULT_MARGIN) -> SparseOperator:
    """H-bar = (H - e0)/delta_h, spectrum in [0, 1]; dimension-1 maps to [0]."""
    if h.dimension == 1:
        return SparseOperator(h.basis, sparse.csr_matrix((1, 1)), hermitian=True)
    if bounds.delta_h <= 0.0:
        raise DegenerateSpectrumError("cannot scale a zero-width spectrum",
                                      e0=bounds.e0, e_max=bounds.e_max)
    lo, width = scaled_frame(bounds, margin)
    shifted = h.matrix - lo * sparse.identity(h.dimension, format="csr")
    return SparseOperator(h.basis, shifted * (1.0 / width), hermitian=True)


# ---------------------------------------------------------------------------
# spectral weights of a probe state
# ---------------------------------------------------------------------------

def _merge_levels(lambdas, weights, scaled_vectors, merge_tol):
    """Group eigenvalues closer than merge_tol, summing weights.

    `scaled_vectors` columns are amplitude-weighted eigenspace components
    (c_nu psi_nu); the merged column is their sum normalized to 1.
    """
    order = np.argsort(lambdas, kind="stable")
    lambdas = lambdas[order]
    weights = weights[order]
    if scaled_vectors is not None:
        scaled_vectors = scaled_vectors[:, order]
    groups = []
    start = 0
    for i in range(1, lambdas.shape[0] + 1):
        if i == lambdas.shape[0] or lambdas[i] - lambdas[i - 1] > merge_tol:
            groups.append((start, i))
            start = i
    out_l = np.empty(len(groups))
    out_w = np.empty(len(groups))
    out_v = None
    if scaled_vectors is not None:
        out_v = np.zeros((scaled_vectors.shape[0], len(groups)),
                         dtype=np.complex128)
    for g, (a, b) in enumerate(groups):
        w = weights[a:b].sum()
        out_w[g] = w
        out_l[g] = (np.dot(lambdas[a:b], weights[a:b]) / w if w > 0
                    else lambdas[a:b].mean())
        if scaled_vectors is not None and w > 0:
            comp = scaled_vectors[:, a:b].sum(axis=1)
            out_v[:, g] = comp / np.linalg.norm(comp)
    return out_l, out_w, out_v


def spectral_weights(h_scaled: SparseOperator, phi: np.ndarray, *,
                     keep_vectors: bool = False,
                     dense_cap: int = DEFAULT_DENSE_CAP,
                     krylov_fallback: bool = False,
                     tol: float = 1e-11,
                     merge_tol: float = 1e-12) -> SpectralData:
    """(lambda_nu, |<psi_nu|phi>|^2) pairs of the scaled Hamiltonian.

    Dense diagonalization below `dense_cap`; above it, a Lanczos run
    seeded with phi itself resolves exactly the weight-carrying eigenpairs
    (enable with krylov_fallback=True, otherwise a CapacityError is
    raised).  Degenerate levels are merged within `merge_tol`.
    """
    dim = h_scaled.dimension
    phi = np.asarray(phi, dtype=np.complex128)
    if dim <= dense_cap:
        evals, vecs = np.linalg.eigh(h_scaled.to_dense())
        c = vecs.conj().T @ phi
        weights = np.abs(c) ** 2
        scaled = vecs * c[None, :] if keep_vectors else None
        lam, w, v = _merge_levels(evals, weights, scaled, merge_tol)
        return SpectralData(lambdas=lam, weights=w, vectors=v)
    if not krylov_fallback:
        raise CapacityError("dimension exceeds the dense cap "
                            "(enable the Krylov fallback to proceed)",
                            dimension=dim, dense_cap=dense_cap)
    return _krylov_weights(h_scaled, phi, keep_vectors, tol, merge_tol)


def _krylov_weights(op, phi, keep_vectors, tol, merge_tol):
    scale = max(op.norm_bound(), 1e-300)
    weight_floor = 1e-14

    def converged(alphas, betas, beta):
        if len(alphas) < 2 or len(alphas) % 10 != 0:
            return False
        theta, s = eigh_tridiagonal(np.array(alphas), np.array(betas))
        carrying = s[0, :] ** 2 > weight_floor
        return bool(np.all(beta * np.abs(s[-1, carrying]) <= tol * scale))

    alphas, betas, big_v, beta_final, breakdown = _lanczos_tridiagonal(
        op, phi, _MAX_ITER, converged)
    theta, s = eigh_tridiagonal(alphas, betas)
    if not breakdown:
        carrying = s[0, :] ** 2 > weight_floor
        resid = (beta_final * float(np.max(np.abs(s[-1, carrying])))
                 if carrying.any() else 0.0)
        if resid > tol * scale:
            raise ConvergenceError("Krylov weight resolution did not converge",
                                   residual=resid, target=tol * scale,
                                   iterations=len(alphas))
    c = s[0, :]
    weights = c ** 2
    scaled = (big_v @ s) * c[None, :] if keep_vectors else None
    lam, w, v = _merge_levels(theta, weights, scaled, merge_tol)
    return SpectralData(lambdas=lam, weights=w, vectors=v)
