"""Phase-estimation outcome distributions and their statistics.

The exact outcome probability over the W-qubit register is the spectral
weight distribution smeared by the order-2^W Fejer kernel on the 2^W-bin
phase grid; a brute-force statevector realization of the same circuit
serves as the independent verification oracle.  Sampling, Hoeffding
bookkeeping, rescaling to physical units and the resource estimate live
here too.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .errors import CapacityError, DegenerateSpectrumError, DomainError
from .model import SparseOperator
from .spectral import (DEFAULT_MARGIN, SpectralBounds, SpectralData,
                       scaled_frame)

__all__ = [
    "PEADistribution", "SampleHistogram", "ResourceEstimate",
    "PhysicalResponse", "fejer_kernel", "pea_distribution",
    "statevector_pea_oracle", "sample", "hoeffding_n", "max_error",
    "rescale", "w_for_resolution", "resource_estimate",
    "write_response_csv", "write_metadata",
]

W_CAP = 24
_SV_CAP = 1 << 22


@dataclass(frozen=True)
class PEADistribution:
    """Exact outcome probabilities P(y), y in [0, 2^W)."""

    w_qubits: int
    probabilities: np.ndarray = field(repr=False)
    spectral: SpectralData | None = field(default=None, repr=False)

    @property
    def n_bins(self) -> int:
        return 1 << self.w_qubits


@dataclass(frozen=True)
class SampleHistogram:
    counts: np.ndarray = field(repr=False)
    n: int = 0
    seed: int = 0

    def frequencies(self) -> np.ndarray:
        return self.counts / self.n


@dataclass(frozen=True)
class ResourceEstimate:
    """Register size, evolution time and repetition budget for a target run.

    amplified_calls is an order estimate (the 1/P_success^2 amplification
    overhead with its O(1) constant dropped), not an exact call count.
    """

    w_qubits: int
    t_max: float
    n_rep: int
    p_success: float
    gamma: float
    amplified_calls: float | None = None

    def to_json(self) -> dict:
        return {
            "w_qubits": self.w_qubits,
            "t_max": self.t_max,
            "n_rep": self.n_rep,
            "p_success": self.p_success,
            "gamma": self.gamma,
            "amplified_calls_order": self.amplified_calls,
        }


# ---------------------------------------------------------------------------
# kernel and exact distribution
# ---------------------------------------------------------------------------

def fejer_kernel(x, n: int):
    """Order-n Fejer kernel (1/n) sin^2(n x/2) / sin^2(x/2).

    The removable singularity at x = 0 (mod 2 pi) evaluates to n.  The
    numerator phase is reduced modulo the kernel period before the sine,
    which keeps the value accurate near the denominator's zeros.
    """
    if n < 1:
        raise DomainError("kernel order must be >= 1", n=n)
    x = np.asarray(x, dtype=np.float64)
    d = x / (2.0 * np.pi)
    d = d - np.floor(d + 0.5)  # wrap to [-1/2, 1/2)
    nd = n * d
    m = nd - np.floor(nd)
    r1 = np.minimum(m, 1.0 - m)
    s1 = np.sin(np.pi * r1)
    s2 = np.sin(np.pi * np.abs(d))
    with np.errstate(divide="ignore", invalid="ignore"):
        out = (s1 * s1) / (s2 * s2) / n
    out = np.where(s2 == 0.0, float(n), out)
    return float(out) if out.ndim == 0 else out


def pea_distribution(spectral: SpectralData, w_qubits: int) -> PEADistribution:
    """Exact P(y) = (1/2^W) sum_nu w_nu F_{2^W}(2 pi (lambda_nu - y/2^W))."""
    if not (1 <= w_qubits <= W_CAP):
        raise CapacityError("register size outside [1, cap]",
                            module="response", w_qubits=w_qubits, cap=W_CAP)
    wsum = float(spectral.weights.sum())
    if abs(wsum - 1.0) > 1e-8:
        raise DomainError("spectral weights must sum to 1", total=wsum)
    p = kernels.fejer_accumulate(
        np.asarray(spectral.lambdas, dtype=np.float64),
        np.asarray(spectral.weights, dtype=np.float64), w_qubits)
    np.clip(p, 0.0, None, out=p)
    return PEADistribution(w_qubits=w_qubits, probabilities=p, spectral=spectral)


def statevector_pea_oracle(h_scaled: SparseOperator, phi: np.ndarray,
                           w_qubits: int, return_register: bool = False):
    """Brute-force phase estimation on the explicit joint register.

    Expands phi in the eigenbasis of the scaled Hamiltonian, applies the
    controlled e^{i 2 pi k H} phases and the inverse Fourier transform on
    the W-qubit register, and returns the exact marginal outcome
    distribution (plus, optionally, the post-transform joint register as
    a (2^W, dim) array of amplitudes in the occupation basis).
    """
    n = 1 << w_qubits
    dim = h_scaled.dimension
    if n * dim > _SV_CAP:
        raise CapacityError("joint register exceeds the statevector cap",
                            module="response", w_qubits=w_qubits,
                            dimension=dim, cap=_SV_CAP)
    evals, vecs = np.linalg.eigh(h_scaled.to_dense())
    c = vecs.conj().T @ np.asarray(phi, dtype=np.complex128)
    k = np.arange(n)[:, None]
    joint = c[None, :] * np.exp(2j * np.pi * k * evals[None, :]) / np.sqrt(n)
    # inverse QFT convention: |k> -> (1/sqrt N) sum_y e^{-2 pi i k y/N} |y>
    transformed = np.fft.fft(joint, axis=0) / np.sqrt(n)
    probs = (np.abs(transformed) ** 2).sum(axis=1)
    np.clip(probs, 0.0, None, out=probs)
    data = SpectralData(lambdas=evals, weights=np.abs(c) ** 2)
    dist = PEADistribution(w_qubits=w_qubits, probabilities=probs, spectral=data)
    if return_register:
        register = transformed @ vecs.T  # rows back in the occupation basis
        return dist, register
    return dist


# ---------------------------------------------------------------------------
# sampling statistics
# ---------------------------------------------------------------------------

def sample(dist: PEADistribution, n: int, seed: int) -> SampleHistogram:
    """n inverse-CDF draws from the exact distribution, reproducible by seed."""
    if n < 1:
        raise DomainError("sample count must be >= 1", n=n)
    rng = np.random.default_rng(seed)
    cdf = np.cumsum(dist.probabilities)
    idx = np.searchsorted(cdf, rng.random(n) * cdf[-1], side="right")
    idx = np.minimum(idx, dist.n_bins - 1)
    counts = np.bincount(idx, minlength=dist.n_bins)
    return SampleHistogram(counts=counts, n=n, seed=seed)


def hoeffding_n(delta: float, epsilon: float) -> int:
    """Samples for per-bin precision delta at confidence 1 - epsilon."""
    if not (0 < delta < 1):
        raise DomainError("delta must lie in (0, 1)", delta=delta)
    if not (0 < epsilon < 1):
        raise DomainError("epsilon must lie in (0, 1)", epsilon=epsilon)
    return math.ceil(math.log(2.0 / epsilon) / (2.0 * delta ** 2))


def max_error(hist: SampleHistogram, dist: PEADistribution) -> float:
    """sup_y |h_N(y) - P(y)|."""
    if hist.counts.shape[0] != dist.probabilities.shape[0]:
        raise DomainError("histogram and distribution lengths differ",
                          hist=hist.counts.shape[0],
                          dist=dist.probabilities.shape[0])
    return float(np.abs(hist.frequencies() - dist.probabilities).max())


# ---------------------------------------------------------------------------
# physical units
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PhysicalResponse:
    """S_O(omega) on the ground-state-relative energy grid."""

    omega: np.ndarray = field(repr=False)
    s_o: np.ndarray = field(repr=False)
    bin_width: float = 0.0

    def riemann_sum(self) -> float:
        return float(self.s_o.sum() * self.bin_width)

    def peak_omega(self) -> float:
        return float(self.omega[int(np.argmax(self.s_o))])

    def to_csv(self, path) -> None:
        with open(path, "w") as fh:
            fh.write("omega,s_o\n")
            for w, s in zip(self.omega, self.s_o):
                fh.write(f"{w!r},{s!r}\n")


def rescale(dist: PEADistribution, bounds: SpectralBounds,
            o_sq_expectation: float,
            margin: float = DEFAULT_MARGIN) -> PhysicalResponse:
    """Convert bin probabilities to the physical response density.

    omega_y is the energy transfer of bin y relative to the ground state;
    dividing by the bin width and multiplying by <O^2>_0 undoes both the
    discretization and the unit normalization, so the Riemann sum of the
    emitted density equals <O^2>_0.
    """
    if bounds.delta_h <= 0.0:
        raise DegenerateSpectrumError("physical rescaling needs delta_h > 0",
                                      e0=bounds.e0, e_max=bounds.e_max)
    lo, width = scaled_frame(bounds, margin)
    n = dist.n_bins
    y = np.arange(n)
    omega = (lo - bounds.e0) + width * y / n
    bin_width = width / n
    s_o = o_sq_expectation * dist.probabilities / bin_width
    return PhysicalResponse(omega=omega, s_o=s_o, bin_width=bin_width)


def w_for_resolution(delta_omega: float, bounds: SpectralBounds) -> int:
    """Register size resolving delta_omega: ceil(log2(delta_h/delta_omega))."""
    if not (0 < delta_omega <= bounds.delta_h):
        raise DomainError("resolution must lie in (0, delta_h]",
                          delta_omega=delta_omega, delta_h=bounds.delta_h)
    ratio = bounds.delta_h / delta_omega
    # tolerate float dust when the ratio is an exact power of two
    return max(1, math.ceil(math.log2(ratio) - 1e-9))


def resource_estimate(delta_omega: float, bounds: SpectralBounds,
                      delta_s: float, epsilon: float, o_norm: float,
                      o_sq_expectation: float, amplify: bool = False,
                      c: float = 1.0) -> ResourceEstimate:
    """Register size, maximum evolution time and repetition count.

    W = ceil(log2(delta_h/delta_omega)) ancilla qubits, t_max =
    2 pi / delta_omega, N from the Hoeffding bound, gamma from the bias
    bound, and the heralded success probability gamma^2 <O^2>_0.
    """
    w = w_for_resolution(delta_omega, bounds)
    from .prep import gamma_bound  # local import to avoid a cycle
    gamma = gamma_bound(delta_s, o_norm, c)
    p_success = gamma ** 2 * o_sq_expectation
    return ResourceEstimate(
        w_qubits=w,
        t_max=2.0 * np.pi / delta_omega,
        n_rep=hoeffding_n(delta_s, epsilon),
        p_success=p_success,
        gamma=gamma,
        amplified_calls=(1.0 / p_success ** 2) if amplify else None,
    )


# ---------------------------------------------------------------------------
# artifact writers (shared with the CLI; byte-deterministic given inputs)
# ---------------------------------------------------------------------------

def write_response_csv(path, dist: PEADistribution, bounds: SpectralBounds,
                       hist: SampleHistogram | None = None,
                       margin: float = DEFAULT_MARGIN) -> None:
    lo, width = scaled_frame(bounds, margin)
    n = dist.n_bins
    freqs = hist.frequencies() if hist is not None else None
    with open(path, "w") as fh:
        fh.write("y,omega_scaled,omega_physical,p_exact,h_sampled,abs_error\n")
        for y in range(n):
            ws = y / n
            wp = (lo - bounds.e0) + width * ws
            p = dist.probabilities[y]
            if freqs is None:
                fh.write(f"{y},{ws!r},{wp!r},{p!r},nan,nan\n")
            else:
                h = freqs[y]
                fh.write(f"{y},{ws!r},{wp!r},{p!r},{h!r},{abs(h - p)!r}\n")


def write_metadata(path, **fields) -> None:
    with open(path, "w") as fh:
        json.dump(fields, fh, indent=2, sort_keys=True)
        fh.write("\n")
