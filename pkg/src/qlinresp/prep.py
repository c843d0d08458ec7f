"""Excited-state preparation via the heralded ancilla rotation.

The reference state is O|psi0> normalized; the heralded routine applies
the two-by-two block rotation exp(-i gamma O x sigma_y) to (psi0 x |1>)
and conditions on measuring the ancilla in |0>, leaving
sin(gamma O)|psi0> (normalized) with success probability
<psi0| sin^2(gamma O) |psi0>.  All operator functions are evaluated
exactly (see opfuncs), so the only deviation from the reference state is
the intrinsic O(gamma^2) rotation bias.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, InconsistentInputsError, NullExcitationError
from .model import SparseOperator
from .opfuncs import DEFAULT_DENSE_CAP, sin_cos_apply
from .spectral import _extreme_eigenpair

__all__ = [
    "PreparedState", "LcuDecomposition", "RepeatUntilSuccessResult",
    "exact_excited_state", "prepare_gamma", "repeat_until_success",
    "round_success_probabilities", "lcu_success_probability", "gamma_bound",
    "operator_norm", "extrapolate_to_zero_gamma",
]

_NULL_TOL = 1e-14


@dataclass(frozen=True)
class PreparedState:
    """Normalized prepared register with the heralding bookkeeping.

    gamma == 0 marks the exact reference path.  bias_bound is the
    gamma^2 * ||O||^2 order estimate of the deviation from the reference
    state (Gershgorin upper bound on the norm, hence conservative).
    """

    vector: np.ndarray = field(repr=False)
    gamma: float
    success_probability: float
    bias_bound: float
    o_sq_expectation: float


@dataclass(frozen=True)
class LcuDecomposition:
    """Coefficient magnitudes |alpha_k| of O = sum_k alpha_k U_k."""

    alphas: tuple[float, ...]

    def __post_init__(self):
        if len(self.alphas) == 0 or any(a <= 0 for a in self.alphas):
            raise InconsistentInputsError(
                "decomposition needs positive coefficients",
                alphas=list(self.alphas))

    @property
    def alpha(self) -> float:
        return float(sum(self.alphas))

    @property
    def d(self) -> int:
        return len(self.alphas)

    def validate_norm(self, o_norm: float) -> None:
        """A valid decomposition has one-norm alpha >= ||O||."""
        if self.alpha < o_norm * (1.0 - 1e-12):
            raise InconsistentInputsError(
                "one-norm below the operator norm", alpha=self.alpha,
                o_norm=o_norm)


@dataclass(frozen=True)
class RepeatUntilSuccessResult:
    """Outcome of one repeat-until-success cascade (failure is heralded)."""

    state: PreparedState | None
    rounds_used: int
    succeeded: bool
    cumulative_failure_probability: float
    round_success_probabilities: np.ndarray = field(repr=False)


def exact_excited_state(o: SparseOperator, psi0: np.ndarray) -> PreparedState:
    """Reference path: O|psi0> normalized, success probability 1."""
    v = o.apply(np.asarray(psi0, dtype=np.complex128))
    o_sq = float(np.vdot(v, v).real)
    if o_sq <= _NULL_TOL:
        raise NullExcitationError("excitation operator annihilates psi0",
                                  o_sq_expectation=o_sq)
    return PreparedState(vector=v / np.sqrt(o_sq), gamma=0.0,
                         success_probability=1.0, bias_bound=0.0,
                         o_sq_expectation=o_sq)


def prepare_gamma(o: SparseOperator, psi0: np.ndarray, gamma: float,
                  dense_cap: int = DEFAULT_DENSE_CAP) -> PreparedState:
    """Heralded rotation path: sin(gamma O)|psi0> normalized.

    success_probability is <psi0|sin^2(gamma O)|psi0> =
    gamma^2 <O^2>_0 + O(gamma^4).
    """
    if gamma <= 0:
        raise DomainError("gamma must be positive", module="prep", gamma=gamma)
    norm_bound = o.norm_bound()
    if gamma * norm_bound >= np.pi / 2:
        warnings.warn("gamma * ||O|| >= pi/2: the rotation is no longer "
                      "a small perturbation", stacklevel=2)
    psi0 = np.asarray(psi0, dtype=np.complex128)
    ref = exact_excited_state(o, psi0)
    s, _ = sin_cos_apply(o, gamma, psi0, dense_cap=dense_cap)
    p = float(np.vdot(s, s).real)
    if p <= _NULL_TOL ** 2:
        raise NullExcitationError("sin(gamma O) annihilates psi0",
                                  success_probability=p)
    return PreparedState(vector=s / np.sqrt(p), gamma=gamma,
                         success_probability=p,
                         bias_bound=gamma ** 2 * norm_bound ** 2,
                         o_sq_expectation=ref.o_sq_expectation)


def round_success_probabilities(o: SparseOperator, psi0: np.ndarray,
                                gamma: float, rounds: int,
                                dense_cap: int = DEFAULT_DENSE_CAP) -> np.ndarray:
    """Exact success probability of each cascade round (1-indexed order).

    After r-1 failures the register holds cos^{r-1}(gamma O)|psi0>
    normalized; round r succeeds with the sin^2 expectation on it.
    """
    probs = np.empty(rounds)
    cur = np.asarray(psi0, dtype=np.complex128)
    for r in range(rounds):
        s, c = sin_cos_apply(o, gamma, cur, dense_cap=dense_cap)
        probs[r] = float(np.vdot(s, s).real)
        c_norm = np.linalg.norm(c)
        if c_norm == 0.0:
            # round r succeeded with certainty; later rounds are unreachable
            probs[r + 1:] = 1.0
            break
        cur = c / c_norm
    return probs


def repeat_until_success(o: SparseOperator, psi0: np.ndarray, gamma: float,
                         max_rounds: int, rng: np.random.Generator | int,
                         dense_cap: int = DEFAULT_DENSE_CAP) -> RepeatUntilSuccessResult:
    """Simulate the heralded cascade, re-rotating the cos-projected register.

    Exhausting max_rounds is a heralded failure carried in the result,
    not an exception.
    """
    if gamma <= 0:
        raise DomainError("gamma must be positive", module="prep", gamma=gamma)
    if max_rounds < 1:
        raise DomainError("max_rounds must be >= 1", module="prep",
                          max_rounds=max_rounds)
    if isinstance(rng, (int, np.integer)):
        rng = np.random.default_rng(rng)
    norm_bound = o.norm_bound()
    ref = exact_excited_state(o, psi0)
    cur = np.asarray(psi0, dtype=np.complex128)
    probs = []
    cum_fail = 1.0
    for r in range(1, max_rounds + 1):
        s, c = sin_cos_apply(o, gamma, cur, dense_cap=dense_cap)
        p = float(np.vdot(s, s).real)
        probs.append(p)
        if rng.random() < p:
            state = PreparedState(vector=s / np.sqrt(p), gamma=gamma,
                                  success_probability=p,
                                  bias_bound=gamma ** 2 * norm_bound ** 2,
                                  o_sq_expectation=ref.o_sq_expectation)
            return RepeatUntilSuccessResult(
                state=state, rounds_used=r, succeeded=True,
                cumulative_failure_probability=cum_fail * (1.0 - p),
                round_success_probabilities=np.array(probs))
        cum_fail *= 1.0 - p
        c_norm = np.linalg.norm(c)
        if c_norm == 0.0:
            break  # cos branch vanished; failure was impossible to continue
        cur = c / c_norm
    return RepeatUntilSuccessResult(
        state=None, rounds_used=max_rounds, succeeded=False,
        cumulative_failure_probability=cum_fail,
        round_success_probabilities=np.array(probs))


def lcu_success_probability(o_sq_expectation: float,
                            decomposition: LcuDecomposition) -> float:
    """<O^2>_0 / alpha^2 for the linear-combination-of-unitaries route."""
    if o_sq_expectation < 0:
        raise DomainError("<O^2>_0 must be nonnegative", module="prep",
                          o_sq_expectation=o_sq_expectation)
    p = o_sq_expectation / decomposition.alpha ** 2
    if p > 1.0 + 1e-12:
        raise InconsistentInputsError(
            "success probability above 1: the one-norm is below ||O psi0||",
            probability=p, alpha=decomposition.alpha)
    return min(p, 1.0)


def gamma_bound(delta: float, o_norm: float, c: float = 1.0) -> float:
    """Largest rotation angle keeping state-prep bias below delta: C sqrt(delta)/||O||."""
    if not (0 < delta < 1):
        raise DomainError("delta must lie in (0, 1)", module="prep", delta=delta)
    if o_norm <= 0:
        raise DomainError("operator norm must be positive", module="prep",
                          o_norm=o_norm)
    if c <= 0:
        raise DomainError("C must be positive", module="prep", c=c)
    return c * np.sqrt(delta) / o_norm


def operator_norm(o: SparseOperator, tol: float = 1e-12) -> float:
    """Spectral norm of a Hermitian operator (two extreme Lanczos runs)."""
    lo, _ = _extreme_eigenpair(o, "smallest", tol)
    hi, _ = _extreme_eigenpair(o, "largest", tol)
    return max(abs(lo), abs(hi))


def extrapolate_to_zero_gamma(gammas, values) -> float:
    """gamma -> 0 intercept of a scalar observable, quadratic least squares."""
    gammas = np.asarray(gammas, dtype=float)
    values = np.asarray(values, dtype=float)
    if gammas.shape[0] < 3:
        raise DomainError("need at least three gamma values", module="prep",
                          count=int(gammas.shape[0]))
    coeffs = np.polyfit(gammas, values, deg=2)
    return float(coeffs[-1])
