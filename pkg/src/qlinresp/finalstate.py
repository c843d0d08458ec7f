"""Post-measurement final states and their momentum-mode observables.

After the W-qubit register is read out as y, the main register collapses
onto the superposition of eigenstates within roughly one kernel width of
the measured energy transfer.  Mode occupations on that state are
estimated with the one-ancilla interference circuit built from
U = exp(-i pi n); for an idempotent n this gives P(|1>) = <n> exactly,
and reusing the register after a |1> outcome yields the conditional
two-mode occupation n2/n1.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .errors import (ConditioningOnNullError, ContractError,
                     ImprobableOutcomeError)
from .model import SparseOperator
from .opfuncs import DEFAULT_DENSE_CAP, expm_apply
from .spectral import SpectralData

__all__ = [
    "CollapsedState", "MeasurementRecord", "collapse", "hadamard_test_n1",
    "hadamard_test_n2", "conditional_n2", "evolve_final_state",
    "outcome_report", "write_outcome_report",
]

_IDEMPOTENCE_TOL = 1e-10
_NULL_P = 1e-14


@dataclass(frozen=True)
class CollapsedState:
    """Normalized main-register state conditioned on register outcome y."""

    y: int
    vector: np.ndarray = field(repr=False)
    p_y: float = 0.0


@dataclass(frozen=True)
class MeasurementRecord:
    """One Bernoulli observable: exact probability plus sampled shots.

    n_shots == 0 marks exact-probability mode, where the estimate is the
    exact value itself.
    """

    observable_id: str
    p1: float
    n_shots: int
    successes: int

    @property
    def estimate(self) -> float:
        if self.n_shots == 0:
            return self.p1
        return self.successes / self.n_shots

    @property
    def stderr(self) -> float:
        if self.n_shots == 0:
            return 0.0
        e = self.estimate
        return float(np.sqrt(e * (1.0 - e) / self.n_shots))

    def to_json(self) -> dict:
        return {"id": self.observable_id, "exact": self.p1,
                "estimate": self.estimate, "stderr": self.stderr,
                "shots": self.n_shots}


# ---------------------------------------------------------------------------
# collapse
# ---------------------------------------------------------------------------

def _beta(lambdas: np.ndarray, y: int, n: int) -> np.ndarray:
    """Register amplitude beta_nu(y) = (1/N) sum_k e^{i 2 pi k (lambda - y/N)}.

    Closed geometric form e^{i pi (N-1) d} sin(pi N d) / (N sin(pi d)) with
    d wrapped to [-1/2, 1/2); |beta|^2 * N is the Fejer kernel weight.
    """
    d = lambdas - y / n
    d = d - np.floor(d + 0.5)
    nd = n * d
    k = np.floor(nd)
    m = nd - k
    # sin(pi (k + m)) = (-1)^k sin(pi m), and sin(pi m) >= 0 on [0, 1)
    s1 = np.sin(np.pi * np.minimum(m, 1.0 - m))
    s1 = s1 * np.where((k.astype(np.int64) % 2) == 0, 1.0, -1.0)
    s2 = np.sin(np.pi * d)
    phase = np.exp(1j * np.pi * (n - 1) * d)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = phase * s1 / (n * s2)
    return np.where(s2 == 0.0, 1.0 + 0.0j, out)


def collapse(spectral: SpectralData, phi: np.ndarray, w_qubits: int,
             y: int) -> CollapsedState:
    """Main-register state after reading outcome y off the register.

    Requires spectral data with vectors retained; the state is
    sum_nu <u_nu|phi> beta_nu(y) |u_nu> normalized, with probability
    p_y = sum_nu |<u_nu|phi> beta_nu(y)|^2.
    """
    if spectral.vectors is None:
        raise ContractError("collapse needs spectral data with vectors",
                            module="finalstate")
    n = 1 << w_qubits
    if not (0 <= y < n):
        raise ImprobableOutcomeError("outcome outside the register range",
                                     y=y, n_bins=n)
    c = spectral.vectors.conj().T @ np.asarray(phi, dtype=np.complex128)
    amps = c * _beta(spectral.lambdas, y, n)
    p_y = float(np.vdot(amps, amps).real)
    if p_y < _NULL_P:
        raise ImprobableOutcomeError("cannot condition on a null outcome",
                                     y=y, p_y=p_y)
    vec = spectral.vectors @ amps
    return CollapsedState(y=y, vector=vec / np.linalg.norm(vec), p_y=p_y)


# ---------------------------------------------------------------------------
# interference-circuit measurements
# ---------------------------------------------------------------------------

def _check_idempotent(op: SparseOperator, name: str) -> None:
    d = op.matrix @ op.matrix - op.matrix
    defect = float(np.abs(d.data).max()) if d.nnz else 0.0
    if defect > _IDEMPOTENCE_TOL:
        raise ContractError(f"{name} is not idempotent", defect=defect)


def _check_commuting(a: SparseOperator, b: SparseOperator) -> None:
    d = a.matrix @ b.matrix - b.matrix @ a.matrix
    defect = float(np.abs(d.data).max()) if d.nnz else 0.0
    if defect > _IDEMPOTENCE_TOL:
        raise ContractError("mode operators do not commute", defect=defect)


def _circuit_p1(psi: np.ndarray, apply_n) -> float:
    """P(|1>) of the interference circuit with U = exp(-i pi n) = 1 - 2n."""
    u_psi = psi - 2.0 * apply_n(psi)
    p0 = 0.5 * (1.0 + float(np.vdot(psi, u_psi).real))
    return min(max(1.0 - p0, 0.0), 1.0)


def _shots(p1: float, n_shots: int, rng) -> int:
    if n_shots == 0:
        return 0
    return int(rng.binomial(n_shots, p1))


def _as_rng(rng):
    if isinstance(rng, (int, np.integer)):
        return np.random.default_rng(rng)
    return rng


def hadamard_test_n1(state: CollapsedState, n_op: SparseOperator,
                     n_shots: int, rng, observable_id: str = "n1",
                     trusted: bool = False) -> MeasurementRecord:
    """Single-mode occupation <n> on the collapsed state."""
    if not trusted:
        _check_idempotent(n_op, "mode operator")
    p1 = _circuit_p1(state.vector, n_op.apply)
    return MeasurementRecord(observable_id=observable_id, p1=p1,
                             n_shots=n_shots,
                             successes=_shots(p1, n_shots, _as_rng(rng)))


def hadamard_test_n2(state: CollapsedState, n_a: SparseOperator,
                     n_b: SparseOperator, n_shots: int, rng,
                     observable_id: str = "n2",
                     trusted: bool = False) -> MeasurementRecord:
    """Two-mode occupation <n_a n_b> (commuting idempotent modes)."""
    if not trusted:
        _check_idempotent(n_a, "first mode operator")
        _check_idempotent(n_b, "second mode operator")
        _check_commuting(n_a, n_b)
    p1 = _circuit_p1(state.vector, lambda v: n_a.apply(n_b.apply(v)))
    return MeasurementRecord(observable_id=observable_id, p1=p1,
                             n_shots=n_shots,
                             successes=_shots(p1, n_shots, _as_rng(rng)))


def conditional_n2(state: CollapsedState, n_a: SparseOperator,
                   n_b: SparseOperator, n_shots: int, rng,
                   observable_id: str = "n2|n1",
                   trusted: bool = False):
    """Two-stage protocol reusing the register after a first-stage |1>.

    Stage one measures n_a; its |1> branch projects the register onto
    n_a|psi>/sqrt(n1), on which stage two measures n_b with exact
    probability n2(a,b)/n1(a).  Stage-two shots follow the stage-one
    success stream.
    """
    if not trusted:
        _check_idempotent(n_a, "first mode operator")
        _check_idempotent(n_b, "second mode operator")
        _check_commuting(n_a, n_b)
    rng = _as_rng(rng)
    p1 = _circuit_p1(state.vector, n_a.apply)
    if p1 <= _NULL_P:
        raise ConditioningOnNullError("first-stage occupation vanishes",
                                      p1=p1)
    projected = n_a.apply(state.vector)
    projected = projected / np.linalg.norm(projected)
    p2 = _circuit_p1(projected, n_b.apply)
    succ_a = _shots(p1, n_shots, rng)
    record_a = MeasurementRecord(observable_id=f"{observable_id}:stage1",
                                 p1=p1, n_shots=n_shots, successes=succ_a)
    record_b = MeasurementRecord(observable_id=f"{observable_id}:stage2",
                                 p1=p2, n_shots=succ_a,
                                 successes=_shots(p2, succ_a, rng))
    return record_a, record_b


def evolve_final_state(state: CollapsedState, h: SparseOperator, time: float,
                       dense_cap: int = DEFAULT_DENSE_CAP) -> CollapsedState:
    """Propagate the collapsed state with exp(-i H t) (exact propagation)."""
    if not np.isfinite(time):
        raise ContractError("evolution time must be finite", time=time)
    evolved = expm_apply(h, time, state.vector, dense_cap=dense_cap)
    norm = float(np.linalg.norm(evolved))
    if abs(norm - 1.0) > 1e-10:
        raise ContractError("propagation lost unitarity", norm=norm)
    return CollapsedState(y=state.y, vector=evolved / norm, p_y=state.p_y)


# ---------------------------------------------------------------------------
# per-outcome report
# ---------------------------------------------------------------------------

def outcome_report(state: CollapsedState, omega_physical: float,
                   records: list[MeasurementRecord]) -> dict:
    return {
        "y": state.y,
        "omega_physical": omega_physical,
        "p_y": state.p_y,
        "observables": [r.to_json() for r in records],
    }


def write_outcome_report(path, report: dict) -> None:
    with open(path, "w") as fh:
        json.dump(report, fh, indent=2, sort_keys=True)
        fh.write("\n")
