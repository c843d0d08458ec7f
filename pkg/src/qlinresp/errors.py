"""Exception types shared across the package.

Every error carries a stable machine-readable code and enough context to
emit the CLI's error JSON ({module, code, message, context}).
"""

from __future__ import annotations

from typing import Any


class QlrError(Exception):
    """Base class for all package errors."""

    module = "qlinresp"
    code = "error"

    def __init__(self, message: str, module: str | None = None, **context: Any):
        super().__init__(message)
        self.message = message
        self.context = context
        if module is not None:
            self.module = module

    def to_json(self) -> dict:
        return {
            "module": self.module,
            "code": self.code,
            "message": self.message,
            "context": {k: _jsonable(v) for k, v in self.context.items()},
        }


def _jsonable(v):
    if hasattr(v, "item"):  # numpy scalars
        return v.item()
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    return v


class InvalidSectorError(QlrError):
    module = "model"
    code = "invalid-sector"


class InvalidMomentumError(QlrError):
    module = "model"
    code = "invalid-momentum"


class ConvergenceError(QlrError):
    """Eigensolver failed to reach the requested residual."""

    module = "spectral"
    code = "convergence"


class DegenerateSpectrumError(QlrError):
    module = "spectral"
    code = "degenerate-spectrum"


class CapacityError(QlrError):
    """Problem size exceeds a configured dense/memory cap."""

    module = "spectral"
    code = "capacity"


class NullExcitationError(QlrError):
    module = "prep"
    code = "null-excitation"


class InconsistentInputsError(QlrError):
    module = "prep"
    code = "inconsistent-inputs"


class NumericalError(QlrError):
    module = "opfuncs"
    code = "numerical"


class ImprobableOutcomeError(QlrError):
    module = "finalstate"
    code = "improbable-outcome"


class ConditioningOnNullError(QlrError):
    module = "finalstate"
    code = "conditioning-on-null"


class ContractError(QlrError):
    """An operator failed a precondition (idempotence, commutation, ...)."""

    module = "finalstate"
    code = "contract"


class HeraldedFailureError(QlrError):
    """Repeat-until-success exhausted its round budget (CLI-level wrap)."""

    module = "prep"
    code = "heralded-failure"


class ConfigError(QlrError):
    module = "cli"
    code = "config"


class DomainError(QlrError):
    """Scalar argument outside its documented domain."""

    module = "response"
    code = "domain"
