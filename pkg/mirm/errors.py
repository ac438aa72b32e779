from __future__ import annotations

from typing import Any


class MirmError(Exception):
    exit_code = 1


class ConfigError(MirmError):
    exit_code = 2


class StructuralError(MirmError):
    exit_code = 2


class ModelError(MirmError):
    exit_code = 2


class DomainError(MirmError):
    exit_code = 2


class NumericalError(MirmError):
    exit_code = 3


class AxiomTrialError(NumericalError):
    """An evaluator failed inside an axiom trial; `offending` holds the input."""

    def __init__(self, message: str, offending: dict[str, Any]):
        super().__init__(message)
        self.offending = offending


class AcceptanceError(MirmError):
    exit_code = 4


class GridWarning(UserWarning):
    ...
