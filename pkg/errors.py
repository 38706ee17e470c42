# errors.py — jerarquía de errores de bellio
#
# The CLI maps these onto exit codes (see cli.EXIT_CODES).

from __future__ import annotations

from typing import Any, Dict, Optional


class BellioError(Exception):
    """Base class; never raised directly."""


class StructuralError(BellioError):
    """Wrong shape, wrong arity, wrong index set."""


class DomainError(BellioError):
    """A value or parameter outside the domain of an operation."""


class CapacityError(BellioError):
    """Problem larger than the desk-scale limits."""


class ModelError(BellioError):
    """Invalid quantum model: non-PSD state, incomplete POVM, trace deficit."""


class SignalingError(BellioError):
    """Bell data whose marginals depend on the remote input."""


class SolverError(BellioError):
    def __init__(self, message: str, *, report: Optional[Dict[str, Any]] = None):
        super().__init__(message)
        self.report = dict(report or {})


class UndefinedConditional(BellioError):
    """Conditioning on an event of probability zero."""
