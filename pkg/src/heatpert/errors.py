"""Exception types shared by the library and mapped to CLI exit codes."""

from __future__ import annotations


class HeatpertError(Exception):
    """Base class for library errors."""

    exit_code = 1


class ConvergenceError(HeatpertError):
    """A numerical procedure exhausted its budget without meeting tolerance."""

    exit_code = 1


class DomainError(HeatpertError, ValueError):
    """Parameters outside the domain where an operation is defined."""

    exit_code = 2


class InvariantViolation(HeatpertError):
    """A checked inequality or postcondition failed; carries the witness."""

    exit_code = 3

    def __init__(self, message: str, witness=None):
        super().__init__(message)
        self.witness = witness
