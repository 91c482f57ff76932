"""Exception types shared across the package.

Every error raised on purpose derives from :class:`BridgeLabError` so callers
(and the command line front end) can map failure classes to exit codes without
string matching.
"""

from __future__ import annotations


class BridgeLabError(Exception):
    """Base class for all errors raised by this package."""


class DomainError(BridgeLabError, ValueError):
    """An argument lies outside the mathematical domain of the operation."""


class NumericalError(BridgeLabError, ArithmeticError):
    """A numeric routine failed to reach its accuracy or stability contract."""


class UnsupportedOperationError(BridgeLabError):
    """The operation is well defined mathematically but deliberately not provided."""
