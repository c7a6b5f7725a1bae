"""Exception hierarchy.

Every error raised on purpose by gpboard derives from :class:`GPBoardError`
and from the closest builtin, so ``except ValueError`` keeps working for
callers that do not care about the package types.
"""
from __future__ import annotations


class GPBoardError(Exception):
    """Base class for gpboard errors."""


class ConfigError(GPBoardError, ValueError):
    """Invalid configuration file, field value or check name."""


class EnumerationCapExceeded(GPBoardError, ValueError):
    def __init__(self, count: int, cap: int) -> None:
        super().__init__(f"enumeration would produce {count} collapse maps (cap {cap})")
        self.count = count
        self.cap = cap


class InapplicableMove(GPBoardError, ValueError):
    """The acceptable-move condition fails at the requested column."""


class SlotOutOfRange(GPBoardError, IndexError):
    """A contraction or propagator names a particle slot that does not exist."""


class BareEdgeTree(GPBoardError, ValueError):
    """A tree with no internal vertex has no internal labeling."""


class DepthExceeded(GPBoardError, ValueError):
    """Simplex quadrature requested beyond the configured depth."""


class UnboundSymbol(GPBoardError, KeyError):
    """Evaluation met a base symbol with no field bound to it."""


class MissingTimeIndex(GPBoardError, KeyError):
    """A propagator chain references a time index absent from the time array."""


class StepOverflow(GPBoardError, OverflowError):
    """Requested NLS evolution needs more steps than allowed."""


class GridTooLarge(GPBoardError, ValueError):
    """A dense operator path would not fit the configured memory cap."""


__all__ = [
    "GPBoardError",
    "ConfigError",
    "EnumerationCapExceeded",
    "InapplicableMove",
    "SlotOutOfRange",
    "BareEdgeTree",
    "DepthExceeded",
    "UnboundSymbol",
    "MissingTimeIndex",
    "StepOverflow",
    "GridTooLarge",
]
