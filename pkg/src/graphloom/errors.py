"""Exception types raised by the engine.

Every error that can surface through the CLI or HTTP service derives from
GraphLoomError so callers can distinguish engine failures from bugs.
"""

from __future__ import annotations


class GraphLoomError(Exception):
    """Base class for all engine errors."""


class NameCollision(GraphLoomError):
    """A table, class, or attribute name is already taken."""


class UnknownTable(GraphLoomError):
    pass


class UnknownAttribute(GraphLoomError):
    pass


class UnknownClass(GraphLoomError):
    pass


class CyclicDerivation(GraphLoomError):
    """A derived table depends, directly or transitively, on itself."""


class DanglingSource(GraphLoomError):
    """A derived table references a source table that does not exist."""


class WrongInterpretation(GraphLoomError):
    """Operation requires a node/edge class but got something else."""


class Unsupported(GraphLoomError):
    pass


class SideOccupied(GraphLoomError):
    """Both endpoint paths of an edge class are already attached."""


class NoOpSignal(GraphLoomError):
    """The requested change would not alter anything."""


class TooManyFacets(GraphLoomError):
    """Facet would create more classes than the guard allows."""


class AmbiguousSides(GraphLoomError):
    """Node-to-edge conversion found more than two attachment candidates.

    Carries the candidate (edge class id, side) pairs so a caller can retry
    with explicit side assignments.
    """

    def __init__(self, message: str, candidates: list[tuple[str, str]]):
        super().__init__(message)
        self.candidates = candidates


class NeedBothSides(GraphLoomError):
    """Operation requires a fully connected edge class."""


class EmptyClass(GraphLoomError):
    """Connection scoring is undefined for classes with zero instances."""


class MalformedCsv(GraphLoomError):
    pass


class UnsupportedShape(GraphLoomError):
    """An imported document does not have a tabulatable top-level shape."""


class ExprError(GraphLoomError):
    """Expression could not be parsed or bound."""

    def __init__(self, message: str, position: int | None = None):
        super().__init__(message)
        self.position = position


class ValidationError(GraphLoomError):
    """A pipeline script failed validation; nothing was executed."""
