"""Exception types shared across the package."""

from __future__ import annotations


class CircfragError(Exception):
    """Base class for all package errors."""


class ArityError(CircfragError):
    pass


class UnknownSymbol(CircfragError):
    pass


class SignatureMismatch(CircfragError):
    pass


class NotFO2(CircfragError):
    pass


class NotGF(CircfragError):
    pass


class NotC2(CircfragError):
    pass


class NotGuarded(CircfragError):
    """An existential rule without a guard atom."""


class NotAModel(CircfragError):
    pass


class WitnessGap(CircfragError):
    """Witness table misses a required (element, index) entry."""


class DeltaMissingConstant(CircfragError):
    pass


class RoundLimit(CircfragError):
    """Saturation hit max_rounds before the term universe stabilized."""

    def __init__(self, message: str, rounds: int = 0):
        super().__init__(message)
        self.rounds = rounds


class CompleteTripleFound(CircfragError):
    """Saturation derived a complete match triple; the candidate mosaic is invalid."""

    def __init__(self, cq_index: int):
        super().__init__(f"complete match triple for CQ #{cq_index}")
        self.cq_index = cq_index


class PoolTooLarge(CircfragError):
    """Mosaic enumeration exceeded its cap."""


class DepthZero(CircfragError):
    pass


class KappaZero(CircfragError):
    pass


class SpaceExceeded(CircfragError):
    pass


class NonTermination(CircfragError):
    """The alternating machine revisited a configuration on the current path."""


class SearchBudget(CircfragError):
    """A bounded search exceeded its node budget."""


class ParseError(CircfragError):
    """Syntax error with source location."""

    def __init__(self, message: str, line: int, column: int):
        super().__init__(f"{line}:{column}: {message}")
        self.line = line
        self.column = column
