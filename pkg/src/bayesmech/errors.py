"""Exception types shared across the toolkit."""

from __future__ import annotations


class InvalidInputError(ValueError):
    """An agent, type, strategy, outcome, or profile reference is malformed."""


class FormatError(InvalidInputError):
    """An operation received a mechanism of the wrong strategy format."""


class SearchSpaceError(RuntimeError):
    """The candidate profile space exceeds the configured cap."""

    def __init__(self, size: int, cap: int):
        super().__init__(f"search space of {size} candidate profiles exceeds cap {cap}")
        self.size = size
        self.cap = cap


class ConstructionError(ValueError):
    """A direct mechanism was requested from a profile that is not an equilibrium."""

    def __init__(self, message: str, witness=None):
        super().__init__(message)
        self.witness = witness


class DeceptionError(InvalidInputError):
    """A deception map has a fixed point, a gap, or an agent with no false report."""


class GameFileError(ValueError):
    """A game file failed to parse or validate; carries positioned diagnostics."""

    def __init__(self, diagnostics):
        self.diagnostics = tuple(diagnostics)
        lines = "; ".join(str(d) for d in self.diagnostics)
        super().__init__(f"{len(self.diagnostics)} diagnostic(s): {lines}")
