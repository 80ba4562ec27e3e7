from __future__ import annotations

from dataclasses import dataclass


class ProbLogError(Exception):
    """Base class for all errors raised by this package."""


@dataclass(frozen=True)
class SourceSpan:
    start: int
    end: int
    line: int
    column: int

    def __str__(self) -> str:
        return f"line {self.line}, column {self.column}"


class ParseError(ProbLogError):
    def __init__(self, message: str, span: SourceSpan | None = None):
        self.message = message
        self.span = span
        super().__init__(f"{message} at {span}" if span else message)


class LoadError(ProbLogError):
    """Invalid program contents (bad probability, clashing predicate kinds)."""


class QueryError(ProbLogError):
    """Raised while answering a query."""


class NonGroundProbabilisticCall(QueryError):
    pass


class InstantiationError(QueryError):
    pass


class DepthLimitExceeded(QueryError):
    pass


class ProofLimitExceeded(QueryError):
    """Too many proofs for exact inference; an approximation should be used."""
