"""Shared error types. All located errors carry a source span."""
from __future__ import annotations

from .syntax import NO_SPAN, Span


class ProofdeskError(Exception):
    pass


class LocatedError(ProofdeskError):
    def __init__(self, message: str, span: Span = NO_SPAN):
        super().__init__(message)
        self.message = message
        self.span = span

    def __str__(self) -> str:
        line, col = self.span[0], self.span[1]
        if line:
            return f"{line}:{col}: {self.message}"
        return self.message


class ParseError(LocatedError):
    pass


class TypeCheckError(LocatedError):
    pass


class CoverageError(LocatedError):
    """A trigger does not cover all variables of its quantifier."""

    def __init__(self, uncovered: list[str], span: Span = NO_SPAN):
        super().__init__(
            "trigger does not cover: " + ", ".join(uncovered), span
        )
        self.uncovered = uncovered


class NotPrunable(ProofdeskError):
    def __init__(self, node_id: int):
        super().__init__(f"node {node_id} is not a prunable unit")
        self.node_id = node_id


class CannotPruneGoal(ProofdeskError):
    def __init__(self) -> None:
        super().__init__("the goal declaration cannot be pruned")


class NotADeclaration(ProofdeskError):
    def __init__(self, node_id: int):
        super().__init__(f"node {node_id} is not a symbol declaration")
        self.node_id = node_id


class NoSuchAxiom(ProofdeskError):
    def __init__(self, node_id: int):
        super().__init__(f"node {node_id} is not an axiom")
        self.node_id = node_id


class NonPositiveLimit(ProofdeskError):
    def __init__(self, n: int):
        super().__init__(f"instance limit must be positive, got {n}")
        self.n = n


class PopOnEmpty(ProofdeskError):
    def __init__(self) -> None:
        super().__init__("pop without matching push")


class CoreUnavailable(ProofdeskError):
    def __init__(self) -> None:
        super().__init__("no unsat core: the run had core extraction disabled")


class SaveRefused(ProofdeskError):
    def __init__(self, reason: str):
        super().__init__(f"session save refused: {reason}")
        self.reason = reason


class SessionFormatError(ProofdeskError):
    pass


class RunActive(ProofdeskError):
    def __init__(self) -> None:
        super().__init__("a solver run is active on this document")


class NoSuchDocument(ProofdeskError):
    def __init__(self, doc_id: str):
        super().__init__(f"unknown document {doc_id}")


class NoSuchRun(ProofdeskError):
    def __init__(self, run_id: str):
        super().__init__(f"unknown run {run_id}")
