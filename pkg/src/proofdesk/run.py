"""One-run pipeline: strip the annotated tree, convert, solve.

Shared by the CLI, the service and the tests. The budget table may be
supplied by the caller (the document owns it between runs so limits
persist and can be changed while the solver is running).
"""
from __future__ import annotations

import threading
from dataclasses import dataclass, field
from typing import Callable, Optional

from .annotate import AnnotatedAst, strip_nodes
from .cnf import AtomTable, Converter
from .matching import BudgetTable, InstanceRecord, Matcher
from .solver import SolveConfig, SolveResult, Solver, Valid
from .telemetry import RunStats
from .theories import TheoryState


@dataclass
class RunArtifacts:
    result: SolveResult
    stats: RunStats
    matcher: Matcher
    converter: Converter
    theory: TheoryState

    @property
    def instance_log(self) -> list[InstanceRecord]:
        return self.matcher.log


def solve_ast(
    ast: AnnotatedAst,
    cfg: Optional[SolveConfig] = None,
    budgets: Optional[BudgetTable] = None,
    abort_flag: Optional[threading.Event] = None,
    on_round: Optional[Callable[[int, int], None]] = None,
    stats: Optional[RunStats] = None,
) -> RunArtifacts:
    cfg = cfg or SolveConfig()
    budgets = budgets if budgets is not None else BudgetTable()
    stats = stats or RunStats()
    matcher = Matcher(budgets)
    stats.attach(budgets, matcher)
    atoms = AtomTable()
    converter = Converter(atoms, matcher)
    converter.convert(strip_nodes(ast))
    theory = TheoryState(stats)
    solver = Solver(converter, theory, matcher, stats, cfg, abort_flag, on_round)
    result = solver.solve()
    return RunArtifacts(result, stats, matcher, converter, theory)
