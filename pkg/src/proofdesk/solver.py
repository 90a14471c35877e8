"""The search loop: DPLL with theory checks and instantiation rounds.

Decisions pick the lowest unassigned variable of an unsatisfied clause,
positive phase first; conflicts backtrack chronologically. When every
clause is satisfied and the theories agree, the matcher is asked for new
instances; a round that produces nothing ends the search with `unknown`.
A refutation that involves no decision proves the goal; the clauses that
participated yield the unsat core with per-label hit counts.
"""
from __future__ import annotations

import sys
import threading
import time
from collections import deque
from dataclasses import dataclass, field
from typing import Callable, Optional, Union

from .annotate import AnnotatedAst, Node
from .cnf import AtomTable, Converter, LabeledClause, lit, lit_positive, lit_var
from .errors import CoreUnavailable
from .matching import Matcher
from .telemetry import RunStats
from .theories import Conflict, TheoryState


@dataclass
class SolveConfig:
    time_limit: float = 60.0
    max_rounds: int = 100
    core_enabled: bool = False


@dataclass
class Valid:
    core: Optional[dict[int, int]]
    rounds: int
    elapsed: float

    kind = "valid"


@dataclass
class Unknown:
    rounds: int
    elapsed: float

    kind = "unknown"


@dataclass
class Timeout:
    elapsed: float

    kind = "timeout"


@dataclass
class Aborted:
    elapsed: float

    kind = "aborted"


SolveResult = Union[Valid, Unknown, Timeout, Aborted]


class _Stop(Exception):
    def __init__(self, kind: str):
        self.kind = kind


_MODEL = object()  # sentinel: a satisfying assignment was found


@dataclass
class CoreShades:
    node_ids: list[int]
    hits: dict[int, int]
    shade: dict[int, str]  # 'light' | 'medium' | 'dark'


class Solver:
    def __init__(
        self,
        converter: Converter,
        theory: TheoryState,
        matcher: Matcher,
        stats: RunStats,
        cfg: SolveConfig,
        abort_flag: Optional[threading.Event] = None,
        on_round: Optional[Callable[[int, int], None]] = None,
    ):
        self.conv = converter
        self.atoms = converter.atoms
        self.clauses = converter.clauses
        self.theory = theory
        self.matcher = matcher
        self.stats = stats
        self.cfg = cfg
        self.abort_flag = abort_flag
        self.on_round = on_round
        self.assignment: dict[int, bool] = {}
        self.reasons: dict[int, Optional[int]] = {}
        self.trail: list[int] = []
        self._start = 0.0
        self._rounds = 0
        self._occurs: dict[int, list[int]] = {}
        self._indexed = 0
        self._queue: deque[int] = deque()
        self._steps = 0

    # -- plumbing ----------------------------------------------------------

    def _check_stop(self) -> None:
        if self.abort_flag is not None and self.abort_flag.is_set():
            raise _Stop("aborted")
        if time.perf_counter() - self._start > self.cfg.time_limit:
            raise _Stop("timeout")

    def _lit_true(self, l: int) -> Optional[bool]:
        v = self.assignment.get(lit_var(l))
        if v is None:
            return None
        return v == lit_positive(l)

    def _assign(self, l: int, reason: Optional[int]) -> Optional[int]:
        """Assign a literal; returns a conflict clause index on theory
        conflict, else None."""
        v = lit_var(l)
        val = lit_positive(l)
        self.assignment[v] = val
        self.reasons[v] = reason
        self.trail.append(v)
        if not self.atoms.is_theory_var(v):
            return None
        key = self.atoms.info[v]
        kind = key[0]
        if kind == "pred":
            verdict = self.theory.assume_pred(key[1], val, l)
        elif kind == "eq":
            verdict = self.theory.assume_compare("=", key[1], key[2], val, l)
        elif kind == "lt":
            verdict = self.theory.assume_compare("<", key[1], key[2], val, l)
        else:
            verdict = self.theory.assume_compare("<=", key[1], key[2], val, l)
        if isinstance(verdict, Conflict):
            return self.conv.add_theory_clause(verdict.tags)
        return None

    def _undo_to(self, mark: int) -> None:
        while len(self.trail) > mark:
            v = self.trail.pop()
            del self.assignment[v]
            del self.reasons[v]

    # -- conflict bookkeeping ------------------------------------------------

    def _ancestry(self, ci: int) -> set[int]:
        """Clause indices reachable from a falsified clause through the
        reasons of its false literals."""
        out: set[int] = set()
        stack = [ci]
        while stack:
            c = stack.pop()
            if c in out:
                continue
            out.add(c)
            for l in self.clauses[c].lits:
                if self._lit_true(l) is False:
                    r = self.reasons.get(lit_var(l))
                    if r is not None and r not in out:
                        stack.append(r)
        return out

    # -- propagation -----------------------------------------------------------

    def _index_new_clauses(self) -> None:
        while self._indexed < len(self.clauses):
            ci = self._indexed
            for l in self.clauses[ci].lits:
                self._occurs.setdefault(lit_var(l), []).append(ci)
            self._queue.append(ci)
            self._indexed += 1

    def _enqueue_var(self, v: int) -> None:
        self._queue.extend(self._occurs.get(v, ()))

    def _propagate(self) -> Optional[int]:
        """Process pending clauses to fixpoint; returns a falsified clause
        index, or None. Assignments enqueue the clauses watching them."""
        with self.stats.scope("SAT"):
            self._index_new_clauses()
            while self._queue:
                self._steps += 1
                if self._steps % 512 == 0:
                    self._check_stop()
                ci = self._queue.popleft()
                cl = self.clauses[ci]
                unassigned = None
                n_unassigned = 0
                satisfied = False
                for l in cl.lits:
                    t = self._lit_true(l)
                    if t is True:
                        satisfied = True
                        break
                    if t is None:
                        n_unassigned += 1
                        unassigned = l
                        if n_unassigned > 1:
                            break
                if satisfied or n_unassigned > 1:
                    continue
                if n_unassigned == 0:
                    self._queue.clear()
                    return ci
                conflict = self._assign(unassigned, ci)
                self._index_new_clauses()
                if conflict is not None:
                    self._queue.clear()
                    return conflict
                self._enqueue_var(lit_var(unassigned))
        return None

    def _all_satisfied(self) -> bool:
        return all(any(self._lit_true(l) is True for l in cl.lits) for cl in self.clauses)

    def _pick_var(self) -> Optional[int]:
        best: Optional[int] = None
        for cl in self.clauses:
            if any(self._lit_true(l) is True for l in cl.lits):
                continue
            for l in cl.lits:
                v = lit_var(l)
                if v not in self.assignment and (best is None or v < best):
                    best = v
        return best

    # -- instantiation ----------------------------------------------------------

    def _instantiate_round(self) -> bool:
        """Run one round; returns True when new instances were asserted."""
        if self._rounds >= self.cfg.max_rounds:
            raise _Stop("rounds")
        self._rounds += 1
        self.stats.next_round()
        with self.stats.scope("Matching"):
            produced = self.matcher.round(
                self.theory.eg,
                self.theory.user_terms(),
                self.atoms.model_terms(),
                lambda g: self.assignment.get(g) is True,
            )
        base = len(self.matcher.log) - len(produced)
        for i, (lem, subst, _formula) in enumerate(produced):
            self.conv.assert_instance(
                lem, subst.term_bindings, subst.ty_bindings, self.matcher.log[base + i].index
            )
        self._index_new_clauses()
        if self.on_round is not None:
            self.on_round(self._rounds, len(produced))
        return bool(produced)

    # -- search -------------------------------------------------------------------

    def _search(self):
        while True:
            ci = self._propagate()
            if ci is not None:
                return self._ancestry(ci)
            if self._all_satisfied():
                if not self._instantiate_round():
                    return _MODEL
                continue
            v = self._pick_var()
            if v is None:
                if not self._instantiate_round():
                    return _MODEL
                continue
            r1 = self._try(v, True)
            if r1 is _MODEL:
                return _MODEL
            r2 = self._try(v, False)
            if r2 is _MODEL:
                return _MODEL
            return r1 | r2

    def _try(self, v: int, val: bool):
        mark = len(self.trail)
        self.theory.push()
        try:
            conflict = self._assign(lit(v, val), None)
            if conflict is not None:
                self._queue.clear()
                return self._ancestry(conflict)
            self._enqueue_var(v)
            return self._search()
        finally:
            self.theory.pop()
            self._undo_to(mark)

    # -- entry ---------------------------------------------------------------------

    def solve(self) -> SolveResult:
        self._start = time.perf_counter()
        self.stats.start()
        limit = max(10_000, 8 * (len(self.atoms.info) + 100))
        old_limit = sys.getrecursionlimit()
        if limit > old_limit:
            sys.setrecursionlimit(limit)
        try:
            outcome = self._search()
        except _Stop as stop:
            elapsed = time.perf_counter() - self._start
            if stop.kind == "aborted":
                self.stats.finish(aborted=True)
                return Aborted(elapsed)
            if stop.kind == "timeout":
                self.stats.finish()
                return Timeout(elapsed)
            self.stats.finish()
            return Unknown(self._rounds, elapsed)
        finally:
            sys.setrecursionlimit(old_limit)
        elapsed = time.perf_counter() - self._start
        self.stats.finish()
        if outcome is _MODEL:
            return Unknown(self._rounds, elapsed)
        hits: dict[int, int] = {}
        for ci in outcome:
            for label in self.clauses[ci].labels:
                hits[label] = hits.get(label, 0) + 1
        core = hits if self.cfg.core_enabled else None
        return Valid(core, self._rounds, elapsed)


def core_of(result: Valid, ast: AnnotatedAst) -> CoreShades:
    """Shade the unsat core: hit terciles, with each top-level declaration
    containing a core node getting at least the lightest shade."""
    if result.core is None:
        raise CoreUnavailable()
    hits = {i: h for i, h in result.core.items() if i in ast.nodes}
    max_hits = max(hits.values(), default=0)
    shade: dict[int, str] = {}
    for i, h in hits.items():
        if max_hits == 0:
            shade[i] = "light"
        elif 3 * h <= max_hits:
            shade[i] = "light"
        elif 3 * h <= 2 * max_hits:
            shade[i] = "medium"
        else:
            shade[i] = "dark"
    for root in ast.roots:
        if root.id in shade:
            continue
        if any(s.id in hits for s in root.subtree()):
            shade[root.id] = "light"
    ids = sorted(set(hits) | set(shade))
    return CoreShades(ids, hits, shade)
