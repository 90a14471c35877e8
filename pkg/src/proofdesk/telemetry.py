"""Run telemetry: per-module timers, instance statistics, snapshots.

Timers attribute elapsed time to the innermost active scope only, so
nested scopes never double count. The solver thread writes, interaction
threads read; a snapshot assembles all fields under one short critical
section and never blocks the writer for long.
"""
from __future__ import annotations

import threading
import time
from contextlib import contextmanager
from dataclasses import dataclass, field
from typing import Optional

from .matching import BudgetTable, LemmaBudget, Matcher

MODULES = ("SAT", "Matching", "CC", "Arith")

STATUS_IDLE = "idle"
STATUS_RUNNING = "running"
STATUS_DONE = "done"
STATUS_ABORTED = "aborted"


@dataclass
class Snapshot:
    timers: dict[str, float]
    status: str
    rounds: int
    total_instances: int
    rows: list[LemmaBudget]
    elapsed: float

    def to_json(self) -> dict:
        return {
            "timers": {k: round(v, 6) for k, v in self.timers.items()},
            "status": self.status,
            "rounds": self.rounds,
            "total_instances": self.total_instances,
            "rows": [
                {
                    "lemma_id": r.lemma_id,
                    "name": r.name,
                    "produced": r.produced,
                    "limit": r.limit,
                    "limited": r.limited,
                    "shade": shade_red(r.produced, self.total_instances),
                }
                for r in self.rows
            ],
            "elapsed": round(self.elapsed, 6),
        }


class RunStats:
    def __init__(self) -> None:
        self._lock = threading.Lock()
        self.acc: dict[str, float] = {m: 0.0 for m in MODULES}
        self._stack: list[tuple[str, Optional[float]]] = []
        self.status = STATUS_IDLE
        self.rounds = 0
        self._started: Optional[float] = None
        self._finished: Optional[float] = None
        self._budgets: Optional[BudgetTable] = None
        self._matcher: Optional[Matcher] = None

    def attach(self, budgets: BudgetTable, matcher: Matcher) -> None:
        with self._lock:
            self._budgets = budgets
            self._matcher = matcher

    # -- writer side -------------------------------------------------------

    def start(self) -> None:
        with self._lock:
            self.status = STATUS_RUNNING
            self._started = time.perf_counter()

    def finish(self, aborted: bool = False) -> None:
        with self._lock:
            self.status = STATUS_ABORTED if aborted else STATUS_DONE
            self._finished = time.perf_counter()

    def next_round(self) -> int:
        with self._lock:
            self.rounds += 1
            return self.rounds

    @contextmanager
    def scope(self, tag: str):
        now = time.perf_counter()
        with self._lock:
            if self._stack:
                ptag, pstart = self._stack[-1]
                if pstart is not None:
                    self.acc[ptag] += now - pstart
                self._stack[-1] = (ptag, None)
            self._stack.append((tag, now))
        try:
            yield
        finally:
            now2 = time.perf_counter()
            with self._lock:
                tag2, start = self._stack.pop()
                if start is not None:
                    self.acc[tag2] += now2 - start
                if self._stack:
                    self._stack[-1] = (self._stack[-1][0], now2)

    # -- reader side -----------------------------------------------------

    def elapsed(self) -> float:
        with self._lock:
            return self._elapsed_locked()

    def _elapsed_locked(self) -> float:
        if self._started is None:
            return 0.0
        end = self._finished if self._finished is not None else time.perf_counter()
        return end - self._started

    def snapshot(self) -> Snapshot:
        rows = self._budgets.rows() if self._budgets is not None else []
        total = self._matcher.seen_count() if self._matcher is not None else 0
        with self._lock:
            return Snapshot(
                timers=dict(self.acc),
                status=self.status,
                rounds=self.rounds,
                total_instances=total,
                rows=rows,
                elapsed=self._elapsed_locked(),
            )


def shade_red(produced: int, total: int) -> int:
    """Saturation bucket 1..5 of produced relative to total instances."""
    if total <= 0 or produced <= 0:
        return 1
    bucket = -((-5 * produced) // total)
    return max(1, min(5, bucket))
