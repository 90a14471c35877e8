"""Ground decision procedures: congruence closure + linear arithmetic.

Literals are assumed one by one with an integer tag; the verdict is either
consistent or a conflict carrying the tags of the assumptions involved.
Propositional atoms are equated with one of two sentinel nodes so that
congruent atoms with opposite truth values surface as a conflict.
"""
from __future__ import annotations

from contextlib import nullcontext
from dataclasses import dataclass
from typing import Optional, Union

from .egraph import EGraph, TheoryConflict
from .linarith import LinArith, Poly
from .syntax import App, BoolLit, PROP, Term, is_numeric


@dataclass
class Consistent:
    pass


@dataclass
class Conflict:
    tags: frozenset[int]


Verdict = Union[Consistent, Conflict]

CONSISTENT = Consistent()


class TheoryState:
    """One solver run's theory context. Not shared across runs."""

    def __init__(self, timers=None):
        self._timers = timers
        self.eg = EGraph(on_numeric_merge=self._on_numeric_merge)
        self.lin = LinArith(self.eg)
        self._true = self.eg.add_term(App("$true", (), PROP))
        self._false = self.eg.add_term(App("$false", (), PROP))
        self.eg.add_diseq(self._true, self._false, frozenset())
        t = self.eg.add_term(BoolLit(True))
        f = self.eg.add_term(BoolLit(False))
        self.eg.add_diseq(t, f, frozenset())
        self._builtin_n = len(self.eg.terms)

    # -- instrumentation ---------------------------------------------------

    def _cc_scope(self):
        return self._timers.scope("CC") if self._timers else nullcontext()

    def _arith_scope(self):
        return self._timers.scope("Arith") if self._timers else nullcontext()

    def _on_numeric_merge(self, a: int, b: int, tags: frozenset[int]) -> None:
        pa = self.lin.canon(self.eg.terms[a])
        pb = self.lin.canon(self.eg.terms[b])
        with self._arith_scope():
            self.lin.assume_eq_poly(pa.sub(pb), tags)

    # -- assumptions -------------------------------------------------------

    def assume_pred(self, app: App, positive: bool, tag: int) -> Verdict:
        try:
            with self._cc_scope():
                i = self.eg.add_term(app)
                target = self._true if positive else self._false
                self.eg.merge(i, target, frozenset([tag]))
            return CONSISTENT
        except TheoryConflict as c:
            return Conflict(c.tags)

    def assume_compare(self, op: str, lhs: Term, rhs: Term, positive: bool, tag: int) -> Verdict:
        """op is '=', '<' or '<='; negative comparisons are flipped here."""
        tags = frozenset([tag])
        try:
            if op == "=":
                numeric = is_numeric(lhs.ty)
                with self._cc_scope():
                    a = self.eg.add_term(lhs)
                    b = self.eg.add_term(rhs)
                    if positive:
                        self.eg.merge(a, b, tags)
                    else:
                        self.eg.add_diseq(a, b, tags)
                if not positive and numeric:
                    p = self.lin.canon(lhs).sub(self.lin.canon(rhs))
                    with self._arith_scope():
                        self.lin.assume_neq_poly(p, tags)
                return CONSISTENT
            if positive:
                p = self.lin.canon(lhs).sub(self.lin.canon(rhs))
                strict = op == "<"
            else:
                # not (l <= r) is r < l ; not (l < r) is r <= l
                p = self.lin.canon(rhs).sub(self.lin.canon(lhs))
                strict = op == "<="
            with self._arith_scope():
                self.lin.assume_ineq_poly(p, strict, tags)
            return CONSISTENT
        except TheoryConflict as c:
            return Conflict(c.tags)

    def register(self, t: Term) -> Optional[Verdict]:
        """Register a ground term without asserting anything about it."""
        try:
            with self._cc_scope():
                self.eg.add_term(t)
            return CONSISTENT
        except TheoryConflict as c:
            return Conflict(c.tags)

    # -- views ------------------------------------------------------------

    def canon(self, t: Term) -> Poly:
        return self.lin.canon(t)

    def user_terms(self) -> list[Term]:
        return self.eg.terms[self._builtin_n :]

    def classes(self) -> list[tuple[Term, list[Term]]]:
        """User-facing partition: builtin sentinel nodes are hidden."""
        builtin = set(self.eg.terms[: self._builtin_n])
        out = []
        for _, members in self.eg.classes():
            visible = [m for m in members if m not in builtin]
            if visible:
                out.append((visible[0], visible))
        return out

    # -- checkpoints --------------------------------------------------------

    def push(self) -> None:
        self.eg.push()
        self.lin.push()

    def pop(self) -> None:
        self.lin.pop()
        self.eg.pop()
