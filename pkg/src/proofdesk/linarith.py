"""Linear arithmetic over exact rationals.

Equalities are solved by substitution (pivot on the lowest atom id);
inequalities go through a bounded Fourier-Motzkin check; disequalities are
kept normalized and fire when substitution collapses them to a constant.
Integers are decided by rational relaxation only: `2x = 1` is not refuted.
Every stored row carries the tag set of the assumptions it came from.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Optional

from .egraph import EGraph, TheoryConflict
from .errors import PopOnEmpty
from .syntax import ArithOp, IntLit, Term

FM_BUDGET = 10_000  # derived inequalities per check before giving up


@dataclass(frozen=True)
class Poly:
    """Linear normal form: constant + sum of coeff * atom (atom = term id).

    Monomials are kept sorted by atom id; zero coefficients are dropped."""

    const: Fraction
    coeffs: tuple[tuple[int, Fraction], ...]

    @staticmethod
    def of_const(c) -> "Poly":
        return Poly(Fraction(c), ())

    @staticmethod
    def of_atom(atom_id: int) -> "Poly":
        return Poly(Fraction(0), ((atom_id, Fraction(1)),))

    def as_dict(self) -> dict[int, Fraction]:
        return dict(self.coeffs)

    @staticmethod
    def make(const: Fraction, coeffs: dict[int, Fraction]) -> "Poly":
        items = tuple(sorted((a, c) for a, c in coeffs.items() if c != 0))
        return Poly(const, items)

    def add(self, other: "Poly") -> "Poly":
        d = self.as_dict()
        for a, c in other.coeffs:
            d[a] = d.get(a, Fraction(0)) + c
        return Poly.make(self.const + other.const, d)

    def scale(self, k: Fraction) -> "Poly":
        if k == 0:
            return Poly.of_const(0)
        return Poly(self.const * k, tuple((a, c * k) for a, c in self.coeffs))

    def sub(self, other: "Poly") -> "Poly":
        return self.add(other.scale(Fraction(-1)))

    def is_const(self) -> bool:
        return not self.coeffs

    def substitute(self, atom: int, rhs: "Poly") -> "Poly":
        d = self.as_dict()
        k = d.pop(atom, None)
        if k is None:
            return self
        return Poly.make(self.const, d).add(rhs.scale(k))

    def __str__(self) -> str:
        parts = [str(self.const)] if self.const or not self.coeffs else []
        for a, c in self.coeffs:
            parts.append(f"{c}*t{a}")
        return " + ".join(parts)


class LinArith:
    """Conjunction of linear constraints with tags and backtracking."""

    def __init__(self, eg: EGraph):
        self.eg = eg
        self.rows: dict[int, tuple[Poly, frozenset[int]]] = {}
        self.ineqs: list[tuple[Poly, bool, frozenset[int]]] = []  # poly <= 0 / < 0
        self.diseqs: list[tuple[Poly, frozenset[int]]] = []  # poly != 0
        self.gave_up = False
        self._trail: list[tuple] = []
        self._levels: list[int] = []

    # -- canonization -----------------------------------------------------

    def canon(self, t: Term) -> Poly:
        """Linear normal form of a term; non-arithmetic subterms become
        atoms keyed by their term id. Pure: no assumptions applied."""
        if isinstance(t, IntLit):
            return Poly.of_const(t.value)
        if isinstance(t, ArithOp):
            lhs = self.canon(t.args[0])
            rhs = self.canon(t.args[1])
            if t.op == "+":
                return lhs.add(rhs)
            if t.op == "-":
                return lhs.sub(rhs)
            if lhs.is_const():
                return rhs.scale(lhs.const)
            if rhs.is_const():
                return lhs.scale(rhs.const)
            raise TheoryConflict(frozenset())  # nonlinear; unreachable post-typecheck
        return Poly.of_atom(self.eg.add_term(t))

    def normalize(self, p: Poly) -> tuple[Poly, frozenset[int]]:
        """Apply the solved rows; returns the reduced poly and the tags of
        the rows used."""
        tags: frozenset[int] = frozenset()
        for a, _ in p.coeffs:
            row = self.rows.get(a)
            if row is not None:
                rhs, rtags = row
                p = p.substitute(a, rhs)
                tags |= rtags
        return p, tags

    # -- assumptions -------------------------------------------------------

    def assume_eq_poly(self, p: Poly, tags: frozenset[int]) -> None:
        p, t2 = self.normalize(p)
        tags = tags | t2
        if p.is_const():
            if p.const != 0:
                raise TheoryConflict(tags)
            return
        pivot, c = p.coeffs[0]
        # pivot = rhs, where rhs = -(p - c*pivot)/c
        rest = Poly.make(p.const, {a: k for a, k in p.coeffs if a != pivot})
        rhs = rest.scale(Fraction(-1) / c)
        for a in list(self.rows):
            q, qt = self.rows[a]
            if any(at == pivot for at, _ in q.coeffs):
                self._trail.append(("rowmod", a, q, qt))
                self.rows[a] = (q.substitute(pivot, rhs), qt | tags)
        self._trail.append(("rownew", pivot))
        self.rows[pivot] = (rhs, tags)
        for i, (q, strict, qt) in enumerate(self.ineqs):
            if any(at == pivot for at, _ in q.coeffs):
                self._trail.append(("ineqmod", i, q, strict, qt))
                self.ineqs[i] = (q.substitute(pivot, rhs), strict, qt | tags)
        for i, (q, qt) in enumerate(self.diseqs):
            if any(at == pivot for at, _ in q.coeffs):
                self._trail.append(("diseqmod", i, q, qt))
                self.diseqs[i] = (q.substitute(pivot, rhs), qt | tags)
        self.check()

    def assume_ineq_poly(self, p: Poly, strict: bool, tags: frozenset[int]) -> None:
        """Assume p <= 0 (or p < 0 when strict)."""
        p, t2 = self.normalize(p)
        tags = tags | t2
        self._trail.append(("ineqnew",))
        self.ineqs.append((p, strict, tags))
        self.check()

    def assume_neq_poly(self, p: Poly, tags: frozenset[int]) -> None:
        p, t2 = self.normalize(p)
        tags = tags | t2
        if p.is_const():
            if p.const == 0:
                raise TheoryConflict(tags)
            return
        self._trail.append(("diseqnew",))
        self.diseqs.append((p, tags))

    # -- consistency -----------------------------------------------------

    def check(self) -> None:
        for q, qt in self.diseqs:
            if q.is_const() and q.const == 0:
                raise TheoryConflict(qt)
        self._fm_check()

    @staticmethod
    def _violated(p: Poly, strict: bool) -> bool:
        return p.is_const() and (p.const > 0 or (strict and p.const == 0))

    def _fm_check(self) -> None:
        rows = list(self.ineqs)
        for p, strict, tags in rows:
            if self._violated(p, strict):
                raise TheoryConflict(tags)
        atoms = sorted({a for p, _, _ in rows for a, _ in p.coeffs})
        derived = 0
        for atom in atoms:
            pos, neg, rest = [], [], []
            for row in rows:
                c = dict(row[0].coeffs).get(atom, Fraction(0))
                if c > 0:
                    pos.append((row, c))
                elif c < 0:
                    neg.append((row, c))
                else:
                    rest.append(row)
            new_rows = list(rest)
            for (rp, cp) in pos:
                for (rn, cn) in neg:
                    derived += 1
                    if derived > FM_BUDGET:
                        if not self.gave_up:
                            self._trail.append(("gaveup",))
                            self.gave_up = True
                        return
                    p = rp[0].scale(-cn).add(rn[0].scale(cp))
                    strict = rp[1] or rn[1]
                    tags = rp[2] | rn[2]
                    if self._violated(p, strict):
                        raise TheoryConflict(tags)
                    if not p.is_const():
                        new_rows.append((p, strict, tags))
            rows = new_rows

    # -- backtracking ------------------------------------------------------

    def push(self) -> None:
        self._levels.append(len(self._trail))

    def pop(self) -> None:
        if not self._levels:
            raise PopOnEmpty()
        mark = self._levels.pop()
        while len(self._trail) > mark:
            op = self._trail.pop()
            kind = op[0]
            if kind == "rownew":
                del self.rows[op[1]]
            elif kind == "rowmod":
                _, a, q, qt = op
                self.rows[a] = (q, qt)
            elif kind == "ineqnew":
                self.ineqs.pop()
            elif kind == "ineqmod":
                _, i, q, strict, qt = op
                self.ineqs[i] = (q, strict, qt)
            elif kind == "diseqnew":
                self.diseqs.pop()
            elif kind == "diseqmod":
                _, i, q, qt = op
                self.diseqs[i] = (q, qt)
            elif kind == "gaveup":
                self.gave_up = False
            else:  # pragma: no cover
                raise AssertionError(f"unknown trail op {kind}")
