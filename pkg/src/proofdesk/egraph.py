"""Congruence closure over ground terms.

Union-find plus a congruence table, with three extras the workbench needs:

* tagged explanations: every merge records the set of literal tags that
  caused it in a proof forest, so a conflict can name the assumptions it
  followed from (a superset is allowed, a wrong set is not);
* O(changes) backtracking through an explicit undo trail;
* a callback on merges of numeric terms so the arithmetic engine can learn
  equations the congruence derived (the reverse direction is deliberately
  not propagated: arithmetic-entailed equalities do not merge classes).
"""
from __future__ import annotations

from typing import Callable, Optional

from .errors import PopOnEmpty
from .syntax import App, ArithOp, Term, is_numeric, term_children


class TheoryConflict(Exception):
    """Raised inside theory operations; carries the explaining tag set."""

    def __init__(self, tags: frozenset[int]):
        super().__init__(f"theory conflict from {sorted(tags)}")
        self.tags = tags


def _head(t: Term):
    if isinstance(t, App):
        return ("app", t.sym, t.ty)
    if isinstance(t, ArithOp):
        return ("arith", t.op, t.ty)
    return None


class EGraph:
    def __init__(self, on_numeric_merge: Optional[Callable[[int, int, frozenset[int]], None]] = None):
        self.terms: list[Term] = []
        self.ids: dict[Term, int] = {}
        self.parent: list[int] = []
        self.rank: list[int] = []
        self.members: dict[int, list[int]] = {}
        self.min_member: dict[int, int] = {}
        self.use: dict[int, list[int]] = {}
        self.sig: dict[tuple, int] = {}
        self.proof_parent: dict[int, Optional[int]] = {}
        self.proof_tag: dict[int, frozenset[int]] = {}
        self.diseqs: list[tuple[int, int, frozenset[int]]] = []
        self.on_numeric_merge = on_numeric_merge
        self._trail: list[tuple] = []
        self._levels: list[int] = []

    # -- registration --------------------------------------------------

    def has_term(self, t: Term) -> bool:
        return t in self.ids

    def add_term(self, t: Term) -> int:
        """Register a ground term (and its subterms). Idempotent. May merge
        the new node with an existing congruent one."""
        existing = self.ids.get(t)
        if existing is not None:
            return existing
        arg_ids = [self.add_term(a) for a in term_children(t)]
        i = len(self.terms)
        self.terms.append(t)
        self.ids[t] = i
        self.parent.append(i)
        self.rank.append(0)
        self.members[i] = [i]
        self.min_member[i] = i
        self.proof_parent[i] = None
        self.proof_tag[i] = frozenset()
        self._trail.append(("newterm", t, tuple(arg_ids)))
        for a in arg_ids:
            self.use.setdefault(a, []).append(i)
        if arg_ids:
            key = (_head(t), tuple(self.find(a) for a in arg_ids))
            other = self.sig.get(key)
            if other is None:
                self.sig[key] = i
                self._trail.append(("signew", key))
            elif self.find(other) != i:
                tags = self._congruence_tags(i, other)
                self.merge(i, other, tags)
        return i

    def term_id(self, t: Term) -> int:
        return self.ids[t]

    def find(self, i: int) -> int:
        while self.parent[i] != i:
            i = self.parent[i]
        return i

    def rep_term(self, i: int) -> Term:
        """Canonical member (smallest id) of i's class."""
        return self.terms[self.min_member[self.find(i)]]

    def same(self, a: int, b: int) -> bool:
        return self.find(a) == self.find(b)

    # -- merging ---------------------------------------------------------

    def _congruence_tags(self, a: int, b: int) -> frozenset[int]:
        ta, tb = self.terms[a], self.terms[b]
        tags: frozenset[int] = frozenset()
        for x, y in zip(term_children(ta), term_children(tb)):
            xi, yi = self.ids[x], self.ids[y]
            if xi != yi:
                tags |= self.explain(xi, yi)
        return tags

    def merge(self, a: int, b: int, tags: frozenset[int]) -> None:
        """Merge the classes of a and b; cascades congruences; checks
        stored disequalities; feeds numeric merges to the arithmetic hook."""
        queue: list[tuple[int, int, frozenset[int]]] = [(a, b, tags)]
        while queue:
            x, y, t = queue.pop(0)
            self._union(x, y, t, queue)
        self.check_diseqs()

    def _union(self, a: int, b: int, tags: frozenset[int], queue: list) -> None:
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return
        if self.rank[ra] < self.rank[rb]:
            ra, rb = rb, ra
        self._trail.append(("uf", rb, self.parent[rb]))
        self.parent[rb] = ra
        if self.rank[ra] == self.rank[rb]:
            self._trail.append(("rank", ra))
            self.rank[ra] += 1
        absorbed = self.members[rb]
        self._trail.append(("members", ra, len(self.members[ra]), self.min_member[ra]))
        self.members[ra] = self.members[ra] + absorbed
        self.min_member[ra] = min(self.min_member[ra], self.min_member[rb])
        self._proof_link(a, b, tags)
        # congruence cascade: re-key every parent of the absorbed class
        for m in absorbed:
            for u in self.use.get(m, ()):  # noqa: B020
                ut = self.terms[u]
                key = (_head(ut), tuple(self.find(self.ids[c]) for c in term_children(ut)))
                other = self.sig.get(key)
                if other is None:
                    self.sig[key] = u
                    self._trail.append(("signew", key))
                elif self.find(other) != self.find(u):
                    queue.append((u, other, self._congruence_tags(u, other)))
        if self.on_numeric_merge is not None and is_numeric(self.terms[a].ty):
            self.on_numeric_merge(a, b, tags)

    # -- explanations ------------------------------------------------------

    def _proof_link(self, a: int, b: int, tags: frozenset[int]) -> None:
        # reverse the proof path from a to its root so a becomes a root,
        # then hang a under b with the new edge tags
        path = []
        x = a
        while self.proof_parent[x] is not None:
            path.append((x, self.proof_parent[x], self.proof_tag[x]))
            x = self.proof_parent[x]
        for child, par, tag in path:
            self._trail.append(("proof", par, self.proof_parent[par], self.proof_tag[par]))
            self.proof_parent[par] = child
            self.proof_tag[par] = tag
        self._trail.append(("proof", a, self.proof_parent[a], self.proof_tag[a]))
        self.proof_parent[a] = b
        self.proof_tag[a] = tags

    def explain(self, a: int, b: int) -> frozenset[int]:
        """Tags of the assumptions connecting a and b in the proof forest."""
        if a == b:
            return frozenset()
        acc: frozenset[int] = frozenset()
        up_a: dict[int, frozenset[int]] = {a: acc}
        x = a
        while self.proof_parent[x] is not None:
            acc = acc | self.proof_tag[x]
            x = self.proof_parent[x]
            up_a[x] = acc
        acc_b: frozenset[int] = frozenset()
        y = b
        while True:
            if y in up_a:
                return up_a[y] | acc_b
            if self.proof_parent[y] is None:
                raise AssertionError("explain called on terms not known equal")
            acc_b = acc_b | self.proof_tag[y]
            y = self.proof_parent[y]

    # -- disequalities ------------------------------------------------------

    def add_diseq(self, a: int, b: int, tags: frozenset[int]) -> None:
        self.diseqs.append((a, b, tags))
        self._trail.append(("diseq",))
        self.check_diseqs()

    def check_diseqs(self) -> None:
        for a, b, tags in self.diseqs:
            if self.find(a) == self.find(b):
                raise TheoryConflict(self.explain(a, b) | tags)

    # -- views ---------------------------------------------------------------

    def classes(self) -> list[tuple[Term, list[Term]]]:
        """(representative, members) pairs; members sorted by term id,
        classes ordered by their smallest member id."""
        groups: dict[int, list[int]] = {}
        for i in range(len(self.terms)):
            groups.setdefault(self.find(i), []).append(i)
        out = []
        for ids in groups.values():
            ids.sort()
            out.append((self.terms[ids[0]], [self.terms[j] for j in ids]))
        out.sort(key=lambda pair: self.ids[pair[0]])
        return out

    def class_members(self, i: int) -> list[Term]:
        ids = sorted(self.members[self.find(i)])
        return [self.terms[j] for j in ids]

    # -- backtracking ----------------------------------------------------------

    def push(self) -> None:
        self._levels.append(len(self._trail))

    def pop(self) -> None:
        if not self._levels:
            raise PopOnEmpty()
        mark = self._levels.pop()
        while len(self._trail) > mark:
            op = self._trail.pop()
            kind = op[0]
            if kind == "newterm":
                _, t, arg_ids = op
                i = self.ids.pop(t)
                self.terms.pop()
                self.parent.pop()
                self.rank.pop()
                del self.members[i]
                del self.min_member[i]
                del self.proof_parent[i]
                del self.proof_tag[i]
                for a in arg_ids:
                    self.use[a].pop()
            elif kind == "uf":
                _, rb, old = op
                self.parent[rb] = old
            elif kind == "rank":
                self.rank[op[1]] -= 1
            elif kind == "members":
                _, ra, n, old_min = op
                self.members[ra] = self.members[ra][:n]
                self.min_member[ra] = old_min
            elif kind == "signew":
                del self.sig[op[1]]
            elif kind == "proof":
                _, node, old_parent, old_tag = op
                self.proof_parent[node] = old_parent
                self.proof_tag[node] = old_tag
            elif kind == "diseq":
                self.diseqs.pop()
            else:  # pragma: no cover
                raise AssertionError(f"unknown trail op {kind}")
