"""Polarity-aware CNF conversion with provenance labels.

The goal is negated, then every declaration is asserted. Clauses carry the
ids of the source sub-formula nodes they were derived from, which is what
unsat cores are made of. Assumed universals become lemmas for the matcher;
refuted universals are skolemized with fresh `sk_<var>_<n>` constants.

Definition variables are introduced only where a sub-formula is used at
both polarities (iff operands) or where a quantifier sits inside a
disjunctive context; each definition clause is labeled with the defined
node's id.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from .annotate import Node
from .matching import Lemma, Matcher
from .syntax import (
    And,
    App,
    Axiom,
    BoolForm,
    Compare,
    Exists,
    Forall,
    Goal,
    Iff,
    Implies,
    LogicDecl,
    Not,
    Or,
    PredAtom,
    Term,
    Ty,
    TypeDecl,
    decl_display_name,
    subst_term,
    subst_ty,
    subterms,
    term_key,
)


@dataclass
class LabeledClause:
    lits: tuple[int, ...]
    labels: frozenset[int]
    instance_origin: Optional[tuple[int, int]] = None


class AtomTable:
    """Atoms <-> SAT variables. Kinds: pred, eq, le, lt, def."""

    def __init__(self) -> None:
        self.keys: dict[tuple, int] = {}
        self.info: list[tuple] = []

    def var(self, key: tuple) -> int:
        v = self.keys.get(key)
        if v is None:
            v = len(self.info)
            self.keys[key] = v
            self.info.append(key)
        return v

    def pred_var(self, app: App) -> int:
        return self.var(("pred", app))

    def compare_var(self, op: str, lhs: Term, rhs: Term) -> tuple[int, bool]:
        """Variable plus a sign flip (for <> which is a negated =)."""
        if op in ("=", "<>"):
            a, b = sorted((lhs, rhs), key=term_key)
            return self.var(("eq", a, b)), op == "<>"
        if op == "<":
            return self.var(("lt", lhs, rhs)), False
        assert op == "<="
        return self.var(("le", lhs, rhs)), False

    def def_var(self, node_id: int) -> int:
        return self.var(("def", node_id))

    def kind(self, v: int) -> str:
        return self.info[v][0]

    def is_theory_var(self, v: int) -> bool:
        return self.info[v][0] != "def"

    def model_terms(self) -> list[Term]:
        """Every ground term (with subterms) appearing in any atom."""
        seen: dict[Term, None] = {}
        for key in self.info:
            for t in key[1:]:
                for s in subterms(t):
                    seen.setdefault(s, None)
        return list(seen)


def lit(var: int, positive: bool) -> int:
    return var + 1 if positive else -(var + 1)


def lit_var(l: int) -> int:
    return abs(l) - 1


def lit_positive(l: int) -> bool:
    return l > 0


class Converter:
    """Builds the clause set; also used mid-run to assert instances."""

    def __init__(self, atoms: AtomTable, matcher: Matcher):
        self.atoms = atoms
        self.matcher = matcher
        self.clauses: list[LabeledClause] = []
        self._clause_index: dict[tuple[int, ...], int] = {}
        self._sk_counter = 0
        self._decl_names: dict[int, str] = {}

    # -- public entry points ------------------------------------------------

    def convert(self, roots: list[Node]) -> None:
        """Assert stripped declarations; the goal is asserted negated."""
        for root in roots:
            self._decl_names[root.id] = decl_display_name(root.content)
        for root in roots:
            d = root.content
            if isinstance(d, (TypeDecl, LogicDecl)):
                continue
            body = root.children[0]
            if isinstance(d, Goal):
                self.assert_node(body, -1, {}, {}, frozenset(), None, None)
            else:
                assert isinstance(d, Axiom)
                self.assert_node(body, +1, {}, {}, frozenset(), None, None)

    def assert_instance(self, lem: Lemma, term_bind: dict[str, Term], ty_bind: dict[str, Ty], index: int) -> None:
        full_t = dict(lem.base_terms)
        full_t.update(term_bind)
        full_ty = dict(lem.base_tys)
        full_ty.update(ty_bind)
        body = lem.node.children[-1]
        self.assert_node(
            body,
            lem.sign,
            full_t,
            full_ty,
            lem.labels | {lem.decl_id},
            (lem.decl_id, index),
            lem.guard,
        )

    def add_clause(self, lits: list[int], labels: frozenset[int], origin=None) -> int:
        key = tuple(sorted(set(lits)))
        existing = self._clause_index.get(key)
        if existing is not None:
            return existing
        ci = len(self.clauses)
        self.clauses.append(LabeledClause(tuple(lits), labels, origin))
        self._clause_index[key] = ci
        return ci

    def add_theory_clause(self, tags: frozenset[int]) -> int:
        lits = [-t for t in sorted(tags)]
        return self.add_clause(lits, frozenset())

    # -- literals ----------------------------------------------------------

    def _atom_lit(self, f, sign: int, tmap, tymap) -> int:
        if isinstance(f, PredAtom):
            app = subst_term(f.app, tmap, tymap)
            assert isinstance(app, App)
            return lit(self.atoms.pred_var(app), sign > 0)
        assert isinstance(f, Compare)
        lhs = subst_term(f.lhs, tmap, tymap)
        rhs = subst_term(f.rhs, tmap, tymap)
        v, flip = self.atoms.compare_var(f.op, lhs, rhs)
        positive = (sign > 0) != flip
        return lit(v, positive)

    def _skolem(self, name: str, ty: Ty) -> Term:
        self._sk_counter += 1
        return App(f"sk_{name}_{self._sk_counter - 1}", (), ty)

    # -- assertion ------------------------------------------------------------

    def assert_node(
        self,
        node: Node,
        sign: int,
        tmap: dict[str, Term],
        tymap: dict[str, Ty],
        extra_labels: frozenset[int],
        origin: Optional[tuple[int, int]],
        guard: Optional[int],
    ) -> None:
        f = node.content
        guard_lits = [] if guard is None else [lit(guard, False)]
        if isinstance(f, BoolForm):
            value = f.value if sign > 0 else not f.value
            if not value:
                self.add_clause(guard_lits, frozenset({node.id}) | extra_labels, origin)
            return
        if isinstance(f, (PredAtom, Compare)):
            l = self._atom_lit(f, sign, tmap, tymap)
            self.add_clause(guard_lits + [l], frozenset({node.id}) | extra_labels, origin)
            return
        if isinstance(f, Not):
            self.assert_node(node.children[0], -sign, tmap, tymap, extra_labels, origin, guard)
            return
        if (isinstance(f, And) and sign > 0) or (isinstance(f, Or) and sign < 0):
            for c in node.children:
                self.assert_node(c, sign, tmap, tymap, extra_labels, origin, guard)
            return
        if isinstance(f, Implies) and sign < 0:
            self.assert_node(node.children[0], +1, tmap, tymap, extra_labels, origin, guard)
            self.assert_node(node.children[1], -1, tmap, tymap, extra_labels, origin, guard)
            return
        if isinstance(f, Forall):
            if sign > 0:
                self._add_lemma(node, +1, tmap, tymap, extra_labels, guard)
                return
            binds = dict(tmap)
            for bname, bty in f.binders:
                binds[bname] = self._skolem(bname, subst_ty(bty, tymap))
            self.assert_node(node.children[-1], sign, binds, tymap, extra_labels, origin, guard)
            return
        if isinstance(f, Exists):
            if sign < 0:
                self._add_lemma(node, -1, tmap, tymap, extra_labels, guard)
                return
            binds = dict(tmap)
            for bname, bty in f.binders:
                binds[bname] = self._skolem(bname, subst_ty(bty, tymap))
            self.assert_node(node.children[-1], sign, binds, tymap, extra_labels, origin, guard)
            return
        # remaining connectives go through clause form
        for lits, labels in self.clausify(node, sign, tmap, tymap, guard):
            self.add_clause(guard_lits + lits, labels | extra_labels, origin)

    # -- clause form -------------------------------------------------------------

    def clausify(
        self,
        node: Node,
        sign: int,
        tmap: dict[str, Term],
        tymap: dict[str, Ty],
        guard: Optional[int],
    ) -> list[tuple[list[int], frozenset[int]]]:
        f = node.content
        if isinstance(f, BoolForm):
            value = f.value if sign > 0 else not f.value
            if value:
                return []
            return [([], frozenset({node.id}))]
        if isinstance(f, (PredAtom, Compare)):
            return [([self._atom_lit(f, sign, tmap, tymap)], frozenset({node.id}))]
        if isinstance(f, Not):
            return self.clausify(node.children[0], -sign, tmap, tymap, guard)
        if (isinstance(f, And) and sign > 0) or (isinstance(f, Or) and sign < 0):
            out = []
            for c in node.children:
                out.extend(self.clausify(c, sign, tmap, tymap, guard))
            return out
        if (isinstance(f, Or) and sign > 0) or (isinstance(f, And) and sign < 0):
            return self._distribute(
                [self.clausify(c, sign, tmap, tymap, guard) for c in node.children]
            )
        if isinstance(f, Implies):
            if sign > 0:
                return self._distribute(
                    [
                        self.clausify(node.children[0], -1, tmap, tymap, guard),
                        self.clausify(node.children[1], +1, tmap, tymap, guard),
                    ]
                )
            out = self.clausify(node.children[0], +1, tmap, tymap, guard)
            out.extend(self.clausify(node.children[1], -1, tmap, tymap, guard))
            return out
        if isinstance(f, Iff):
            dl, labl = self._literal_for(node.children[0], tmap, tymap, guard)
            dr, labr = self._literal_for(node.children[1], tmap, tymap, guard)
            labels = frozenset({node.id}) | labl | labr
            if sign > 0:
                return [([-dl, dr], labels), ([dl, -dr], labels)]
            return [([dl, dr], labels), ([-dl, -dr], labels)]
        assert isinstance(f, (Forall, Exists))
        if (isinstance(f, Forall) and sign > 0) or (isinstance(f, Exists) and sign < 0):
            g = self.atoms.def_var(node.id)
            self._add_lemma(node, +1 if isinstance(f, Forall) else -1, tmap, tymap, frozenset({node.id}), g)
            return [([lit(g, True)], frozenset({node.id}))]
        binds = dict(tmap)
        for bname, bty in f.binders:
            binds[bname] = self._skolem(bname, subst_ty(bty, tymap))
        return self.clausify(node.children[-1], sign, binds, tymap, guard)

    def _distribute(self, parts: list[list[tuple[list[int], frozenset[int]]]]):
        acc: list[tuple[list[int], frozenset[int]]] = [([], frozenset())]
        for clauses in parts:
            nxt = []
            for lits_a, lab_a in acc:
                for lits_b, lab_b in clauses:
                    nxt.append((lits_a + lits_b, lab_a | lab_b))
            acc = nxt
            if not acc:
                return []
        return acc

    def _literal_for(
        self, node: Node, tmap, tymap, guard: Optional[int]
    ) -> tuple[int, frozenset[int]]:
        """An atom's own literal, or a definition variable with both
        implication directions emitted."""
        f = node.content
        if isinstance(f, (PredAtom, Compare)):
            return self._atom_lit(f, +1, tmap, tymap), frozenset({node.id})
        if isinstance(f, BoolForm):
            # constant: encode through a definition literal for uniformity
            d = self.atoms.def_var(node.id)
            dl = lit(d, True)
            if f.value:
                self.add_clause([dl], frozenset({node.id}))
            else:
                self.add_clause([-dl], frozenset({node.id}))
            return dl, frozenset({node.id})
        d = self.atoms.def_var(node.id)
        dl = lit(d, True)
        for lits, labels in self.clausify(node, +1, tmap, tymap, guard):
            self.add_clause([-dl] + lits, labels | {node.id})
        for lits, labels in self.clausify(node, -1, tmap, tymap, guard):
            self.add_clause([dl] + lits, labels | {node.id})
        return dl, frozenset({node.id})

    # -- lemmas -----------------------------------------------------------------

    def _add_lemma(
        self,
        node: Node,
        sign: int,
        tmap: dict[str, Term],
        tymap: dict[str, Ty],
        extra_labels: frozenset[int],
        guard: Optional[int],
    ) -> None:
        decl_id = node.decl_id
        name = self._decl_name(node)
        if node.role == "decl-formula":
            display = name
        else:
            display = f"{name}#{node.id - decl_id}"
        lem = Lemma(
            node=node,
            sign=sign,
            decl_id=decl_id,
            name=name,
            display_name=display,
            labels=extra_labels | {decl_id},
            guard=guard,
            base_terms=dict(tmap),
            base_tys=dict(tymap),
        )
        self.matcher.add_lemma(lem)

    def _decl_name(self, node: Node) -> str:
        return self._decl_names.get(node.decl_id, f"decl{node.decl_id}")

    def register_decl_name(self, decl_id: int, name: str) -> None:
        self._decl_names[decl_id] = name
