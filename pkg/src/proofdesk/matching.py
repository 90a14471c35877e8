"""E-matching modulo equality, instantiation rounds, budgets, manual instances.

A pattern `f(p...)` matches any equivalence class containing some `f(t...)`
whose argument classes match the subpatterns, so one asserted equality can
make a trigger fire on a term that never syntactically contains it.

Instances are deduplicated by the class representatives of their bindings
at generation time, with a structural hash of the instantiated formula as
a second filter. Per-lemma budgets cap production; a lemma that reaches
its limit is flagged (sticky until the limit is lifted).
"""
from __future__ import annotations

import threading
from dataclasses import dataclass, field
from typing import Callable, Iterator, Optional

from .annotate import AnnotatedAst, Node
from .errors import NonPositiveLimit, NoSuchAxiom, TypeCheckError
from .pretty import pretty_formula, pretty_term, pretty_ty
from .syntax import (
    App,
    ArithOp,
    Axiom,
    BoolLit,
    Exists,
    Forall,
    Formula,
    IntLit,
    Term,
    Trigger,
    Ty,
    TyApp,
    TyVar,
    Var,
    formula_key,
    subst_formula,
    term_children,
    term_key,
)
from .egraph import EGraph


# ---------------------------------------------------------------------------
# Substitutions


@dataclass
class Subst:
    term_bindings: dict[str, Term]
    ty_bindings: dict[str, Ty]

    def describe(self) -> tuple[dict[str, str], dict[str, str]]:
        terms = {v: pretty_term(t) for v, t in sorted(self.term_bindings.items())}
        tys = {v: pretty_ty(t) for v, t in sorted(self.ty_bindings.items())}
        return terms, tys


def unify_pattern_ty(pat: Ty, ground: Ty, out: dict[str, Ty]) -> bool:
    """One-sided unification: type variables occur on the pattern side only."""
    if isinstance(pat, TyVar):
        bound = out.get(pat.name)
        if bound is None:
            out[pat.name] = ground
            return True
        return bound == ground
    if isinstance(pat, TyApp):
        if not isinstance(ground, TyApp) or pat.ctor != ground.ctor or len(pat.args) != len(ground.args):
            return False
        return all(unify_pattern_ty(a, g, out) for a, g in zip(pat.args, ground.args))
    return pat == ground


def _canonical_binding(t: Term, eg: EGraph) -> Term:
    if eg.has_term(t):
        return eg.rep_term(eg.term_id(t))
    return t


def _same_modulo(a: Term, b: Term, eg: EGraph) -> bool:
    if a == b:
        return True
    if eg.has_term(a) and eg.has_term(b):
        return eg.same(eg.term_id(a), eg.term_id(b))
    return False


def _match(
    pattern: Term,
    cand: Term,
    eg: EGraph,
    tb: dict[str, Term],
    tyb: dict[str, Ty],
) -> Iterator[tuple[dict[str, Term], dict[str, Ty]]]:
    """All binding extensions making `pattern` equal `cand` modulo classes."""
    if isinstance(pattern, Var):
        prev = tb.get(pattern.name)
        if prev is not None:
            if _same_modulo(prev, cand, eg):
                yield tb, tyb
            return
        tyb2 = dict(tyb)
        if not unify_pattern_ty(pattern.ty, cand.ty, tyb2):
            return
        tb2 = dict(tb)
        tb2[pattern.name] = cand
        yield tb2, tyb2
        return
    if isinstance(pattern, (IntLit, BoolLit)):
        members = eg.class_members(eg.term_id(cand)) if eg.has_term(cand) else [cand]
        if any(m == pattern for m in members):
            yield tb, tyb
        return
    # application or arithmetic node: walk the candidate's class members
    members = eg.class_members(eg.term_id(cand)) if eg.has_term(cand) else [cand]
    for m in members:
        if isinstance(pattern, App):
            if not (isinstance(m, App) and m.sym == pattern.sym and len(m.args) == len(pattern.args)):
                continue
        else:
            assert isinstance(pattern, ArithOp)
            if not (isinstance(m, ArithOp) and m.op == pattern.op and len(m.args) == len(pattern.args)):
                continue
        tyb2 = dict(tyb)
        if not unify_pattern_ty(pattern.ty, m.ty, tyb2):
            continue
        states = [(tb, tyb2)]
        for p_arg, m_arg in zip(pattern.args, m.args):
            nxt = []
            for stb, styb in states:
                nxt.extend(_match(p_arg, m_arg, eg, stb, styb))
            states = nxt
            if not states:
                break
        yield from states


def _subst_key(tb: dict[str, Term], tyb: dict[str, Ty], eg: EGraph):
    terms = tuple(sorted((v, term_key(_canonical_binding(t, eg))) for v, t in tb.items()))
    tys = tuple(sorted((v, str(t)) for v, t in tyb.items()))
    return terms, tys


def ematch(pattern: Term, eg: EGraph, universe: list[Term]) -> list[Subst]:
    """Substitutions s with s(pattern) equal to some universe term modulo
    the current classes. Deterministic order, deduplicated by class
    representatives."""
    out: dict[tuple, Subst] = {}
    for t in universe:
        for tb, tyb in _match(pattern, t, eg, {}, {}):
            key = _subst_key(tb, tyb, eg)
            if key not in out:
                out[key] = Subst(tb, tyb)
    return list(out.values())


def ematch_multi(patterns: list[Term], eg: EGraph, universe: list[Term]) -> list[Subst]:
    """Natural join of the per-pattern matches, consistent on shared
    variables modulo the classes."""
    per_pattern = [ematch(p, eg, universe) for p in patterns]
    states: list[Subst] = [Subst({}, {})]
    for matches in per_pattern:
        nxt: list[Subst] = []
        for st in states:
            for m in matches:
                merged_t = dict(st.term_bindings)
                ok = True
                for v, t in m.term_bindings.items():
                    if v in merged_t:
                        if not _same_modulo(merged_t[v], t, eg):
                            ok = False
                            break
                    else:
                        merged_t[v] = t
                if not ok:
                    continue
                merged_ty = dict(st.ty_bindings)
                for v, ty in m.ty_bindings.items():
                    if merged_ty.get(v, ty) != ty:
                        ok = False
                        break
                    merged_ty[v] = ty
                if ok:
                    nxt.append(Subst(merged_t, merged_ty))
        states = nxt
        if not states:
            return []
    out: dict[tuple, Subst] = {}
    for st in states:
        key = _subst_key(st.term_bindings, st.ty_bindings, eg)
        if key not in out:
            out[key] = st
    return list(out.values())


# ---------------------------------------------------------------------------
# Budgets


@dataclass
class LemmaBudget:
    lemma_id: int
    name: str
    produced: int = 0
    limit: Optional[int] = None
    limited: bool = False


class BudgetTable:
    """Shared between the interaction context and a running solver; limit
    changes become visible at the next round boundary."""

    def __init__(self) -> None:
        self._rows: dict[int, LemmaBudget] = {}
        self._lock = threading.Lock()

    def ensure(self, lemma_id: int, name: str) -> None:
        with self._lock:
            if lemma_id not in self._rows:
                self._rows[lemma_id] = LemmaBudget(lemma_id, name)
            elif not self._rows[lemma_id].name:
                self._rows[lemma_id].name = name

    def set_limit(self, lemma_id: int, name: str, n: int) -> None:
        if n <= 0:
            raise NonPositiveLimit(n)
        with self._lock:
            row = self._rows.setdefault(lemma_id, LemmaBudget(lemma_id, name))
            row.limit = n
            row.limited = row.produced >= n

    def unset_limit(self, lemma_id: int) -> None:
        with self._lock:
            row = self._rows.get(lemma_id)
            if row is not None:
                row.limit = None
                row.limited = False

    def remaining(self, lemma_id: int) -> Optional[int]:
        with self._lock:
            row = self._rows.get(lemma_id)
            if row is None or row.limit is None:
                return None
            return max(row.limit - row.produced, 0)

    def note_produced(self, lemma_id: int, k: int, hit_limit: bool) -> None:
        with self._lock:
            row = self._rows[lemma_id]
            row.produced += k
            if row.limit is not None and (hit_limit or row.produced >= row.limit):
                row.limited = True

    def rows(self) -> list[LemmaBudget]:
        """Copies, sorted by produced descending (stable by lemma id)."""
        with self._lock:
            rows = [
                LemmaBudget(r.lemma_id, r.name, r.produced, r.limit, r.limited)
                for r in self._rows.values()
            ]
        rows.sort(key=lambda r: (-r.produced, r.lemma_id))
        return rows

    def total_produced(self) -> int:
        with self._lock:
            return sum(r.produced for r in self._rows.values())


# ---------------------------------------------------------------------------
# Lemmas and rounds


@dataclass
class Lemma:
    """An assumed universal awaiting instantiation.

    `sign` is +1 when the body is asserted as stated (an assumed forall)
    and -1 when instances assert the negation (a refuted exists). Bindings
    of enclosing instantiations are carried in base_*; a guard literal, if
    any, conditions every emitted instance clause."""

    node: Node
    sign: int
    decl_id: int
    name: str
    display_name: str
    labels: frozenset[int]
    guard: Optional[int] = None
    base_terms: dict[str, Term] = field(default_factory=dict)
    base_tys: dict[str, Ty] = field(default_factory=dict)

    @property
    def quant(self):
        q = self.node.content
        assert isinstance(q, (Forall, Exists))
        return q


@dataclass
class InstanceRecord:
    lemma_id: int
    lemma_name: str
    index: int
    subst_terms: dict[str, str]
    subst_tys: dict[str, str]


class Matcher:
    def __init__(self, budgets: BudgetTable):
        self.budgets = budgets
        self.lemmas: list[Lemma] = []
        self.seen: set[tuple] = set()
        self.seen_formulas: set[tuple] = set()
        self.log: list[InstanceRecord] = []

    def add_lemma(self, lem: Lemma) -> None:
        self.lemmas.append(lem)
        self.budgets.ensure(lem.node.id, lem.display_name)

    def seen_count(self) -> int:
        return len(self.seen)

    def round(
        self,
        eg: EGraph,
        dp_terms: list[Term],
        model_terms: list[Term],
        guard_true: Callable[[int], bool],
    ) -> list[tuple[Lemma, Subst, Formula]]:
        """One instantiation round: the decision-procedure terms first, the
        Boolean-model terms only if that produced nothing at all."""
        out = self._phase(eg, dp_terms, guard_true)
        if not out:
            out = self._phase(eg, model_terms, guard_true)
        return out

    def _phase(
        self,
        eg: EGraph,
        universe: list[Term],
        guard_true: Callable[[int], bool],
    ) -> list[tuple[Lemma, Subst, Formula]]:
        if not universe:
            universe = [IntLit(1)]  # lets variable-only triggers fire
        produced: list[tuple[Lemma, Subst, Formula]] = []
        for lem in self.lemmas:
            if lem.guard is not None and not guard_true(lem.guard):
                continue
            q = lem.quant
            if not q.triggers:
                continue
            remaining = self.budgets.remaining(lem.node.id)
            if remaining == 0:
                continue
            candidates: dict[tuple, Subst] = {}
            for trig in q.triggers:
                pats = [
                    _apply_base(p, lem.base_terms, lem.base_tys) for p in trig.patterns
                ]
                if len(pats) == 1:
                    subs = ematch(pats[0], eg, universe)
                else:
                    subs = ematch_multi(pats, eg, universe)
                for s in subs:
                    if set(s.term_bindings) != {n for n, _ in q.binders}:
                        continue  # a trigger never binds only part of the block
                    key = (lem.node.id, _subst_key(s.term_bindings, s.ty_bindings, eg))
                    if key in self.seen or key in candidates:
                        continue
                    candidates[key] = s
            count = 0
            hit_limit = False
            for key, s in candidates.items():
                if remaining is not None and count >= remaining:
                    hit_limit = True
                    break
                full_t = dict(lem.base_terms)
                full_t.update(s.term_bindings)
                full_ty = dict(lem.base_tys)
                full_ty.update(s.ty_bindings)
                inst = subst_formula(q.body, full_t, full_ty)
                fkey = (lem.node.id, formula_key(inst))
                if fkey in self.seen_formulas:
                    self.seen.add(key)
                    continue
                self.seen.add(key)
                self.seen_formulas.add(fkey)
                count += 1
                terms_desc, tys_desc = s.describe()
                self.log.append(
                    InstanceRecord(lem.node.id, lem.display_name, len(self.log), terms_desc, tys_desc)
                )
                produced.append((lem, s, inst))
            if count or hit_limit:
                self.budgets.note_produced(lem.node.id, count, hit_limit)
        return produced


def _apply_base(p: Term, base_t: dict[str, Term], base_ty: dict[str, Ty]) -> Term:
    from .syntax import subst_term

    if not base_t and not base_ty:
        return p
    return subst_term(p, base_t, base_ty)


# ---------------------------------------------------------------------------
# Manual instances


def manual_instance(
    ast: AnnotatedAst,
    env,
    axiom_id: int,
    bindings: dict[str, str],
    name: str,
) -> Node:
    """Instantiate an axiom by hand, possibly partially.

    Bound variables named in `bindings` are replaced by the given terms
    (parsed and checked in global scope); the remaining variables are
    re-quantified with freshly inferred triggers. The result is appended
    to the document as a new hypothesis."""
    from .frontend import check_fragment_terms
    from .triggers import infer_triggers
    from .typecheck import TypeEnv

    assert isinstance(env, TypeEnv)
    try:
        root = ast.node(axiom_id)
    except KeyError:
        raise NoSuchAxiom(axiom_id)
    if not isinstance(root.content, Axiom):
        raise NoSuchAxiom(axiom_id)
    q = root.content.formula
    if not isinstance(q, (Forall, Exists)):
        raise TypeCheckError("axiom is not a quantified formula", root.span)
    binder_tys = dict(q.binders)
    for v in bindings:
        if v not in binder_tys:
            raise TypeCheckError(f"{v} is not bound by this axiom", root.span)

    names = sorted(bindings)
    terms, checker = check_fragment_terms([bindings[v] for v in names], env, {})
    # quantifier type variables become unification variables so the given
    # terms drive the instantiation
    from .syntax import subst_ty
    from .triggers import ty_var_names

    tyvars: list[str] = []
    for _, ty in q.binders:
        for tv in sorted(ty_var_names(ty)):
            if tv not in tyvars:
                tyvars.append(tv)
    meta_map: dict[str, Ty] = {tv: checker.fresh() for tv in tyvars}
    for v, t in zip(names, terms):
        checker.unify(t.ty, subst_ty(binder_tys[v], meta_map), t.span)

    from .syntax import TyMeta

    ty_map: dict[str, Ty] = {}
    for tv, meta in meta_map.items():
        resolved = checker.zonk(meta)
        if not isinstance(resolved, TyMeta):
            ty_map[tv] = resolved

    from .frontend import zonk_term

    term_map = {v: zonk_term(checker, t) for v, t in zip(names, terms)}
    body = subst_formula(q.body, term_map, ty_map)
    residual = [(n, subst_ty(ty, ty_map)) for n, ty in q.binders if n not in bindings]
    if residual:
        cls = Forall if isinstance(q, Forall) else Exists
        new_q = cls(residual, [], body)
        inferred, _ = infer_triggers(new_q)
        new_q.triggers.extend(inferred)
        formula: Formula = new_q
    else:
        formula = body

    for r in ast.roots:
        if isinstance(r.content, (Axiom,)) and r.content.name == name:
            raise TypeCheckError(f"an axiom named {name} already exists", root.span)
    return ast.add_decl(Axiom(name, formula))
