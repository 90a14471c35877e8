"""Trigger inference and coverage checking.

A trigger must cover every bound term variable and every type variable of
its quantifier. Candidates are non-variable subterms of the body whose
head symbol is uninterpreted; bare variables are rejected as too
permissive. At most two triggers are inferred. When no coverage is
possible the quantifier gets no triggers and a warning is reported
instead, so the user can supply one by hand.
"""
from __future__ import annotations

from dataclasses import dataclass

from .syntax import (
    App,
    ArithOp,
    Compare,
    Exists,
    Forall,
    Formula,
    PredAtom,
    Term,
    Trigger,
    TRIGGER_INFERRED,
    Ty,
    TyApp,
    TyVar,
    Var,
    formula_terms,
    subterms,
    term_key,
    term_size,
    term_vars,
)


@dataclass
class TriggerWarning:
    message: str
    quant_span: tuple


def ty_var_names(ty: Ty) -> set[str]:
    out: set[str] = set()

    def go(t: Ty) -> None:
        if isinstance(t, TyVar):
            out.add(t.name)
        elif isinstance(t, TyApp):
            for a in t.args:
                go(a)

    go(ty)
    return out


def pattern_coverage(p: Term) -> tuple[set[str], set[str]]:
    """(term variables, type variables) covered by one pattern."""
    tvs: set[str] = set()
    tys: set[str] = set()
    for s in subterms(p):
        if isinstance(s, Var):
            tvs.add(s.name)
        tys |= ty_var_names(s.ty)
    return tvs, tys


def quant_requirements(q: Formula) -> tuple[set[str], set[str]]:
    """Variables and type variables a trigger of `q` must cover."""
    assert isinstance(q, (Forall, Exists))
    vars_needed = {n for n, _ in q.binders}
    tyvars: set[str] = set()
    for _, ty in q.binders:
        tyvars |= ty_var_names(ty)
    for t in formula_terms(q.body):
        for s in subterms(t):
            tyvars |= ty_var_names(s.ty)
    return vars_needed, tyvars


def _interpreted_count(t: Term) -> int:
    return sum(1 for s in subterms(t) if isinstance(s, ArithOp))


def _candidates(q: Forall | Exists) -> list[Term]:
    """Non-variable subterms with an uninterpreted head containing at least
    one bound variable and no deeper-bound variables, deduplicated, in
    source order."""
    bound = {n for n, _ in q.binders}
    seen: dict[tuple, Term] = {}

    def visit_formula(f: Formula, deeper: set[str]) -> None:
        if isinstance(f, (Forall, Exists)):
            visit_formula(f.body, deeper | {n for n, _ in f.binders})
            return
        if isinstance(f, PredAtom):
            visit_term(f.app, deeper)
        elif isinstance(f, Compare):
            visit_term(f.lhs, deeper)
            visit_term(f.rhs, deeper)
        else:
            for g in _subformulas(f):
                visit_formula(g, deeper)

    def visit_term(t: Term, deeper: set[str]) -> None:
        if isinstance(t, App):
            vs = set(term_vars(t))
            if vs and vs <= bound and not vs & deeper:
                key = term_key(t)
                if key not in seen:
                    seen[key] = t
        for c in t.args if isinstance(t, (App, ArithOp)) else ():
            visit_term(c, deeper)

    visit_formula(q.body, set())
    return list(seen.values())


def _subformulas(f: Formula) -> list[Formula]:
    from .syntax import And, BoolForm, Iff, Implies, Not, Or

    if isinstance(f, Not):
        return [f.body]
    if isinstance(f, (And, Or)):
        return list(f.items)
    if isinstance(f, (Implies, Iff)):
        return [f.lhs, f.rhs]
    return []


def infer_triggers(q: Forall | Exists) -> tuple[list[Trigger], list[str]]:
    """Infer up to two triggers; returns (triggers, warnings)."""
    vars_needed, tyvars_needed = quant_requirements(q)
    cands = _candidates(q)
    pref = {term_key(c): i for i, c in enumerate(cands)}

    def order(c: Term):
        return (_interpreted_count(c), term_size(c), pref[term_key(c)])

    full = [
        c
        for c in cands
        if vars_needed <= pattern_coverage(c)[0] and tyvars_needed <= pattern_coverage(c)[1]
    ]
    if full:
        full.sort(key=order)
        return [Trigger([c], TRIGGER_INFERRED) for c in full[:2]], []

    # greedy multi-trigger construction
    def build(skip_first: Term | None) -> list[Term] | None:
        chosen: list[Term] = []
        got_v: set[str] = set()
        got_ty: set[str] = set()
        pool = list(cands)
        first = True
        while got_v < vars_needed or got_ty < tyvars_needed:
            best = None
            best_gain = -1
            for c in pool:
                if first and skip_first is not None and term_key(c) == term_key(skip_first):
                    continue
                cv, cty = pattern_coverage(c)
                gain = len((cv & vars_needed) - got_v) + len((cty & tyvars_needed) - got_ty)
                if gain > best_gain or (gain == best_gain and best is not None and pref[term_key(c)] < pref[term_key(best)]):
                    if gain > 0:
                        best, best_gain = c, gain
            if best is None:
                return None
            first = False
            chosen.append(best)
            pool = [c for c in pool if term_key(c) != term_key(best)]
            cv, cty = pattern_coverage(best)
            got_v |= cv & vars_needed
            got_ty |= cty & tyvars_needed
        return chosen

    primary = build(None)
    if primary is None:
        return [], ["no suitable trigger could be inferred for this quantifier"]
    triggers = [Trigger(list(primary), TRIGGER_INFERRED)]
    if len(cands) > 1:
        alt = build(primary[0])
        if alt is not None and {term_key(t) for t in alt} != {term_key(t) for t in primary}:
            triggers.append(Trigger(list(alt), TRIGGER_INFERRED))
    return triggers, []


def check_coverage(q: Forall | Exists, patterns: list[Term]) -> list[str]:
    """Uncovered variable names of `q` for a candidate trigger (empty = ok)."""
    vars_needed, tyvars_needed = quant_requirements(q)
    got_v: set[str] = set()
    got_ty: set[str] = set()
    for p in patterns:
        cv, cty = pattern_coverage(p)
        got_v |= cv
        got_ty |= cty
    missing = sorted(vars_needed - got_v) + sorted("'" + t for t in tyvars_needed - got_ty)
    return missing
