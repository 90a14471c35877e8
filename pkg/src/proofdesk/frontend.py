"""Front-end pipeline: parse, type check, infer triggers, annotate.

Also provides in-scope fragment parsing for user-entered trigger and
instance text, reusing the same lexer/parser/checker as whole files.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from . import parser as P
from .annotate import AnnotatedAst, annotate
from .errors import CoverageError, TypeCheckError
from .syntax import (
    And,
    Axiom,
    Decl,
    Exists,
    Forall,
    Formula,
    Goal,
    Iff,
    Implies,
    Not,
    Or,
    Span,
    Term,
    Ty,
    TRIGGER_SOURCE,
)
from .triggers import check_coverage, infer_triggers
from .typecheck import Checker, TypeEnv, typecheck

TRIGGER_LIST = "triggers"
TERM_LIST = "terms"


@dataclass
class LoadWarning:
    message: str
    decl_name: str
    span: Span


@dataclass
class Problem:
    decls: list[Decl]
    env: TypeEnv
    ast: AnnotatedAst
    warnings: list[LoadWarning] = field(default_factory=list)

    def goal(self) -> Goal:
        for d in self.decls:
            if isinstance(d, Goal):
                return d
        raise ValueError("problem has no goal")


def _each_quantifier(f: Formula):
    if isinstance(f, (Forall, Exists)):
        yield f
        yield from _each_quantifier(f.body)
    elif isinstance(f, Not):
        yield from _each_quantifier(f.body)
    elif isinstance(f, (And, Or)):
        for g in f.items:
            yield from _each_quantifier(g)
    elif isinstance(f, (Implies, Iff)):
        yield from _each_quantifier(f.lhs)
        yield from _each_quantifier(f.rhs)


def attach_triggers(decls: list[Decl]) -> list[LoadWarning]:
    """Infer triggers for trigger-less quantifiers; validate user ones."""
    warnings: list[LoadWarning] = []
    for d in decls:
        if not isinstance(d, (Axiom, Goal)):
            continue
        for q in _each_quantifier(d.formula):
            if q.triggers:
                for tr in q.triggers:
                    missing = check_coverage(q, tr.patterns)
                    if missing:
                        raise CoverageError(missing, tr.span)
                continue
            inferred, warns = infer_triggers(q)
            q.triggers.extend(inferred)
            for w in warns:
                warnings.append(LoadWarning(w, d.name, q.span))
    return warnings


def load_problem(text: str, require_goal: bool = True) -> Problem:
    """Full pipeline on a source file. Triggers are attached before
    annotation so their nodes get ids inside their declaration's range."""
    raw = P.parse(text)
    decls, env = typecheck(raw)
    goals = [d for d in decls if isinstance(d, Goal)]
    if require_goal and len(goals) != 1:
        raise TypeCheckError(
            f"a problem needs exactly one goal, found {len(goals)}",
            decls[-1].span if decls else (1, 1, 1, 1),
        )
    warnings = attach_triggers(decls)
    ast = annotate(decls, text)
    return Problem(decls, env, ast, warnings)


def check_fragment_terms(
    texts: list[str], env: TypeEnv, scope: dict[str, Ty]
) -> tuple[list[Term], Checker]:
    """Parse and check each comma-free term text in `scope`.

    The returned Checker still holds the unification state so callers can
    unify the term types further (manual instances do)."""
    checker = Checker(env.copy())
    terms = []
    for text in texts:
        raw_list = P.parse_terms(text)
        if len(raw_list) != 1:
            raise TypeCheckError("expected a single term", raw_list[1].span)
        terms.append(checker.check_term(raw_list[0], scope))
    return terms, checker


def parse_fragment(
    text: str,
    env: TypeEnv,
    scope: dict[str, Ty],
    kind: str = TERM_LIST,
    quant: Optional[Forall | Exists] = None,
) -> list[Term]:
    """Parse a comma-separated term list in `scope`.

    For a trigger list, additionally validates that the union of the terms
    covers all variables and type variables of `quant`."""
    raw_list = P.parse_terms(text)
    checker = Checker(env.copy())
    terms = [checker.check_term(rt, scope) for rt in raw_list]
    zonked = [zonk_term(checker, t) for t in terms]
    if kind == TRIGGER_LIST:
        assert quant is not None
        missing = check_coverage(quant, zonked)
        if missing:
            raise CoverageError(missing)
    return zonked


def zonk_term(checker: Checker, t: Term) -> Term:
    from .syntax import App, ArithOp, BoolLit, IntLit, Var

    if isinstance(t, Var):
        return Var(t.name, checker.zonk(t.ty), t.span)
    if isinstance(t, (IntLit, BoolLit)):
        return t
    args = tuple(_zonk_term(checker, a) for a in t.args)
    if isinstance(t, App):
        return App(t.sym, args, checker.zonk(t.ty), t.span)
    return ArithOp(t.op, args, checker.zonk(t.ty), t.span)
