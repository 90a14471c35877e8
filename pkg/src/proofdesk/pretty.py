"""Pretty printer. parse(pretty(d)) type-checks back to an equal tree."""
from __future__ import annotations

from .syntax import (
    And,
    App,
    ArithOp,
    Axiom,
    BoolForm,
    BoolLit,
    Compare,
    Decl,
    Exists,
    Forall,
    Formula,
    Goal,
    Iff,
    Implies,
    IntLit,
    LogicDecl,
    Not,
    Or,
    PredAtom,
    Term,
    Trigger,
    Ty,
    TypeDecl,
    Var,
)

# formula precedence levels, loosest first
_IFF, _IMPLIES, _OR, _AND, _NOT, _ATOM = range(6)


def pretty_ty(ty: Ty) -> str:
    return str(ty)


def pretty_term(t: Term, level: int = 0) -> str:
    # term levels: 0 additive, 1 multiplicative, 2 atomic
    if isinstance(t, Var):
        return t.name
    if isinstance(t, IntLit):
        s = str(t.value)
        return s if t.value >= 0 or level == 0 else f"({s})"
    if isinstance(t, BoolLit):
        return "true" if t.value else "false"
    if isinstance(t, App):
        if not t.args:
            return t.sym
        return f"{t.sym}({', '.join(pretty_term(a) for a in t.args)})"
    assert isinstance(t, ArithOp)
    if t.op == "*":
        s = f"{pretty_term(t.args[0], 1)} * {pretty_term(t.args[1], 2)}"
        return f"({s})" if level >= 2 else s
    s = f"{pretty_term(t.args[0], 0)} {t.op} {pretty_term(t.args[1], 1)}"
    return f"({s})" if level >= 1 else s


def pretty_trigger(tr: Trigger) -> str:
    return ", ".join(pretty_term(p) for p in tr.patterns)


def _binders(binders: list[tuple[str, Ty]]) -> str:
    groups: list[tuple[list[str], Ty]] = []
    for name, ty in binders:
        if groups and groups[-1][1] == ty:
            groups[-1][0].append(name)
        else:
            groups.append(([name], ty))
    return ", ".join(f"{', '.join(ns)}: {pretty_ty(ty)}" for ns, ty in groups)


def pretty_formula(f: Formula, level: int = _IFF) -> str:
    if isinstance(f, PredAtom):
        return pretty_term(f.app)
    if isinstance(f, Compare):
        return f"{pretty_term(f.lhs)} {f.op} {pretty_term(f.rhs)}"
    if isinstance(f, BoolForm):
        return "true" if f.value else "false"
    if isinstance(f, Not):
        return f"not {pretty_formula(f.body, _NOT)}"
    if isinstance(f, And):
        s = " and ".join(pretty_formula(g, _NOT) for g in f.items)
        return f"({s})" if level > _AND else s
    if isinstance(f, Or):
        s = " or ".join(pretty_formula(g, _AND) for g in f.items)
        return f"({s})" if level > _OR else s
    if isinstance(f, Implies):
        s = f"{pretty_formula(f.lhs, _OR)} -> {pretty_formula(f.rhs, _IMPLIES)}"
        return f"({s})" if level > _IMPLIES else s
    if isinstance(f, Iff):
        s = f"{pretty_formula(f.lhs, _IMPLIES)} <-> {pretty_formula(f.rhs, _IMPLIES)}"
        return f"({s})" if level > _IFF else s
    assert isinstance(f, (Forall, Exists))
    kw = "forall" if isinstance(f, Forall) else "exists"
    trig = ""
    if f.triggers:
        trig = " [" + " | ".join(pretty_trigger(tr) for tr in f.triggers) + "]"
    s = f"{kw} {_binders(f.binders)}{trig}. {pretty_formula(f.body, _IFF)}"
    return f"({s})" if level > _IFF else s


def pretty_decl(d: Decl) -> str:
    if isinstance(d, TypeDecl):
        if not d.params:
            return f"type {d.name}"
        if len(d.params) == 1:
            return f"type '{d.params[0]} {d.name}"
        params = ", ".join("'" + p for p in d.params)
        return f"type ({params}) {d.name}"
    if isinstance(d, LogicDecl):
        names = ", ".join(d.names)
        if not d.arg_tys:
            return f"logic {names}: {pretty_ty(d.result)}"
        args = ", ".join(pretty_ty(t) for t in d.arg_tys)
        return f"logic {names}: {args} -> {pretty_ty(d.result)}"
    kw = "axiom" if isinstance(d, Axiom) else "goal"
    return f"{kw} {d.name}: {pretty_formula(d.formula)}"


def pretty_program(decls: list[Decl]) -> str:
    return "\n".join(pretty_decl(d) for d in decls) + "\n"
