"""Core syntax: types, terms, formulas and declarations.

The input language is first-order logic with ML-style prenex polymorphism,
uninterpreted symbols and linear integer/rational arithmetic.  Terms and
types are immutable (hashable, usable as dictionary keys in the decision
procedures); formulas and declarations are plain mutable dataclasses.

Source spans are carried on every node but excluded from equality, so two
structurally identical trees compare equal regardless of where they were
parsed from.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterator, Optional, Union

# (start_line, start_col, end_line, end_col), 1-based, end-exclusive columns
Span = tuple[int, int, int, int]
NO_SPAN: Span = (0, 0, 0, 0)


# ---------------------------------------------------------------------------
# Types


@dataclass(frozen=True)
class IntTy:
    def __str__(self) -> str:
        return "int"


@dataclass(frozen=True)
class RatTy:
    def __str__(self) -> str:
        return "real"


@dataclass(frozen=True)
class BoolTy:
    def __str__(self) -> str:
        return "bool"


@dataclass(frozen=True)
class PropTy:
    def __str__(self) -> str:
        return "prop"


@dataclass(frozen=True)
class TyVar:
    """A user-level type variable, written 'a. Rigid within one declaration."""

    name: str

    def __str__(self) -> str:
        return "'" + self.name


@dataclass(frozen=True)
class TyMeta:
    """A unification variable. Exists only while type checking."""

    uid: int

    def __str__(self) -> str:
        return f"?{self.uid}"


@dataclass(frozen=True)
class TyApp:
    ctor: str
    args: tuple["Ty", ...]

    def __str__(self) -> str:
        if not self.args:
            return self.ctor
        if len(self.args) == 1:
            return f"{self.args[0]} {self.ctor}"
        inner = ", ".join(str(a) for a in self.args)
        return f"({inner}) {self.ctor}"


Ty = Union[IntTy, RatTy, BoolTy, PropTy, TyVar, TyMeta, TyApp]

INT = IntTy()
RAT = RatTy()
BOOL = BoolTy()
PROP = PropTy()


def ty_vars(ty: Ty) -> list[str]:
    """Type variables occurring in `ty`, in first-occurrence order."""
    out: list[str] = []

    def go(t: Ty) -> None:
        if isinstance(t, TyVar):
            if t.name not in out:
                out.append(t.name)
        elif isinstance(t, TyApp):
            for a in t.args:
                go(a)

    go(ty)
    return out


def subst_ty(ty: Ty, mapping: dict[str, Ty]) -> Ty:
    if isinstance(ty, TyVar):
        return mapping.get(ty.name, ty)
    if isinstance(ty, TyApp):
        return TyApp(ty.ctor, tuple(subst_ty(a, mapping) for a in ty.args))
    return ty


def is_numeric(ty: Ty) -> bool:
    return isinstance(ty, (IntTy, RatTy))


# ---------------------------------------------------------------------------
# Terms


@dataclass(frozen=True)
class Var:
    name: str
    ty: Ty
    span: Span = field(default=NO_SPAN, compare=False)


@dataclass(frozen=True)
class IntLit:
    value: int
    span: Span = field(default=NO_SPAN, compare=False)

    @property
    def ty(self) -> Ty:
        return INT


@dataclass(frozen=True)
class BoolLit:
    value: bool
    span: Span = field(default=NO_SPAN, compare=False)

    @property
    def ty(self) -> Ty:
        return BOOL


@dataclass(frozen=True)
class App:
    """Application of a declared logic symbol (constants have no args)."""

    sym: str
    args: tuple["Term", ...]
    ty: Ty
    span: Span = field(default=NO_SPAN, compare=False)


@dataclass(frozen=True)
class ArithOp:
    """Linear arithmetic node; op in {+, -, *}, * has a literal operand."""

    op: str
    args: tuple["Term", ...]
    ty: Ty
    span: Span = field(default=NO_SPAN, compare=False)


Term = Union[Var, IntLit, BoolLit, App, ArithOp]


def term_children(t: Term) -> tuple[Term, ...]:
    if isinstance(t, (App, ArithOp)):
        return t.args
    return ()


def subterms(t: Term) -> Iterator[Term]:
    """Preorder iteration over `t` and all its subterms."""
    yield t
    for c in term_children(t):
        yield from subterms(c)


def term_vars(t: Term) -> dict[str, Ty]:
    """Free variables of a term, in first-occurrence order."""
    out: dict[str, Ty] = {}
    for s in subterms(t):
        if isinstance(s, Var) and s.name not in out:
            out[s.name] = s.ty
    return out


def term_size(t: Term) -> int:
    return 1 + sum(term_size(c) for c in term_children(t))


def subst_term(t: Term, tmap: dict[str, Term], tymap: dict[str, Ty]) -> Term:
    if isinstance(t, Var):
        if t.name in tmap:
            return tmap[t.name]
        return Var(t.name, subst_ty(t.ty, tymap), t.span)
    if isinstance(t, (IntLit, BoolLit)):
        return t
    args = tuple(subst_term(a, tmap, tymap) for a in t.args)
    if isinstance(t, App):
        return App(t.sym, args, subst_ty(t.ty, tymap), t.span)
    return ArithOp(t.op, args, subst_ty(t.ty, tymap), t.span)


def term_key(t: Term):
    """Deterministic structural ordering key (no reliance on hash seeds)."""
    if isinstance(t, Var):
        return (0, t.name, str(t.ty))
    if isinstance(t, IntLit):
        return (1, t.value)
    if isinstance(t, BoolLit):
        return (2, t.value)
    if isinstance(t, App):
        return (3, t.sym, str(t.ty), tuple(term_key(a) for a in t.args))
    return (4, t.op, str(t.ty), tuple(term_key(a) for a in t.args))


# ---------------------------------------------------------------------------
# Formulas

TRIGGER_INFERRED = "inferred"
TRIGGER_SOURCE = "user-source"
TRIGGER_ACTION = "user-action"


@dataclass
class Trigger:
    """Instantiation pattern group: one term (mono) or several (multi)."""

    patterns: list[Term]
    origin: str = field(default=TRIGGER_INFERRED, compare=False)
    span: Span = field(default=NO_SPAN, compare=False)


@dataclass
class PredAtom:
    app: App
    span: Span = field(default=NO_SPAN, compare=False)


@dataclass
class Compare:
    """Atomic comparison; op in {=, <>, <, <=}. > and >= are flipped at parse."""

    op: str
    lhs: Term
    rhs: Term
    span: Span = field(default=NO_SPAN, compare=False)


@dataclass
class BoolForm:
    value: bool
    span: Span = field(default=NO_SPAN, compare=False)


@dataclass
class Not:
    body: "Formula"
    span: Span = field(default=NO_SPAN, compare=False)


@dataclass
class And:
    items: list["Formula"]
    span: Span = field(default=NO_SPAN, compare=False)


@dataclass
class Or:
    items: list["Formula"]
    span: Span = field(default=NO_SPAN, compare=False)


@dataclass
class Implies:
    lhs: "Formula"
    rhs: "Formula"
    span: Span = field(default=NO_SPAN, compare=False)


@dataclass
class Iff:
    lhs: "Formula"
    rhs: "Formula"
    span: Span = field(default=NO_SPAN, compare=False)


@dataclass
class Forall:
    binders: list[tuple[str, Ty]]
    triggers: list[Trigger]
    body: "Formula"
    span: Span = field(default=NO_SPAN, compare=False)


@dataclass
class Exists:
    binders: list[tuple[str, Ty]]
    triggers: list[Trigger]
    body: "Formula"
    span: Span = field(default=NO_SPAN, compare=False)


Formula = Union[PredAtom, Compare, BoolForm, Not, And, Or, Implies, Iff, Forall, Exists]
Quant = (Forall, Exists)


def formula_terms(f: Formula) -> Iterator[Term]:
    """Top-level terms of every atom in `f` (triggers excluded)."""
    if isinstance(f, PredAtom):
        yield f.app
    elif isinstance(f, Compare):
        yield f.lhs
        yield f.rhs
    elif isinstance(f, Not):
        yield from formula_terms(f.body)
    elif isinstance(f, (And, Or)):
        for g in f.items:
            yield from formula_terms(g)
    elif isinstance(f, (Implies, Iff)):
        yield from formula_terms(f.lhs)
        yield from formula_terms(f.rhs)
    elif isinstance(f, Quant):
        yield from formula_terms(f.body)


def subst_formula(f: Formula, tmap: dict[str, Term], tymap: dict[str, Ty]) -> Formula:
    """Capture-aware substitution: rebinding quantifiers shadow `tmap`."""
    if isinstance(f, PredAtom):
        app = subst_term(f.app, tmap, tymap)
        assert isinstance(app, App)
        return PredAtom(app, f.span)
    if isinstance(f, Compare):
        return Compare(f.op, subst_term(f.lhs, tmap, tymap), subst_term(f.rhs, tmap, tymap), f.span)
    if isinstance(f, BoolForm):
        return BoolForm(f.value, f.span)
    if isinstance(f, Not):
        return Not(subst_formula(f.body, tmap, tymap), f.span)
    if isinstance(f, And):
        return And([subst_formula(g, tmap, tymap) for g in f.items], f.span)
    if isinstance(f, Or):
        return Or([subst_formula(g, tmap, tymap) for g in f.items], f.span)
    if isinstance(f, Implies):
        return Implies(subst_formula(f.lhs, tmap, tymap), subst_formula(f.rhs, tmap, tymap), f.span)
    if isinstance(f, Iff):
        return Iff(subst_formula(f.lhs, tmap, tymap), subst_formula(f.rhs, tmap, tymap), f.span)
    assert isinstance(f, Quant)
    shadowed = {n for n, _ in f.binders}
    inner_t = {k: v for k, v in tmap.items() if k not in shadowed}
    binders = [(n, subst_ty(ty, tymap)) for n, ty in f.binders]
    triggers = [
        Trigger([subst_term(p, inner_t, tymap) for p in tr.patterns], tr.origin, tr.span)
        for tr in f.triggers
    ]
    body = subst_formula(f.body, inner_t, tymap)
    cls = Forall if isinstance(f, Forall) else Exists
    return cls(binders, triggers, body, f.span)


def formula_key(f: Formula):
    """Deterministic structural key, usable for dedup of instance formulas."""
    if isinstance(f, PredAtom):
        return ("atom", term_key(f.app))
    if isinstance(f, Compare):
        return ("cmp", f.op, term_key(f.lhs), term_key(f.rhs))
    if isinstance(f, BoolForm):
        return ("bool", f.value)
    if isinstance(f, Not):
        return ("not", formula_key(f.body))
    if isinstance(f, And):
        return ("and", tuple(formula_key(g) for g in f.items))
    if isinstance(f, Or):
        return ("or", tuple(formula_key(g) for g in f.items))
    if isinstance(f, Implies):
        return ("imp", formula_key(f.lhs), formula_key(f.rhs))
    if isinstance(f, Iff):
        return ("iff", formula_key(f.lhs), formula_key(f.rhs))
    kind = "forall" if isinstance(f, Forall) else "exists"
    return (
        kind,
        tuple((n, str(ty)) for n, ty in f.binders),
        formula_key(f.body),
    )


# ---------------------------------------------------------------------------
# Declarations


@dataclass
class TypeDecl:
    name: str
    params: list[str]
    span: Span = field(default=NO_SPAN, compare=False)


@dataclass
class LogicDecl:
    names: list[str]
    arg_tys: list[Ty]
    result: Ty
    span: Span = field(default=NO_SPAN, compare=False)


@dataclass
class Axiom:
    name: str
    formula: Formula
    span: Span = field(default=NO_SPAN, compare=False)


@dataclass
class Goal:
    name: str
    formula: Formula
    span: Span = field(default=NO_SPAN, compare=False)


Decl = Union[TypeDecl, LogicDecl, Axiom, Goal]


def decl_declared_symbols(d: Decl) -> list[tuple[str, str]]:
    """(namespace, name) pairs declared by `d`; namespaces: 'type', 'logic'."""
    if isinstance(d, TypeDecl):
        return [("type", d.name)]
    if isinstance(d, LogicDecl):
        return [("logic", n) for n in d.names]
    return []


def decl_display_name(d: Decl) -> str:
    if isinstance(d, TypeDecl):
        return d.name
    if isinstance(d, LogicDecl):
        return d.names[0]
    return d.name


__all__ = [
    "Span",
    "NO_SPAN",
    "IntTy",
    "RatTy",
    "BoolTy",
    "PropTy",
    "TyVar",
    "TyMeta",
    "TyApp",
    "Ty",
    "INT",
    "RAT",
    "BOOL",
    "PROP",
    "ty_vars",
    "subst_ty",
    "is_numeric",
    "Var",
    "IntLit",
    "BoolLit",
    "App",
    "ArithOp",
    "Term",
    "term_children",
    "subterms",
    "term_vars",
    "term_size",
    "subst_term",
    "term_key",
    "Trigger",
    "TRIGGER_INFERRED",
    "TRIGGER_SOURCE",
    "TRIGGER_ACTION",
    "PredAtom",
    "Compare",
    "BoolForm",
    "Not",
    "And",
    "Or",
    "Implies",
    "Iff",
    "Forall",
    "Exists",
    "Formula",
    "Quant",
    "formula_terms",
    "subst_formula",
    "formula_key",
    "TypeDecl",
    "LogicDecl",
    "Axiom",
    "Goal",
    "Decl",
    "decl_declared_symbols",
    "decl_display_name",
]
