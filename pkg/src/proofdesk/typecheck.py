"""Type checking with prenex polymorphism.

Polymorphic logic symbols are instantiated at each application by
unification; axioms and goals are generalized over whatever type variables
remain. User-written type variables are rigid inside their declaration.

Consecutive quantifiers of the same kind with distinct binder names are
merged into a single node (`forall x, y: 'a. forall s: 'a set. F` becomes
one quantifier over x, y, s), which is what trigger coverage and
instantiation operate on.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

from . import parser as P
from .errors import TypeCheckError
from .syntax import (
    BOOL,
    INT,
    NO_SPAN,
    PROP,
    RAT,
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
    Span,
    Term,
    Trigger,
    Ty,
    TyApp,
    TyMeta,
    TyVar,
    TypeDecl,
    TRIGGER_SOURCE,
    Var,
    is_numeric,
    subst_ty,
    ty_vars,
)


@dataclass
class Scheme:
    tyvars: tuple[str, ...]
    arg_tys: tuple[Ty, ...]
    result: Ty


class TypeEnv:
    """Declared type constructors and logic symbols, in declaration order."""

    def __init__(self) -> None:
        self.type_arities: dict[str, int] = {}
        self.schemes: dict[str, Scheme] = {}

    def copy(self) -> "TypeEnv":
        env = TypeEnv()
        env.type_arities = dict(self.type_arities)
        env.schemes = dict(self.schemes)
        return env


class Checker:
    """Unification-based checker; one instance per program or fragment."""

    def __init__(self, env: Optional[TypeEnv] = None):
        self.env = env if env is not None else TypeEnv()
        self._meta_count = 0
        self._subst: dict[int, Ty] = {}

    # -- unification --

    def fresh(self) -> TyMeta:
        self._meta_count += 1
        return TyMeta(self._meta_count)

    def resolve(self, ty: Ty) -> Ty:
        while isinstance(ty, TyMeta) and ty.uid in self._subst:
            ty = self._subst[ty.uid]
        return ty

    def _occurs(self, uid: int, ty: Ty) -> bool:
        ty = self.resolve(ty)
        if isinstance(ty, TyMeta):
            return ty.uid == uid
        if isinstance(ty, TyApp):
            return any(self._occurs(uid, a) for a in ty.args)
        return False

    def unify(self, a: Ty, b: Ty, span: Span = NO_SPAN) -> None:
        a = self.resolve(a)
        b = self.resolve(b)
        if a == b:
            return
        if isinstance(a, TyMeta):
            if self._occurs(a.uid, b):
                raise TypeCheckError(f"cannot construct infinite type {a} = {self.zonk(b)}", span)
            self._subst[a.uid] = b
            return
        if isinstance(b, TyMeta):
            self.unify(b, a, span)
            return
        if isinstance(a, TyApp) and isinstance(b, TyApp) and a.ctor == b.ctor:
            if len(a.args) != len(b.args):
                raise TypeCheckError(f"type arity mismatch for {a.ctor}", span)
            for x, y in zip(a.args, b.args):
                self.unify(x, y, span)
            return
        raise TypeCheckError(f"type mismatch: {self.zonk(a)} vs {self.zonk(b)}", span)

    def zonk(self, ty: Ty) -> Ty:
        ty = self.resolve(ty)
        if isinstance(ty, TyApp):
            return TyApp(ty.ctor, tuple(self.zonk(a) for a in ty.args))
        return ty

    # -- raw types --

    def check_ty(self, rty: P.RTy, allow_prop: bool = False) -> Ty:
        if rty.kind == "int":
            return INT
        if rty.kind == "real":
            return RAT
        if rty.kind == "bool":
            return BOOL
        if rty.kind == "prop":
            if not allow_prop:
                raise TypeCheckError("prop is not a value type here", rty.span)
            return PROP
        if rty.kind == "var":
            return TyVar(rty.name)
        assert rty.kind == "app"
        arity = self.env.type_arities.get(rty.name)
        if arity is None:
            raise TypeCheckError(f"unknown type {rty.name}", rty.span)
        if arity != len(rty.args):
            raise TypeCheckError(
                f"type {rty.name} expects {arity} parameter(s), got {len(rty.args)}", rty.span
            )
        return TyApp(rty.name, tuple(self.check_ty(a) for a in rty.args))

    # -- terms --

    def instantiate(self, sch: Scheme) -> tuple[list[Ty], Ty]:
        mapping: dict[str, Ty] = {v: self.fresh() for v in sch.tyvars}
        return [subst_ty(t, mapping) for t in sch.arg_tys], subst_ty(sch.result, mapping)

    def check_term(self, rt: P.RTerm, scope: dict[str, Ty]) -> Term:
        if isinstance(rt, P.RInt):
            return IntLit(rt.value, rt.span)
        if isinstance(rt, P.RBool):
            return BoolLit(rt.value, rt.span)
        if isinstance(rt, P.RIdent):
            if rt.name in scope:
                return Var(rt.name, scope[rt.name], rt.span)
            sch = self.env.schemes.get(rt.name)
            if sch is None:
                raise TypeCheckError(f"unbound identifier {rt.name}", rt.span)
            if sch.arg_tys:
                raise TypeCheckError(
                    f"{rt.name} expects {len(sch.arg_tys)} argument(s)", rt.span
                )
            _, result = self.instantiate(sch)
            return App(rt.name, (), result, rt.span)
        if isinstance(rt, P.RApp):
            if rt.name in scope:
                raise TypeCheckError(f"{rt.name} is a variable, not a function", rt.span)
            sch = self.env.schemes.get(rt.name)
            if sch is None:
                raise TypeCheckError(f"unbound identifier {rt.name}", rt.span)
            if len(sch.arg_tys) != len(rt.args):
                raise TypeCheckError(
                    f"{rt.name} expects {len(sch.arg_tys)} argument(s), got {len(rt.args)}",
                    rt.span,
                )
            arg_tys, result = self.instantiate(sch)
            args = []
            for raw_arg, want in zip(rt.args, arg_tys):
                arg = self.check_term(raw_arg, scope)
                self.unify(arg.ty, want, raw_arg.span)
                args.append(arg)
            return App(rt.name, tuple(args), result, rt.span)
        assert isinstance(rt, P.RArith)
        lhs = self.check_term(rt.lhs, scope)
        rhs = self.check_term(rt.rhs, scope)
        self.unify(lhs.ty, rhs.ty, rt.span)
        ty = self._force_numeric(lhs.ty, rt.span)
        if rt.op == "*" and not (isinstance(lhs, IntLit) or isinstance(rhs, IntLit)):
            raise TypeCheckError(
                "nonlinear multiplication: one operand must be an integer literal", rt.span
            )
        return ArithOp(rt.op, (lhs, rhs), ty, rt.span)

    def _force_numeric(self, ty: Ty, span: Span) -> Ty:
        t = self.resolve(ty)
        if isinstance(t, TyMeta):
            self.unify(t, INT, span)
            return INT
        if is_numeric(t):
            return t
        raise TypeCheckError(f"expected int or real, got {self.zonk(t)}", span)

    # -- formulas --

    def check_formula(self, rf: P.RFormula, scope: dict[str, Ty]) -> Formula:
        if isinstance(rf, P.RTermAtom):
            t = self.check_term(rf.term, scope)
            if self.resolve(t.ty) != PROP or not isinstance(t, App):
                raise TypeCheckError("expected a formula", rf.span)
            return PredAtom(t, rf.span)
        if isinstance(rf, P.RCompare):
            lhs = self.check_term(rf.lhs, scope)
            rhs = self.check_term(rf.rhs, scope)
            self.unify(lhs.ty, rhs.ty, rf.span)
            if rf.op in ("<", "<="):
                self._force_numeric(lhs.ty, rf.span)
            elif self.resolve(lhs.ty) == PROP:
                raise TypeCheckError("cannot compare formulas with =", rf.span)
            return Compare(rf.op, lhs, rhs, rf.span)
        if isinstance(rf, P.RBoolF):
            return BoolForm(rf.value, rf.span)
        if isinstance(rf, P.RNot):
            return Not(self.check_formula(rf.body, scope), rf.span)
        if isinstance(rf, P.RAnd):
            return And([self.check_formula(g, scope) for g in rf.items], rf.span)
        if isinstance(rf, P.ROr):
            return Or([self.check_formula(g, scope) for g in rf.items], rf.span)
        if isinstance(rf, P.RImplies):
            return Implies(
                self.check_formula(rf.lhs, scope), self.check_formula(rf.rhs, scope), rf.span
            )
        if isinstance(rf, P.RIff):
            return Iff(
                self.check_formula(rf.lhs, scope), self.check_formula(rf.rhs, scope), rf.span
            )
        assert isinstance(rf, P.RQuant)
        return self.check_quant(rf, scope)

    def check_quant(self, rq: P.RQuant, scope: dict[str, Ty]) -> Formula:
        binders: list[tuple[str, Ty]] = []
        raw_triggers: list[tuple[list[P.RTerm], Span]] = []
        seen_names: set[str] = set()
        node = rq
        # merge a chain of same-kind quantifiers with distinct binder names
        while True:
            for name, rty, bspan in node.binders:
                if name in seen_names:
                    raise TypeCheckError(f"duplicate bound variable {name}", bspan)
                ty = self.check_ty(rty)
                binders.append((name, ty))
                seen_names.add(name)
            raw_triggers.extend(node.triggers)
            body = node.body
            if (
                isinstance(body, P.RQuant)
                and body.kind == node.kind
                and not any(n in seen_names for n, _, _ in body.binders)
            ):
                node = body
                continue
            break
        inner_scope = dict(scope)
        inner_scope.update(binders)
        triggers = []
        for pats, tspan in raw_triggers:
            checked = [self.check_term(p, inner_scope) for p in pats]
            triggers.append(Trigger(checked, TRIGGER_SOURCE, tspan))
        body_f = self.check_formula(body, inner_scope)
        cls = Forall if rq.kind == "forall" else Exists
        return cls(binders, triggers, body_f, rq.span)

    # -- declarations --

    def check_decl(self, rd: P.RDecl) -> Decl:
        if isinstance(rd, P.RTypeDecl):
            if rd.name in self.env.type_arities:
                raise TypeCheckError(f"type {rd.name} already declared", rd.span)
            if len(set(rd.params)) != len(rd.params):
                raise TypeCheckError("duplicate type parameters", rd.span)
            self.env.type_arities[rd.name] = len(rd.params)
            return TypeDecl(rd.name, list(rd.params), rd.span)
        if isinstance(rd, P.RLogicDecl):
            args = [self.check_ty(t) for t in rd.arg_tys]
            result = self.check_ty(rd.result, allow_prop=True)
            tyvars: list[str] = []
            for t in args + [result]:
                for v in ty_vars(t):
                    if v not in tyvars:
                        tyvars.append(v)
            sch = Scheme(tuple(tyvars), tuple(args), result)
            for name in rd.names:
                if name in self.env.schemes:
                    raise TypeCheckError(f"symbol {name} already declared", rd.span)
                self.env.schemes[name] = sch
            return LogicDecl(list(rd.names), args, result, rd.span)
        f = self.check_formula(rd.formula, {})
        f = self._generalize_formula(f, rd.span)
        if isinstance(rd, P.RAxiom):
            return Axiom(rd.name, f, rd.span)
        assert isinstance(rd, P.RGoal)
        return Goal(rd.name, f, rd.span)

    # -- finalization --

    def _generalize_formula(self, f: Formula, span: Span) -> Formula:
        """Deep-resolve all types; leftover metas become fresh type variables."""
        gen: dict[int, Ty] = {}
        used: set[str] = set()

        def collect_used(ty: Ty) -> None:
            ty = self.resolve(ty)
            if isinstance(ty, TyVar):
                used.add(ty.name)
            elif isinstance(ty, TyApp):
                for a in ty.args:
                    collect_used(a)

        def zty(ty: Ty) -> Ty:
            ty = self.resolve(ty)
            if isinstance(ty, TyMeta):
                if ty.uid not in gen:
                    gen[ty.uid] = self._fresh_tyvar_name(used)
                return gen[ty.uid]
            if isinstance(ty, TyApp):
                return TyApp(ty.ctor, tuple(zty(a) for a in ty.args))
            return ty

        def zterm(t: Term) -> Term:
            if isinstance(t, Var):
                return Var(t.name, zty(t.ty), t.span)
            if isinstance(t, (IntLit, BoolLit)):
                return t
            args = tuple(zterm(a) for a in t.args)
            if isinstance(t, App):
                return App(t.sym, args, zty(t.ty), t.span)
            return ArithOp(t.op, args, zty(t.ty), t.span)

        def zf(g: Formula) -> Formula:
            if isinstance(g, PredAtom):
                app = zterm(g.app)
                assert isinstance(app, App)
                return PredAtom(app, g.span)
            if isinstance(g, Compare):
                return Compare(g.op, zterm(g.lhs), zterm(g.rhs), g.span)
            if isinstance(g, BoolForm):
                return g
            if isinstance(g, Not):
                return Not(zf(g.body), g.span)
            if isinstance(g, And):
                return And([zf(x) for x in g.items], g.span)
            if isinstance(g, Or):
                return Or([zf(x) for x in g.items], g.span)
            if isinstance(g, Implies):
                return Implies(zf(g.lhs), zf(g.rhs), g.span)
            if isinstance(g, Iff):
                return Iff(zf(g.lhs), zf(g.rhs), g.span)
            assert isinstance(g, (Forall, Exists))
            binders = [(n, zty(ty)) for n, ty in g.binders]
            triggers = [
                Trigger([zterm(p) for p in tr.patterns], tr.origin, tr.span) for tr in g.triggers
            ]
            cls = Forall if isinstance(g, Forall) else Exists
            return cls(binders, triggers, zf(g.body), g.span)

        def scan_used(g: Formula) -> None:
            for t in _formula_types(g):
                collect_used(t)

        scan_used(f)
        return zf(f)

    def _fresh_tyvar_name(self, used: set[str]) -> TyVar:
        for i in range(26 * 27):
            first = chr(ord("a") + i % 26)
            name = first if i < 26 else first + str(i // 26)
            if name not in used:
                used.add(name)
                return TyVar(name)
        raise AssertionError("type variable namespace exhausted")


def _formula_types(f: Formula):
    """All type occurrences in a formula: binder types and term types."""
    from .syntax import subterms

    if isinstance(f, PredAtom):
        for s in subterms(f.app):
            yield s.ty
    elif isinstance(f, Compare):
        for t in (f.lhs, f.rhs):
            for s in subterms(t):
                yield s.ty
    elif isinstance(f, Not):
        yield from _formula_types(f.body)
    elif isinstance(f, (And, Or)):
        for g in f.items:
            yield from _formula_types(g)
    elif isinstance(f, (Implies, Iff)):
        yield from _formula_types(f.lhs)
        yield from _formula_types(f.rhs)
    elif isinstance(f, (Forall, Exists)):
        for _, ty in f.binders:
            yield ty
        for tr in f.triggers:
            for p in tr.patterns:
                for s in subterms(p):
                    yield s.ty
        yield from _formula_types(f.body)


def typecheck(raw: list[P.RDecl], env: Optional[TypeEnv] = None) -> tuple[list[Decl], TypeEnv]:
    """Check a whole program; returns typed declarations and the final env."""
    checker = Checker(env.copy() if env is not None else None)
    decls = [checker.check_decl(rd) for rd in raw]
    return decls, checker.env
