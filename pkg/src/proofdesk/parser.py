"""Recursive-descent parser producing an untyped (raw) tree with spans.

Grammar (precedence loosest to tightest: <-> , -> right-assoc, or, and, not):

    file    ::= decl*
    decl    ::= 'type' tyvars? IDENT
              | 'logic' IDENT (',' IDENT)* ':' (tys '->')? ty
              | ('axiom' | 'goal') IDENT ':' formula
    formula ::= quantified | connectives over atoms
    quant   ::= ('forall'|'exists') binders triggers? '.' formula
    triggers::= '[' term (',' term)* ('|' term (',' term)*)* ']'
    atom    ::= term (cmp term)? | 'true' | 'false' | '(' formula ')'
    term    ::= arithmetic over INT literals, idents, f(t, ...), parens

Within a trigger annotation, '|' separates alternative triggers and ','
separates the patterns of one multi-trigger.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Union

from .errors import ParseError
from .lexer import Token, tokenize
from .syntax import NO_SPAN, Span

# --- raw types ---


@dataclass
class RTy:
    kind: str  # 'int','real','bool','prop','var','app'
    name: str = ""
    args: list["RTy"] = field(default_factory=list)
    span: Span = NO_SPAN


# --- raw terms ---


@dataclass
class RInt:
    value: int
    span: Span = NO_SPAN


@dataclass
class RBool:
    value: bool
    span: Span = NO_SPAN


@dataclass
class RIdent:
    name: str
    span: Span = NO_SPAN


@dataclass
class RApp:
    name: str
    args: list["RTerm"]
    span: Span = NO_SPAN


@dataclass
class RArith:
    op: str
    lhs: "RTerm"
    rhs: "RTerm"
    span: Span = NO_SPAN


RTerm = Union[RInt, RBool, RIdent, RApp, RArith]

# --- raw formulas ---


@dataclass
class RTermAtom:
    """A bare term in formula position; must resolve to a predicate."""

    term: RTerm
    span: Span = NO_SPAN


@dataclass
class RCompare:
    op: str  # '=','<>','<','<=' (flipped forms normalized by the parser)
    lhs: RTerm
    rhs: RTerm
    span: Span = NO_SPAN


@dataclass
class RBoolF:
    value: bool
    span: Span = NO_SPAN


@dataclass
class RNot:
    body: "RFormula"
    span: Span = NO_SPAN


@dataclass
class RAnd:
    items: list["RFormula"]
    span: Span = NO_SPAN


@dataclass
class ROr:
    items: list["RFormula"]
    span: Span = NO_SPAN


@dataclass
class RImplies:
    lhs: "RFormula"
    rhs: "RFormula"
    span: Span = NO_SPAN


@dataclass
class RIff:
    lhs: "RFormula"
    rhs: "RFormula"
    span: Span = NO_SPAN


@dataclass
class RQuant:
    kind: str  # 'forall' | 'exists'
    binders: list[tuple[str, RTy, Span]]
    triggers: list[tuple[list[RTerm], Span]]
    body: "RFormula"
    span: Span = NO_SPAN


RFormula = Union[RTermAtom, RCompare, RBoolF, RNot, RAnd, ROr, RImplies, RIff, RQuant]

# --- raw declarations ---


@dataclass
class RTypeDecl:
    name: str
    params: list[str]
    span: Span = NO_SPAN


@dataclass
class RLogicDecl:
    names: list[str]
    arg_tys: list[RTy]
    result: RTy
    span: Span = NO_SPAN


@dataclass
class RAxiom:
    name: str
    formula: RFormula
    span: Span = NO_SPAN


@dataclass
class RGoal:
    name: str
    formula: RFormula
    span: Span = NO_SPAN


RDecl = Union[RTypeDecl, RLogicDecl, RAxiom, RGoal]

COMPARISONS = {"=", "<>", "<", "<=", ">", ">="}


def _join(a: Span, b: Span) -> Span:
    return (a[0], a[1], b[2], b[3])


class Parser:
    def __init__(self, text: str):
        self.tokens = tokenize(text)
        self.pos = 0

    # -- token plumbing --

    def peek(self, k: int = 0) -> Token:
        return self.tokens[min(self.pos + k, len(self.tokens) - 1)]

    def at(self, kind: str, text: Optional[str] = None, k: int = 0) -> bool:
        t = self.peek(k)
        return t.kind == kind and (text is None or t.text == text)

    def at_sym(self, s: str, k: int = 0) -> bool:
        return self.at("sym", s, k)

    def next(self) -> Token:
        t = self.tokens[self.pos]
        if t.kind != "eof":
            self.pos += 1
        return t

    def expect(self, kind: str, text: Optional[str] = None) -> Token:
        t = self.peek()
        if t.kind != kind or (text is not None and t.text != text):
            want = text if text is not None else kind
            raise ParseError(f"expected {want!r}, got {t.text or t.kind!r}", t.span)
        return self.next()

    def prev_span(self) -> Span:
        return self.tokens[max(self.pos - 1, 0)].span

    # -- entry points --

    def parse_file(self) -> list[RDecl]:
        decls = []
        while not self.at("eof"):
            decls.append(self.parse_decl())
        return decls

    def parse_term_list(self) -> list[RTerm]:
        terms = [self.parse_term()]
        while self.at_sym(","):
            self.next()
            terms.append(self.parse_term())
        self.expect("eof")
        return terms

    # -- declarations --

    def parse_decl(self) -> RDecl:
        t = self.peek()
        if t.kind != "kw" or t.text not in ("type", "logic", "axiom", "goal"):
            raise ParseError(f"expected declaration, got {t.text or t.kind!r}", t.span)
        start = t.span
        if t.text == "type":
            self.next()
            params: list[str] = []
            if self.at("tyvar"):
                params.append(self.next().text)
            elif self.at_sym("(") and self.at("tyvar", k=1):
                self.next()
                params.append(self.expect("tyvar").text)
                while self.at_sym(","):
                    self.next()
                    params.append(self.expect("tyvar").text)
                self.expect("sym", ")")
            name = self.expect("ident").text
            return RTypeDecl(name, params, _join(start, self.prev_span()))
        if t.text == "logic":
            self.next()
            names = [self.expect("ident").text]
            while self.at_sym(","):
                self.next()
                names.append(self.expect("ident").text)
            self.expect("sym", ":")
            tys = [self.parse_ty()]
            while self.at_sym(","):
                self.next()
                tys.append(self.parse_ty())
            if self.at_sym("->"):
                self.next()
                result = self.parse_ty()
                args = tys
            else:
                if len(tys) != 1:
                    raise ParseError("constant declaration takes a single type", self.peek().span)
                args, result = [], tys[0]
            return RLogicDecl(names, args, result, _join(start, self.prev_span()))
        # axiom / goal
        kw = self.next().text
        name = self.expect("ident").text
        self.expect("sym", ":")
        f = self.parse_formula()
        span = _join(start, self.prev_span())
        return RAxiom(name, f, span) if kw == "axiom" else RGoal(name, f, span)

    # -- types --

    def parse_ty(self) -> RTy:
        start = self.peek().span
        if self.at_sym("("):
            self.next()
            args = [self.parse_ty()]
            while self.at_sym(","):
                self.next()
                args.append(self.parse_ty())
            self.expect("sym", ")")
            if self.at("ident"):
                ctor = self.next().text
                base = RTy("app", ctor, args, _join(start, self.prev_span()))
            elif len(args) == 1:
                base = args[0]
            else:
                raise ParseError("expected type constructor after type tuple", self.peek().span)
        else:
            t = self.peek()
            if t.kind == "kw" and t.text in ("int", "real", "bool", "prop"):
                self.next()
                base = RTy(t.text, span=t.span)
            elif t.kind == "tyvar":
                self.next()
                base = RTy("var", t.text, span=t.span)
            elif t.kind == "ident":
                self.next()
                base = RTy("app", t.text, [], t.span)
            else:
                raise ParseError(f"expected a type, got {t.text or t.kind!r}", t.span)
        while self.at("ident"):
            ctor = self.next().text
            base = RTy("app", ctor, [base], _join(start, self.prev_span()))
        return base

    # -- formulas --

    def parse_formula(self) -> RFormula:
        return self.parse_iff()

    def parse_iff(self) -> RFormula:
        left = self.parse_implies()
        while self.at_sym("<->"):
            self.next()
            right = self.parse_implies()
            left = RIff(left, right, _join(left.span, right.span))
        return left

    def parse_implies(self) -> RFormula:
        left = self.parse_or()
        if self.at_sym("->"):
            self.next()
            right = self.parse_implies()
            return RImplies(left, right, _join(left.span, right.span))
        return left

    def parse_or(self) -> RFormula:
        items = [self.parse_and()]
        while self.at("kw", "or"):
            self.next()
            items.append(self.parse_and())
        if len(items) == 1:
            return items[0]
        return ROr(items, _join(items[0].span, items[-1].span))

    def parse_and(self) -> RFormula:
        items = [self.parse_not()]
        while self.at("kw", "and"):
            self.next()
            items.append(self.parse_not())
        if len(items) == 1:
            return items[0]
        return RAnd(items, _join(items[0].span, items[-1].span))

    def parse_not(self) -> RFormula:
        if self.at("kw", "not"):
            start = self.next().span
            body = self.parse_not()
            return RNot(body, _join(start, body.span))
        if self.at("kw", "forall") or self.at("kw", "exists"):
            return self.parse_quant()
        return self.parse_atom()

    def parse_quant(self) -> RFormula:
        t = self.next()
        kind = t.text
        binders = self.parse_binders()
        triggers: list[tuple[list[RTerm], Span]] = []
        if self.at_sym("["):
            self.next()
            while True:
                tstart = self.peek().span
                pats = [self.parse_term()]
                while self.at_sym(","):
                    self.next()
                    pats.append(self.parse_term())
                triggers.append((pats, _join(tstart, self.prev_span())))
                if self.at_sym("|"):
                    self.next()
                    continue
                break
            self.expect("sym", "]")
        self.expect("sym", ".")
        body = self.parse_formula()
        return RQuant(kind, binders, triggers, body, _join(t.span, body.span))

    def parse_binders(self) -> list[tuple[str, RTy, Span]]:
        binders: list[tuple[str, RTy, Span]] = []
        while True:
            names = [self.expect("ident")]
            # absorb ', ident' while the ident is followed by ',' or ':'
            # (otherwise the comma starts the next name : type group)
            while (
                self.at_sym(",")
                and self.at("ident", k=1)
                and (self.at_sym(",", k=2) or self.at_sym(":", k=2))
            ):
                self.next()
                names.append(self.expect("ident"))
            self.expect("sym", ":")
            ty = self.parse_ty()
            for tok in names:
                binders.append((tok.text, ty, tok.span))
            if self.at_sym(","):
                self.next()
                continue
            break
        return binders

    def parse_atom(self) -> RFormula:
        t = self.peek()
        if t.kind == "kw" and t.text in ("true", "false"):
            # 'true = x' style comparisons go through the term route
            if not (self.peek(1).kind == "sym" and self.peek(1).text in COMPARISONS):
                self.next()
                return RBoolF(t.text == "true", t.span)
        if self.at_sym("("):
            save = self.pos
            try:
                return self.finish_comparison_or_term()
            except ParseError:
                self.pos = save
            self.next()  # '('
            f = self.parse_formula()
            self.expect("sym", ")")
            return f
        return self.finish_comparison_or_term()

    def finish_comparison_or_term(self) -> RFormula:
        lhs = self.parse_term()
        t = self.peek()
        if t.kind == "sym" and t.text in COMPARISONS:
            self.next()
            rhs = self.parse_term()
            span = _join(lhs.span, rhs.span)
            op = t.text
            if op == ">":
                return RCompare("<", rhs, lhs, span)
            if op == ">=":
                return RCompare("<=", rhs, lhs, span)
            return RCompare(op, lhs, rhs, span)
        return RTermAtom(lhs, lhs.span)

    # -- terms --

    def parse_term(self) -> RTerm:
        left = self.parse_mul()
        while self.at_sym("+") or self.at_sym("-"):
            op = self.next().text
            right = self.parse_mul()
            left = RArith(op, left, right, _join(left.span, right.span))
        return left

    def parse_mul(self) -> RTerm:
        left = self.parse_unary()
        while self.at_sym("*"):
            self.next()
            right = self.parse_unary()
            left = RArith("*", left, right, _join(left.span, right.span))
        return left

    def parse_unary(self) -> RTerm:
        if self.at_sym("-"):
            start = self.next().span
            operand = self.parse_unary()
            span = _join(start, operand.span)
            if isinstance(operand, RInt):
                return RInt(-operand.value, span)
            return RArith("-", RInt(0, start), operand, span)
        return self.parse_primary()

    def parse_primary(self) -> RTerm:
        t = self.peek()
        if t.kind == "int":
            self.next()
            return RInt(int(t.text), t.span)
        if t.kind == "kw" and t.text in ("true", "false"):
            self.next()
            return RBool(t.text == "true", t.span)
        if t.kind == "ident":
            self.next()
            if self.at_sym("("):
                self.next()
                args = [self.parse_term()]
                while self.at_sym(","):
                    self.next()
                    args.append(self.parse_term())
                self.expect("sym", ")")
                return RApp(t.text, args, _join(t.span, self.prev_span()))
            return RIdent(t.text, t.span)
        if self.at_sym("("):
            self.next()
            inner = self.parse_term()
            self.expect("sym", ")")
            return inner
        raise ParseError(f"expected a term, got {t.text or t.kind!r}", t.span)


def parse(text: str) -> list[RDecl]:
    """Parse a whole problem file. Raises ParseError on the first error."""
    return Parser(text).parse_file()


def parse_terms(text: str) -> list[RTerm]:
    """Parse a comma-separated term list (trigger and instance entry)."""
    return Parser(text).parse_term_list()
