"""Annotated syntax trees: per-node ids, polarity, pruning, dependencies.

Every declaration, formula, term and trigger node is wrapped in a Node
carrying a preorder id, its source span, a polarity and a prune state.
All interaction (pruning, trigger edits, unsat-core display, session
replay) addresses nodes through these ids.

Stripping produces the solver's input: fresh node trees in which pruned
positions are replaced by the neutral element of their parent connective
and the obvious simplifications are applied. Original ids survive into
the stripped tree so that clause provenance can be traced back.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Iterator, Optional, Union

from .errors import CannotPruneGoal, NotADeclaration, NotPrunable
from .syntax import (
    And,
    App,
    Axiom,
    BoolForm,
    Compare,
    Decl,
    Exists,
    Forall,
    Formula,
    Goal,
    Iff,
    Implies,
    LogicDecl,
    NO_SPAN,
    Not,
    Or,
    PredAtom,
    Span,
    Term,
    Trigger,
    Ty,
    TyApp,
    TypeDecl,
    decl_declared_symbols,
    decl_display_name,
    term_children,
)


class Polarity(Enum):
    POS = "pos"
    NEG = "neg"
    BOTH = "both"


class PruneState(Enum):
    ACTIVE = "active"
    PRUNED_SOUND = "pruned"
    PRUNED_UNSOUND = "pruned-unsound"


def flip(p: Polarity) -> Polarity:
    if p == Polarity.POS:
        return Polarity.NEG
    if p == Polarity.NEG:
        return Polarity.POS
    return Polarity.BOTH


# structural roles; prunable units are a fixed subset of these
ROLE_DECL = "decl"
ROLE_DECL_FORMULA = "decl-formula"
ROLE_AND_CHILD = "and-child"
ROLE_OR_CHILD = "or-child"
ROLE_IMPLIES_LEFT = "implies-left"
ROLE_IMPLIES_RIGHT = "implies-right"
ROLE_IFF_LEFT = "iff-left"
ROLE_IFF_RIGHT = "iff-right"
ROLE_NOT_BODY = "not-body"
ROLE_QUANT_BODY = "quant-body"
ROLE_TRIGGER = "trigger"
ROLE_TRIGGER_PATTERN = "trigger-pattern"
ROLE_ATOM_TERM = "atom-term"
ROLE_TERM_ARG = "term-arg"

PRUNABLE_ROLES = {
    ROLE_DECL,
    ROLE_AND_CHILD,
    ROLE_OR_CHILD,
    ROLE_IMPLIES_LEFT,
    ROLE_IMPLIES_RIGHT,
    ROLE_QUANT_BODY,
    ROLE_TRIGGER,
}

# role -> replacement when pruned; True/False mean the boolean constants
_REPLACEMENT = {
    ROLE_AND_CHILD: True,
    ROLE_IMPLIES_LEFT: True,
    ROLE_QUANT_BODY: True,
    ROLE_OR_CHILD: False,
    ROLE_IMPLIES_RIGHT: False,
}

Content = Union[Decl, Formula, Term, Trigger]


@dataclass
class Node:
    id: int
    kind: str  # 'decl' | 'formula' | 'term' | 'trigger'
    role: str
    content: Content
    span: Span
    polarity: Polarity
    children: list["Node"] = field(default_factory=list)
    prune_state: PruneState = PruneState.ACTIVE
    core_hits: int = 0
    parent_id: Optional[int] = None
    decl_id: int = -1

    def subtree(self) -> Iterator["Node"]:
        yield self
        for c in self.children:
            yield from c.subtree()


@dataclass
class PruneReport:
    new_state: PruneState
    soundness: str  # 'sound' | 'unsound'
    closure: list[int]


@dataclass
class DependencyGraph:
    uses: dict[int, set[tuple[str, str]]]
    declares: dict[tuple[str, str], int]


class AnnotatedAst:
    def __init__(self, source: str = ""):
        self.source = source
        self.nodes: dict[int, Node] = {}
        self.roots: list[Node] = []
        self._next_id = 0

    def node(self, node_id: int) -> Node:
        if node_id not in self.nodes:
            raise KeyError(f"no node with id {node_id}")
        return self.nodes[node_id]

    def max_id(self) -> int:
        return self._next_id - 1

    def fresh_id(self) -> int:
        i = self._next_id
        self._next_id += 1
        return i

    def register(self, n: Node) -> Node:
        self.nodes[n.id] = n
        return n

    def goal_root(self) -> Optional[Node]:
        for r in self.roots:
            if isinstance(r.content, Goal):
                return r
        return None

    # -- construction ------------------------------------------------------

    def _wrap_term(self, t: Term, role: str, pol: Polarity, decl_id: int, parent: int) -> Node:
        n = Node(self.fresh_id(), "term", role, t, t.span, pol, parent_id=parent, decl_id=decl_id)
        self.register(n)
        n.children = [
            self._wrap_term(c, ROLE_TERM_ARG, pol, decl_id, n.id) for c in term_children(t)
        ]
        return n

    def _wrap_trigger(self, tr: Trigger, pol: Polarity, decl_id: int, parent: int) -> Node:
        n = Node(self.fresh_id(), "trigger", ROLE_TRIGGER, tr, tr.span, pol, parent_id=parent, decl_id=decl_id)
        self.register(n)
        n.children = [
            self._wrap_term(p, ROLE_TRIGGER_PATTERN, pol, decl_id, n.id) for p in tr.patterns
        ]
        return n

    def _wrap_formula(self, f: Formula, role: str, pol: Polarity, decl_id: int, parent: int) -> Node:
        n = Node(self.fresh_id(), "formula", role, f, f.span, pol, parent_id=parent, decl_id=decl_id)
        self.register(n)
        ch = n.children
        if isinstance(f, PredAtom):
            ch.append(self._wrap_term(f.app, ROLE_ATOM_TERM, pol, decl_id, n.id))
        elif isinstance(f, Compare):
            ch.append(self._wrap_term(f.lhs, ROLE_ATOM_TERM, pol, decl_id, n.id))
            ch.append(self._wrap_term(f.rhs, ROLE_ATOM_TERM, pol, decl_id, n.id))
        elif isinstance(f, BoolForm):
            pass
        elif isinstance(f, Not):
            ch.append(self._wrap_formula(f.body, ROLE_NOT_BODY, flip(pol), decl_id, n.id))
        elif isinstance(f, And):
            for g in f.items:
                ch.append(self._wrap_formula(g, ROLE_AND_CHILD, pol, decl_id, n.id))
        elif isinstance(f, Or):
            for g in f.items:
                ch.append(self._wrap_formula(g, ROLE_OR_CHILD, pol, decl_id, n.id))
        elif isinstance(f, Implies):
            ch.append(self._wrap_formula(f.lhs, ROLE_IMPLIES_LEFT, flip(pol), decl_id, n.id))
            ch.append(self._wrap_formula(f.rhs, ROLE_IMPLIES_RIGHT, pol, decl_id, n.id))
        elif isinstance(f, Iff):
            ch.append(self._wrap_formula(f.lhs, ROLE_IFF_LEFT, Polarity.BOTH, decl_id, n.id))
            ch.append(self._wrap_formula(f.rhs, ROLE_IFF_RIGHT, Polarity.BOTH, decl_id, n.id))
        else:
            assert isinstance(f, (Forall, Exists))
            for tr in f.triggers:
                ch.append(self._wrap_trigger(tr, pol, decl_id, n.id))
            ch.append(self._wrap_formula(f.body, ROLE_QUANT_BODY, pol, decl_id, n.id))
        return n

    def add_decl(self, d: Decl) -> Node:
        """Wrap a declaration with fresh ids and append it to the roots."""
        if isinstance(d, Goal):
            pol = Polarity.POS
        else:
            pol = Polarity.NEG
        n = Node(self.fresh_id(), "decl", ROLE_DECL, d, d.span, pol)
        n.decl_id = n.id
        self.register(n)
        if isinstance(d, (Axiom, Goal)):
            n.children.append(self._wrap_formula(d.formula, ROLE_DECL_FORMULA, pol, n.id, n.id))
        self.roots.append(n)
        return n

    def add_trigger(self, quant_id: int, tr: Trigger, replace: bool = False) -> list[Node]:
        """Attach a trigger to a quantifier node, new nodes get fresh ids."""
        qn = self.node(quant_id)
        if not isinstance(qn.content, (Forall, Exists)):
            raise NotPrunable(quant_id)
        if replace:
            for c in list(qn.children):
                if c.kind == "trigger":
                    self._remove_subtree(c)
                    qn.children.remove(c)
            qn.content.triggers.clear()
        tn = self._wrap_trigger(tr, qn.polarity, qn.decl_id, qn.id)
        body = qn.children[-1] if qn.children else None
        # keep the body node last (source order: triggers before the dot)
        if body is not None and body.role == ROLE_QUANT_BODY:
            qn.children.insert(len(qn.children) - 1, tn)
        else:
            qn.children.append(tn)
        qn.content.triggers.append(tr)
        return [tn]

    def _remove_subtree(self, n: Node) -> None:
        for s in n.subtree():
            self.nodes.pop(s.id, None)


def annotate(decls: list[Decl], source: str = "") -> AnnotatedAst:
    """Wrap typed declarations; ids are depth-first preorder starting at 0."""
    ast = AnnotatedAst(source)
    for d in decls:
        ast.add_decl(d)
    return ast


# ---------------------------------------------------------------------------
# Pruning


def toggle_prune(ast: AnnotatedAst, node_id: int) -> PruneReport:
    """Flip the prune state of a prunable unit.

    Prunable units: top-level declarations, direct children of and/or,
    either side of an implication, a quantified body, and trigger
    annotations. Pruning replaces the node by the neutral element of its
    parent connective; the prune is sound when that replacement cannot
    turn an invalid goal valid, otherwise it is flagged unsound.
    """
    n = ast.node(node_id)
    if n.role not in PRUNABLE_ROLES:
        raise NotPrunable(node_id)
    if n.role == ROLE_DECL and isinstance(n.content, Goal):
        raise CannotPruneGoal()

    if n.role in (ROLE_DECL, ROLE_TRIGGER):
        sound = True
    else:
        replacement = _REPLACEMENT[n.role]
        if n.polarity == Polarity.BOTH:
            sound = False
        elif replacement is True:
            sound = n.polarity == Polarity.NEG
        else:
            sound = n.polarity == Polarity.POS

    if n.prune_state == PruneState.ACTIVE:
        n.prune_state = PruneState.PRUNED_SOUND if sound else PruneState.PRUNED_UNSOUND
    else:
        n.prune_state = PruneState.ACTIVE
    closure = [s.id for s in n.subtree()]
    return PruneReport(n.prune_state, "sound" if sound else "unsound", closure)


# ---------------------------------------------------------------------------
# Stripping


def _copy_term_node(n: Node) -> Node:
    c = Node(n.id, n.kind, n.role, n.content, n.span, n.polarity, decl_id=n.decl_id)
    c.children = [_copy_term_node(x) for x in n.children]
    return c


def _mk(n: Node, content: Content, children: list[Node]) -> Node:
    c = Node(n.id, n.kind, n.role, content, n.span, n.polarity, decl_id=n.decl_id)
    c.children = children
    return c


def _active(n: Node) -> bool:
    return n.prune_state == PruneState.ACTIVE


def _rebuild_formula(n: Node) -> Node:
    f = n.content
    if isinstance(f, (PredAtom, Compare, BoolForm)):
        return _mk(n, f, [_copy_term_node(c) for c in n.children])
    if isinstance(f, Not):
        body = _rebuild_formula(n.children[0])
        return _mk(n, Not(body.content, f.span), [body])
    if isinstance(f, (And, Or)):
        kept = [_rebuild_formula(c) for c in n.children if _active(c)]
        if not kept:
            return _mk(n, BoolForm(isinstance(f, And), f.span), [])
        if len(kept) == 1:
            return kept[0]
        cls = And if isinstance(f, And) else Or
        return _mk(n, cls([k.content for k in kept], f.span), kept)
    if isinstance(f, Implies):
        ln, rn = n.children
        if _active(ln) and _active(rn):
            l2, r2 = _rebuild_formula(ln), _rebuild_formula(rn)
            return _mk(n, Implies(l2.content, r2.content, f.span), [l2, r2])
        if not _active(ln) and not _active(rn):
            return _mk(n, BoolForm(False, f.span), [])
        if not _active(ln):
            return _rebuild_formula(rn)
        l2 = _rebuild_formula(ln)
        false_node = _mk(rn, BoolForm(False, rn.span), [])
        return _mk(n, Implies(l2.content, false_node.content, f.span), [l2, false_node])
    if isinstance(f, Iff):
        l2 = _rebuild_formula(n.children[0])
        r2 = _rebuild_formula(n.children[1])
        return _mk(n, Iff(l2.content, r2.content, f.span), [l2, r2])
    assert isinstance(f, (Forall, Exists))
    body_node = n.children[-1]
    if not _active(body_node):
        return _mk(n, BoolForm(True, f.span), [])
    trig_nodes = [c for c in n.children[:-1] if c.kind == "trigger" and _active(c)]
    trig_copies = [
        _mk(t, t.content, [_copy_term_node(p) for p in t.children]) for t in trig_nodes
    ]
    body = _rebuild_formula(body_node)
    cls = Forall if isinstance(f, Forall) else Exists
    content = cls(list(f.binders), [t.content for t in trig_copies], body.content, f.span)
    return _mk(n, content, trig_copies + [body])


def strip_nodes(ast: AnnotatedAst) -> list[Node]:
    """Stripped declaration trees: pruned parts removed, ids preserved."""
    out = []
    for root in ast.roots:
        if not _active(root):
            continue
        d = root.content
        if isinstance(d, (TypeDecl, LogicDecl)):
            out.append(_mk(root, d, []))
            continue
        body = _rebuild_formula(root.children[0])
        cls = Axiom if isinstance(d, Axiom) else Goal
        out.append(_mk(root, cls(d.name, body.content, d.span), [body]))
    return out


def strip(ast: AnnotatedAst) -> list[Decl]:
    """Plain declarations as the solver consumes them."""
    return [n.content for n in strip_nodes(ast)]


# ---------------------------------------------------------------------------
# Dependencies


def _ty_ctors(ty: Ty, out: set[tuple[str, str]]) -> None:
    if isinstance(ty, TyApp):
        out.add(("type", ty.ctor))
        for a in ty.args:
            _ty_ctors(a, out)


def _formula_uses(f: Formula, bound: set[str], out: set[tuple[str, str]]) -> None:
    def term_uses(t: Term) -> None:
        if isinstance(t, App):
            out.add(("logic", t.sym))
        for c in term_children(t):
            term_uses(c)

    if isinstance(f, PredAtom):
        term_uses(f.app)
    elif isinstance(f, Compare):
        term_uses(f.lhs)
        term_uses(f.rhs)
    elif isinstance(f, Not):
        _formula_uses(f.body, bound, out)
    elif isinstance(f, (And, Or)):
        for g in f.items:
            _formula_uses(g, bound, out)
    elif isinstance(f, (Implies, Iff)):
        _formula_uses(f.lhs, bound, out)
        _formula_uses(f.rhs, bound, out)
    elif isinstance(f, (Forall, Exists)):
        for _, ty in f.binders:
            _ty_ctors(ty, out)
        for tr in f.triggers:
            for p in tr.patterns:
                term_uses(p)
        _formula_uses(f.body, bound | {n for n, _ in f.binders}, out)


def build_dependencies(ast: AnnotatedAst) -> DependencyGraph:
    uses: dict[int, set[tuple[str, str]]] = {}
    declares: dict[tuple[str, str], int] = {}
    for root in ast.roots:
        d = root.content
        u: set[tuple[str, str]] = set()
        if isinstance(d, LogicDecl):
            for t in list(d.arg_tys) + [d.result]:
                _ty_ctors(t, u)
        elif isinstance(d, (Axiom, Goal)):
            _formula_uses(d.formula, set(), u)
        for key in decl_declared_symbols(d):
            declares[key] = root.id
        uses[root.id] = u
    return DependencyGraph(uses, declares)


def dependency_closure(ast: AnnotatedAst, decl_id: int) -> set[int]:
    """decl_id plus every top-level declaration transitively using one of
    its symbols."""
    root = ast.node(decl_id)
    if not isinstance(root.content, (TypeDecl, LogicDecl)):
        raise NotADeclaration(decl_id)
    graph = build_dependencies(ast)
    closure = {decl_id}
    syms = set(decl_declared_symbols(root.content))
    changed = True
    while changed:
        changed = False
        for r in ast.roots:
            if r.id in closure:
                continue
            if graph.uses.get(r.id, set()) & syms:
                closure.add(r.id)
                syms.update(decl_declared_symbols(r.content))
                changed = True
    return closure


def requirements(ast: AnnotatedAst, decl_ids: set[int]) -> set[int]:
    """Declarations needed by the given ones: transitively, the declaring
    declaration of every symbol they use."""
    graph = build_dependencies(ast)
    needed = set(decl_ids)
    work = list(decl_ids)
    while work:
        d = work.pop()
        for key in graph.uses.get(d, set()):
            dep = graph.declares.get(key)
            if dep is not None and dep not in needed:
                needed.add(dep)
                work.append(dep)
    return needed
