"""Labeled proof-state trees and their navigation.

A state is a tree whose leaves are open subgoals and whose inner nodes
carry context labels shared by their subtrees.  Every public transition
keeps the automatic-reduction invariant: no inner node has fewer than
two children.  Trees are immutable; operations return new trees, so
snapshots for rollback are free.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Callable

from .kernel import Prop, Sort, Thm, free_vars
from .syntax.terms import Notation, render_prop


class ProofStateError(Exception):
    pass


@dataclass(frozen=True, slots=True)
class Context:
    """The paper's (theta, gamma) pair: fixed variables and named hypotheses."""

    variables: tuple[tuple[str, Sort], ...] = ()
    hypotheses: tuple[tuple[str, Prop], ...] = ()

    def var_names(self) -> set[str]:
        return {n for n, _ in self.variables}

    def hyp_names(self) -> set[str]:
        return {n for n, _ in self.hypotheses}

    def hyp_props(self) -> list[Prop]:
        return [p for _, p in self.hypotheses]

    def lookup(self, name: str) -> Prop | None:
        for n, p in self.hypotheses:
            if n == name:
                return p
        return None

    def is_empty(self) -> bool:
        return not self.variables and not self.hypotheses


EMPTY_CONTEXT = Context()


def merge_contexts(outer: Context, inner: Context) -> Context:
    """Union with outer precedence; clashing inner hypothesis names get primes."""
    variables = list(outer.variables)
    var_names = {n for n, _ in variables}
    for n, s in inner.variables:
        if n in var_names:
            existing = dict(variables)[n]
            if existing != s:
                raise ProofStateError(f"variable {n} fixed at two sorts")
            continue
        variables.append((n, s))
        var_names.add(n)

    hyps = list(outer.hypotheses)
    existing = dict(hyps)
    for n, p in inner.hypotheses:
        name = n
        while name in existing and existing[name] != p:
            name += "'"
        if existing.get(name) == p:
            continue  # exact duplicate folds away
        hyps.append((name, p))
        existing[name] = p
    return Context(tuple(variables), tuple(hyps))


@dataclass(frozen=True, slots=True)
class Leaf:
    context: Context
    goal: Prop


@dataclass(frozen=True, slots=True)
class Node:
    label: Context
    children: tuple["ProofTree", ...]


ProofTree = Leaf | Node


@dataclass(frozen=True, slots=True)
class CursorTarget:
    """Where the next transition applies."""

    kind: str  # "leaf" | "node"
    path: tuple[int, ...]


def auto_reduce(t: ProofTree) -> ProofTree:
    """Collapse single-child nodes by merging labels, bottom-up."""
    if isinstance(t, Leaf):
        return t
    children = tuple(auto_reduce(c) for c in t.children)
    if len(children) == 1:
        child = children[0]
        if isinstance(child, Leaf):
            return Leaf(merge_contexts(t.label, child.context), child.goal)
        return Node(merge_contexts(t.label, child.label), child.children)
    return Node(t.label, children)


def leftmost_leaf(t: ProofTree) -> tuple[tuple[int, ...], Context, Leaf]:
    """Depth-first first leaf with its accumulated context."""
    path: list[int] = []
    acc = EMPTY_CONTEXT
    while isinstance(t, Node):
        acc = merge_contexts(acc, t.label)
        path.append(0)
        t = t.children[0]
    acc = merge_contexts(acc, t.context)
    return tuple(path), acc, t


def leaf_count(t: ProofTree) -> int:
    if isinstance(t, Leaf):
        return 1
    return sum(leaf_count(c) for c in t.children)


def all_leaves(t: ProofTree) -> list[tuple[tuple[int, ...], Context, Leaf]]:
    out: list[tuple[tuple[int, ...], Context, Leaf]] = []

    def walk(s: ProofTree, path: tuple[int, ...], acc: Context) -> None:
        if isinstance(s, Leaf):
            out.append((path, merge_contexts(acc, s.context), s))
            return
        acc2 = merge_contexts(acc, s.label)
        for i, c in enumerate(s.children):
            walk(c, path + (i,), acc2)

    walk(t, (), EMPTY_CONTEXT)
    return out


def replace_leftmost_leaf(t: ProofTree, replacement: ProofTree) -> ProofTree:
    """Swap the leftmost leaf for a subtree; result is auto-reduced."""

    def walk(s: ProofTree) -> ProofTree:
        if isinstance(s, Leaf):
            return replacement
        return Node(s.label, (walk(s.children[0]),) + s.children[1:])

    return auto_reduce(walk(t))


ALL_CLOSED = object()


def close_leftmost_leaf(t: ProofTree):
    """Remove the leftmost leaf; ALL_CLOSED when the tree empties."""
    if isinstance(t, Leaf):
        return ALL_CLOSED

    def walk(s: Node) -> ProofTree | None:
        first = s.children[0]
        if isinstance(first, Leaf):
            rest = s.children[1:]
        else:
            reduced = walk(first)
            rest = ((reduced,) if reduced is not None else ()) + s.children[1:]
        if not rest:
            return None
        return Node(s.label, rest)

    out = walk(t)
    if out is None:
        return ALL_CLOSED
    return auto_reduce(out)


def check_invariant(t: ProofTree) -> None:
    """Every inner node must have two or more children."""
    if isinstance(t, Leaf):
        return
    if len(t.children) < 2:
        raise ProofStateError("node with fewer than two children")
    for c in t.children:
        check_invariant(c)


def structure_key(t: ProofTree) -> tuple:
    """Hashable full-structure key, for locality checks in tests."""
    if isinstance(t, Leaf):
        return (
            "leaf",
            tuple((n, str(s)) for n, s in t.context.variables),
            tuple((n, p) for n, p in t.context.hypotheses),
            t.goal,
        )
    return (
        "node",
        tuple((n, str(s)) for n, s in t.label.variables),
        tuple((n, p) for n, p in t.label.hypotheses),
        tuple(structure_key(c) for c in t.children),
    )


# -- calculation chains -------------------------------------------------------


@dataclass(frozen=True, slots=True)
class CalcChain:
    """a1 R a2 R ... R an over a transitive relation family."""

    relation: str  # relation symbol of the composed fact
    terms: tuple  # n+1 terms for n facts
    facts: tuple[Thm, ...]
    composed: Thm | None  # present iff len(facts) >= 2

    def tail(self):
        return self.terms[-1]


# -- certificate frames -------------------------------------------------------


@dataclass(frozen=True, slots=True)
class Frame:
    """A pending composition on the leftmost spine.

    ``combine`` receives the theorems of all ``total`` children in
    left-to-right order once they are closed and yields the theorem of
    the node's own obligation.
    """

    total: int
    closed: tuple[Thm, ...]
    combine: Callable[[list[Thm]], Thm]
    tag: str = ""


# -- the full machine state ---------------------------------------------------


@dataclass(frozen=True, slots=True)
class ProofState:
    theory_name: str
    goal: Prop
    tree: ProofTree | None
    completed: Thm | None
    frames: tuple[Frame, ...] = ()
    chains: tuple[CalcChain, ...] = ()
    calculation: tuple[Prop, Thm] | None = None
    abbrevs: tuple[tuple[str, str], ...] = ()
    notations: tuple[Notation, ...] = ()
    config: tuple[tuple[str, str], ...] = ()
    opened: tuple[str, ...] = ()
    hyp_counter: int = 0
    fact_counter: int = 0

    @property
    def is_completed(self) -> bool:
        return self.completed is not None

    def config_get(self, key: str, default: str | None = None) -> str | None:
        for k, v in self.config:
            if k == key:
                return v
        return default


def initial_state(theory_name: str, goal: Prop) -> ProofState:
    if any(not v.is_schematic for v in free_vars(goal)):
        names = sorted(v.name for v in free_vars(goal))
        raise ProofStateError(f"goal has free variables: {', '.join(names)}")
    if any(v.is_schematic for v in free_vars(goal)):
        raise ProofStateError("goal contains schematic variables")
    return ProofState(
        theory_name=theory_name,
        goal=goal,
        tree=Leaf(EMPTY_CONTEXT, goal),
        completed=None,
    )


# -- serialization (state format v1) ------------------------------------------

STATE_FORMAT_VERSION = 1


def _render_context(ctx: Context) -> str:
    vars_part = ", ".join(f"{n}: {s}" for n, s in ctx.variables)
    hyps_part = ", ".join(f'{n}: "{render_prop(p)}"' for n, p in ctx.hypotheses)
    return f"[{vars_part} | {hyps_part}]"


def serialize_tree(t: ProofTree, indent: int = 0) -> list[str]:
    pad = "  " * indent
    if isinstance(t, Leaf):
        return [f'{pad}leaf {_render_context(t.context)} |- "{render_prop(t.goal)}"']
    lines = [f"{pad}node {_render_context(t.label)}"]
    for c in t.children:
        lines.extend(serialize_tree(c, indent + 1))
    return lines


def serialize_state(state: ProofState) -> str:
    lines = [f"proofstate v{STATE_FORMAT_VERSION} theory={state.theory_name}"]
    if state.is_completed:
        lines.append(f'completed "{render_prop(state.goal)}"')
    else:
        assert state.tree is not None
        lines.extend(serialize_tree(state.tree))
    return "\n".join(lines) + "\n"
