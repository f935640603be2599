"""First-order matching of rule schemas against propositions.

Schematic variables (``?``-prefixed) in the pattern bind to terms; a
bool-sorted schematic standing alone as an atom binds to a whole
proposition.  Matching is purely first-order: patterns that would need
higher-order unification simply fail to match.
"""

from __future__ import annotations

from .props import (
    And,
    Atom,
    Eq,
    Exists,
    FalseP,
    Forall,
    Iff,
    Implies,
    Not,
    Or,
    Prop,
    TrueP,
    free_vars,
    subst_prop,
)
from .terms import App, Const, KernelError, Term, Var, term_vars

Subst = dict[str, "Prop | Term"]


class NoMatch(Exception):
    """Signals non-applicability of a rule; not a failure."""


def match_term(pattern: Term, target: Term, subst: Subst, bound: set[str]) -> None:
    match pattern:
        case Var(name, sort) if name.startswith("?"):
            if any(v.name in bound for v in term_vars(target)):
                raise NoMatch(f"{name} would capture a bound variable")
            if name in subst:
                if subst[name] != target:
                    raise NoMatch(f"conflicting bindings for {name}")
                return
            if not isinstance(target, Var | Const | App):
                raise NoMatch(f"{name} cannot bind a proposition")
            from .terms import sort_of

            if sort_of(target) != sort:
                raise NoMatch(f"{name} expects sort {sort}")
            subst[name] = target
        case Var(name, sort):
            if not (isinstance(target, Var) and target.name == name and target.sort == sort):
                raise NoMatch(f"variable {name} does not match")
        case Const(name, _):
            if not (isinstance(target, Const) and target.name == name):
                raise NoMatch(f"constant {name} does not match")
        case App(fn, args):
            if not (isinstance(target, App) and target.fn.name == fn.name):
                raise NoMatch(f"application of {fn.name} does not match")
            if len(args) != len(target.args):
                raise NoMatch("arity mismatch")
            for p, t in zip(args, target.args):
                match_term(p, t, subst, bound)
        case _:
            raise KernelError(f"not a term pattern: {pattern!r}")


def match_prop(pattern: Prop, target: Prop, subst: Subst, bound: set[str] | None = None) -> None:
    bound = bound if bound is not None else set()
    match pattern:
        case Atom(Var(name, _)) if name.startswith("?"):
            # Bool schematic in atom position binds a whole proposition.
            if bound and any(v.name in bound for v in free_vars(target)):
                raise NoMatch(f"{name} would capture a bound variable")
            if name in subst:
                if subst[name] != target:
                    raise NoMatch(f"conflicting bindings for {name}")
                return
            subst[name] = target
        case Atom(pt):
            if not isinstance(target, Atom):
                raise NoMatch("expected an atom")
            match_term(pt, target.term, subst, bound)
        case Eq(pl, pr):
            if not isinstance(target, Eq):
                raise NoMatch("expected an equation")
            match_term(pl, target.lhs, subst, bound)
            match_term(pr, target.rhs, subst, bound)
        case Not(pb):
            if not isinstance(target, Not):
                raise NoMatch("expected a negation")
            match_prop(pb, target.body, subst, bound)
        case And(pa, pb) | Or(pa, pb) | Implies(pa, pb) | Iff(pa, pb):
            if type(target) is not type(pattern):
                raise NoMatch(f"expected {type(pattern).__name__}")
            match_prop(pa, target.left, subst, bound)  # type: ignore[union-attr]
            match_prop(pb, target.right, subst, bound)  # type: ignore[union-attr]
        case Forall(v, s, pb) | Exists(v, s, pb):
            if type(target) is not type(pattern):
                raise NoMatch(f"expected {type(pattern).__name__}")
            if s != target.sort:  # type: ignore[union-attr]
                raise NoMatch("binder sort mismatch")
            # Rename the target binder to the pattern's name, then match.
            body = subst_prop(target.body, {target.var: Var(v, s)})  # type: ignore[union-attr]
            match_prop(pb, body, subst, bound | {v})
        case TrueP() | FalseP():
            if type(target) is not type(pattern):
                raise NoMatch(f"expected {type(pattern).__name__}")
        case _:
            raise KernelError(f"not a proposition pattern: {pattern!r}")


def match_rule_conclusion(conclusion: Prop, goal: Prop) -> Subst | None:
    """First-order match of a rule conclusion against a goal.

    Returns the substitution, or None when the rule does not apply.
    """
    subst: Subst = {}
    try:
        match_prop(conclusion, goal, subst)
    except NoMatch:
        return None
    return subst


def apply_subst_term(t: Term, subst: Subst) -> Term:
    match t:
        case Var(name, _) if name.startswith("?"):
            if name in subst:
                val = subst[name]
                if not isinstance(val, Var | Const | App):
                    raise KernelError(f"{name} is bound to a proposition")
                return val
            return t
        case Var() | Const():
            return t
        case App(fn, args):
            return App(fn, tuple(apply_subst_term(a, subst) for a in args))
    raise KernelError(f"not a term: {t!r}")


def apply_subst_prop(p: Prop, subst: Subst) -> Prop:
    match p:
        case Atom(Var(name, _)) if name.startswith("?") and name in subst:
            val = subst[name]
            if isinstance(val, Var | Const | App):
                return Atom(val)
            return val
        case Atom(t):
            return Atom(apply_subst_term(t, subst))
        case Eq(l, r):
            return Eq(apply_subst_term(l, subst), apply_subst_term(r, subst))
        case Not(b):
            return Not(apply_subst_prop(b, subst))
        case And(a, b):
            return And(apply_subst_prop(a, subst), apply_subst_prop(b, subst))
        case Or(a, b):
            return Or(apply_subst_prop(a, subst), apply_subst_prop(b, subst))
        case Implies(a, b):
            return Implies(apply_subst_prop(a, subst), apply_subst_prop(b, subst))
        case Iff(a, b):
            return Iff(apply_subst_prop(a, subst), apply_subst_prop(b, subst))
        case Forall(v, s, b):
            return Forall(v, s, apply_subst_prop(b, subst))
        case Exists(v, s, b):
            return Exists(v, s, apply_subst_prop(b, subst))
        case TrueP() | FalseP():
            return p
    raise KernelError(f"not a proposition: {p!r}")
