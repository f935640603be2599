"""Propositions of the object logic.

Connectives are reified so the interpreter and provers can dispatch on
structure.  Atoms wrap bool-sorted terms.  Equality and hashing are
alpha-invariant: two propositions differing only in bound-variable names
compare equal.
"""

from __future__ import annotations

from dataclasses import dataclass

from .terms import (
    BOOL,
    App,
    Const,
    KernelError,
    Sort,
    Term,
    Var,
    sort_of,
    subst_term,
    term_consts,
    term_vars,
)


class _PropBase:
    # alpha-key and hash are memoized on first use; props are immutable
    __slots__ = ("_akey", "_ahash")

    def __eq__(self, other: object) -> bool:
        if self is other:
            return True
        if not isinstance(other, _PropBase):
            return NotImplemented
        return alpha_key(self) == alpha_key(other)  # type: ignore[arg-type]

    def __hash__(self) -> int:
        try:
            return self._ahash
        except AttributeError:
            h = hash(alpha_key(self))  # type: ignore[arg-type]
            object.__setattr__(self, "_ahash", h)
            return h


@dataclass(frozen=True, slots=True, eq=False)
class Atom(_PropBase):
    term: Term

    def __post_init__(self) -> None:
        if sort_of(self.term) != BOOL:
            raise KernelError(f"atom must be bool-sorted, got {sort_of(self.term)}")


@dataclass(frozen=True, slots=True, eq=False)
class Eq(_PropBase):
    lhs: Term
    rhs: Term

    def __post_init__(self) -> None:
        if sort_of(self.lhs) != sort_of(self.rhs):
            raise KernelError(
                f"equation joins sorts {sort_of(self.lhs)} and {sort_of(self.rhs)}"
            )


@dataclass(frozen=True, slots=True, eq=False)
class Not(_PropBase):
    body: Prop


@dataclass(frozen=True, slots=True, eq=False)
class And(_PropBase):
    left: Prop
    right: Prop


@dataclass(frozen=True, slots=True, eq=False)
class Or(_PropBase):
    left: Prop
    right: Prop


@dataclass(frozen=True, slots=True, eq=False)
class Implies(_PropBase):
    left: Prop
    right: Prop


@dataclass(frozen=True, slots=True, eq=False)
class Iff(_PropBase):
    left: Prop
    right: Prop


@dataclass(frozen=True, slots=True, eq=False)
class Forall(_PropBase):
    var: str
    sort: Sort
    body: Prop


@dataclass(frozen=True, slots=True, eq=False)
class Exists(_PropBase):
    var: str
    sort: Sort
    body: Prop


@dataclass(frozen=True, slots=True, eq=False)
class TrueP(_PropBase):
    pass


@dataclass(frozen=True, slots=True, eq=False)
class FalseP(_PropBase):
    pass


Prop = (
    Atom | Eq | Not | And | Or | Implies | Iff | Forall | Exists | TrueP | FalseP
)

TRUE = TrueP()
FALSE = FalseP()

_BINARY = {And: "&", Or: "|", Implies: "->", Iff: "<->"}


def _term_key(t: Term, bound: dict[str, int]) -> tuple:
    match t:
        case Var(name, sort):
            if name in bound:
                return ("b", bound[name], str(sort))
            return ("v", name, str(sort))
        case Const(name, sig):
            return ("c", name, str(sig))
        case App(fn, args):
            return ("a", fn.name, tuple(_term_key(a, bound) for a in args))
    raise KernelError(f"not a term: {t!r}")


def _alpha_key(p: Prop, bound: dict[str, int], depth: int) -> tuple:
    match p:
        case Atom(term):
            return ("atom", _term_key(term, bound))
        case Eq(lhs, rhs):
            return ("eq", _term_key(lhs, bound), _term_key(rhs, bound))
        case Not(body):
            return ("not", _alpha_key(body, bound, depth))
        case And(a, b) | Or(a, b) | Implies(a, b) | Iff(a, b):
            tag = _BINARY[type(p)]
            return (tag, _alpha_key(a, bound, depth), _alpha_key(b, bound, depth))
        case Forall(v, s, body) | Exists(v, s, body):
            tag = "all" if isinstance(p, Forall) else "ex"
            inner = dict(bound)
            inner[v] = depth
            return (tag, str(s), _alpha_key(body, inner, depth + 1))
        case TrueP():
            return ("true",)
        case FalseP():
            return ("false",)
    raise KernelError(f"not a proposition: {p!r}")


def alpha_key(p: Prop) -> tuple:
    """Canonical structural key; identical for alpha-equivalent props."""
    try:
        return p._akey  # type: ignore[union-attr]
    except AttributeError:
        key = _alpha_key(p, {}, 0)
        object.__setattr__(p, "_akey", key)
        return key


def free_vars(p: Prop) -> set[Var]:
    match p:
        case Atom(term):
            return term_vars(term)
        case Eq(lhs, rhs):
            return term_vars(lhs) | term_vars(rhs)
        case Not(body):
            return free_vars(body)
        case And(a, b) | Or(a, b) | Implies(a, b) | Iff(a, b):
            return free_vars(a) | free_vars(b)
        case Forall(v, s, body) | Exists(v, s, body):
            return {x for x in free_vars(body) if x.name != v}
        case TrueP() | FalseP():
            return set()
    raise KernelError(f"not a proposition: {p!r}")


def prop_consts(p: Prop) -> set[str]:
    match p:
        case Atom(term):
            return term_consts(term)
        case Eq(lhs, rhs):
            return term_consts(lhs) | term_consts(rhs)
        case Not(body):
            return prop_consts(body)
        case And(a, b) | Or(a, b) | Implies(a, b) | Iff(a, b):
            return prop_consts(a) | prop_consts(b)
        case Forall(_, _, body) | Exists(_, _, body):
            return prop_consts(body)
        case TrueP() | FalseP():
            return set()
    raise KernelError(f"not a proposition: {p!r}")


def _fresh_name(base: str, avoid: set[str]) -> str:
    name = base
    while name in avoid:
        name += "'"
    return name


def subst_prop(p: Prop, mapping: dict[str, Term]) -> Prop:
    """Capture-avoiding substitution of term variables by name."""
    if not mapping:
        return p
    match p:
        case Atom(term):
            return Atom(subst_term(term, mapping))
        case Eq(lhs, rhs):
            return Eq(subst_term(lhs, mapping), subst_term(rhs, mapping))
        case Not(body):
            return Not(subst_prop(body, mapping))
        case And(a, b):
            return And(subst_prop(a, mapping), subst_prop(b, mapping))
        case Or(a, b):
            return Or(subst_prop(a, mapping), subst_prop(b, mapping))
        case Implies(a, b):
            return Implies(subst_prop(a, mapping), subst_prop(b, mapping))
        case Iff(a, b):
            return Iff(subst_prop(a, mapping), subst_prop(b, mapping))
        case Forall(v, s, body) | Exists(v, s, body):
            cls = Forall if isinstance(p, Forall) else Exists
            inner = {k: t for k, t in mapping.items() if k != v}
            if not inner:
                return p
            clashing = set()
            for t in inner.values():
                clashing |= {x.name for x in term_vars(t)}
            if v in clashing:
                avoid = clashing | {x.name for x in free_vars(body)}
                v2 = _fresh_name(v, avoid)
                body = subst_prop(body, {v: Var(v2, s)})
                v = v2
            return cls(v, s, subst_prop(body, inner))
        case TrueP() | FalseP():
            return p
    raise KernelError(f"not a proposition: {p!r}")


def strip_forall(p: Prop) -> tuple[list[tuple[str, Sort]], Prop]:
    binders: list[tuple[str, Sort]] = []
    while isinstance(p, Forall):
        binders.append((p.var, p.sort))
        p = p.body
    return binders, p


def strip_implies(p: Prop) -> tuple[list[Prop], Prop]:
    premises: list[Prop] = []
    while isinstance(p, Implies):
        premises.append(p.left)
        p = p.right
    return premises, p


def implies_chain(premises: list[Prop], conclusion: Prop) -> Prop:
    out = conclusion
    for prem in reversed(premises):
        out = Implies(prem, out)
    return out


def forall_close(binders: list[tuple[str, Sort]], body: Prop) -> Prop:
    out = body
    for name, sort in reversed(binders):
        out = Forall(name, sort, out)
    return out
