"""Sorts and first-order terms.

Terms are immutable values: variables, constants with a fixed signature,
and applications.  Well-sortedness is enforced at construction time, so
any term reachable from public constructors is well-sorted.
"""

from __future__ import annotations

from dataclasses import dataclass, field


class KernelError(Exception):
    """Raised when a kernel-level side condition is violated."""


@dataclass(frozen=True, slots=True)
class Sort:
    name: str
    params: tuple[Sort, ...] = ()

    def __str__(self) -> str:
        if not self.params:
            return self.name
        return f"{self.name}({', '.join(str(p) for p in self.params)})"


BOOL = Sort("bool")


@dataclass(frozen=True, slots=True)
class ConstSig:
    """Argument sorts and result sort of a constant."""

    args: tuple[Sort, ...]
    result: Sort

    def __str__(self) -> str:
        if not self.args:
            return str(self.result)
        return " * ".join(str(a) for a in self.args) + " -> " + str(self.result)


@dataclass(frozen=True, slots=True)
class Var:
    name: str
    sort: Sort

    @property
    def is_schematic(self) -> bool:
        return self.name.startswith("?")


@dataclass(frozen=True, slots=True)
class Const:
    name: str
    sig: ConstSig


@dataclass(frozen=True, slots=True)
class App:
    fn: Const
    args: tuple[Term, ...] = field(default=())

    def __post_init__(self) -> None:
        if len(self.args) != len(self.fn.sig.args):
            raise KernelError(
                f"constant {self.fn.name} expects {len(self.fn.sig.args)} "
                f"arguments, got {len(self.args)}"
            )
        for i, (arg, want) in enumerate(zip(self.args, self.fn.sig.args)):
            got = sort_of(arg)
            if got != want:
                raise KernelError(
                    f"argument {i + 1} of {self.fn.name} has sort {got}, "
                    f"expected {want}"
                )


Term = Var | Const | App


def sort_of(t: Term) -> Sort:
    match t:
        case Var(_, sort):
            return sort
        case Const(_, sig):
            if sig.args:
                raise KernelError(f"constant {t.name} used without arguments")
            return sig.result
        case App(fn, _):
            return fn.sig.result
    raise KernelError(f"not a term: {t!r}")


def term_vars(t: Term) -> set[Var]:
    match t:
        case Var():
            return {t}
        case Const():
            return set()
        case App(_, args):
            out: set[Var] = set()
            for a in args:
                out |= term_vars(a)
            return out
    raise KernelError(f"not a term: {t!r}")


def term_consts(t: Term) -> set[str]:
    match t:
        case Var():
            return set()
        case Const(name, _):
            return {name}
        case App(fn, args):
            out = {fn.name}
            for a in args:
                out |= term_consts(a)
            return out
    raise KernelError(f"not a term: {t!r}")


def subst_term(t: Term, mapping: dict[str, Term]) -> Term:
    """Substitute variables by name.  Terms contain no binders, so no
    capture can happen at this level."""
    match t:
        case Var(name, _):
            return mapping.get(name, t)
        case Const():
            return t
        case App(fn, args):
            return App(fn, tuple(subst_term(a, mapping) for a in args))
    raise KernelError(f"not a term: {t!r}")


def term_size(t: Term) -> int:
    match t:
        case Var() | Const():
            return 1
        case App(_, args):
            return 1 + sum(term_size(a) for a in args)
    raise KernelError(f"not a term: {t!r}")


def subterm_at(t: Term, path: tuple[int, ...]) -> Term:
    for i in path:
        if not isinstance(t, App):
            raise KernelError(f"no subterm at {path}")
        t = t.args[i]
    return t


def replace_at(t: Term, path: tuple[int, ...], repl: Term) -> Term:
    if not path:
        return repl
    if not isinstance(t, App):
        raise KernelError(f"no subterm at {path}")
    i, rest = path[0], path[1:]
    new_args = list(t.args)
    new_args[i] = replace_at(t.args[i], rest, repl)
    return App(t.fn, tuple(new_args))
