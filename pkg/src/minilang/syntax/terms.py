"""Concrete syntax for terms and propositions.

An Isabelle-flavoured surface language restricted to the engine's
first-order signature: infix arithmetic and relations, quantifiers,
``?name`` macro variables, and a fixed table of unicode aliases.
Elaboration resolves identifiers against a theory plus the proof
context and infers missing binder sorts by unification.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from ..kernel import (
    BOOL,
    And,
    App,
    Atom,
    Const,
    Eq,
    Exists,
    FALSE,
    FalseP,
    Forall,
    Iff,
    Implies,
    KernelError,
    Not,
    Or,
    Prop,
    Sort,
    TRUE,
    Term,
    Theory,
    TheoryError,
    TrueP,
    Var,
    sort_of,
)


class TermParseError(Exception):
    def __init__(self, message: str, pos: int = 0) -> None:
        super().__init__(message)
        self.message = message
        self.pos = pos


_UNICODE_ALIASES = {
    "∀": " forall ",
    "∃": " exists ",
    "¬": " ~ ",
    "∧": " & ",
    "∨": " | ",
    "⟶": " --> ",
    "→": " --> ",
    "⟷": " <-> ",
    "↔": " <-> ",
    "≤": " <= ",
    "≥": " >= ",
    "∈": " in ",
    "∉": " notin ",
}

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<num>\d+)
  | (?P<id>\?\w[\w']*|[A-Za-z_]\w*'*)
  | (?P<op><->|-->|<=|>=|!=|::|[-=<>+*/^&|~().,])
    """,
    re.VERBOSE,
)

_KEYWORDS = {"forall", "exists", "in", "notin", "dvd", "True", "False", "and", "where"}

# builtin infix table: symbol -> (constant name, precedence, right-assoc)
_ARITH_OPS = {
    "^": ("^", 70, True),
    "*": ("*", 60, False),
    "/": ("/", 60, False),
    "+": ("+", 50, False),
    "-": ("-", 50, False),
}
_REL_OPS = {"=", "!=", "<=", "<", ">=", ">", "dvd", "in", "notin"}


@dataclass(frozen=True, slots=True)
class Notation:
    symbol: str
    const: str
    prec: int
    right_assoc: bool


@dataclass(slots=True)
class Token:
    kind: str  # num | id | op
    text: str
    pos: int


def _lex(text: str, extra_ops: set[str]) -> list[Token]:
    for u, a in _UNICODE_ALIASES.items():
        text = text.replace(u, a)
    out: list[Token] = []
    i = 0
    n = len(text)
    ops_sorted = sorted(extra_ops, key=len, reverse=True)
    while i < n:
        hit = None
        for sym in ops_sorted:
            if text.startswith(sym, i):
                hit = sym
                break
        if hit is not None:
            out.append(Token("op", hit, i))
            i += len(hit)
            continue
        m = _TOKEN_RE.match(text, i)
        if not m:
            raise TermParseError(f"unexpected character {text[i]!r}", i)
        i = m.end()
        kind = m.lastgroup
        if kind == "ws":
            continue
        out.append(Token(kind, m.group(), m.start()))
    return out


class _Cell:
    """Union-find cell for an unresolved binder sort."""

    __slots__ = ("sort", "parent", "name")

    def __init__(self, name: str) -> None:
        self.sort: Sort | None = None
        self.parent: _Cell | None = None
        self.name = name

    def find(self) -> _Cell:
        c = self
        while c.parent is not None:
            c = c.parent
        return c


def _unify(cell_or_sort, sort: Sort, pos: int) -> None:
    if isinstance(cell_or_sort, _Cell):
        c = cell_or_sort.find()
        if c.sort is None:
            c.sort = sort
        elif c.sort != sort:
            raise TermParseError(
                f"sort mismatch for {c.name}: {c.sort} vs {sort}", pos
            )
    elif cell_or_sort != sort:
        raise TermParseError(f"sort mismatch: {cell_or_sort} vs {sort}", pos)


@dataclass(slots=True)
class _PendingVar:
    name: str
    cell: _Cell


class PropParser:
    """Recursive-descent parser producing kernel Props/Terms."""

    def __init__(
        self,
        theory: Theory,
        ctx_vars: dict[str, Sort] | None = None,
        notations: dict[str, Notation] | None = None,
        abbrevs: dict[str, str] | None = None,
        schematics: bool = False,
    ) -> None:
        self.theory = theory
        self.ctx_vars = dict(ctx_vars or {})
        self.notations = dict(notations or {})
        self.abbrevs = dict(abbrevs or {})
        self.schematics = schematics
        self._scopes: list[dict[str, Sort | _Cell]] = []
        self._pending: list[_PendingVar] = []
        self._schematic_cells: dict[str, _Cell] = {}
        self.tokens: list[Token] = []
        self.i = 0

    # -- entry points ----------------------------------------------------

    def parse_prop(self, text: str) -> Prop:
        self._start(text)
        node = self._prop_iff()
        self._expect_end()
        return self._finish_prop(node)

    def parse_term(self, text: str) -> Term:
        self._start(text)
        node = self._term(0)
        self._expect_end()
        if isinstance(node, _Pending):
            node = node.resolve()
        self._check_resolved()
        return node

    def _start(self, text: str) -> None:
        expanded = self._expand_abbrevs(text)
        extra = set(self.notations)
        self.tokens = _lex(expanded, extra)
        self.i = 0
        self._scopes = []
        self._pending = []
        self._schematic_cells = {}

    def _expand_abbrevs(self, text: str) -> str:
        # Textual expansion before sort-checking; repeated to a fixpoint
        # with a small bound (LET rejects duplicate names, not cycles).
        for _ in range(16):
            changed = False
            for name, repl in self.abbrevs.items():
                pat = re.escape(name) + r"(?![\w'])"
                new = re.sub(pat, "(" + repl + ")", text)
                if new != text:
                    text = new
                    changed = True
            if not changed:
                return text
        raise TermParseError("abbreviation expansion did not terminate")

    def _finish_prop(self, p: Prop) -> Prop:
        self._check_resolved()
        return p

    def _check_resolved(self) -> None:
        for pv in self._pending:
            c = pv.cell.find()
            if c.sort is None:
                raise TermParseError(
                    f"cannot infer sort of {pv.name}; annotate with ::"
                )

    # -- token helpers ----------------------------------------------------

    def _peek(self) -> Token | None:
        return self.tokens[self.i] if self.i < len(self.tokens) else None

    def _next(self) -> Token:
        t = self._peek()
        if t is None:
            raise TermParseError("unexpected end of input", -1)
        self.i += 1
        return t

    def _accept(self, text: str) -> bool:
        t = self._peek()
        if t is not None and t.text == text:
            self.i += 1
            return True
        return False

    def _expect(self, text: str) -> Token:
        t = self._next()
        if t.text != text:
            raise TermParseError(f"expected {text!r}, found {t.text!r}", t.pos)
        return t

    def _expect_end(self) -> None:
        t = self._peek()
        if t is not None:
            raise TermParseError(f"unexpected trailing {t.text!r}", t.pos)

    # -- proposition grammar ----------------------------------------------

    def _prop_iff(self) -> Prop:
        left = self._prop_imp()
        if self._accept("<->"):
            return Iff(left, self._prop_iff())
        return left

    def _prop_imp(self) -> Prop:
        left = self._prop_or()
        if self._accept("-->"):
            return Implies(left, self._prop_imp())
        return left

    def _prop_or(self) -> Prop:
        left = self._prop_and()
        if self._accept("|"):
            return Or(left, self._prop_or())
        return left

    def _prop_and(self) -> Prop:
        left = self._prop_unary()
        if self._accept("&"):
            return And(left, self._prop_and())
        return left

    def _prop_unary(self) -> Prop:
        t = self._peek()
        if t is None:
            raise TermParseError("unexpected end of proposition", -1)
        if t.text == "~":
            self.i += 1
            return Not(self._prop_unary())
        if t.text in ("forall", "exists"):
            self.i += 1
            return self._quantifier(t.text)
        return self._prop_atom()

    def _quantifier(self, kind: str) -> Prop:
        # `forall x y::nat. P` annotates the whole preceding run of names.
        binders: list[tuple[str, Sort | _Cell]] = []
        run: list[str] = []
        while True:
            tok = self._peek()
            if tok is not None and tok.kind == "id" and tok.text not in _KEYWORDS:
                run.append(self._next().text)
            elif tok is not None and tok.text == "::" and run:
                self.i += 1
                sort = self._sort_expr()
                binders.extend((n, sort) for n in run)
                run = []
            else:
                break
        for n in run:
            cell = _Cell(n)
            self._pending.append(_PendingVar(n, cell))
            binders.append((n, cell))
        if not binders:
            raise TermParseError(f"{kind} needs at least one variable")
        self._expect(".")
        scope = {name: s for name, s in binders}
        self._scopes.append(scope)
        body = self._prop_iff()
        self._scopes.pop()
        cls = Forall if kind == "forall" else Exists
        out = body
        for name, s in reversed(binders):
            sort = s.find().sort if isinstance(s, _Cell) else s
            if sort is None:
                raise TermParseError(f"cannot infer sort of {name}; annotate with ::")
            out = cls(name, sort, out)
        return out

    def _prop_atom(self) -> Prop:
        t = self._peek()
        if t is not None and t.text == "True":
            self.i += 1
            return TRUE
        if t is not None and t.text == "False":
            self.i += 1
            return FALSE
        if t is not None and t.text == "(":
            # Could be a parenthesized prop or a term; try prop first.
            save = self.i
            try:
                self.i += 1
                p = self._prop_iff()
                self._expect(")")
                # A parenthesized prop may still be an atom of a relation,
                # but props cannot be term arguments, so accept as-is.
                return p
            except TermParseError:
                self.i = save
        return self._relation()

    def _relation(self) -> Prop:
        lhs = self._term(0)
        t = self._peek()
        if t is not None and t.text in _REL_OPS:
            self.i += 1
            rhs = self._term(0)
            return self._mk_relation(t.text, lhs, rhs, t.pos)
        term = self._resolve(lhs)
        if sort_of(term) != BOOL:
            raise TermParseError(
                f"expected a proposition, found term of sort {sort_of(term)}",
                t.pos if t else -1,
            )
        return Atom(term)

    def _mk_relation(self, op: str, lhs, rhs, pos: int) -> Prop:
        if op == "=":
            lt, rt = self._resolve_pair(lhs, rhs, pos)
            return Eq(lt, rt)
        if op == "!=":
            lt, rt = self._resolve_pair(lhs, rhs, pos)
            return Not(Eq(lt, rt))
        name = "in" if op == "notin" else op
        try:
            const = self.theory.const(name)
        except TheoryError:
            raise TermParseError(f"relation {name!r} not declared in theory", pos)
        lt = self._coerce(lhs, const.sig.args[0], pos)
        rt = self._coerce(rhs, const.sig.args[1], pos)
        atom = Atom(App(const, (lt, rt)))
        return Not(atom) if op == "notin" else atom

    # -- term grammar -------------------------------------------------------

    def _term(self, min_prec: int):
        left = self._term_atom()
        while True:
            t = self._peek()
            if t is None:
                break
            entry = None
            if t.text in _ARITH_OPS:
                entry = _ARITH_OPS[t.text]
            elif t.text in self.notations:
                n = self.notations[t.text]
                entry = (n.const, n.prec, n.right_assoc)
            if entry is None:
                break
            const_name, prec, right = entry
            if prec < min_prec:
                break
            self.i += 1
            rhs = self._term(prec if right else prec + 1)
            left = self._apply_const(const_name, [left, rhs], t.pos)
        return left

    def _term_atom(self):
        t = self._next()
        if t.text == "(":
            inner = self._term(0)
            self._expect(")")
            return inner
        if t.kind == "num":
            return self._numeral(int(t.text), t.pos)
        if t.kind == "id" and t.text not in _KEYWORDS:
            name = t.text
            if self._peek() is not None and self._peek().text == "(":
                self.i += 1
                args = [self._term(0)]
                while self._accept(","):
                    args.append(self._term(0))
                self._expect(")")
                return self._apply_const(name, args, t.pos)
            return self._identifier(name, t.pos)
        raise TermParseError(f"unexpected token {t.text!r} in term", t.pos)

    def _numeral(self, value: int, pos: int):
        name = str(value)
        if name in self.theory.consts:
            return self.theory.const(name)
        nat = Sort("nat")
        dt = self.theory.datatype_of(nat)
        if dt is not None and {c.name for c in dt.constructors} >= {"zero", "suc"}:
            t: Term = self.theory.const("zero")
            suc = self.theory.const("suc")
            for _ in range(value):
                t = App(suc, (t,))
            return t
        raise TermParseError(f"numeral {value} not available in this theory", pos)

    def _identifier(self, name: str, pos: int):
        for scope in reversed(self._scopes):
            if name in scope:
                s = scope[name]
                if isinstance(s, _Cell):
                    return _Pending(name, s, pos)
                return Var(name, s)
        if name in self.ctx_vars:
            return Var(name, self.ctx_vars[name])
        if name.startswith("?"):
            if not self.schematics:
                raise TermParseError(f"unknown abbreviation {name}", pos)
            cell = self._schematic_cells.setdefault(name, _Cell(name))
            self._pending.append(_PendingVar(name, cell))
            return _Pending(name, cell, pos)
        if name in self.theory.consts:
            sig = self.theory.consts[name]
            if sig.args:
                raise TermParseError(f"constant {name} expects arguments", pos)
            return Const(name, sig)
        raise TermParseError(f"unknown constant {name}", pos)

    def _apply_const(self, name: str, args: list, pos: int) -> Term:
        try:
            const = self.theory.const(name)
        except TheoryError:
            raise TermParseError(f"unknown constant {name}", pos)
        if len(const.sig.args) != len(args):
            raise TermParseError(
                f"constant {name} expects {len(const.sig.args)} arguments", pos
            )
        coerced = tuple(
            self._coerce(a, want, pos) for a, want in zip(args, const.sig.args)
        )
        return App(const, coerced)

    def _coerce(self, node, want: Sort, pos: int) -> Term:
        if isinstance(node, _Pending):
            _unify(node.cell, want, pos)
            return Var(node.name, want)
        got = sort_of(node)
        if got != want:
            raise TermParseError(f"sort mismatch: expected {want}, got {got}", pos)
        return node

    def _resolve(self, node) -> Term:
        if isinstance(node, _Pending):
            return node.resolve()
        return node

    def _resolve_pair(self, lhs, rhs, pos: int) -> tuple[Term, Term]:
        if isinstance(lhs, _Pending) and isinstance(rhs, _Pending):
            ca, cb = lhs.cell.find(), rhs.cell.find()
            if ca is not cb:
                if ca.sort is not None:
                    _unify(cb, ca.sort, pos)
                elif cb.sort is not None:
                    _unify(ca, cb.sort, pos)
                else:
                    cb.parent = ca
            return lhs.resolve(), rhs.resolve()
        if isinstance(lhs, _Pending):
            _unify(lhs.cell, sort_of(rhs), pos)
            return Var(lhs.name, sort_of(rhs)), rhs
        if isinstance(rhs, _Pending):
            _unify(rhs.cell, sort_of(lhs), pos)
            return lhs, Var(rhs.name, sort_of(lhs))
        if sort_of(lhs) != sort_of(rhs):
            raise TermParseError(
                f"equation joins sorts {sort_of(lhs)} and {sort_of(rhs)}", pos
            )
        return lhs, rhs

    def _sort_expr(self) -> Sort:
        t = self._next()
        if t.kind != "id":
            raise TermParseError(f"expected a sort name, found {t.text!r}", t.pos)
        params: list[Sort] = []
        if self._accept("("):
            params.append(self._sort_expr())
            while self._accept(","):
                params.append(self._sort_expr())
            self._expect(")")
        sort = Sort(t.text, tuple(params))
        try:
            self.theory.check_sort(sort)
        except TheoryError as e:
            raise TermParseError(str(e), t.pos)
        return sort


@dataclass(slots=True)
class _Pending:
    """A variable occurrence whose sort is not yet known."""

    name: str
    cell: _Cell
    pos: int

    def resolve(self) -> Term:
        c = self.cell.find()
        if c.sort is None:
            raise TermParseError(f"cannot infer sort of {self.name}; annotate with ::", self.pos)
        return Var(self.name, c.sort)


# -- rendering ---------------------------------------------------------------

_REL_NAMES = {"<", "<=", ">", ">=", "dvd", "in"}


def _numeral_value(t: Term) -> int | None:
    """Value of a suc-tower over zero, else None."""
    n = 0
    while isinstance(t, App) and t.fn.name == "suc" and len(t.args) == 1:
        n += 1
        t = t.args[0]
    if isinstance(t, Const) and t.name == "zero":
        return n
    return None


def render_term(t: Term, prec: int = 0) -> str:
    value = _numeral_value(t)
    if value is not None and value > 0:
        return str(value)
    match t:
        case Var(name, _):
            return name
        case Const(name, _):
            return name
        case App(Const(name, _), args) if name in _ARITH_OPS and len(args) == 2:
            _, p, right = _ARITH_OPS[name]
            lp = p + (1 if right else 0)
            rp = p + (0 if right else 1)
            s = f"{render_term(args[0], lp)} {name} {render_term(args[1], rp)}"
            return f"({s})" if p < prec else s
        case App(Const(name, _), args) if name in _REL_NAMES and len(args) == 2:
            s = f"{render_term(args[0], 45)} {name} {render_term(args[1], 45)}"
            return f"({s})" if prec > 40 else s
        case App(fn, args):
            inner = ", ".join(render_term(a, 0) for a in args)
            return f"{fn.name}({inner})"
    raise KernelError(f"not a term: {t!r}")


def render_prop(p: Prop, prec: int = 0) -> str:
    def wrap(s: str, my_prec: int) -> str:
        return f"({s})" if my_prec < prec else s

    match p:
        case Atom(App(Const(name, _), args)) if name in _REL_NAMES and len(args) == 2:
            return wrap(f"{render_term(args[0], 45)} {name} {render_term(args[1], 45)}", 40)
        case Atom(t):
            return render_term(t, 90)
        case Eq(a, b):
            return wrap(f"{render_term(a, 45)} = {render_term(b, 45)}", 40)
        case TrueP():
            return "True"
        case FalseP():
            return "False"
        case Not(b):
            return wrap(f"~{render_prop(b, 31)}", 30)
        case And(a, b):
            return wrap(f"{render_prop(a, 26)} & {render_prop(b, 25)}", 25)
        case Or(a, b):
            return wrap(f"{render_prop(a, 21)} | {render_prop(b, 20)}", 20)
        case Implies(a, b):
            return wrap(f"{render_prop(a, 16)} --> {render_prop(b, 15)}", 15)
        case Iff(a, b):
            return wrap(f"{render_prop(a, 11)} <-> {render_prop(b, 10)}", 10)
        case Forall(v, s, b) | Exists(v, s, b):
            kw = "forall" if isinstance(p, Forall) else "exists"
            return wrap(f"{kw} {v}::{s}. {render_prop(b, 1)}", 1)
    raise KernelError(f"not a proposition: {p!r}")
