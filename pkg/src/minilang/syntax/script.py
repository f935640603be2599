"""MiniLang proof-script syntax.

A script is a ``--theory`` pragma, a ``theorem name: "goal"`` header and a
sequence of statements.  Each statement starts with one of the sixteen
upper-case commands; its arguments run until the next command keyword, so
several statements may share a source line.  Proposition and term
arguments stay as raw text here: they are elaborated against the live
proof context at execution time.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import ClassVar

COMMANDS = (
    "INTRO", "HAVE", "CONSIDER", "END", "NEXT",
    "RULE", "SIMPLIFY", "UNFOLD", "CHOOSE", "CASE_SPLIT", "INDUCT",
    "LET", "NOTATION",
    "CONFIG", "OPEN", "APPLY",
)


@dataclass(frozen=True)
class ParseError(Exception):
    line: int
    column: int
    expected: str
    found: str

    def __str__(self) -> str:
        return (
            f"parse error at {self.line}:{self.column}: expected {self.expected},"
            f" found {self.found!r}"
        )


@dataclass(frozen=True, slots=True)
class RuleStmt:
    rule_name: str | None = None
    command: ClassVar[str] = "RULE"


@dataclass(frozen=True, slots=True)
class IntroStmt:
    command: ClassVar[str] = "INTRO"


@dataclass(frozen=True, slots=True)
class HaveStmt:
    label: str | None
    prop_text: str
    command: ClassVar[str] = "HAVE"


@dataclass(frozen=True, slots=True)
class ConsiderObtain:
    """CONSIDER x y :: sort where lbl: "P" and ...  (fixes witnesses)."""

    variables: tuple[str, ...]
    sort_text: str | None
    props: tuple[tuple[str | None, str], ...]
    command: ClassVar[str] = "CONSIDER"


@dataclass(frozen=True, slots=True)
class ConsiderCases:
    """CONSIDER "P" | "Q" | ...  (case split on a disjunction)."""

    cases: tuple[str, ...]
    command: ClassVar[str] = "CONSIDER"


@dataclass(frozen=True, slots=True)
class EndStmt:
    with_names: tuple[str, ...] = ()
    without_names: tuple[str, ...] = ()
    is_next: bool = False

    @property
    def command(self) -> str:
        return "NEXT" if self.is_next else "END"


@dataclass(frozen=True, slots=True)
class ChooseStmt:
    term_text: str
    command: ClassVar[str] = "CHOOSE"


@dataclass(frozen=True, slots=True)
class SimplifyStmt:
    names: tuple[str, ...] = ()
    command: ClassVar[str] = "SIMPLIFY"


@dataclass(frozen=True, slots=True)
class UnfoldStmt:
    names: tuple[str, ...] = ()
    command: ClassVar[str] = "UNFOLD"


@dataclass(frozen=True, slots=True)
class CaseSplitStmt:
    term_text: str
    command: ClassVar[str] = "CASE_SPLIT"


@dataclass(frozen=True, slots=True)
class InductStmt:
    var_name: str
    command: ClassVar[str] = "INDUCT"


@dataclass(frozen=True, slots=True)
class LetStmt:
    name: str
    term_text: str
    command: ClassVar[str] = "LET"


@dataclass(frozen=True, slots=True)
class NotationStmt:
    fixity: str  # infixl | infixr
    prec: int
    symbol: str
    const_name: str
    command: ClassVar[str] = "NOTATION"


@dataclass(frozen=True, slots=True)
class ConfigStmt:
    key: str
    value: str
    command: ClassVar[str] = "CONFIG"


@dataclass(frozen=True, slots=True)
class OpenStmt:
    names: tuple[str, ...] = ()
    command: ClassVar[str] = "OPEN"


@dataclass(frozen=True, slots=True)
class ApplyStmt:
    tactic: str
    pos_args: tuple[str, ...] = ()
    neg_args: tuple[str, ...] = ()
    command: ClassVar[str] = "APPLY"


Statement = (
    RuleStmt | IntroStmt | HaveStmt | ConsiderObtain | ConsiderCases | EndStmt
    | ChooseStmt | SimplifyStmt | UnfoldStmt | CaseSplitStmt | InductStmt
    | LetStmt | NotationStmt | ConfigStmt | OpenStmt | ApplyStmt
)


@dataclass(frozen=True, slots=True)
class Script:
    name: str
    goal_text: str
    statements: tuple[Statement, ...]
    theory: str | None = None


# -- lexer ---------------------------------------------------------------


@dataclass(slots=True)
class Tok:
    kind: str  # id | num | str | sym
    text: str
    line: int
    col: int


_SCRIPT_TOKEN = re.compile(
    r"""
    (?P<str>"[^"\n]*")
  | (?P<num>\d+)
  | (?P<id>\?[\w']+|[A-Za-z_][\w']*)
  | (?P<sym>::|[:=|(),+*/^<>~&-])
    """,
    re.VERBOSE,
)


def _strip_line_comment(line: str) -> str:
    in_str = False
    for i, ch in enumerate(line):
        if ch == '"':
            in_str = not in_str
        elif not in_str and ch == "-" and line[i : i + 2] == "--":
            return line[:i]
    return line


def _lex_script(text: str) -> tuple[list[Tok], str | None]:
    tokens: list[Tok] = []
    theory: str | None = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        m = re.match(r"\s*--theory\s+(\w+)\s*$", raw)
        if m:
            theory = m.group(1)
            continue
        line = _strip_line_comment(raw)
        i = 0
        while i < len(line):
            if line[i].isspace():
                i += 1
                continue
            m = _SCRIPT_TOKEN.match(line, i)
            if not m:
                raise ParseError(lineno, i + 1, "a token", line[i])
            tokens.append(Tok(m.lastgroup, m.group(), lineno, m.start() + 1))
            i = m.end()
    return tokens, theory


class _Stream:
    def __init__(self, tokens: list[Tok]) -> None:
        self.toks = tokens
        self.i = 0

    def peek(self) -> Tok | None:
        return self.toks[self.i] if self.i < len(self.toks) else None

    def at_command(self) -> bool:
        t = self.peek()
        return t is not None and t.kind == "id" and t.text in COMMANDS

    def next(self, expected: str) -> Tok:
        t = self.peek()
        if t is None:
            last = self.toks[-1] if self.toks else None
            raise ParseError(
                last.line if last else 1, last.col if last else 1, expected, "end of input"
            )
        self.i += 1
        return t

    def expect_sym(self, sym: str) -> Tok:
        t = self.next(repr(sym))
        if t.text != sym:
            raise ParseError(t.line, t.col, repr(sym), t.text)
        return t

    def expect_id(self, what: str = "an identifier") -> Tok:
        t = self.next(what)
        if t.kind != "id" or t.text in COMMANDS:
            raise ParseError(t.line, t.col, what, t.text)
        return t

    def expect_str(self, what: str = "a quoted string") -> Tok:
        t = self.next(what)
        if t.kind != "str":
            raise ParseError(t.line, t.col, what, t.text)
        return t


def _unquote(t: Tok) -> str:
    return t.text[1:-1]


def _names_until_keyword(s: _Stream, stop: set[str]) -> tuple[str, ...]:
    names: list[str] = []
    while True:
        t = s.peek()
        if t is None or t.kind != "id" or t.text in COMMANDS or t.text in stop:
            break
        names.append(t.text)
        s.i += 1
    return tuple(names)


def _parse_statement(s: _Stream) -> Statement:
    t = s.next("a command")
    if t.kind != "id" or t.text not in COMMANDS:
        raise ParseError(t.line, t.col, "a MiniLang command", t.text)
    cmd = t.text

    if cmd == "INTRO":
        return IntroStmt()
    if cmd == "RULE":
        name = None
        nt = s.peek()
        if nt is not None and nt.kind == "id" and nt.text not in COMMANDS:
            name = s.next("rule name").text
        return RuleStmt(name)
    if cmd == "HAVE":
        label = None
        nt = s.peek()
        if nt is not None and nt.kind == "id" and nt.text not in COMMANDS:
            label = s.next("label").text
            s.expect_sym(":")
        prop = s.expect_str("a quoted proposition")
        return HaveStmt(label, _unquote(prop))
    if cmd == "CONSIDER":
        nt = s.peek()
        if nt is not None and nt.kind == "str":
            cases = [_unquote(s.expect_str())]
            while s.peek() is not None and s.peek().text == "|":
                s.expect_sym("|")
                cases.append(_unquote(s.expect_str()))
            if len(cases) < 2:
                raise ParseError(nt.line, nt.col, "at least two cases", "one case")
            return ConsiderCases(tuple(cases))
        variables = []
        while s.peek() is not None and s.peek().kind == "id" and s.peek().text not in (
            "where",
        ) and s.peek().text not in COMMANDS:
            variables.append(s.expect_id("variable").text)
        sort_text = None
        if s.peek() is not None and s.peek().text == "::":
            s.expect_sym("::")
            sort_tok = s.expect_id("a sort")
            sort_text = sort_tok.text
            if s.peek() is not None and s.peek().text == "(":
                depth = 0
                parts = []
                while True:
                    tk = s.next("sort expression")
                    parts.append(tk.text)
                    if tk.text == "(":
                        depth += 1
                    elif tk.text == ")":
                        depth -= 1
                        if depth == 0:
                            break
                sort_text += "".join(parts)
        if not variables:
            raise ParseError(t.line, t.col, "variables or quoted cases", "nothing")
        wt = s.next("'where'")
        if wt.text != "where":
            raise ParseError(wt.line, wt.col, "'where'", wt.text)
        props: list[tuple[str | None, str]] = []
        while True:
            label = None
            nt = s.peek()
            if nt is not None and nt.kind == "id" and nt.text not in COMMANDS and nt.text != "and":
                label = s.expect_id("label").text
                s.expect_sym(":")
            prop = s.expect_str("a quoted proposition")
            props.append((label, _unquote(prop)))
            if s.peek() is not None and s.peek().text == "and":
                s.next("'and'")
                continue
            break
        return ConsiderObtain(tuple(variables), sort_text, tuple(props))
    if cmd in ("END", "NEXT"):
        with_names: tuple[str, ...] = ()
        without_names: tuple[str, ...] = ()
        nt = s.peek()
        if nt is not None and nt.text == "WITH":
            s.next("WITH")
            with_names = _names_until_keyword(s, {"WITHOUT"})
        nt = s.peek()
        if nt is not None and nt.text == "WITHOUT":
            s.next("WITHOUT")
            without_names = _names_until_keyword(s, set())
        return EndStmt(with_names, without_names, is_next=(cmd == "NEXT"))
    if cmd == "CHOOSE":
        nt = s.next("a witness term")
        if nt.kind == "str":
            return ChooseStmt(_unquote(nt))
        if nt.kind in ("id", "num"):
            return ChooseStmt(nt.text)
        raise ParseError(nt.line, nt.col, "a witness term", nt.text)
    if cmd == "SIMPLIFY":
        return SimplifyStmt(_names_until_keyword(s, set()))
    if cmd == "UNFOLD":
        names = _names_until_keyword(s, set())
        if not names:
            nt = s.peek()
            raise ParseError(
                nt.line if nt else t.line, nt.col if nt else t.col,
                "definition names", nt.text if nt else "end of input",
            )
        return UnfoldStmt(names)
    if cmd == "CASE_SPLIT":
        nt = s.next("a term")
        if nt.kind == "str":
            return CaseSplitStmt(_unquote(nt))
        if nt.kind == "id" and nt.text not in COMMANDS:
            return CaseSplitStmt(nt.text)
        raise ParseError(nt.line, nt.col, "a term", nt.text)
    if cmd == "INDUCT":
        return InductStmt(s.expect_id("a variable").text)
    if cmd == "LET":
        name_tok = s.next("a ?name")
        if not name_tok.text.startswith("?"):
            raise ParseError(name_tok.line, name_tok.col, "a ?name", name_tok.text)
        s.expect_sym("=")
        term = s.expect_str("a quoted term")
        return LetStmt(name_tok.text, _unquote(term))
    if cmd == "NOTATION":
        fix = s.expect_id("infixl or infixr")
        if fix.text not in ("infixl", "infixr"):
            raise ParseError(fix.line, fix.col, "infixl or infixr", fix.text)
        prec = s.next("a precedence")
        if prec.kind != "num":
            raise ParseError(prec.line, prec.col, "a precedence", prec.text)
        sym = s.expect_str("the notation symbol, quoted")
        s.expect_sym("=")
        const = s.next("a constant name")
        if const.kind not in ("id", "sym") or const.text in COMMANDS:
            raise ParseError(const.line, const.col, "a constant name", const.text)
        return NotationStmt(fix.text, int(prec.text), _unquote(sym), const.text)
    if cmd == "CONFIG":
        key = s.expect_id("a config key")
        s.expect_sym("=")
        val = s.next("a value")
        if val.kind == "str":
            return ConfigStmt(key.text, _unquote(val))
        return ConfigStmt(key.text, val.text)
    if cmd == "OPEN":
        names = _names_until_keyword(s, set())
        if not names:
            raise ParseError(t.line, t.col, "bundle names", "nothing")
        return OpenStmt(names)
    if cmd == "APPLY":
        nt = s.next("a tactic")
        if nt.text == "(":
            tac = s.expect_id("a tactic name").text
            pos: list[str] = []
            neg: list[str] = []
            bucket = pos
            while True:
                tk = s.next("tactic arguments")
                if tk.text == ")":
                    break
                if tk.kind == "id" and tk.text in ("add", "del") and (
                    s.peek() is not None and s.peek().text == ":"
                ):
                    s.expect_sym(":")
                    bucket = pos if tk.text == "add" else neg
                    continue
                if tk.kind != "id":
                    raise ParseError(tk.line, tk.col, "a lemma name", tk.text)
                bucket.append(tk.text)
            return ApplyStmt(tac, tuple(pos), tuple(neg))
        if nt.kind == "id" and nt.text not in COMMANDS:
            return ApplyStmt(nt.text)
        raise ParseError(nt.line, nt.col, "a tactic", nt.text)
    raise ParseError(t.line, t.col, "a command", cmd)


def parse_statements(text: str) -> list[Statement]:
    """Parse a chunk of statements (no theorem header)."""
    tokens, _ = _lex_script(text)
    s = _Stream(tokens)
    out: list[Statement] = []
    while s.peek() is not None:
        out.append(_parse_statement(s))
    return out


def parse_script(text: str) -> Script:
    tokens, theory = _lex_script(text)
    s = _Stream(tokens)
    t = s.next("'theorem'")
    if t.text != "theorem":
        raise ParseError(t.line, t.col, "'theorem'", t.text)
    name = s.expect_id("a theorem name").text
    s.expect_sym(":")
    goal = _unquote(s.expect_str("the goal, quoted"))
    statements: list[Statement] = []
    while s.peek() is not None:
        statements.append(_parse_statement(s))
    if not statements:
        last = tokens[-1]
        raise ParseError(last.line, last.col, "at least one statement", "end of input")
    return Script(name, goal, tuple(statements), theory)


# -- rendering -----------------------------------------------------------


def render_statement(stmt: Statement) -> str:
    match stmt:
        case IntroStmt():
            return "INTRO"
        case RuleStmt(rule_name):
            return f"RULE {rule_name}" if rule_name else "RULE"
        case HaveStmt(label, prop):
            head = f"HAVE {label}: " if label else "HAVE "
            return f'{head}"{prop}"'
        case ConsiderObtain(variables, sort_text, props):
            head = "CONSIDER " + " ".join(variables)
            if sort_text:
                head += f" :: {sort_text}"
            parts = []
            for label, prop in props:
                parts.append((f"{label}: " if label else "") + f'"{prop}"')
            return head + " where " + " and ".join(parts)
        case ConsiderCases(cases):
            return "CONSIDER " + " | ".join(f'"{c}"' for c in cases)
        case EndStmt(with_names, without_names, is_next):
            out = "NEXT" if is_next else "END"
            if with_names:
                out += " WITH " + " ".join(with_names)
            if without_names:
                out += " WITHOUT " + " ".join(without_names)
            return out
        case ChooseStmt(term):
            return f'CHOOSE "{term}"'
        case SimplifyStmt(names):
            return "SIMPLIFY" + (" " + " ".join(names) if names else "")
        case UnfoldStmt(names):
            return "UNFOLD " + " ".join(names)
        case CaseSplitStmt(term):
            return f'CASE_SPLIT "{term}"'
        case InductStmt(var):
            return f"INDUCT {var}"
        case LetStmt(name, term):
            return f'LET {name} = "{term}"'
        case NotationStmt(fix, prec, sym, const):
            return f'NOTATION {fix} {prec} "{sym}" = {const}'
        case ConfigStmt(key, value):
            if re.fullmatch(r"\w+", value):
                return f"CONFIG {key} = {value}"
            return f'CONFIG {key} = "{value}"'
        case OpenStmt(names):
            return "OPEN " + " ".join(names)
        case ApplyStmt(tactic, pos, neg):
            if not pos and not neg:
                return f"APPLY {tactic}"
            inner = tactic
            if pos:
                inner += " " + " ".join(pos)
            if neg:
                inner += " del: " + " ".join(neg)
            return f"APPLY ({inner})"
    raise TypeError(f"unknown statement {stmt!r}")


def render_script(script: Script) -> str:
    lines = []
    if script.theory:
        lines.append(f"--theory {script.theory}")
    lines.append(f'theorem {script.name}: "{script.goal_text}"')
    lines.extend(render_statement(s) for s in script.statements)
    return "\n".join(lines) + "\n"
