"""Isar-S: the curated declarative source language and its parser.

A deliberately small Isar subset sufficient to exercise the whole
normalization pipeline: connectives, obtain/consider, brace blocks,
subgoal, unfolding, apply chains with combinators, and nested proofs.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field, replace
from typing import ClassVar


class IsarParseError(Exception):
    def __init__(self, message: str, line: int = 0, col: int = 0) -> None:
        super().__init__(f"{line}:{col}: {message}" if line else message)
        self.line = line
        self.col = col


# -- tactic expressions -------------------------------------------------------


@dataclass(frozen=True, slots=True)
class TacticApp:
    """An atomic tactic with positive/negative lemma arguments."""

    name: str
    pos_args: tuple[str, ...] = ()
    neg_args: tuple[str, ...] = ()


@dataclass(frozen=True, slots=True)
class TacSeq:
    parts: tuple["Tactic", ...]


@dataclass(frozen=True, slots=True)
class TacPlus:
    body: "Tactic"


@dataclass(frozen=True, slots=True)
class TacTry:
    body: "Tactic"


@dataclass(frozen=True, slots=True)
class TacAlt:
    parts: tuple["Tactic", ...]


@dataclass(frozen=True, slots=True)
class TacRestrict:
    body: "Tactic"
    n: int


Tactic = TacticApp | TacSeq | TacPlus | TacTry | TacAlt | TacRestrict


def tactic_is_atomic(t: Tactic) -> bool:
    return isinstance(t, TacticApp)


# -- proof methods and justifications ----------------------------------------


@dataclass(frozen=True, slots=True)
class Method:
    """The argument of ``proof``: '-', a rule, or induction/cases."""

    name: str  # "-" | "default" | "rule" | "induction" | "cases" | "goal_cases" | tactic name
    args: tuple[str, ...] = ()


@dataclass(frozen=True, slots=True)
class Justification:
    kind: str  # "by" | "apply" | "proof"
    using: tuple[str, ...] = ()
    unfolding: tuple[str, ...] = ()
    tactics: tuple[Tactic, ...] = ()  # by: one; apply: chain
    sub: "ProofBlock | None" = None  # proof ... qed
    done: bool = True  # apply chains: closed by done


# -- statements ----------------------------------------------------------------


@dataclass(frozen=True, slots=True)
class Fix:
    names: tuple[str, ...]
    sort_text: str | None = None
    command: ClassVar[str] = "fix"


@dataclass(frozen=True, slots=True)
class Assume:
    items: tuple[tuple[str | None, str], ...]
    command: ClassVar[str] = "assume"


@dataclass(frozen=True, slots=True)
class Have:
    name: str | None
    text: str
    just: Justification
    chain: tuple[str, ...] = ()  # "then" | "from:x" | "with:x" | "ultimately" | "finally"
    if_texts: tuple[tuple[str | None, str], ...] = ()
    for_vars: tuple[str, ...] = ()
    command: ClassVar[str] = "have"


@dataclass(frozen=True, slots=True)
class Show:
    text: str  # "?thesis" before N1
    just: Justification
    chain: tuple[str, ...] = ()
    command: ClassVar[str] = "show"


@dataclass(frozen=True, slots=True)
class Obtain:
    variables: tuple[str, ...]
    sort_text: str | None
    items: tuple[tuple[str | None, str], ...]
    just: Justification
    chain: tuple[str, ...] = ()
    command: ClassVar[str] = "obtain"


@dataclass(frozen=True, slots=True)
class ConsiderCasesStmt:
    cases: tuple[str, ...]
    just: Justification
    chain: tuple[str, ...] = ()
    command: ClassVar[str] = "consider"


@dataclass(frozen=True, slots=True)
class LetAbbrev:
    name: str
    term_text: str
    command: ClassVar[str] = "let"


@dataclass(frozen=True, slots=True)
class Note:
    name: str
    facts: tuple[str, ...]
    command: ClassVar[str] = "note"


@dataclass(frozen=True, slots=True)
class Moreover:
    command: ClassVar[str] = "moreover"


@dataclass(frozen=True, slots=True)
class Also:
    command: ClassVar[str] = "also"


@dataclass(frozen=True, slots=True)
class Brace:
    body: tuple["IsarStmt", ...]
    command: ClassVar[str] = "brace"


@dataclass(frozen=True, slots=True)
class NextSep:
    command: ClassVar[str] = "next"


@dataclass(frozen=True, slots=True)
class ApplyTac:
    tactics: tuple[Tactic, ...]
    command: ClassVar[str] = "apply"


@dataclass(frozen=True, slots=True)
class Done:
    command: ClassVar[str] = "done"


@dataclass(frozen=True, slots=True)
class Subgoal:
    just: Justification
    command: ClassVar[str] = "subgoal"


IsarStmt = (
    Fix | Assume | Have | Show | Obtain | ConsiderCasesStmt | LetAbbrev | Note
    | Moreover | Also | Brace | NextSep | ApplyTac | Done | Subgoal
)


@dataclass(frozen=True, slots=True)
class ProofBlock:
    """proof <method>? <stmts> qed, with next-separated segments kept flat."""

    method: Method | None
    body: tuple[IsarStmt, ...]


@dataclass(frozen=True, slots=True)
class IsarScript:
    name: str
    goal_text: str
    just: Justification
    theory: str | None = None


# -- lexer ---------------------------------------------------------------------

_KEYWORDS = {
    "lemma", "theorem", "proof", "qed", "by", "apply", "done", "fix", "assume",
    "have", "hence", "then", "from", "with", "moreover", "ultimately", "also",
    "finally", "show", "thus", "obtain", "consider", "where", "and", "let",
    "note", "using", "unfolding", "subgoal", "next", "if", "for",
}

_TOKEN = re.compile(
    r"""
    (?P<str>"[^"\n]*")
  | (?P<num>\d+)
  | (?P<id>\?[\w']+|[A-Za-z_][\w'.]*)
  | (?P<sym>::|[:=|(){},+?\[\]-])
    """,
    re.VERBOSE,
)


@dataclass(slots=True)
class Tok:
    kind: str
    text: str
    line: int
    col: int


def _lex(text: str) -> tuple[list[Tok], str | None]:
    tokens: list[Tok] = []
    theory = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        m = re.match(r"\s*--theory\s+(\w+)\s*$", raw)
        if m:
            theory = m.group(1)
            continue
        line = raw.split("(*")[0] if "(*" in raw and '"' not in raw else raw
        i = 0
        while i < len(line):
            if line[i].isspace():
                i += 1
                continue
            m = _TOKEN.match(line, i)
            if not m:
                raise IsarParseError(f"unexpected character {line[i]!r}", lineno, i + 1)
            tokens.append(Tok(m.lastgroup, m.group(), lineno, m.start() + 1))
            i = m.end()
    return tokens, theory


class _P:
    def __init__(self, tokens: list[Tok]) -> None:
        self.toks = tokens
        self.i = 0

    def peek(self, ahead: int = 0) -> Tok | None:
        j = self.i + ahead
        return self.toks[j] if j < len(self.toks) else None

    def at(self, text: str) -> bool:
        t = self.peek()
        return t is not None and t.text == text

    def next(self, what: str) -> Tok:
        t = self.peek()
        if t is None:
            last = self.toks[-1] if self.toks else None
            raise IsarParseError(
                f"expected {what}, found end of input",
                last.line if last else 1,
                last.col if last else 1,
            )
        self.i += 1
        return t

    def expect(self, text: str) -> Tok:
        t = self.next(repr(text))
        if t.text != text:
            raise IsarParseError(f"expected {text!r}, found {t.text!r}", t.line, t.col)
        return t

    def expect_str(self) -> str:
        t = self.next("a quoted string")
        if t.kind != "str":
            raise IsarParseError(f"expected a quoted string, found {t.text!r}", t.line, t.col)
        return t.text[1:-1]

    def expect_name(self, what: str = "a name") -> str:
        t = self.next(what)
        if t.kind != "id":
            raise IsarParseError(f"expected {what}, found {t.text!r}", t.line, t.col)
        return t.text


def parse_isar(text: str) -> IsarScript:
    tokens, theory = _lex(text)
    p = _P(tokens)
    head = p.next("'lemma' or 'theorem'")
    if head.text not in ("lemma", "theorem"):
        raise IsarParseError("script must start with lemma/theorem", head.line, head.col)
    name = p.expect_name("a lemma name")
    p.expect(":")
    goal = p.expect_str()
    just = _parse_justification(p)
    t = p.peek()
    if t is not None:
        raise IsarParseError(f"unexpected trailing {t.text!r}", t.line, t.col)
    return IsarScript(name, goal, just, theory)


_FACT_STARTERS = {"have", "hence", "show", "thus", "obtain", "consider"}
_CHAINABLE = {"then", "from", "with", "ultimately", "finally"}


def _parse_justification(p: _P) -> Justification:
    using: list[str] = []
    unfolding: list[str] = []
    while True:
        if p.at("using"):
            p.next("using")
            using.extend(_fact_refs(p))
        elif p.at("unfolding"):
            p.next("unfolding")
            unfolding.extend(_fact_refs(p))
        else:
            break
    t = p.peek()
    if t is None:
        raise IsarParseError("missing proof", 0, 0)
    if t.text == "by":
        p.next("by")
        tac = _parse_tactic(p)
        return Justification("by", tuple(using), tuple(unfolding), (tac,))
    if t.text == "apply":
        tactics: list[Tactic] = []
        while p.at("apply"):
            p.next("apply")
            tactics.append(_parse_tactic(p))
        done = False
        if p.at("done"):
            p.next("done")
            done = True
        return Justification(
            "apply", tuple(using), tuple(unfolding), tuple(tactics), done=done
        )
    if t.text == "proof":
        block = _parse_proof_block(p)
        return Justification("proof", tuple(using), tuple(unfolding), sub=block)
    raise IsarParseError(f"expected a proof, found {t.text!r}", t.line, t.col)


def _fact_refs(p: _P) -> list[str]:
    """Fact names or quoted back-references, as in `from "2 dvd m"`."""
    out: list[str] = []
    while True:
        t = p.peek()
        if t is None:
            break
        if t.kind == "str":
            out.append(t.text)  # keep the quotes: marks an expression reference
            p.i += 1
        elif t.kind == "id" and t.text not in _KEYWORDS:
            out.append(t.text)
            p.i += 1
        elif t.kind == "id" and t.text in ("this", "that"):
            out.append(t.text)
            p.i += 1
        else:
            break
    return out


def _parse_method(p: _P) -> Method | None:
    t = p.peek()
    if t is None:
        return None
    if t.text == "-":
        p.next("-")
        return Method("-")
    if t.text == "(":
        p.next("(")
        name = p.expect_name("a method name")
        args: list[str] = []
        while not p.at(")"):
            tk = p.next("method arguments")
            if tk.kind in ("id", "num"):
                args.append(tk.text)
            elif tk.kind == "str":
                args.append(tk.text)
            else:
                raise IsarParseError(f"bad method argument {tk.text!r}", tk.line, tk.col)
        p.expect(")")
        return Method(name, tuple(args))
    if t.kind == "id" and t.text not in _KEYWORDS and t.text not in ("qed",):
        # bare method name, e.g. `proof cases` or a tactic like `proof simp`
        p.next("method")
        return Method(t.text)
    return None  # bare `proof`: Isabelle's default rule


def _parse_proof_block(p: _P) -> ProofBlock:
    p.expect("proof")
    method = _parse_method(p)
    body: list[IsarStmt] = []
    while not p.at("qed"):
        t = p.peek()
        if t is None:
            raise IsarParseError("unterminated proof block (missing qed)", 0, 0)
        body.append(_parse_stmt(p))
    p.expect("qed")
    return ProofBlock(method, tuple(body))


def _parse_stmt(p: _P) -> IsarStmt:
    t = p.peek()
    assert t is not None
    chain: list[str] = []
    while t is not None and t.text in _CHAINABLE:
        p.next(t.text)
        if t.text in ("from", "with"):
            refs = _fact_refs(p)
            chain.append(f"{t.text}:{','.join(refs)}")
        else:
            chain.append(t.text)
        t = p.peek()
    if t is None:
        raise IsarParseError("dangling connective", 0, 0)

    if t.text in ("have", "hence"):
        p.next(t.text)
        if t.text == "hence":
            chain.append("then")
        return _parse_have(p, tuple(chain))
    if t.text in ("show", "thus"):
        p.next(t.text)
        if t.text == "thus":
            chain.append("then")
        text = "?thesis" if p.at("?thesis") else None
        if text is not None:
            p.next("?thesis")
        else:
            tk = p.peek()
            if tk is not None and tk.kind == "str":
                text = p.expect_str()
            elif tk is not None and tk.kind == "id" and tk.text == "?thesis":
                p.next("?thesis")
                text = "?thesis"
            else:
                raise IsarParseError("show needs a goal", tk.line if tk else 0, 0)
        just = _parse_justification(p)
        return Show(text, just, tuple(chain))
    if t.text == "obtain":
        p.next("obtain")
        variables = []
        while p.peek() is not None and p.peek().kind == "id" and p.peek().text != "where":
            variables.append(p.expect_name())
        sort_text = None
        if p.at("::"):
            p.expect("::")
            sort_text = p.expect_name("a sort")
        if p.at("where"):
            p.expect("where")
        items = _parse_labeled_props(p)
        just = _parse_justification(p)
        return Obtain(tuple(variables), sort_text, tuple(items), just, tuple(chain))
    if t.text == "consider":
        p.next("consider")
        cases = [p.expect_str()]
        while p.at("|"):
            p.expect("|")
            cases.append(p.expect_str())
        just = _parse_justification(p)
        return ConsiderCasesStmt(tuple(cases), just, tuple(chain))
    if chain:
        raise IsarParseError(
            f"connective must precede a fact statement, found {t.text!r}", t.line, t.col
        )
    if t.text == "fix":
        p.next("fix")
        names = []
        while p.peek() is not None and p.peek().kind == "id" and p.peek().text not in _KEYWORDS:
            names.append(p.expect_name())
        sort_text = None
        if p.at("::"):
            p.expect("::")
            sort_text = p.expect_name("a sort")
        return Fix(tuple(names), sort_text)
    if t.text == "assume":
        p.next("assume")
        return Assume(tuple(_parse_labeled_props(p)))
    if t.text == "let":
        p.next("let")
        name = p.expect_name("a ?name")
        p.expect("=")
        return LetAbbrev(name, p.expect_str())
    if t.text == "note":
        p.next("note")
        name = p.expect_name()
        p.expect("=")
        return Note(name, tuple(_fact_refs(p)))
    if t.text == "moreover":
        p.next("moreover")
        return Moreover()
    if t.text == "also":
        p.next("also")
        return Also()
    if t.text == "{":
        p.next("{")
        body: list[IsarStmt] = []
        while not p.at("}"):
            if p.peek() is None:
                raise IsarParseError("unterminated brace block", 0, 0)
            body.append(_parse_stmt(p))
        p.expect("}")
        return Brace(tuple(body))
    if t.text == "next":
        p.next("next")
        return NextSep()
    if t.text == "apply":
        tactics = []
        while p.at("apply"):
            p.next("apply")
            tactics.append(_parse_tactic(p))
        return ApplyTac(tuple(tactics))
    if t.text == "done":
        p.next("done")
        return Done()
    if t.text == "subgoal":
        p.next("subgoal")
        just = _parse_justification(p)
        return Subgoal(just)
    raise IsarParseError(f"unexpected {t.text!r}", t.line, t.col)


def _parse_have(p: _P, chain: tuple[str, ...]) -> Have:
    name = None
    t = p.peek()
    if t is not None and t.kind == "id" and p.peek(1) is not None and p.peek(1).text == ":":
        name = p.expect_name()
        p.expect(":")
    text = p.expect_str()
    if_texts: list[tuple[str | None, str]] = []
    for_vars: list[str] = []
    if p.at("if"):
        p.next("if")
        if_texts = _parse_labeled_props(p)
    if p.at("for"):
        p.next("for")
        while p.peek() is not None and p.peek().kind == "id" and p.peek().text not in _KEYWORDS:
            for_vars.append(p.expect_name())
    just = _parse_justification(p)
    return Have(name, text, just, chain, tuple(if_texts), tuple(for_vars))


def _parse_labeled_props(p: _P) -> list[tuple[str | None, str]]:
    items: list[tuple[str | None, str]] = []
    while True:
        label = None
        t = p.peek()
        if (
            t is not None and t.kind == "id" and t.text not in _KEYWORDS
            and p.peek(1) is not None and p.peek(1).text == ":"
        ):
            label = p.expect_name()
            p.expect(":")
        items.append((label, p.expect_str()))
        if p.at("and"):
            p.next("and")
            continue
        break
    return items


def _parse_tactic(p: _P) -> Tactic:
    t = p.peek()
    if t is None:
        raise IsarParseError("missing tactic", 0, 0)
    if t.text == "(":
        p.next("(")
        tac = _parse_tactic_body(p)
        p.expect(")")
        return _parse_tactic_suffix(p, tac)
    name = p.expect_name("a tactic")
    return _parse_tactic_suffix(p, TacticApp(name))


def _parse_tactic_body(p: _P) -> Tactic:
    parts = [_parse_tactic_alt(p)]
    while p.at(","):
        p.next(",")
        parts.append(_parse_tactic_alt(p))
    if len(parts) == 1:
        return parts[0]
    return TacSeq(tuple(parts))


def _parse_tactic_alt(p: _P) -> Tactic:
    parts = [_parse_tactic_atom(p)]
    while p.at("|"):
        p.next("|")
        parts.append(_parse_tactic_atom(p))
    if len(parts) == 1:
        return parts[0]
    return TacAlt(tuple(parts))


def _parse_tactic_atom(p: _P) -> Tactic:
    t = p.peek()
    if t is not None and t.text == "(":
        p.next("(")
        inner = _parse_tactic_body(p)
        p.expect(")")
        return _parse_tactic_suffix(p, inner)
    name = p.expect_name("a tactic")
    pos: list[str] = []
    neg: list[str] = []
    bucket = pos
    while True:
        t = p.peek()
        if t is None or t.text in (",", "|", ")", "+", "?", "["):
            break
        if t.kind == "id" and t.text in ("add", "del", "simp") and (
            p.peek(1) is not None and p.peek(1).text == ":"
        ):
            p.next(t.text)
            p.expect(":")
            bucket = neg if t.text == "del" else pos
            continue
        if t.kind == "id" and t.text not in _KEYWORDS:
            bucket.append(t.text)
            p.i += 1
            continue
        break
    return _parse_tactic_suffix(p, TacticApp(name, tuple(pos), tuple(neg)))


def _parse_tactic_suffix(p: _P, tac: Tactic) -> Tactic:
    while True:
        t = p.peek()
        if t is None:
            return tac
        if t.text == "+":
            p.next("+")
            tac = TacPlus(tac)
        elif t.text == "?":
            p.next("?")
            tac = TacTry(tac)
        elif t.text == "[":
            p.next("[")
            n = p.next("a goal count")
            if n.kind != "num":
                raise IsarParseError("expected a number", n.line, n.col)
            p.expect("]")
            tac = TacRestrict(tac, int(n.text))
        else:
            return tac
