"""Plain-text theory files: one declaration per line.

Format (``#`` starts a comment, blank lines ignored)::

    theory <name>
    include <other-theory>
    sort <name> [<arity>]
    datatype <sort> = ctor | ctor(sort, ...) | ...
    const <name> : <sort>
    const <name> : <sort> * <sort> -> <sort>
    axiom <name> : "<prop>"
    lemma <name> [simp] : "<prop>"
    rewrite <name> : "<prop>"            # equation/iff, joins the simp set
    definition <name> : "<prop>"          # head(args) = body or head(..) <-> body
    rule <name> <intro|elim|dest|rewrite> : "<premise --> ... --> conclusion>"
    bundle <name> : <lemma> <lemma> ...
    transitive <rel> <rel> <rel> : <lemma>

A dump of a loaded theory reloads to an equivalent theory.
"""

from __future__ import annotations

import re
from pathlib import Path

from .kernel import (
    ConstSig,
    Prop,
    RuleSpec,
    Sort,
    Theory,
    TheoryError,
    implies_chain,
    rule_from_fact,
    strip_implies,
)
from .kernel.rewrite import RuleFormatError
from .kernel.props import Eq, Iff, Atom, strip_forall
from .kernel.terms import App, Const
from .syntax.terms import PropParser, TermParseError, render_prop


class TheoryFileError(Exception):
    def __init__(self, message: str, line: int = 0) -> None:
        super().__init__(f"line {line}: {message}" if line else message)
        self.line = line


_QUOTED = re.compile(r'"([^"]*)"')


def _strip_comment(line: str) -> str:
    out = []
    in_str = False
    for ch in line:
        if ch == '"':
            in_str = not in_str
        if ch == "#" and not in_str:
            break
        out.append(ch)
    return "".join(out).strip()


def _parse_sort_expr(text: str, theory: Theory, lineno: int) -> Sort:
    text = text.strip()
    m = re.fullmatch(r"(\w+)(?:\((.*)\))?", text)
    if not m:
        raise TheoryFileError(f"bad sort expression {text!r}", lineno)
    name, inner = m.group(1), m.group(2)
    params: tuple[Sort, ...] = ()
    if inner:
        depth = 0
        parts, cur = [], []
        for ch in inner:
            if ch == "(":
                depth += 1
            elif ch == ")":
                depth -= 1
            if ch == "," and depth == 0:
                parts.append("".join(cur))
                cur = []
            else:
                cur.append(ch)
        parts.append("".join(cur))
        params = tuple(_parse_sort_expr(p, theory, lineno) for p in parts)
    return Sort(name, params)


def _parse_prop(text: str, theory: Theory, lineno: int, schematics: bool = False) -> Prop:
    try:
        return PropParser(theory, schematics=schematics).parse_prop(text)
    except TermParseError as e:
        raise TheoryFileError(f"bad proposition: {e.message}", lineno)


def _quoted_payload(rest: str, lineno: int) -> str:
    m = _QUOTED.search(rest)
    if not m:
        raise TheoryFileError("expected a quoted proposition", lineno)
    return m.group(1)


def load_theory_text(text: str, resolve_include=None) -> Theory:
    """Parse a theory file.  ``resolve_include`` maps a name to a Theory."""
    theory: Theory | None = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = _strip_comment(raw)
        if not line:
            continue
        head, _, rest = line.partition(" ")
        rest = rest.strip()
        try:
            if head == "theory":
                if theory is not None:
                    raise TheoryFileError("duplicate theory header", lineno)
                theory = Theory(rest.split()[0])
                continue
            if theory is None:
                raise TheoryFileError("file must start with a theory header", lineno)
            if head == "include":
                if resolve_include is None:
                    raise TheoryFileError("includes not available here", lineno)
                theory.merge(resolve_include(rest.split()[0]))
            elif head == "sort":
                parts = rest.split()
                arity = int(parts[1]) if len(parts) > 1 else 0
                theory.add_sort(parts[0], arity)
            elif head == "datatype":
                _load_datatype(theory, rest, lineno)
            elif head == "const":
                name, _, sig_text = rest.partition(":")
                theory.add_const(name.strip(), _parse_sig(sig_text, theory, lineno))
            elif head in ("axiom", "lemma", "rewrite", "definition"):
                _load_fact(theory, head, rest, lineno)
            elif head == "rule":
                _load_rule(theory, rest, lineno)
            elif head == "bundle":
                name, _, lemmas = rest.partition(":")
                theory.add_bundle(name.strip(), lemmas.split())
            elif head == "transitive":
                spec, _, lemma = rest.partition(":")
                r1, r2, rout = spec.split()
                theory.add_transitivity(r1, r2, rout, lemma.strip())
            else:
                raise TheoryFileError(f"unknown declaration {head!r}", lineno)
        except (TheoryError, RuleFormatError, ValueError) as e:
            raise TheoryFileError(str(e), lineno)
    if theory is None:
        raise TheoryFileError("empty theory file")
    return theory


def _parse_sig(text: str, theory: Theory, lineno: int) -> ConstSig:
    text = text.strip()
    if "->" in text:
        args_text, _, result_text = text.rpartition("->")
        args = tuple(
            _parse_sort_expr(a, theory, lineno) for a in args_text.split("*")
        )
        return ConstSig(args, _parse_sort_expr(result_text, theory, lineno))
    return ConstSig((), _parse_sort_expr(text, theory, lineno))


def _load_datatype(theory: Theory, rest: str, lineno: int) -> None:
    sort_text, _, ctors_text = rest.partition("=")
    sort = _parse_sort_expr(sort_text, theory, lineno)
    ctors: list[tuple[str, list[Sort]]] = []
    for part in ctors_text.split("|"):
        part = part.strip()
        m = re.fullmatch(r"(\w+)(?:\((.*)\))?", part)
        if not m:
            raise TheoryFileError(f"bad constructor {part!r}", lineno)
        args = []
        if m.group(2):
            depth = 0
            cur: list[str] = []
            pieces = []
            for ch in m.group(2):
                if ch == "(":
                    depth += 1
                elif ch == ")":
                    depth -= 1
                if ch == "," and depth == 0:
                    pieces.append("".join(cur))
                    cur = []
                else:
                    cur.append(ch)
            pieces.append("".join(cur))
            args = [_parse_sort_expr(p, theory, lineno) for p in pieces]
        ctors.append((m.group(1), args))
    theory.add_datatype(sort, ctors)


def _load_fact(theory: Theory, head: str, rest: str, lineno: int) -> None:
    name_part, _, _ = rest.partition(":")
    tokens = name_part.split()
    name = tokens[0]
    simp = "[simp]" in tokens or head == "rewrite"
    prop = _parse_prop(_quoted_payload(rest, lineno), theory, lineno)
    definiendum = None
    if head == "definition":
        _, core = strip_forall(prop)
        match core:
            case Eq(App(Const(h, _), _), _):
                definiendum = h
            case Iff(Atom(App(Const(h, _), _)), _):
                definiendum = h
            case _:
                raise TheoryFileError(
                    f"definition {name} must define an applied constant", lineno
                )
    theory.add_fact(name, prop, simp=simp, definiendum=definiendum)
    if head == "rewrite":
        try:
            rule_from_fact(name, prop)
        except RuleFormatError as e:
            raise TheoryFileError(str(e), lineno)


def _load_rule(theory: Theory, rest: str, lineno: int) -> None:
    name_part, _, _ = rest.partition(":")
    parts = name_part.split()
    if len(parts) != 2:
        raise TheoryFileError("expected: rule <name> <kind> : \"...\"", lineno)
    name, kind = parts
    schema = _parse_prop(_quoted_payload(rest, lineno), theory, lineno, schematics=True)
    premises, conclusion = strip_implies(schema)
    theory.add_rule(RuleSpec(name, tuple(premises), conclusion, kind))


def dump_theory(theory: Theory, registry: "TheoryRegistry | None" = None) -> str:
    """Emit the theory's own declarations; reloads to an equivalent theory."""
    inherited_sorts: set[str] = {"bool"}
    inherited_consts: set[str] = set()
    inherited_facts: set[str] = set()
    inherited_rules: set[str] = set(Theory("_probe").rules)
    inherited_dts: set[str] = set()
    inherited_bundles: set[str] = set()
    inherited_trans: set[tuple[str, str]] = set()
    if registry is not None:
        for inc in theory.includes:
            base = registry.get(inc)
            inherited_sorts |= set(base.sorts)
            inherited_consts |= set(base.consts)
            inherited_facts |= set(base.facts)
            inherited_rules |= set(base.rules)
            inherited_dts |= set(base.datatypes)
            inherited_bundles |= set(base.bundles)
            inherited_trans |= set(base.transitivity)

    lines = [f"theory {theory.name}"]
    for inc in theory.includes:
        lines.append(f"include {inc}")
    dt_sorts = {dt.sort.name for dt in theory.datatypes.values()}
    for s, arity in theory.sorts.items():
        if s in inherited_sorts or s in dt_sorts:
            continue
        lines.append(f"sort {s} {arity}" if arity else f"sort {s}")
    for key, dt in theory.datatypes.items():
        if key in inherited_dts:
            continue
        ctors = []
        for c in dt.constructors:
            if c.arg_sorts:
                ctors.append(f"{c.name}({', '.join(str(s) for s in c.arg_sorts)})")
            else:
                ctors.append(c.name)
        lines.append(f"datatype {dt.sort} = {' | '.join(ctors)}")
    for cname, sig in theory.consts.items():
        if cname in theory.ctor_consts or cname in inherited_consts:
            continue
        lines.append(f"const {cname} : {sig}")
    for rname, rule in theory.rules.items():
        if rname in inherited_rules:
            continue
        schema = render_prop(implies_chain(list(rule.premises), rule.conclusion))
        lines.append(f'rule {rname} {rule.kind} : "{schema}"')
    for fname, info in theory.facts.items():
        if fname in theory.auto_facts or fname in inherited_facts:
            continue
        text = render_prop(info.prop)
        if info.definiendum:
            lines.append(f'definition {fname} : "{text}"')
        elif info.simp:
            lines.append(f'rewrite {fname} : "{text}"')
        else:
            lines.append(f'axiom {fname} : "{text}"')
    for bname, lemmas in theory.bundles.items():
        if bname in inherited_bundles:
            continue
        lines.append(f"bundle {bname} : {' '.join(lemmas)}")
    for (r1, r2), (rout, lemma) in theory.transitivity.items():
        if (r1, r2) in inherited_trans:
            continue
        lines.append(f"transitive {r1} {r2} {rout} : {lemma}")
    return "\n".join(lines) + "\n"


class TheoryRegistry:
    """Loads and freezes the theories of a directory (``*.theory`` files)."""

    def __init__(self) -> None:
        self._theories: dict[str, Theory] = {}
        self._sources: dict[str, str] = {}

    def add_text(self, text: str) -> Theory:
        th = load_theory_text(text, resolve_include=self._resolve)
        th.freeze()
        self._theories[th.name] = th
        return th

    def _resolve(self, name: str) -> Theory:
        if name in self._theories:
            return self._theories[name]
        if name in self._sources:
            return self.add_text(self._sources[name])
        raise TheoryError(f"unknown included theory {name}")

    def load_dir(self, path: str | Path) -> None:
        files = sorted(Path(path).glob("*.theory"))
        for f in files:
            text = f.read_text(encoding="utf-8")
            m = re.search(r"^theory\s+(\w+)", text, re.MULTILINE)
            if m:
                self._sources[m.group(1)] = text
        for name in list(self._sources):
            if name not in self._theories:
                self._resolve(name)

    def get(self, name: str) -> Theory:
        if name not in self._theories:
            raise TheoryError(f"unknown theory {name}")
        return self._theories[name]

    def names(self) -> list[str]:
        return sorted(self._theories)


def builtin_registry() -> TheoryRegistry:
    """Registry over the theories bundled with the package."""
    reg = TheoryRegistry()
    reg.load_dir(Path(__file__).parent / "theories")
    return reg
