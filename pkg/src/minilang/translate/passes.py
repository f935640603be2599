"""The ordered normalization pipeline over Isar-S scripts.

Every pass is a total function on scripts that either rewrites or raises
``Untranslatable`` with a reason; the corpus driver records failures per
pass and drops the proof.  The pipeline is idempotent on its own output.
"""

from __future__ import annotations

import re
from dataclasses import replace

from .isar import (
    Also,
    ApplyTac,
    Assume,
    Brace,
    ConsiderCasesStmt,
    Done,
    Fix,
    Have,
    IsarScript,
    IsarStmt,
    Justification,
    LetAbbrev,
    Method,
    Moreover,
    NextSep,
    Note,
    Obtain,
    ProofBlock,
    Show,
    Subgoal,
    TacAlt,
    TacPlus,
    TacRestrict,
    TacSeq,
    TacTry,
    Tactic,
    TacticApp,
)


class Untranslatable(Exception):
    def __init__(self, reason: str) -> None:
        super().__init__(reason)
        self.reason = reason


# builtin rule arities, used to simulate goal counts syntactically
_RULE_ARITY = {"conjI": 2, "iffI": 2, "disjCI": 1, "notI": 1, "disjI1": 1, "disjI2": 1}
_ALL_GOALS = {"auto", "simp_all", "fastforce_all"}
_TERMINAL = {"auto", "simp", "fastforce", "force", "blast", "simp_all"}


def _map_just(just: Justification, fn) -> Justification:
    """Rebuild a justification, applying ``fn`` to nested statement lists."""
    if just.sub is None:
        return just
    return replace(just, sub=replace(just.sub, body=tuple(fn(list(just.sub.body)))))


def _walk_stmts(stmts: list[IsarStmt], fn) -> list[IsarStmt]:
    """Bottom-up: rewrite nested bodies first, then this list via fn."""
    out: list[IsarStmt] = []
    for s in stmts:
        match s:
            case Have() | Show() | Obtain() | ConsiderCasesStmt() | Subgoal():
                s = replace(s, just=_map_just(s.just, lambda b: _walk_stmts(b, fn)))
            case Brace(body):
                s = Brace(tuple(_walk_stmts(list(body), fn)))
        out.append(s)
    return fn(out)


def _rewrite_script(script: IsarScript, fn) -> IsarScript:
    return replace(script, just=_map_just(script.just, lambda b: _walk_stmts(b, fn)))


# -- N1: unfold ?thesis -------------------------------------------------------


def n1_resolve_thesis(script: IsarScript) -> IsarScript:
    def in_just(just: Justification, goal: str) -> Justification:
        if just.sub is None:
            return just
        return replace(just, sub=replace(just.sub, body=tuple(in_body(just.sub.body, goal))))

    def in_body(body, goal: str):
        out = []
        for s in body:
            match s:
                case Show(text, just, chain):
                    new_text = goal if text == "?thesis" else text
                    if "?case" in new_text:
                        raise Untranslatable("?case is outside the curated subset")
                    out.append(Show(new_text, in_just(just, new_text), chain))
                case Have():
                    inner_goal = _have_goal_text(s)
                    out.append(replace(s, just=in_just(s.just, inner_goal)))
                case Obtain() | ConsiderCasesStmt():
                    out.append(replace(s, just=in_just(s.just, goal)))
                case Subgoal(just):
                    out.append(Subgoal(in_just(just, goal)))
                case Brace(inner):
                    out.append(Brace(tuple(in_body(inner, goal))))
                case _:
                    out.append(s)
        return out

    return replace(script, just=in_just(script.just, script.goal_text))


def _have_goal_text(h: Have) -> str:
    return h.text


# -- N2: name anonymous facts ---------------------------------------------------


def n2_name_anonymous(script: IsarScript) -> IsarScript:
    used: set[str] = set()

    def collect(just: Justification) -> None:
        if just.sub is None:
            return
        for s in just.sub.body:
            match s:
                case Have(name, _, j, _, _, _):
                    if name:
                        used.add(name)
                    collect(j)
                case Obtain(_, _, items, j, _):
                    used.update(n for n, _ in items if n)
                    collect(j)
                case Assume(items):
                    used.update(n for n, _ in items if n)
                case Show(_, j, _) | ConsiderCasesStmt(_, j, _) | Subgoal(j):
                    collect(j)
                case Brace(body):
                    for inner in body:
                        if hasattr(inner, "just"):
                            collect(inner.just)

    collect(script.just)
    counter = [0]

    def fresh() -> str:
        while True:
            counter[0] += 1
            name = f"F{counter[0]}"
            if name not in used:
                return name

    def fix(stmts: list[IsarStmt]) -> list[IsarStmt]:
        out = []
        for s in stmts:
            match s:
                case Have(None, _, _, _, _, _):
                    s = replace(s, name=fresh())
                case Obtain(_, _, items, _, _):
                    s = replace(
                        s, items=tuple((n or fresh(), t) for n, t in items)
                    )
                case Assume(items):
                    s = Assume(tuple((n or fresh(), t) for n, t in items))
            out.append(s)
        return out

    return _rewrite_script(script, fix)


# -- N3/N4/N5: pronouns, connectives, expression references ---------------------


def _fact_name(s: IsarStmt) -> str | None:
    match s:
        case Have(name, _, _, _, _, _):
            return name
        case Obtain(_, _, items, _, _):
            return items[-1][0]
        case Assume(items):
            return items[-1][0]
        case Note(name, _):
            return name
        case Brace(body):
            for inner in reversed(body):
                n = _fact_name(inner)
                if n:
                    return n
    return None


def _norm_text(text: str) -> str:
    return re.sub(r"\s+", " ", text.strip())


def _scope_pass(script: IsarScript, handle) -> IsarScript:
    """Traverse statement lists tracking `this` and named facts in scope.

    ``handle(stmt, this, buffer, facts)`` returns (new_stmts, new_this,
    new_buffer); nested bodies are rewritten first with inherited scope.
    """

    def in_body(body, facts: dict[str, str]):
        out = []
        this: str | None = None
        buffer: list[str] = []
        local = dict(facts)
        for s in body:
            s = rebuild(s, local)
            new_stmts, this, buffer = handle(s, this, buffer, local)
            for ns in new_stmts:
                name = _fact_name(ns)
                if name:
                    text = getattr(ns, "text", None)
                    if isinstance(ns, Assume):
                        for n, t in ns.items:
                            if n:
                                local[_norm_text(t)] = n
                    elif isinstance(ns, Obtain):
                        for n, t in ns.items:
                            if n:
                                local[_norm_text(t)] = n
                    elif text is not None:
                        local[_norm_text(text)] = name
                out.append(ns)
        return out

    def rebuild(s: IsarStmt, facts):
        match s:
            case Have() | Show() | Obtain() | ConsiderCasesStmt() | Subgoal():
                just = s.just
                if just.sub is not None:
                    just = replace(
                        just, sub=replace(just.sub, body=tuple(in_body(just.sub.body, facts)))
                    )
                return replace(s, just=just)
            case Brace(body):
                return Brace(tuple(in_body(body, facts)))
        return s

    return replace(
        script,
        just=replace(
            script.just,
            sub=replace(
                script.just.sub, body=tuple(in_body(script.just.sub.body, {}))
            )
            if script.just.sub is not None
            else None,
        ),
    )


def n3_resolve_pronouns(script: IsarScript) -> IsarScript:
    def handle(s, this, buffer, facts):
        def subst_names(names: tuple[str, ...], that_names: tuple[str, ...] = ()) -> tuple[str, ...]:
            out = []
            for n in names:
                if n == "this":
                    if this is None:
                        raise Untranslatable("`this` with no preceding fact")
                    out.append(this)
                elif n == "that":
                    if not that_names:
                        raise Untranslatable("`that` outside a have-if block")
                    out.extend(that_names)
                else:
                    out.append(n)
            return tuple(out)

        match s:
            case Have() | Show() | Obtain() | ConsiderCasesStmt():
                that = tuple(n for n, _ in getattr(s, "if_texts", ()) if n)
                s = replace(s, just=_subst_in_just(s.just, subst_names, that))
            case Note(name, refs):
                s = Note(name, subst_names(refs))
        name = _fact_name(s)
        new_this = name if name else this
        if isinstance(s, (Moreover, Also, NextSep)):
            new_this = this
        return [s], new_this, buffer

    return _scope_pass(script, handle)


def _subst_in_just(just: Justification, subst, that=()) -> Justification:
    def walk_just(j: Justification) -> Justification:
        new_using = subst(j.using, that)
        new_unfolding = subst(j.unfolding, that)
        return replace(j, using=new_using, unfolding=new_unfolding)

    return walk_just(just)


def n4_connectives_to_using(script: IsarScript) -> IsarScript:
    def handle(s, this, buffer, facts):
        match s:
            case Moreover() | Also():
                if this is None:
                    raise Untranslatable("moreover/also with no preceding fact")
                return [], this, buffer + [this]
            case Have() | Show() | Obtain() | ConsiderCasesStmt() if s.chain:
                extra: list[str] = []
                for c in s.chain:
                    if c == "then":
                        if this is None:
                            raise Untranslatable("`then` with no preceding fact")
                        extra.append(this)
                    elif c.startswith("from:"):
                        extra.extend(x for x in c[5:].split(",") if x)
                    elif c.startswith("with:"):
                        extra.extend(x for x in c[5:].split(",") if x)
                        if this is None:
                            raise Untranslatable("`with` with no preceding fact")
                        extra.append(this)
                    elif c in ("ultimately", "finally"):
                        if this is None:
                            raise Untranslatable(f"`{c}` with no preceding fact")
                        extra.extend(buffer + [this])
                        buffer = []
                resolved = []
                for x in extra:
                    if x == "this":
                        resolved.append(this)
                    else:
                        resolved.append(x)
                merged = tuple(dict.fromkeys([*resolved, *s.just.using]))
                s = replace(s, chain=(), just=replace(s.just, using=merged))
        name = _fact_name(s)
        new_this = name if name else this
        if isinstance(s, NextSep):
            new_this = None
            buffer = []
        return [s], new_this, list(buffer)

    return _scope_pass(script, handle)


def n5_expression_refs(script: IsarScript) -> IsarScript:
    def handle(s, this, buffer, facts):
        def subst(names, that=()):
            out = []
            for n in names:
                if n.startswith('"'):
                    key = _norm_text(n.strip('"'))
                    if key not in facts:
                        raise Untranslatable(f"unresolved fact expression {n}")
                    out.append(facts[key])
                else:
                    out.append(n)
            return tuple(out)

        match s:
            case Have() | Show() | Obtain() | ConsiderCasesStmt():
                s = replace(s, just=_subst_in_just(s.just, subst))
            case Note(name, refs):
                s = Note(name, subst(refs))
        name = _fact_name(s)
        return [s], (name if name else this), buffer

    return _scope_pass(script, handle)


# -- N6: subgoal -> show ---------------------------------------------------------


def n6_subgoal(script: IsarScript) -> IsarScript:
    def in_just(just: Justification, goal: str) -> Justification:
        if just.sub is None:
            return just
        body = []
        for s in just.sub.body:
            match s:
                case Subgoal(j):
                    body.append(Show(goal, in_just(j, goal)))
                case Have():
                    body.append(replace(s, just=in_just(s.just, s.text)))
                case Show(text, j, chain):
                    body.append(Show(text, in_just(j, text), chain))
                case Obtain() | ConsiderCasesStmt():
                    body.append(replace(s, just=in_just(s.just, goal)))
                case Brace(inner):
                    body.append(s)  # braces handled by N13 after this
                case _:
                    body.append(s)
        return replace(just, sub=replace(just.sub, body=tuple(body)))

    return replace(script, just=in_just(script.just, script.goal_text))


# -- N7/N8: tactic positions, unfolding ------------------------------------------

_TACTIC_METHODS = {"simp", "auto", "fastforce", "force", "blast", "simp_all", "unfold_tac"}


def n7_tactics_to_apply(script: IsarScript) -> IsarScript:
    def fix_just(j: Justification) -> Justification:
        if j.kind == "by":
            return replace(j, kind="apply", done=True)
        if j.kind == "proof" and j.sub is not None and j.sub.method is not None:
            m = j.sub.method
            if m.name in _TACTIC_METHODS:
                lead = ApplyTac((TacticApp(m.name, m.args),))
                sub = ProofBlock(Method("-"), (lead,) + j.sub.body)
                return replace(j, sub=sub)
        return j

    def fix(stmts):
        out = []
        for s in stmts:
            if hasattr(s, "just"):
                s = replace(s, just=fix_just(s.just))
            out.append(s)
        return out

    script = _rewrite_script(script, fix)
    return replace(script, just=fix_just(script.just))


def n8_unfolding(script: IsarScript) -> IsarScript:
    def fix_just(j: Justification) -> Justification:
        if not j.unfolding:
            return j
        tac = TacticApp("unfold_tac", tuple(j.unfolding))
        if j.kind == "apply":
            return replace(j, unfolding=(), tactics=(tac,) + j.tactics)
        if j.kind == "proof" and j.sub is not None:
            sub = replace(j.sub, body=(ApplyTac((tac,)),) + j.sub.body)
            return replace(j, unfolding=(), sub=sub)
        return replace(j, unfolding=())

    def fix(stmts):
        out = []
        for s in stmts:
            if hasattr(s, "just"):
                s = replace(s, just=fix_just(s.just))
            out.append(s)
        return out

    script = _rewrite_script(script, fix)
    return replace(script, just=fix_just(script.just))


# -- N9: one goal per block --------------------------------------------------------


def n9_one_goal_per_block(script: IsarScript) -> IsarScript:
    def fix(stmts):
        segments: list[list[IsarStmt]] = [[]]
        for s in stmts:
            if isinstance(s, NextSep):
                segments.append([])
            else:
                segments[-1].append(s)
        rebuilt: list[list[IsarStmt]] = []
        for seg in segments:
            current: list[IsarStmt] = []
            for s in seg:
                current.append(s)
                if isinstance(s, Show):
                    rebuilt.append(current)
                    current = []
            if current:
                rebuilt.append(current)
        rebuilt = [seg for seg in rebuilt if seg]
        out: list[IsarStmt] = []
        for i, seg in enumerate(rebuilt):
            if i:
                out.append(NextSep())
            out.extend(seg)
        return out

    return _rewrite_script(script, fix)


# -- N10: hoist fixes and assumes ----------------------------------------------------


def n10_hoist(script: IsarScript) -> IsarScript:
    def fix(stmts):
        segments: list[list[IsarStmt]] = [[]]
        for s in stmts:
            if isinstance(s, NextSep):
                segments.append([])
            else:
                segments[-1].append(s)
        out: list[IsarStmt] = []
        for i, seg in enumerate(segments):
            if i:
                out.append(NextSep())
            front = [s for s in seg if isinstance(s, (Fix, Assume))]
            rest = [s for s in seg if not isinstance(s, (Fix, Assume))]
            out.extend(front + rest)
        return out

    return _rewrite_script(script, fix)


# -- N11/N12: induction-family and goal_cases normalization ---------------------------

_METHOD_RENAME = {"induct": "induction", "induct_tac": "induction", "case_tac": "cases"}


def n11_induct_variants(script: IsarScript) -> IsarScript:
    def fix_just(j: Justification) -> Justification:
        if j.sub is not None and j.sub.method is not None:
            m = j.sub.method
            if m.name in _METHOD_RENAME:
                j = replace(j, sub=replace(j.sub, method=Method(_METHOD_RENAME[m.name], m.args)))
        return j

    def fix(stmts):
        return [replace(s, just=fix_just(s.just)) if hasattr(s, "just") else s for s in stmts]

    script = _rewrite_script(script, fix)
    return replace(script, just=fix_just(script.just))


def n12_goal_cases(script: IsarScript) -> IsarScript:
    def fix_just(j: Justification) -> Justification:
        if j.sub is not None and j.sub.method is not None and j.sub.method.name == "goal_cases":
            j = replace(j, sub=replace(j.sub, method=Method("-")))
        return j

    def fix(stmts):
        return [replace(s, just=fix_just(s.just)) if hasattr(s, "just") else s for s in stmts]

    script = _rewrite_script(script, fix)
    return replace(script, just=fix_just(script.just))


# -- N13: brace blocks -> have-if-for ---------------------------------------------------


def n13_braces(script: IsarScript) -> IsarScript:
    def fix(stmts):
        out = []
        for s in stmts:
            if not isinstance(s, Brace):
                out.append(s)
                continue
            body = list(s.body)
            for_vars: list[str] = []
            if_texts: list[tuple[str | None, str]] = []
            while body and isinstance(body[0], (Fix, Assume)):
                head = body.pop(0)
                if isinstance(head, Fix):
                    for_vars.extend(head.names)
                else:
                    if_texts.extend(head.items)
            if not body or not isinstance(body[-1], Have):
                raise Untranslatable("brace block must end in a fact")
            last = body.pop()
            inner: list[IsarStmt] = list(body)
            inner.append(Show(last.text, last.just))
            sub = ProofBlock(Method("-"), tuple(inner))
            out.append(
                Have(
                    last.name,
                    last.text,
                    Justification("proof", sub=sub),
                    (),
                    tuple(if_texts),
                    tuple(for_vars),
                )
            )
        return out

    return _rewrite_script(script, fix)


# -- N14: eliminate combinators -----------------------------------------------------------


def _flatten_tactic(t: Tactic) -> list[TacticApp]:
    match t:
        case TacticApp():
            return [t]
        case TacSeq(parts):
            out: list[TacticApp] = []
            for p in parts:
                out.extend(_flatten_tactic(p))
            return out
        case TacPlus(body) | TacTry(body):
            return _flatten_tactic(body)
        case TacAlt(parts):
            return _flatten_tactic(parts[0])
        case TacRestrict(body, _):
            return _flatten_tactic(body)
    raise Untranslatable(f"unknown tactic form {t!r}")


def n14_combinators(script: IsarScript) -> IsarScript:
    def fix_just(j: Justification) -> Justification:
        if not j.tactics:
            return j
        flat: list[TacticApp] = []
        for t in j.tactics:
            flat.extend(_flatten_tactic(t))
        return replace(j, tactics=tuple(flat))

    def fix(stmts):
        out = []
        for s in stmts:
            if isinstance(s, ApplyTac):
                flat: list[TacticApp] = []
                for t in s.tactics:
                    flat.extend(_flatten_tactic(t))
                s = ApplyTac(tuple(flat))
            elif hasattr(s, "just"):
                s = replace(s, just=fix_just(s.just))
            out.append(s)
        return out

    script = _rewrite_script(script, fix)
    return replace(script, just=fix_just(script.just))


# -- N15: leading-goal discipline -----------------------------------------------------------


def _simulate_and_duplicate(tactics: tuple[TacticApp, ...]) -> tuple[TacticApp, ...]:
    """Duplicate a trailing all-goals tactic once per open goal."""
    renamed = [
        TacticApp("simp", t.pos_args, t.neg_args) if t.name == "simp_all" else t
        for t in tactics
    ]
    count = 1
    for t in renamed[:-1]:
        if t.name == "rule" and t.pos_args and t.pos_args[0] in _RULE_ARITY:
            count += _RULE_ARITY[t.pos_args[0]] - 1
        elif t.name in _TERMINAL:
            count = max(count - 1, 0)
    if not renamed:
        return tuple(renamed)
    last = renamed[-1]
    if last.name in _ALL_GOALS or (last.name == "simp" and tactics[-1].name == "simp_all"):
        trailing = 1
        i = len(renamed) - 2
        while i >= 0 and renamed[i] == last:
            trailing += 1
            i -= 1
        while trailing < count:
            renamed.append(last)
            trailing += 1
    return tuple(renamed)


def n15_leading_goal(script: IsarScript) -> IsarScript:
    def fix_just(j: Justification) -> Justification:
        if j.tactics:
            j = replace(j, tactics=_simulate_and_duplicate(j.tactics))
        return j

    def fix(stmts):
        out = []
        for s in stmts:
            if isinstance(s, ApplyTac):
                s = ApplyTac(_simulate_and_duplicate(s.tactics))
            elif hasattr(s, "just"):
                s = replace(s, just=fix_just(s.just))
            out.append(s)
        return out

    script = _rewrite_script(script, fix)
    return replace(script, just=fix_just(script.just))


PASSES: tuple[tuple[str, object], ...] = (
    ("N1-thesis", n1_resolve_thesis),
    ("N2-names", n2_name_anonymous),
    ("N3-pronouns", n3_resolve_pronouns),
    ("N4-connectives", n4_connectives_to_using),
    ("N5-expr-refs", n5_expression_refs),
    ("N6-subgoal", n6_subgoal),
    ("N7-apply", n7_tactics_to_apply),
    ("N8-unfolding", n8_unfolding),
    ("N9-one-goal", n9_one_goal_per_block),
    ("N10-hoist", n10_hoist),
    ("N11-induct", n11_induct_variants),
    ("N12-goal-cases", n12_goal_cases),
    ("N13-braces", n13_braces),
    ("N14-combinators", n14_combinators),
    ("N15-leading-goal", n15_leading_goal),
)


def normalize(script: IsarScript) -> IsarScript:
    for _, fn in PASSES:
        script = fn(script)
    return script
