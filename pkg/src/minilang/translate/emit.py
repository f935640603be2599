"""Normalized Isar-S to MiniLang statement emission (translation step 3)."""

from __future__ import annotations

from dataclasses import dataclass, field

from ..kernel import Theory
from ..syntax.script import (
    ApplyStmt,
    CaseSplitStmt,
    ConsiderCases,
    ConsiderObtain,
    EndStmt,
    HaveStmt,
    InductStmt,
    IntroStmt,
    LetStmt,
    RuleStmt,
    Script,
    Statement,
)
from .isar import (
    ApplyTac,
    Assume,
    ConsiderCasesStmt,
    Done,
    Fix,
    Have,
    IsarScript,
    IsarStmt,
    Justification,
    LetAbbrev,
    NextSep,
    Note,
    Obtain,
    ProofBlock,
    Show,
    TacticApp,
)
from .passes import Untranslatable

_TACTIC_MAP = {
    "simp": "auto_t",
    "auto": "auto_t",
    "simp_all": "auto_t",
    "fastforce": "fastforce_t",
    "force": "fastforce_t",
    "blast": "fastforce_t",
    "unfold_tac": "unfold_tac",
    "rule": "rule_t",
}
_TERMINAL_T = {"auto_t", "fastforce_t"}


@dataclass(slots=True)
class _Emitter:
    theory: Theory
    out: list[Statement] = field(default_factory=list)
    renames: list[dict[str, tuple[str, ...]]] = field(default_factory=lambda: [{}])
    hyp_counter: int = 0

    # -- name plumbing -----------------------------------------------------

    def push_scope(self) -> None:
        self.renames.append({})

    def pop_scope(self) -> None:
        self.renames.pop()

    def bind(self, name: str, targets: tuple[str, ...]) -> None:
        self.renames[-1][name] = targets

    def map_name(self, name: str) -> tuple[str, ...]:
        for scope in reversed(self.renames):
            if name in scope:
                return scope[name]
        return (name,)

    def map_names(self, names: tuple[str, ...]) -> tuple[str, ...]:
        out: list[str] = []
        for n in names:
            for m in self.map_name(n):
                if m not in out:
                    out.append(m)
        return tuple(out)

    def _map_tactic(self, t: TacticApp) -> ApplyStmt:
        if not isinstance(t, TacticApp):
            raise Untranslatable("combinators not normalized away")
        name = _TACTIC_MAP.get(t.name)
        if name is None:
            raise Untranslatable(f"unsupported tactic {t.name}")
        return ApplyStmt(name, self.map_names(t.pos_args), self.map_names(t.neg_args))

    # -- emission ---------------------------------------------------------------

    def emit_script(self, script: IsarScript) -> Script:
        self.emit_justification(script.just, use_next=False)
        return Script(script.name, script.goal_text, tuple(self.out), script.theory)

    def emit_justification(self, just: Justification, use_next: bool) -> None:
        """Emit the statements that close the current leading subgoal."""
        if just.unfolding:
            raise Untranslatable("unfolding not normalized away")
        if just.kind == "apply":
            self._emit_apply_chain(just, use_next)
            return
        if just.kind == "proof":
            if just.using:
                raise Untranslatable("`using` with a structured proof")
            assert just.sub is not None
            self._emit_block(just.sub, use_next)
            return
        raise Untranslatable(f"justification kind {just.kind} not normalized")

    def _emit_apply_chain(self, just: Justification, use_next: bool) -> None:
        using = self.map_names(just.using)
        mapped = [self._map_tactic(t) for t in just.tactics]
        if using:
            # chained facts are arguments of the tactics as well as END hints
            mapped = [
                ApplyStmt(
                    st.tactic,
                    tuple(dict.fromkeys((*using, *st.pos_args))),
                    st.neg_args,
                )
                if st.tactic in _TERMINAL_T
                else st
                for st in mapped
            ]
        close_after = [i for i, st in enumerate(mapped) if st.tactic in _TERMINAL_T]
        if not close_after:
            # chain never attempts a close itself; one END settles the goal
            self.out.extend(mapped)
            self.out.append(EndStmt(using, (), use_next))
            return
        final = close_after[-1]
        for i, st in enumerate(mapped):
            self.out.append(st)
            if i in close_after:
                is_final = i == final
                self.out.append(EndStmt(using, (), use_next if is_final else True))

    def _emit_block(self, block: ProofBlock, use_next: bool) -> None:
        method = block.method
        if method is None:
            self.out.append(RuleStmt(None))
        elif method.name == "-":
            pass
        elif method.name == "rule":
            if len(method.args) != 1:
                raise Untranslatable("rule method needs exactly one rule")
            self.out.append(RuleStmt(method.args[0]))
        elif method.name == "induction":
            if len(method.args) != 1:
                raise Untranslatable("induction over one variable only")
            self.out.append(InductStmt(method.args[0]))
        elif method.name == "cases":
            if len(method.args) != 1:
                raise Untranslatable("cases over one term only")
            self.out.append(CaseSplitStmt(method.args[0].strip('"')))
        else:
            raise Untranslatable(f"method {method.name} not normalized")

        segments: list[list[IsarStmt]] = [[]]
        for s in block.body:
            if isinstance(s, NextSep):
                segments.append([])
            else:
                segments[-1].append(s)
        segments = [seg for seg in segments if seg]
        if not segments:
            raise Untranslatable("empty proof block")

        for i, seg in enumerate(segments):
            last_segment = i == len(segments) - 1
            self.push_scope()
            self._emit_segment(seg, use_next=(use_next if last_segment else True))
            self.pop_scope()

    def _emit_segment(self, seg: list[IsarStmt], use_next: bool) -> None:
        idx = 0
        assume_labels: list[str] = []
        while idx < len(seg) and isinstance(seg[idx], (Fix, Assume)):
            s = seg[idx]
            if isinstance(s, Assume):
                assume_labels.extend(name or "" for name, _ in s.items)
            idx += 1
        if idx > 0:
            # one INTRO absorbs all hoisted binders of this segment
            self.out.append(IntroStmt())
            for name in assume_labels:
                self.hyp_counter += 1
                if name:
                    self.bind(name, (f"Hyp{self.hyp_counter}",))

        closed = False
        while idx < len(seg):
            s = seg[idx]
            idx += 1
            match s:
                case Have():
                    self._emit_have(s)
                case Obtain():
                    self._emit_obtain(s)
                case ConsiderCasesStmt():
                    self._emit_consider(s)
                case Show(_, just, _):
                    self.emit_justification(just, use_next=use_next)
                    closed = True
                case ApplyTac(tactics):
                    self.out.extend(self._map_tactic(t) for t in tactics)
                case Done():
                    self.out.append(EndStmt((), (), use_next))
                    closed = True
                case LetAbbrev(name, text):
                    self.out.append(LetStmt(name, text))
                case Note(name, facts):
                    self.bind(name, self.map_names(facts))
                case Fix() | Assume():
                    raise Untranslatable("binders not hoisted to the block head")
                case _:
                    raise Untranslatable(f"cannot translate {s.command}")
        if not closed:
            raise Untranslatable("proof segment does not close its goal")

    def _emit_have(self, s: Have) -> None:
        text = s.text
        if s.if_texts or s.for_vars:
            parts = [f"({t})" for _, t in s.if_texts] + [f"({s.text})"]
            text = " --> ".join(parts)
            if s.for_vars:
                text = f"forall {' '.join(s.for_vars)}. {text}"
        self.out.append(HaveStmt(s.name, text))
        self.push_scope()
        if s.if_texts or s.for_vars:
            # INTRO re-opens the closed form inside the nested proof
            self.out.append(IntroStmt())
            for name, _ in s.if_texts:
                self.hyp_counter += 1
                if name:
                    self.bind(name, (f"Hyp{self.hyp_counter}",))
        self.emit_justification(s.just, use_next=False)
        self.pop_scope()

    def _emit_obtain(self, s: Obtain) -> None:
        self.out.append(
            ConsiderObtain(s.variables, s.sort_text, tuple((n, t) for n, t in s.items))
        )
        self.emit_justification(s.just, use_next=False)

    def _emit_consider(self, s: ConsiderCasesStmt) -> None:
        self.out.append(ConsiderCases(s.cases))
        self.emit_justification(s.just, use_next=False)


def to_minilang(script: IsarScript, theory: Theory) -> Script:
    """Map a normalized Isar-S script onto MiniLang statements."""
    emitter = _Emitter(theory)
    return emitter.emit_script(script)
