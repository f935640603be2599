"""Tactic-elimination refinement (translation step 4).

Repeatedly replaces APPLY statements by hammer-only discharges while the
refined script still checks: specialized maps first (simplifier tactics
become SIMPLIFY, unfolding becomes UNFOLD), then the generic
substitution that folds an APPLY's lemma arguments into the following
END/NEXT as WITH/WITHOUT hints.

Checking is incremental: a trial substitution at statement ``i`` resumes
from the recorded state after statement ``i - 1``.
"""

from __future__ import annotations

from dataclasses import replace

from ..engine import Engine, Session
from ..interp import Advanced, Completed, StepError
from ..proofstate import ProofState
from ..syntax.script import ApplyStmt, EndStmt, Script, SimplifyStmt, UnfoldStmt


class _Checker:
    """Runs scripts against one session, resuming from cached prefixes."""

    def __init__(self, engine: Engine, script: Script) -> None:
        theory = script.theory
        if theory is None:
            raise ValueError("script names no theory")
        self.session = engine.new_session(theory)
        self.goal_text = script.goal_text

    def run(self, statements, start_state: ProofState | None = None):
        """Execute statements; returns (completed, states-after-each)."""
        if start_state is None:
            err = self.session.set_goal(self.goal_text)
            if err is not None:
                return False, []
        else:
            self.session.states = [start_state]
        states: list[ProofState] = []
        outcome = None
        for stmt in statements:
            outcome = self.session.execute_statement(stmt)
            if isinstance(outcome, StepError):
                return False, states
            states.append(self.session.state)
            if isinstance(outcome, Completed):
                break
        done = isinstance(outcome, Completed) and len(states) == len(statements)
        return done, states


def _candidates(script: Script, i: int):
    stmt = script.statements[i]
    assert isinstance(stmt, ApplyStmt)
    stmts = script.statements
    if stmt.tactic == "auto_t":
        yield stmts[:i] + (SimplifyStmt(stmt.pos_args),) + stmts[i + 1 :]
    if stmt.tactic == "unfold_tac" and stmt.pos_args:
        yield stmts[:i] + (UnfoldStmt(stmt.pos_args),) + stmts[i + 1 :]
    nxt = stmts[i + 1] if i + 1 < len(stmts) else None
    if isinstance(nxt, EndStmt):
        merged = EndStmt(
            nxt.with_names + tuple(n for n in stmt.pos_args if n not in nxt.with_names),
            nxt.without_names + tuple(n for n in stmt.neg_args if n not in nxt.without_names),
            nxt.is_next,
        )
        yield stmts[:i] + (merged,) + stmts[i + 2 :]


def refine(script: Script, engine: Engine) -> Script:
    """Fixpoint of checkability-preserving APPLY elimination."""
    checker = _Checker(engine, script)
    ok, states = checker.run(script.statements)
    if not ok:
        return script
    current = script
    changed = True
    while changed:
        changed = False
        for i, stmt in enumerate(current.statements):
            if not isinstance(stmt, ApplyStmt):
                continue
            before = states[i - 1] if i > 0 else None
            for new_stmts in _candidates(current, i):
                ok, tail = checker.run(new_stmts[i:], start_state=before)
                if ok:
                    current = replace(current, statements=new_stmts)
                    states = states[:i] + tail
                    changed = True
                    break
            if changed:
                break
    return current


def apply_count(script: Script) -> int:
    return sum(1 for s in script.statements if isinstance(s, ApplyStmt))
