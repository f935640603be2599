"""Session management: theories, shared lemma databases, script checking."""

from __future__ import annotations

import json
import threading
from dataclasses import dataclass, field
from pathlib import Path

from .hammer import Hammer, HammerConfig, LemmaDB
from .interp import Advanced, Completed, Interp, StepError, StepOutcome
from .kernel import Kernel, Prop
from .proofstate import ProofState, initial_state, serialize_state
from .syntax.script import ParseError, Script, Statement, parse_script, parse_statements
from .syntax.terms import PropParser, TermParseError
from .theoryfile import TheoryRegistry, builtin_registry


class EngineError(Exception):
    pass


class Engine:
    """Shared, thread-safe home for theories and learning databases."""

    def __init__(
        self,
        registry: TheoryRegistry | None = None,
        hammer_config: HammerConfig | None = None,
    ) -> None:
        self.registry = registry or builtin_registry()
        self.hammer_config = hammer_config or HammerConfig()
        self._dbs: dict[str, LemmaDB] = {}
        self._lock = threading.Lock()

    def db_for(self, theory_name: str) -> LemmaDB:
        with self._lock:
            if theory_name not in self._dbs:
                self._dbs[theory_name] = LemmaDB(self.registry.get(theory_name))
            return self._dbs[theory_name]

    def reset_dbs(self) -> None:
        with self._lock:
            dbs = list(self._dbs.values())
        for db in dbs:
            db.reset()

    def db_version(self) -> int:
        with self._lock:
            return sum(db.version for db in self._dbs.values())

    def save_dbs(self, path: str | Path) -> None:
        records = []
        with self._lock:
            items = list(self._dbs.items())
        for name, db in items:
            snap = db.snapshot()
            for feats, used in snap.records:
                records.append(
                    {
                        "theory": name,
                        "features": {str(k): v for k, v in feats.items()},
                        "premises": list(used),
                    }
                )
        lines = [json.dumps(r, sort_keys=True) for r in records]
        Path(path).write_text("\n".join(lines) + ("\n" if lines else ""), encoding="utf-8")

    def load_dbs(self, path: str | Path) -> None:
        text = Path(path).read_text(encoding="utf-8")
        per_theory: dict[str, list] = {}
        for line in text.splitlines():
            line = line.strip()
            if not line:
                continue
            obj = json.loads(line)
            feats = {int(k): float(v) for k, v in obj["features"].items()}
            per_theory.setdefault(obj["theory"], []).append((feats, tuple(obj["premises"])))
        for name, records in per_theory.items():
            db = self.db_for(name)
            with db._lock:  # load-time only; sessions are not running yet
                db._records = records

    def new_session(self, theory_name: str) -> "Session":
        theory = self.registry.get(theory_name)
        kernel = Kernel(theory)
        hammer = Hammer(kernel, self.db_for(theory_name), self.hammer_config)
        return Session(theory_name, kernel, Interp(kernel, hammer))

    # -- whole-script checking --------------------------------------------

    def check_script(self, script: Script, theory_name: str | None = None):
        """Run a parsed script start to finish; returns (outcome, steps)."""
        name = script.theory or theory_name
        if name is None:
            raise EngineError("script names no theory and none was given")
        session = self.new_session(name)
        err = session.set_goal(script.goal_text)
        if err is not None:
            return err, 0
        outcome: StepOutcome | None = None
        for i, stmt in enumerate(script.statements):
            outcome = session.execute_statement(stmt)
            if isinstance(outcome, StepError):
                return outcome, i
            if isinstance(outcome, Completed):
                return outcome, i
        return outcome, len(script.statements) - 1


class Session:
    """One proof attempt: a state stack over a single theory."""

    def __init__(self, theory_name: str, kernel: Kernel, interp: Interp,
                 stack_limit: int = 512) -> None:
        self.theory_name = theory_name
        self.kernel = kernel
        self.interp = interp
        self.states: list[ProofState] = []
        self.stack_limit = stack_limit

    @property
    def state(self) -> ProofState:
        if not self.states:
            raise EngineError("no goal set")
        return self.states[-1]

    def set_goal(self, goal_text: str) -> StepError | None:
        try:
            goal = PropParser(self.kernel.theory).parse_prop(goal_text)
        except TermParseError as e:
            return StepError("term-error", f"goal: {e.message}")
        try:
            st = initial_state(self.theory_name, goal)
        except Exception as e:
            return StepError("term-error", str(e))
        self.states = [st]
        return None

    def execute_statement(self, stmt: Statement) -> StepOutcome:
        outcome = self.interp.step(self.state, stmt)
        match outcome:
            case Advanced(state) | Completed(_, state):
                self.states.append(state)
                if len(self.states) > self.stack_limit:
                    del self.states[1 : len(self.states) - self.stack_limit + 1]
        return outcome

    def execute_text(self, text: str) -> list[StepOutcome]:
        stmts = parse_statements(text)
        out: list[StepOutcome] = []
        for stmt in stmts:
            outcome = self.execute_statement(stmt)
            out.append(outcome)
            if isinstance(outcome, StepError):
                break
        return out

    def rollback(self, n: int) -> None:
        if n < 0 or n > len(self.states) - 1:
            raise EngineError(f"cannot roll back {n} steps")
        if n:
            del self.states[len(self.states) - n :]

    def serialized(self) -> str:
        return serialize_state(self.state)
