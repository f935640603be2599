"""Benchmark harness: check proof attempts, compute pass@k, bucket failures.

Corpus files are JSON lines, one goal per line::

    {"id": "t1", "theory": "prop_demo", "goal": "p --> p",
     "context_lemmas": [...], "reference_proof": "..."}     # last two optional

Attempts live in a directory with one subdirectory per entry id holding
numbered ``*.mini`` sample files; samples are ordered by filename.
"""

from __future__ import annotations

import json
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

from .engine import Engine
from .interp import Advanced, Completed, StepError
from .syntax.script import ParseError, parse_script

CATEGORIES = ("syntax", "term", "proof-op", "atp", "premature-termination", "timeout")

_KIND_TO_CATEGORY = {
    "term-error": "term",
    "bad-reference": "term",
    "rule-mismatch": "proof-op",
    "op-inapplicable": "proof-op",
    "atp-failed": "atp",
}


@dataclass(frozen=True, slots=True)
class GoalEntry:
    id: str
    theory: str
    goal: str
    context_lemmas: tuple[str, ...] = ()
    reference_proof: str | None = None


@dataclass(frozen=True, slots=True)
class Attempt:
    entry_id: str
    sample_index: int
    verdict: str  # "pass" | category
    first_error: str = ""  # location of the first error: "line L" or "statement N"

    @property
    def passed(self) -> bool:
        return self.verdict == "pass"


@dataclass(slots=True)
class BenchConfig:
    ks: tuple[int, ...] = (1, 8)
    reset_db: bool = True
    attempt_timeout: float = 60.0
    workers: int = 4


def load_corpus(path: str | Path) -> list[GoalEntry]:
    entries: list[GoalEntry] = []
    seen: set[str] = set()
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        obj = json.loads(line)
        entry = GoalEntry(
            id=str(obj["id"]),
            theory=str(obj["theory"]),
            goal=str(obj["goal"]),
            context_lemmas=tuple(obj.get("context_lemmas", ())),
            reference_proof=obj.get("reference_proof"),
        )
        if entry.id in seen:
            raise ValueError(f"duplicate corpus id {entry.id} at line {lineno}")
        seen.add(entry.id)
        entries.append(entry)
    return entries


def check_attempt(entry: GoalEntry, script_text: str, engine: Engine,
                  timeout: float = 60.0) -> Attempt:
    """Verdict: pass iff the engine reaches Completed; otherwise the class
    of the first error encountered, with its (deterministic) location."""

    def attempt(verdict: str, where: str = "") -> Attempt:
        return Attempt(entry.id, 0, verdict, where)

    deadline = time.monotonic() + timeout
    try:
        script = parse_script(script_text)
    except ParseError as e:
        return attempt("syntax", f"line {e.line}:{e.column}")
    session = engine.new_session(script.theory or entry.theory)
    err = session.set_goal(script.goal_text)
    if err is not None:
        return attempt("term", "goal")
    outcome = None
    for i, stmt in enumerate(script.statements, start=1):
        if time.monotonic() > deadline:
            return attempt("timeout", f"statement {i}")
        outcome = session.execute_statement(stmt)
        if isinstance(outcome, StepError):
            category = _KIND_TO_CATEGORY.get(outcome.kind, "proof-op")
            return attempt(category, f"statement {i}")
        if isinstance(outcome, Completed):
            return attempt("pass")
    return attempt("premature-termination", "end of script")


def pass_at_k(attempts_by_entry: dict[str, list[Attempt]], k: int) -> float:
    """Fraction of entries with at least one pass among the first k samples."""
    if not attempts_by_entry:
        return 0.0
    passed = 0
    for entry_id, attempts in attempts_by_entry.items():
        if len(attempts) < k:
            raise ValueError(f"entry {entry_id} has fewer than {k} samples")
        if any(a.passed for a in attempts[:k]):
            passed += 1
    return passed / len(attempts_by_entry)


def _attempt_files(attempts_dir: Path, entry_id: str) -> list[Path]:
    sub = attempts_dir / entry_id
    if not sub.is_dir():
        return []
    return sorted(sub.glob("*.mini"))


def run_benchmark(
    corpus_path: str | Path,
    attempts_dir: str | Path,
    config: BenchConfig,
    engine: Engine | None = None,
) -> dict:
    engine = engine or Engine()
    entries = load_corpus(corpus_path)
    attempts_dir = Path(attempts_dir)
    if config.reset_db:
        engine.reset_dbs()

    def run_entry(entry: GoalEntry) -> tuple[str, list[Attempt]]:
        out: list[Attempt] = []
        for i, path in enumerate(_attempt_files(attempts_dir, entry.id), start=1):
            res = check_attempt(
                entry, path.read_text(encoding="utf-8"), engine, config.attempt_timeout
            )
            out.append(Attempt(entry.id, i, res.verdict, res.first_error))
        return entry.id, out

    with ThreadPoolExecutor(max_workers=config.workers) as pool:
        results = dict(pool.map(run_entry, entries))

    by_entry = {e.id: results.get(e.id, []) for e in entries}
    max_k = max(config.ks) if config.ks else 1
    padded: dict[str, list[Attempt]] = {}
    for eid, attempts in by_entry.items():
        xs = list(attempts)
        while len(xs) < max_k:
            xs.append(Attempt(eid, len(xs) + 1, "premature-termination", "missing sample"))
        padded[eid] = xs

    histogram = {c: 0 for c in CATEGORIES}
    for attempts in by_entry.values():
        for a in attempts:
            if not a.passed:
                histogram[a.verdict] += 1

    report = {
        "schema": "minilang-bench-report-v1",
        "corpus": str(Path(corpus_path).name),
        "entries": {
            eid: [
                {"sample": a.sample_index, "verdict": a.verdict, "at": a.first_error}
                for a in attempts
            ]
            for eid, attempts in sorted(by_entry.items())
        },
        "pass_at": {str(k): pass_at_k(padded, k) for k in config.ks},
        "failure_histogram": histogram,
        "environment": {
            "reset_db": config.reset_db,
            "attempt_timeout": config.attempt_timeout,
            "ks": list(config.ks),
        },
    }
    return report


def report_to_json(report: dict) -> str:
    return json.dumps(report, sort_keys=True, indent=2) + "\n"
