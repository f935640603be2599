"""Corpus-level translation driver and its report."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from ..engine import Engine
from ..interp import Completed
from ..syntax.script import Script, render_script
from .emit import to_minilang
from .isar import Have, IsarParseError, IsarScript, Justification, parse_isar
from .passes import PASSES, Untranslatable
from .refine import apply_count, refine


@dataclass(slots=True)
class ProofReport:
    file: str
    status: str  # "ok" | "failed"
    stage: str = ""
    reason: str = ""
    have_count: int = 0
    commands: dict[str, int] = field(default_factory=dict)
    apply_before: int = 0
    apply_after: int = 0


@dataclass(slots=True)
class PassReport:
    passes: list[dict] = field(default_factory=list)
    proofs: list[ProofReport] = field(default_factory=list)

    def to_dict(self) -> dict:
        ok = [p for p in self.proofs if p.status == "ok"]
        histogram: dict[str, int] = {}
        for p in ok:
            for cmd, n in p.commands.items():
                histogram[cmd] = histogram.get(cmd, 0) + n
        buckets: dict[str, list[int]] = {}
        for p in self.proofs:
            key = str(min(p.have_count, 6))
            buckets.setdefault(key, []).append(1 if p.status == "ok" else 0)
        by_have = {
            k: sum(v) / len(v) for k, v in sorted(buckets.items(), key=lambda kv: kv[0])
        }
        return {
            "schema": "minilang-translate-report-v1",
            "passes": self.passes,
            "proofs": [
                {
                    "file": p.file,
                    "status": p.status,
                    "stage": p.stage,
                    "reason": p.reason,
                    "have_count": p.have_count,
                    "apply_before": p.apply_before,
                    "apply_after": p.apply_after,
                }
                for p in sorted(self.proofs, key=lambda p: p.file)
            ],
            "success_rate": (len(ok) / len(self.proofs)) if self.proofs else 0.0,
            "command_histogram": dict(sorted(histogram.items())),
            "success_by_have_count": by_have,
        }


def _count_haves(script: IsarScript) -> int:
    count = 0

    def walk_just(j: Justification) -> None:
        nonlocal count
        if j.sub is None:
            return
        for s in j.sub.body:
            if isinstance(s, Have):
                count += 1
            if hasattr(s, "just"):
                walk_just(s.just)
            if hasattr(s, "body"):
                for inner in s.body:
                    if isinstance(inner, Have):
                        count += 1
                    if hasattr(inner, "just"):
                        walk_just(inner.just)

    walk_just(script.just)
    return count


def translate_proof(text: str, engine: Engine, theory_name: str | None = None):
    """parse -> normalize -> emit -> check -> refine -> re-check.

    Returns (Script | None, stage, reason, have_count, apply_before).
    """
    try:
        isar = parse_isar(text)
    except IsarParseError as e:
        return None, "parse", str(e), 0, 0
    have_count = _count_haves(isar)
    current = isar
    for name, fn in PASSES:
        try:
            current = fn(current)
        except Untranslatable as e:
            return None, name, e.reason, have_count, 0
    theory = engine.registry.get(current.theory or theory_name)
    try:
        mini = to_minilang(current, theory)
    except Untranslatable as e:
        return None, "emit", e.reason, have_count, 0
    if mini.theory is None:
        mini = Script(mini.name, mini.goal_text, mini.statements, theory_name)
    before = apply_count(mini)
    outcome, _ = engine.check_script(mini)
    if not isinstance(outcome, Completed):
        detail = getattr(outcome, "detail", str(outcome))
        return None, "check", f"emitted script does not check: {detail}", have_count, before
    refined = refine(mini, engine)
    outcome2, _ = engine.check_script(refined)
    if not isinstance(outcome2, Completed):
        return None, "refine", "refined script no longer checks", have_count, before
    return refined, "", "", have_count, before


def translate_corpus(
    in_dir: str | Path,
    engine: Engine,
    out_dir: str | Path,
    theory_name: str | None = None,
) -> PassReport:
    """Translate every ``*.isar`` file; only checking scripts are emitted."""
    in_dir = Path(in_dir)
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    report = PassReport()
    files = sorted(in_dir.glob("*.isar"))
    pass_counts = {name: {"in": 0, "out": 0, "failures": []} for name, _ in PASSES}
    pass_counts["parse"] = {"in": 0, "out": 0, "failures": []}
    pass_counts["emit"] = {"in": 0, "out": 0, "failures": []}
    pass_counts["check"] = {"in": 0, "out": 0, "failures": []}
    pass_counts["refine"] = {"in": 0, "out": 0, "failures": []}
    order = ["parse", *[n for n, _ in PASSES], "emit", "check", "refine"]

    for path in files:
        text = path.read_text(encoding="utf-8")
        script, stage, reason, have_count, before = translate_proof(text, engine, theory_name)
        alive = True
        for stage_name in order:
            if not alive:
                break
            pass_counts[stage_name]["in"] += 1
            if stage == stage_name:
                pass_counts[stage_name]["failures"].append(
                    {"file": path.name, "reason": reason}
                )
                alive = False
            else:
                pass_counts[stage_name]["out"] += 1
        if script is None:
            report.proofs.append(
                ProofReport(path.name, "failed", stage, reason, have_count)
            )
            continue
        commands: dict[str, int] = {}
        for stmt in script.statements:
            commands[stmt.command] = commands.get(stmt.command, 0) + 1
        out_path = out_dir / (path.stem + ".mini")
        out_path.write_text(render_script(script), encoding="utf-8")
        report.proofs.append(
            ProofReport(
                path.name, "ok", "", "", have_count, commands, before, apply_count(script)
            )
        )

    report.passes = [
        {"name": name, **pass_counts[name]} for name in order
    ]
    return report


def report_to_json(report: PassReport) -> str:
    return json.dumps(report.to_dict(), sort_keys=True, indent=2) + "\n"
