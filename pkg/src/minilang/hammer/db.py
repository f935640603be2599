"""The hammer's lemma store and self-learning premise database.

One database serves many sessions: appends are serialized behind a lock,
readers get consistent snapshots.  ``reset`` clears only the learned
goal-premise records; the lemma table always mirrors the theory.
"""

from __future__ import annotations

import json
import threading
from dataclasses import dataclass
from pathlib import Path

from ..kernel import Prop, Theory
from .features import classify_usage, knn_features, prop_symbols


@dataclass(frozen=True, slots=True)
class LemmaInfo:
    name: str
    prop: Prop
    usage: str  # rewrite | intro | dest | plain
    bundle: str | None


@dataclass(frozen=True, slots=True)
class DbSnapshot:
    version: int
    records: tuple[tuple[dict[int, float], tuple[str, ...]], ...]


class LemmaDB:
    def __init__(self, theory: Theory) -> None:
        self.theory = theory
        self.lemmas: dict[str, LemmaInfo] = {}
        self.lemma_syms: dict[str, set[str]] = {}
        for name, info in theory.facts.items():
            usage = classify_usage(name, info.prop)
            self.lemmas[name] = LemmaInfo(name, info.prop, usage, info.bundle)
            self.lemma_syms[name] = prop_symbols(info.prop)
        self._records: list[tuple[dict[int, float], tuple[str, ...]]] = []
        self._version = 0
        self._lock = threading.Lock()

    @property
    def version(self) -> int:
        with self._lock:
            return self._version

    def snapshot(self) -> DbSnapshot:
        with self._lock:
            return DbSnapshot(self._version, tuple(self._records))

    def record(self, goal: Prop, used: tuple[str, ...]) -> None:
        feats = knn_features(goal)
        with self._lock:
            self._records.append((feats, tuple(used)))

    def reset(self) -> None:
        with self._lock:
            self._records.clear()
            self._version += 1

    def size(self) -> int:
        with self._lock:
            return len(self._records)

    # -- persistence: one JSON record per line -------------------------

    def save(self, path: str | Path) -> None:
        with self._lock:
            records = list(self._records)
        lines = []
        for feats, used in records:
            lines.append(json.dumps(
                {"features": {str(k): v for k, v in feats.items()}, "premises": list(used)},
                sort_keys=True,
            ))
        Path(path).write_text("\n".join(lines) + ("\n" if lines else ""), encoding="utf-8")

    def load(self, path: str | Path) -> None:
        text = Path(path).read_text(encoding="utf-8")
        loaded = []
        for line in text.splitlines():
            line = line.strip()
            if not line:
                continue
            obj = json.loads(line)
            feats = {int(k): float(v) for k, v in obj["features"].items()}
            loaded.append((feats, tuple(obj["premises"])))
        with self._lock:
            self._records = loaded
