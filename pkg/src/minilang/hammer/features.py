"""Goal features, lemma-usage classification, and similarity.

Features are multisets of constant symbols and connective shapes hashed
into a fixed number of buckets; variables never contribute, so
alpha-variant goals produce identical vectors.
"""

from __future__ import annotations

import hashlib
import math

from ..kernel import (
    And,
    Atom,
    App,
    Const,
    Eq,
    Exists,
    FalseP,
    Forall,
    Iff,
    Implies,
    Not,
    Or,
    Prop,
    TrueP,
    strip_forall,
    strip_implies,
)

FEATURE_DIM = 1024


def _term_features(t, out: list[str]) -> None:
    match t:
        case App(fn, args):
            out.append(f"c:{fn.name}")
            for a in args:
                _term_features(a, out)
        case Const(name, _):
            out.append(f"c:{name}")
        case _:
            pass  # variables are ignored


def _prop_features(p: Prop, out: list[str]) -> None:
    match p:
        case Atom(App(fn, args)):
            out.append(f"h:{fn.name}")
            for a in args:
                _term_features(a, out)
        case Atom(t):
            _term_features(t, out)
        case Eq(a, b):
            out.append("h:=")
            _term_features(a, out)
            _term_features(b, out)
        case Not(b):
            out.append("p:not")
            _prop_features(b, out)
        case And(a, b):
            out.append("p:and")
            _prop_features(a, out)
            _prop_features(b, out)
        case Or(a, b):
            out.append("p:or")
            _prop_features(a, out)
            _prop_features(b, out)
        case Implies(a, b):
            out.append("p:imp")
            _prop_features(a, out)
            _prop_features(b, out)
        case Iff(a, b):
            out.append("p:iff")
            _prop_features(a, out)
            _prop_features(b, out)
        case Forall(_, s, b):
            out.append(f"p:all:{s}")
            _prop_features(b, out)
        case Exists(_, s, b):
            out.append(f"p:ex:{s}")
            _prop_features(b, out)
        case TrueP() | FalseP():
            out.append("p:const")


def _bucket(feature: str) -> int:
    digest = hashlib.blake2b(feature.encode(), digest_size=4).digest()
    return int.from_bytes(digest, "big") % FEATURE_DIM


def knn_features(goal: Prop) -> dict[int, float]:
    """Sparse hashed feature vector of a goal."""
    raw: list[str] = []
    _prop_features(goal, raw)
    vec: dict[int, float] = {}
    for f in raw:
        b = _bucket(f)
        vec[b] = vec.get(b, 0.0) + 1.0
    return vec


def weighted_jaccard(a: dict[int, float], b: dict[int, float]) -> float:
    if not a or not b:
        return 0.0
    keys = set(a) | set(b)
    num = sum(min(a.get(k, 0.0), b.get(k, 0.0)) for k in keys)
    den = sum(max(a.get(k, 0.0), b.get(k, 0.0)) for k in keys)
    return num / den if den else 0.0


def prop_symbols(p: Prop) -> set[str]:
    raw: list[str] = []
    _prop_features(p, raw)
    return {f.split(":", 1)[1] for f in raw if f.startswith(("c:", "h:"))}


def classify_usage(name: str, prop: Prop) -> str:
    """Guess how a lemma is best used: rewrite | intro | dest | plain."""
    if "simp" in name or "def" in name:
        return "rewrite"
    _, core = strip_forall(prop)
    premises, concl = strip_implies(core)
    if isinstance(concl, (Eq, Iff)):
        return "rewrite"
    if premises:
        if isinstance(concl, (FalseP, Not)):
            return "dest"
        return "intro"
    if isinstance(concl, Not):
        return "dest"
    return "plain"


def mepo_scores(
    goal: Prop, hyps: list[Prop], lemma_syms: dict[str, set[str]]
) -> dict[str, float]:
    """Relevance by rarity-weighted symbol overlap with the goal."""
    freq: dict[str, int] = {}
    for syms in lemma_syms.values():
        for s in syms:
            freq[s] = freq.get(s, 0) + 1

    relevant = prop_symbols(goal)
    for h in hyps:
        relevant |= prop_symbols(h)

    def weight(sym: str) -> float:
        return 1.0 / (1.0 + math.log1p(freq.get(sym, 0)))

    scores: dict[str, float] = {}
    for name, syms in lemma_syms.items():
        if not syms:
            scores[name] = 0.0
            continue
        shared = sum(weight(s) for s in syms & relevant)
        scores[name] = shared / (1.0 + len(syms))
    return scores
