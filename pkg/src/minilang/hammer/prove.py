"""The ATP entry point: preprocess, select premises, race backends.

Backends run in deterministic lockstep rounds; at the end of each round
the finished successes are inspected and the fixed priority order
(resolution, then depth-search, then simplifier closure) picks the
winner.  Arbitration therefore never depends on wall-clock interleaving.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field, replace

from ..kernel import Not, Prop, Theory, TrueP, derived
from ..kernel.rewrite import (
    RewriteRule,
    Rewriter,
    RuleFormatError,
    conv_from_trace,
    rule_from_fact,
    simp_rules_of,
)
from ..kernel.thm import Kernel, Thm
from ..proofstate import Context
from .db import DbSnapshot, LemmaDB
from .features import knn_features, mepo_scores, weighted_jaccard
from .resolution import ResolutionConfig, ResolutionProver
from .tableau import OutOfBudget, TableauConfig, TableauProver

BACKEND_PRIORITY = ("resolution", "search", "simp")


@dataclass(frozen=True, slots=True)
class ProveRequest:
    context: Context
    goal: Prop
    with_hints: tuple[str, ...] = ()
    without_hints: tuple[str, ...] = ()
    timeout: float = 5.0
    opened: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        if self.timeout <= 0:
            raise ValueError("timeout must be positive")


@dataclass(frozen=True, slots=True)
class Proved:
    thm: Thm
    used_premises: tuple[str, ...]
    backend: str

    @property
    def ok(self) -> bool:
        return True

    def signature(self) -> tuple:
        return ("proved", self.thm.conclusion, frozenset(self.thm.hypotheses),
                self.used_premises, self.backend)


@dataclass(frozen=True, slots=True)
class Failed:
    reasons: tuple[tuple[str, str], ...]  # (backend, timeout|saturated|depth-exhausted)

    @property
    def ok(self) -> bool:
        return False

    def signature(self) -> tuple:
        return ("failed", self.reasons)


ProveResult = Proved | Failed


@dataclass(slots=True)
class HammerConfig:
    premise_budget: int = 64
    timeout: float = 5.0
    preprocess_steps: int = 200
    search_premises: int = 12
    knn_weight: float = 1.0
    tableau: TableauConfig = field(default_factory=TableauConfig)
    resolution: ResolutionConfig = field(default_factory=ResolutionConfig)


def select_premises(
    req: ProveRequest,
    db: LemmaDB,
    budget: int,
    snapshot: DbSnapshot | None = None,
    knn_weight: float = 1.0,
) -> list[str]:
    """Hints first, then k-NN + symbol-relevance ranking; WITHOUT names
    are demoted to the tail of the selected window, never removed."""
    snap = snapshot if snapshot is not None else db.snapshot()
    opened = set(req.opened)
    visible = {
        name: info
        for name, info in db.lemmas.items()
        if info.bundle is None or info.bundle in opened
    }

    hints = []
    for name in req.with_hints:
        if name in visible and name not in hints:
            hints.append(name)

    goal_f = knn_features(req.goal)
    knn_score: dict[str, float] = {}
    for feats, premises in snap.records:
        sim = weighted_jaccard(goal_f, feats)
        if sim <= 0.0:
            continue
        for p in premises:
            if p in visible:
                knn_score[p] = knn_score.get(p, 0.0) + sim

    lemma_syms = {n: db.lemma_syms[n] for n in visible}
    mepo = mepo_scores(req.goal, req.context.hyp_props(), lemma_syms)

    rest = [n for n in visible if n not in hints]
    rest.sort(key=lambda n: (-(knn_weight * knn_score.get(n, 0.0) + mepo.get(n, 0.0)), n))

    window = (hints + rest)[: max(budget, len(hints))]
    without = set(req.without_hints)
    kept = [n for n in window if n not in without]
    demoted = [n for n in window if n in without]
    return kept + demoted


def resolution_prove(
    kernel: Kernel,
    hyp_thms: list[Thm],
    premise_names: list[str],
    goal: Prop,
    res_config: ResolutionConfig,
    tab_config: TableauConfig,
    deadline: float | None,
) -> Thm | str:
    """Resolution search, then a kernel replay guided by its instances.

    Returns the theorem on success, a failure reason string otherwise.
    """
    prover = ResolutionProver(res_config, deadline)
    inputs: list[tuple[object, Prop]] = []
    for i, t in enumerate(hyp_thms):
        inputs.append((("hyp", i), t.conclusion))
    for name in premise_names:
        inputs.append((("lemma", name), kernel.theory.fact(name)))
    inputs.append((("goal",), Not(goal)))
    outcome = prover.run(inputs)
    if not outcome.proved:
        return outcome.reason
    hints: dict[Prop, list[tuple]] = {}
    facts: list[Thm] = []
    for i, t in enumerate(hyp_thms):
        if ("hyp", i) in outcome.used_inputs:
            facts.append(t)
    used_names = [n for n in premise_names if ("lemma", n) in outcome.used_inputs]
    for name in used_names:
        thm = kernel.axiom(name)
        facts.append(thm)
        tuples = outcome.instances.get(("lemma", name))
        if tuples:
            hints.setdefault(thm.conclusion, []).extend(dict.fromkeys(tuples))
    for i, t in enumerate(hyp_thms):
        tuples = outcome.instances.get(("hyp", i))
        if tuples:
            hints.setdefault(t.conclusion, []).extend(dict.fromkeys(tuples))
    tcfg = replace(tab_config, max_depth=tab_config.max_depth + 4)
    replay = TableauProver(kernel, tcfg, instance_hints=hints, deadline=deadline)
    try:
        thm = replay.prove(facts, goal)
    except OutOfBudget as e:
        return e.reason
    if thm is None:
        return "depth-exhausted"
    return thm


class Hammer:
    """Session-facing prover handle over a shared lemma database."""

    def __init__(self, kernel: Kernel, db: LemmaDB, config: HammerConfig | None = None) -> None:
        self.kernel = kernel
        self.db = db
        self.config = config or HammerConfig()

    # -- pipeline --------------------------------------------------------

    def prove(self, req: ProveRequest) -> ProveResult:
        k = self.kernel
        theory = k.theory
        cfg = self.config
        deadline = time.monotonic() + min(req.timeout, cfg.timeout)
        snapshot = self.db.snapshot()

        selected = select_premises(req, self.db, cfg.premise_budget, snapshot,
                                   cfg.knn_weight)

        simp_rules = simp_rules_of(theory)
        goal1, trace, safe_mode = self._preprocess(req.goal, simp_rules)

        def finish(thm1: Thm, backend: str) -> Proved:
            thm = thm1
            if trace:
                conv = conv_from_trace(k, req.goal, trace, theory)
                thm = derived.iff_mpr(k, conv, thm1)
            used = self._used_premises(thm, selected)
            self.db.record(req.goal, used)
            return Proved(thm, used, backend)

        if isinstance(goal1, TrueP):
            return finish(k.true_intro(), "simp")

        hyp_thms = [k.assume(p) for p in req.context.hyp_props()]

        backends = [
            ("resolution", self._resolution_backend(req, goal1, hyp_thms, selected, deadline)),
            ("search", self._search_backend(req, goal1, hyp_thms, selected, deadline)),
            ("simp", self._simp_backend(goal1, simp_rules)),
        ]
        results: dict[str, Thm | str | None] = {}
        active = dict(backends)
        while active:
            for name in list(active):
                gen = active[name]
                try:
                    next(gen)
                except StopIteration as stop:
                    results[name] = stop.value
                    del active[name]
            for name in BACKEND_PRIORITY:
                got = results.get(name)
                if isinstance(got, Thm):
                    return finish(got, name)
        reasons = tuple(
            (name, results.get(name) if isinstance(results.get(name), str) else "depth-exhausted")
            for name in BACKEND_PRIORITY
        )
        return Failed(reasons)

    # -- preprocessing -----------------------------------------------------

    def _preprocess(self, goal: Prop, simp_rules: list[RewriteRule]):
        """Full simplifier first; on budget exhaustion, the safe subset."""
        rw = Rewriter(self.kernel.theory, simp_rules)
        res = rw.rewrite(goal, self.config.preprocess_steps)
        if res.normalized:
            return res.prop, res.trace, False
        safe = Rewriter(self.kernel.theory, simp_rules, safe_only=True)
        res2 = safe.rewrite(goal, self.config.preprocess_steps)
        if res2.normalized:
            return res2.prop, res2.trace, True
        return goal, [], False

    # -- backends ------------------------------------------------------------

    def _premise_thms(self, names: list[str]) -> list[Thm]:
        return [self.kernel.axiom(n) for n in names]

    def _rewrite_rules_from(self, names: list[str]) -> tuple[RewriteRule, ...]:
        rules = list(simp_rules_of(self.kernel.theory))
        have = {r.name for r in rules}
        for n in names:
            info = self.db.lemmas.get(n)
            if info is None or info.usage != "rewrite" or n in have:
                continue
            try:
                rules.append(rule_from_fact(n, info.prop))
            except RuleFormatError:
                continue
        return tuple(rules)

    def _resolution_backend(self, req, goal1, hyp_thms, selected, deadline):
        yield
        # leave the other backends wall-clock room when saturation flounders
        slice_end = min(deadline, time.monotonic() + 0.45 * self.config.timeout)
        return resolution_prove(
            self.kernel, hyp_thms, selected, goal1,
            self.config.resolution, self.config.tableau, slice_end,
        )

    def _search_backend(self, req, goal1, hyp_thms, selected, deadline):
        seeds = []
        for name in req.with_hints:
            if name in selected:
                seeds.append(name)
        for name in selected:
            if name not in seeds and len(seeds) < self.config.search_premises:
                seeds.append(name)
        facts = list(hyp_thms) + self._premise_thms(seeds)
        rules = self._rewrite_rules_from(seeds)
        base = self.config.tableau
        reason = "depth-exhausted"
        # early rounds stay cheap so a same-round resolution win is not delayed
        attempts = (
            (3, 800, 40),
            (6, 4000, 120),
            (base.max_depth, base.max_steps, base.gamma_total),
        )
        for depth, steps, gammas in attempts:
            yield
            cfg = replace(base, max_depth=depth, max_steps=steps, gamma_total=gammas)
            prover = TableauProver(self.kernel, cfg, rewrite_rules=rules, deadline=deadline)
            try:
                thm = prover.prove(facts, goal1)
            except OutOfBudget as e:
                reason = e.reason
                if e.reason == "timeout":
                    return "timeout"
                continue
            if thm is not None:
                return thm
        return reason

    def _simp_backend(self, goal1, simp_rules):
        yield
        rw = Rewriter(self.kernel.theory, simp_rules)
        res = rw.rewrite(goal1, self.config.preprocess_steps)
        if isinstance(res.prop, TrueP):
            conv = conv_from_trace(self.kernel, goal1, res.trace, self.kernel.theory)
            return derived.iff_mpr(self.kernel, conv, self.kernel.true_intro())
        return "depth-exhausted"

    # -- bookkeeping -----------------------------------------------------------

    def _used_premises(self, thm: Thm, selected: list[str]) -> tuple[str, ...]:
        used: set[str] = set()
        stack = [thm.cert]
        seen: set[int] = set()
        while stack:
            cid = stack.pop()
            if cid in seen:
                continue
            seen.add(cid)
            step = self.kernel.step(cid)
            if step.op == "axiom":
                used.add(step.params[0])
            stack.extend(step.thm_args)
        return tuple(n for n in selected if n in used)
