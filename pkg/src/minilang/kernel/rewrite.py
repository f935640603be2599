"""Conditional rewriting with replayable certificates.

Rules are oriented left-to-right equations (on terms) or iffs (on
propositions), optionally guarded by conditions that must themselves
rewrite to True.  ``rewrite_prop`` performs the search and returns a
trace; ``conv_from_trace`` turns a trace into a kernel theorem
``p <-> p'`` built purely from primitives and congruence.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from . import derived
from .matching import NoMatch, apply_subst_prop, apply_subst_term, match_term, match_prop
from .props import (
    FALSE,
    TRUE,
    And,
    Atom,
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
    free_vars,
    strip_forall,
    strip_implies,
    subst_prop,
)
from .terms import App, KernelError, Sort, Term, Var, replace_at, sort_of, subterm_at
from .theory import Theory, TheoryError
from .thm import Kernel, Thm


class RuleFormatError(Exception):
    """A fact that cannot be read as a rewrite rule."""


@dataclass(frozen=True, slots=True)
class RewriteRule:
    name: str
    conds: tuple[Prop, ...]
    lhs: Term | Prop
    rhs: Term | Prop
    is_term: bool
    binders: tuple[tuple[str, Sort], ...]

    @property
    def conditional(self) -> bool:
        return bool(self.conds)


def rule_from_fact(name: str, prop: Prop) -> RewriteRule:
    """Read a (forall-closed, conditional) equation or iff as a rule."""
    binders, core = strip_forall(prop)
    conds, concl = strip_implies(core)
    mapping = {v: Var("?" + v, s) for v, s in binders}
    conds_s = tuple(subst_prop(c, mapping) for c in conds)
    match concl:
        case Eq(lhs, rhs):
            from .terms import subst_term

            lhs_s = subst_term(lhs, mapping)
            rhs_s = subst_term(rhs, mapping)
            is_term = True
        case Iff(lp, rp):
            lhs_s = subst_prop(lp, mapping)
            rhs_s = subst_prop(rp, mapping)
            is_term = False
        case _:
            raise RuleFormatError(f"{name}: not an equation or iff")
    lhs_vars = (
        {v.name for v in (free_vars(lhs_s) if not is_term else _tvars(lhs_s))}
    )
    for part in (*conds_s, rhs_s):
        vs = free_vars(part) if isinstance(part, Prop) else _tvars(part)
        for v in vs:
            if v.is_schematic and v.name not in lhs_vars:
                raise RuleFormatError(f"{name}: variable {v.name} unbound by the lhs")
    if is_term and not isinstance(lhs_s, App):
        raise RuleFormatError(f"{name}: lhs must be a compound term")
    return RewriteRule(name, conds_s, lhs_s, rhs_s, is_term, tuple(binders))


def _tvars(t: Term) -> set[Var]:
    from .terms import term_vars

    return term_vars(t)


@dataclass(frozen=True, slots=True)
class RwStep:
    rule: str  # theory fact name, or "builtin:<tag>"
    prop_path: tuple[int, ...]
    term_path: tuple[int, ...] | None
    subst: tuple[tuple[str, Term], ...]
    cond_traces: tuple[tuple["RwStep", ...], ...] = ()


@dataclass(slots=True)
class RewriteResult:
    prop: Prop
    trace: list[RwStep]
    normalized: bool  # False when max_steps ran out before a normal form


# -- builtin logical simplifications -----------------------------------------


def _builtin_match(p: Prop) -> tuple[str, Prop] | None:
    match p:
        case And(TrueP(), q):
            return "and_true_l", q
        case And(q, TrueP()):
            return "and_true_r", q
        case And(FalseP(), _):
            return "and_false_l", FALSE
        case And(_, FalseP()):
            return "and_false_r", FALSE
        case Or(TrueP(), _):
            return "or_true_l", TRUE
        case Or(_, TrueP()):
            return "or_true_r", TRUE
        case Or(FalseP(), q):
            return "or_false_l", q
        case Or(q, FalseP()):
            return "or_false_r", q
        case Implies(TrueP(), q):
            return "imp_true_l", q
        case Implies(_, TrueP()):
            return "imp_true_r", TRUE
        case Implies(FalseP(), _):
            return "imp_false_l", TRUE
        case Not(TrueP()):
            return "not_true", FALSE
        case Not(FalseP()):
            return "not_false", TRUE
        case Iff(TrueP(), q):
            return "iff_true_l", q
        case Iff(q, TrueP()):
            return "iff_true_r", q
        case Eq(a, b) if a == b:
            return "eq_self", TRUE
        case Forall(_, _, TrueP()):
            return "all_true", TRUE
        case Exists(_, _, TrueP()):
            return "ex_true", TRUE
    return None


def _builtin_conv(k: Kernel, p: Prop, tag: str) -> Thm:
    """Certificate for a builtin step: |- p <-> p'."""

    def mk(fwd_b, bwd_b, q: Prop) -> Thm:
        fwd = k.implies_intro(fwd_b(k.assume(p)), p)
        bwd = k.implies_intro(bwd_b(k.assume(q)), q)
        return k.iff_intro(fwd, bwd)

    match tag, p:
        case "and_true_l", And(_, q):
            return mk(k.conj_elim_right, lambda h: k.conj_intro(k.true_intro(), h), q)
        case "and_true_r", And(q, _):
            return mk(k.conj_elim_left, lambda h: k.conj_intro(h, k.true_intro()), q)
        case ("and_false_l" | "and_false_r"), And(a, b):
            pick = k.conj_elim_left if tag == "and_false_l" else k.conj_elim_right
            return mk(pick, lambda h: k.false_elim(h, p), FALSE)
        case ("or_true_l" | "or_true_r"), Or(_, _):
            if tag == "or_true_l":
                bwd_b = lambda h: k.disj_intro_left(h, p.right)  # noqa: E731
            else:
                bwd_b = lambda h: k.disj_intro_right(h, p.left)  # noqa: E731
            return mk(lambda h: k.true_intro(), bwd_b, TRUE)
        case "or_false_l", Or(_, q):
            return mk(
                lambda h: k.disj_elim(h, k.false_elim(k.assume(FALSE), q), k.assume(q)),
                lambda h: k.disj_intro_right(h, FALSE),
                q,
            )
        case "or_false_r", Or(q, _):
            return mk(
                lambda h: k.disj_elim(h, k.assume(q), k.false_elim(k.assume(FALSE), q)),
                lambda h: k.disj_intro_left(h, FALSE),
                q,
            )
        case "imp_true_l", Implies(_, q):
            return mk(
                lambda h: k.implies_elim(h, k.true_intro()),
                lambda h: k.implies_intro(h, TRUE),
                q,
            )
        case "imp_true_r", Implies(a, _):
            return mk(
                lambda h: k.true_intro(),
                lambda h: k.implies_intro(k.true_intro(), a),
                TRUE,
            )
        case "imp_false_l", Implies(_, b):
            return mk(
                lambda h: k.true_intro(),
                lambda h: k.implies_intro(k.false_elim(k.assume(FALSE), b), FALSE),
                TRUE,
            )
        case "not_true", _:
            return mk(
                lambda h: k.not_elim(h, k.true_intro()),
                lambda h: k.false_elim(h, p),
                FALSE,
            )
        case "not_false", _:
            return mk(
                lambda h: k.true_intro(),
                lambda h: k.not_intro(k.assume(FALSE), FALSE),
                TRUE,
            )
        case "iff_true_l", Iff(_, q):
            return mk(
                lambda h: k.implies_elim(k.iff_elim_left(h), k.true_intro()),
                lambda h: k.iff_intro(
                    k.implies_intro(h, TRUE),
                    k.implies_intro(k.true_intro(), q),
                ),
                q,
            )
        case "iff_true_r", Iff(q, _):
            return mk(
                lambda h: k.implies_elim(k.iff_elim_right(h), k.true_intro()),
                lambda h: k.iff_intro(
                    k.implies_intro(k.true_intro(), q),
                    k.implies_intro(h, TRUE),
                ),
                q,
            )
        case "eq_self", Eq(a, _):
            return mk(
                lambda h: k.true_intro(),
                lambda h: k.eq_refl(a),
                TRUE,
            )
        case "all_true", Forall(v, s, _):
            return mk(
                lambda h: k.true_intro(),
                lambda h: k.forall_intro(k.true_intro(), Var(v, s)),
                TRUE,
            )
        case "ex_true", Exists(v, s, _):
            return mk(
                lambda h: k.true_intro(),
                lambda h: k.exists_intro(k.true_intro(), p, Var(v, s)),
                TRUE,
            )
    raise KernelError(f"unknown builtin rewrite {tag}")


# -- navigation ---------------------------------------------------------------


def _child(p: Prop, i: int) -> Prop:
    match p:
        case Not(b) | Forall(_, _, b) | Exists(_, _, b):
            if i == 0:
                return b
        case And(a, b) | Or(a, b) | Implies(a, b) | Iff(a, b):
            return (a, b)[i]
    raise KernelError(f"no child {i} in {p!r}")


def _with_child(p: Prop, i: int, c: Prop) -> Prop:
    match p:
        case Not(_):
            return Not(c)
        case Forall(v, s, _):
            return Forall(v, s, c)
        case Exists(v, s, _):
            return Exists(v, s, c)
        case And(a, b):
            return And(c, b) if i == 0 else And(a, c)
        case Or(a, b):
            return Or(c, b) if i == 0 else Or(a, c)
        case Implies(a, b):
            return Implies(c, b) if i == 0 else Implies(a, c)
        case Iff(a, b):
            return Iff(c, b) if i == 0 else Iff(a, c)
    raise KernelError(f"cannot replace child of {p!r}")


def _prop_children(p: Prop) -> int:
    match p:
        case Not(_) | Forall(_, _, _) | Exists(_, _, _):
            return 1
        case And(_, _) | Or(_, _) | Implies(_, _) | Iff(_, _):
            return 2
    return 0


def _atom_terms(p: Prop) -> list[tuple[tuple[int, ...], Term]]:
    """Indexable term roots of an atomic prop: Atom has one, Eq has two."""
    match p:
        case Atom(t):
            return [((0,), t)]
        case Eq(a, b):
            return [((0,), a), ((1,), b)]
    return []


def _replace_atom_term(p: Prop, root: int, t: Term) -> Prop:
    match p:
        case Atom(_):
            return Atom(t)
        case Eq(a, b):
            return Eq(t, b) if root == 0 else Eq(a, t)
    raise KernelError("not an atomic prop")


def _term_positions(t: Term) -> list[tuple[tuple[int, ...], Term]]:
    """Innermost-leftmost order."""
    out: list[tuple[tuple[int, ...], Term]] = []

    def walk(s: Term, path: tuple[int, ...]) -> None:
        if isinstance(s, App):
            for i, a in enumerate(s.args):
                walk(a, path + (i,))
        out.append((path, s))

    walk(t, ())
    return out


# -- the engine ---------------------------------------------------------------


class Rewriter:
    def __init__(
        self,
        theory: Theory,
        rules: list[RewriteRule],
        *,
        safe_only: bool = False,
        use_builtins: bool = True,
        cond_depth: int = 3,
    ) -> None:
        self.theory = theory
        if safe_only:
            rules = [r for r in rules if not r.conditional]
        self.rules = rules
        self.use_builtins = use_builtins
        self.cond_depth = cond_depth

    def rewrite(self, p: Prop, max_steps: int) -> RewriteResult:
        trace: list[RwStep] = []
        budget = [max_steps]
        current = p
        while budget[0] > 0:
            step = self._find_step(current, (), budget, self.cond_depth)
            if step is None:
                return RewriteResult(current, trace, True)
            rw, new_prop = step
            trace.append(rw)
            current = new_prop
            budget[0] -= 1
        normal = self._find_step(current, (), [1], self.cond_depth) is None
        return RewriteResult(current, trace, normal)

    # Finds the first redex in pre-order over the prop tree; within an
    # atomic prop, terms are tried innermost-leftmost.
    def _find_step(
        self,
        p: Prop,
        path: tuple[int, ...],
        budget: list[int],
        cond_depth: int,
        root: Prop | None = None,
        bound: frozenset[str] = frozenset(),
    ) -> tuple[RwStep, Prop] | None:
        root = root if root is not None else p

        hit = self._try_here(p, path, budget, cond_depth, root, bound)
        if hit is not None:
            return hit
        for i in range(_prop_children(p)):
            inner_bound = bound
            if isinstance(p, Forall | Exists):
                inner_bound = bound | {p.var}
            sub = self._find_step(
                _child(p, i), path + (i,), budget, cond_depth, root, inner_bound
            )
            if sub is not None:
                return sub
        return None

    def _try_here(
        self,
        p: Prop,
        path: tuple[int, ...],
        budget: list[int],
        cond_depth: int,
        root: Prop,
        bound: frozenset[str],
    ) -> tuple[RwStep, Prop] | None:
        # theory prop rules first, then builtins, then term rules inside atoms
        for rule in self.rules:
            if rule.is_term:
                continue
            got = self._match_rule_prop(rule, p, budget, cond_depth)
            if got is not None:
                subst, conds, new_sub = got
                rw = RwStep(rule.name, path, None, subst, conds)
                return rw, _rebuild(root, path, new_sub)
        if self.use_builtins:
            b = _builtin_match(p)
            if b is not None:
                tag, new_sub = b
                rw = RwStep(f"builtin:{tag}", path, None, ())
                return rw, _rebuild(root, path, new_sub)
        for tpath, subterm in self._atom_positions(p):
            for rule in self.rules:
                if not rule.is_term:
                    continue
                got_t = self._match_rule_term(rule, subterm, budget, cond_depth, bound)
                if got_t is not None:
                    subst, conds, new_term = got_t
                    rw = RwStep(rule.name, path, tpath, subst, conds)
                    new_atom = _replace_atom_term(
                        p, tpath[0], replace_at(_atom_terms(p)[tpath[0]][1], tpath[1:], new_term)
                    )
                    return rw, _rebuild(root, path, new_atom)
        return None

    def _atom_positions(self, p: Prop) -> list[tuple[tuple[int, ...], Term]]:
        out = []
        for (root_idx,), t in _atom_terms(p):
            for tpath, sub in _term_positions(t):
                out.append(((root_idx, *tpath), sub))
        return out

    def _match_rule_term(self, rule, subterm, budget, cond_depth, bound):
        if not isinstance(subterm, App):
            return None
        subst: dict = {}
        try:
            match_term(rule.lhs, subterm, subst, set())
        except NoMatch:
            return None
        # A redex whose instance captures an outer binder variable is fine
        # (the variable is free at that position); nothing to do here.
        conds = self._discharge_conds(rule, subst, budget, cond_depth)
        if conds is None:
            return None
        new_term = apply_subst_term(rule.rhs, subst)
        return _subst_items(subst), conds, new_term

    def _match_rule_prop(self, rule, p, budget, cond_depth):
        subst: dict = {}
        try:
            match_prop(rule.lhs, p, subst)
        except NoMatch:
            return None
        conds = self._discharge_conds(rule, subst, budget, cond_depth)
        if conds is None:
            return None
        new_prop = apply_subst_prop(rule.rhs, subst)
        return _subst_items(subst), conds, new_prop

    def _discharge_conds(self, rule, subst, budget, cond_depth):
        if not rule.conds:
            return ()
        if cond_depth <= 0:
            return None
        traces = []
        for cond in rule.conds:
            inst = apply_subst_prop(cond, subst)
            sub = Rewriter(
                self.theory,
                self.rules,
                use_builtins=self.use_builtins,
                cond_depth=cond_depth - 1,
            )
            res = sub.rewrite(inst, max(budget[0], 1))
            if not isinstance(res.prop, TrueP):
                return None
            budget[0] = max(budget[0] - len(res.trace), 1)
            traces.append(tuple(res.trace))
        return tuple(traces)


def _rebuild(root: Prop, path: tuple[int, ...], new_sub: Prop) -> Prop:
    if not path:
        return new_sub
    child = _rebuild(_child(root, path[0]), path[1:], new_sub)
    return _with_child(root, path[0], child)


def _subst_items(subst: dict) -> tuple:
    return tuple(sorted(subst.items()))


# -- certificates -------------------------------------------------------------


def rule_instance_thm(k: Kernel, rule_name: str, subst: dict, cond_traces, theory: Theory) -> Thm:
    """|- lhs = rhs (or lhs <-> rhs) for the instantiated rule."""
    if rule_name in theory.rules:
        t = k.rule_axiom(rule_name, dict(subst))
    else:
        t = k.axiom(rule_name)
        concl = t.conclusion
        while isinstance(concl, Forall):
            val = subst["?" + concl.var]
            t = k.forall_elim(t, val)
            concl = t.conclusion
    # discharge conditions
    i = 0
    while isinstance(t.conclusion, Implies):
        cond = t.conclusion.left
        cond_thm = _prove_true(k, cond, cond_traces[i], theory)
        t = k.implies_elim(t, cond_thm)
        i += 1
    return t


def _prove_true(k: Kernel, p: Prop, trace, theory: Theory) -> Thm:
    conv = conv_from_trace(k, p, list(trace), theory)
    final = conv.conclusion
    assert isinstance(final, Iff) and isinstance(final.right, TrueP)
    return derived.iff_mpr(k, conv, k.true_intro())


def _conv_step(k: Kernel, p: Prop, step: RwStep, theory: Theory) -> Thm:
    """|- p <-> p' for one step applying at step.prop_path inside p."""
    if step.prop_path:
        i = step.prop_path[0]
        child = _child(p, i)
        sub_iff = _conv_step(
            k, child, RwStep(step.rule, step.prop_path[1:], step.term_path, step.subst, step.cond_traces), theory
        )
        binary = {And: derived.cong_and, Or: derived.cong_or,
                  Implies: derived.cong_implies, Iff: derived.cong_iff}
        match p:
            case Not(_):
                return derived.cong_not(k, sub_iff)
            case Forall(v, s, _):
                return derived.cong_quant(k, Forall, Var(v, s), sub_iff)
            case Exists(v, s, _):
                return derived.cong_quant(k, Exists, Var(v, s), sub_iff)
            case And(a, b) | Or(a, b) | Implies(a, b) | Iff(a, b):
                cong = binary[type(p)]
                other = derived.iff_refl(k, b if i == 0 else a)
                pair = (sub_iff, other) if i == 0 else (other, sub_iff)
                return cong(k, *pair)
        raise KernelError("bad path in rewrite certificate")

    if step.rule.startswith("builtin:"):
        return _builtin_conv(k, p, step.rule.split(":", 1)[1])

    if step.term_path is None:
        inst = rule_instance_thm(k, step.rule, dict(step.subst), step.cond_traces, theory)
        got = inst.conclusion
        assert isinstance(got, Iff) and got.left == p
        return inst

    # term rewrite inside an atomic prop
    root_idx = step.term_path[0]
    roots = _atom_terms(p)
    term = roots[root_idx][1]
    redex = subterm_at(term, step.term_path[1:])
    inst = rule_instance_thm(k, step.rule, dict(step.subst), step.cond_traces, theory)
    eq = inst.conclusion
    assert isinstance(eq, Eq) and eq.lhs == redex
    avoid = {v.name for v in free_vars(p)} | {v.name for v in free_vars(eq)}
    hole = derived.fresh_var(sort_of(redex), avoid, base="hole")
    template_term = replace_at(term, step.term_path[1:], hole)
    template = _replace_atom_term(p, root_idx, template_term)
    return derived.iff_by_eq(k, inst, template, hole.name)


def conv_from_trace(k: Kernel, p: Prop, trace: list[RwStep], theory: Theory) -> Thm:
    """|- p <-> p_final, chaining all steps of the trace."""
    acc = derived.iff_refl(k, p)
    current = p
    for step in trace:
        step_iff = _conv_step(k, current, step, theory)
        concl = step_iff.conclusion
        assert isinstance(concl, Iff) and concl.left == current
        acc = derived.iff_trans(k, acc, step_iff)
        current = concl.right
    return acc


def simp_rules_of(theory: Theory, extra: list[str] = ()) -> list[RewriteRule]:
    """The theory's simp set plus extra named facts, as rewrite rules."""
    rules: list[RewriteRule] = []
    seen: set[str] = set()
    for name in [*theory.simp_names(), *extra]:
        if name in seen:
            continue
        seen.add(name)
        if name in theory.rules:
            spec = theory.rules[name]
            if spec.kind != "rewrite":
                raise RuleFormatError(f"{name} is not a rewrite rule")
            match spec.conclusion:
                case Eq(l, r):
                    rules.append(RewriteRule(name, spec.premises, l, r, True, ()))
                case Iff(l, r):
                    rules.append(RewriteRule(name, spec.premises, l, r, False, ()))
                case _:
                    raise RuleFormatError(f"{name}: rewrite rule must be Eq or Iff")
        else:
            rules.append(rule_from_fact(name, theory.fact(name)))
    return rules


def kernel_rewrite(k: Kernel, t: Thm, rules: list[RewriteRule], max_steps: int) -> Thm:
    """Rewrite the conclusion of ``t``; result provably equal via the cert."""
    if max_steps <= 0:
        return t
    rw = Rewriter(k.theory, rules)
    res = rw.rewrite(t.conclusion, max_steps)
    if not res.trace:
        return t
    conv = conv_from_trace(k, t.conclusion, res.trace, k.theory)
    return derived.iff_mp(k, conv, t)
