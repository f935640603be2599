"""Statement execution: the proof-state transition semantics.

Every command rewrites the leftmost open leaf (or just the state
tables), pushes a certificate frame describing how the eventual child
theorems compose, and leaves all other subtrees untouched.  Closing the
last leaf pops the whole frame stack and yields the final kernel
theorem for the original goal.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, replace

from .kernel import (
    And,
    App,
    Atom,
    Const,
    ConstSig,
    Eq,
    Exists,
    Forall,
    Implies,
    Iff,
    KernelError,
    Not,
    Or,
    Prop,
    RuleSpec,
    Sort,
    Term,
    TheoryError,
    TrueP,
    Var,
    apply_subst_prop,
    free_vars,
    match_rule_conclusion,
    subst_prop,
)
from .kernel import derived
from .kernel.rewrite import (
    RuleFormatError,
    Rewriter,
    conv_from_trace,
    rule_from_fact,
    simp_rules_of,
)
from .kernel.thm import Kernel, Thm
from .hammer import Hammer, Proved, ProveRequest
from .hammer.tableau import OutOfBudget, TableauConfig, TableauProver
from .proofstate import (
    ALL_CLOSED,
    CalcChain,
    Context,
    EMPTY_CONTEXT,
    Frame,
    Leaf,
    Node,
    ProofState,
    close_leftmost_leaf,
    initial_state,
    leftmost_leaf,
    merge_contexts,
    replace_leftmost_leaf,
)
from .syntax.script import (
    ApplyStmt,
    CaseSplitStmt,
    ChooseStmt,
    ConfigStmt,
    ConsiderCases,
    ConsiderObtain,
    EndStmt,
    HaveStmt,
    InductStmt,
    IntroStmt,
    LetStmt,
    NotationStmt,
    OpenStmt,
    RuleStmt,
    SimplifyStmt,
    Statement,
    UnfoldStmt,
)
from .syntax.terms import Notation, PropParser, TermParseError

CALC_NAME = "calculation"
DEFAULT_CALC_RELATIONS = "= <= <"


@dataclass(frozen=True, slots=True)
class Advanced:
    state: ProofState


@dataclass(frozen=True, slots=True)
class Completed:
    thm: Thm
    state: ProofState


@dataclass(frozen=True, slots=True)
class StepError:
    kind: str  # rule-mismatch | atp-failed | bad-reference | op-inapplicable | term-error
    detail: str


StepOutcome = Advanced | Completed | StepError

ERROR_KINDS = ("rule-mismatch", "atp-failed", "bad-reference", "op-inapplicable", "term-error")


class Interp:
    """Executes statements against proof states, one theory per instance."""

    def __init__(self, kernel: Kernel, hammer: Hammer) -> None:
        self.kernel = kernel
        self.theory = kernel.theory
        self.hammer = hammer

    # -- helpers ---------------------------------------------------------

    def _parser(self, state: ProofState, acc: Context) -> PropParser:
        return PropParser(
            self.theory,
            ctx_vars=dict(acc.variables),
            notations={n.symbol: n for n in state.notations},
            abbrevs=dict(state.abbrevs),
        )

    def _accumulated(self, state: ProofState) -> tuple[tuple[int, ...], Context, Leaf]:
        path, acc, leaf = leftmost_leaf(state.tree)
        calc = state.calculation
        if calc is not None:
            prop, thm = calc
            if set(thm.hypotheses) <= set(acc.hyp_props()):
                hyps = tuple((n, p) for n, p in acc.hypotheses if n != CALC_NAME)
                acc = Context(acc.variables, hyps + ((CALC_NAME, prop),))
        return path, acc, leaf

    def _fresh_hyp(self, state: ProofState) -> tuple[str, ProofState]:
        n = state.hyp_counter + 1
        return f"Hyp{n}", replace(state, hyp_counter=n)

    def _fresh_fact(self, state: ProofState) -> tuple[str, ProofState]:
        n = state.fact_counter + 1
        return f"F{n}", replace(state, fact_counter=n)

    def _fresh_var(self, base: str, taken: set[str]) -> str:
        name = base
        while name in taken:
            name += "'"
        return name

    # -- dispatch ----------------------------------------------------------

    def step(self, state: ProofState, stmt: Statement) -> StepOutcome:
        if state.is_completed:
            return StepError("op-inapplicable", "proof already completed")
        try:
            match stmt:
                case RuleStmt():
                    return self.t_rule(state, stmt)
                case IntroStmt():
                    return self.t_intro(state)
                case HaveStmt():
                    return self.t_have(state, stmt)
                case ConsiderObtain():
                    return self.t_consider_obtain(state, stmt)
                case ConsiderCases():
                    return self.t_consider_cases(state, stmt)
                case EndStmt():
                    return self.t_end_next(state, stmt)
                case ChooseStmt():
                    return self.t_choose(state, stmt)
                case SimplifyStmt():
                    return self.t_simplify(state, stmt)
                case UnfoldStmt():
                    return self.t_unfold(state, stmt)
                case CaseSplitStmt():
                    return self.t_case_split(state, stmt)
                case InductStmt():
                    return self.t_induct(state, stmt)
                case LetStmt():
                    return self.t_let(state, stmt)
                case NotationStmt():
                    return self.t_notation(state, stmt)
                case ConfigStmt():
                    return self.t_config(state, stmt)
                case OpenStmt():
                    return self.t_open(state, stmt)
                case ApplyStmt():
                    return self.t_apply(state, stmt)
        except KernelError as e:
            return StepError("op-inapplicable", f"kernel rejected the step: {e}")
        return StepError("op-inapplicable", f"unknown statement {stmt!r}")

    # -- structural edits --------------------------------------------------

    def _swap_leaf(
        self, state: ProofState, new_leaf: Leaf, combine, tag: str
    ) -> ProofState:
        tree = replace_leftmost_leaf(state.tree, new_leaf)
        frame = Frame(1, (), combine, tag)
        return replace(state, tree=tree, frames=state.frames + (frame,))

    def _split_leaf(
        self, state: ProofState, label: Context, children: list[Leaf], combine, tag: str
    ) -> ProofState:
        node = Node(label, tuple(children))
        tree = replace_leftmost_leaf(state.tree, node)
        frame = Frame(len(children), (), combine, tag)
        return replace(state, tree=tree, frames=state.frames + (frame,))

    # -- RULE ----------------------------------------------------------------

    def t_rule(self, state: ProofState, stmt: RuleStmt) -> StepOutcome:
        _, acc, leaf = self._accumulated(state)
        goal = leaf.goal
        k = self.kernel

        if stmt.rule_name is not None:
            rule = self.theory.rules.get(stmt.rule_name)
            if rule is None:
                return StepError("rule-mismatch", f"unknown rule {stmt.rule_name}")
            return self._apply_rulespec(state, leaf, goal, rule)

        match goal:
            case Not(_):
                return self._apply_rulespec(state, leaf, goal, self.theory.rules["notI"])
            case And(_, _):
                return self._apply_rulespec(state, leaf, goal, self.theory.rules["conjI"])
            case Or(_, _):
                return self._apply_rulespec(state, leaf, goal, self.theory.rules["disjCI"])
            case Iff(_, _):
                return self._apply_rulespec(state, leaf, goal, self.theory.rules["iffI"])
            case Implies(a, b):
                name, state2 = self._fresh_hyp(state)
                ctx = merge_contexts(leaf.context, Context((), ((name, a),)))
                new_leaf = Leaf(ctx, b)

                def combine(ts, a=a):
                    return k.implies_intro(ts[0], a)

                return Advanced(self._swap_leaf(state2, new_leaf, combine, "rule-impI"))
            case Forall(v, s, body):
                taken = acc.var_names() | {x.name for x in free_vars(goal)}
                v2 = self._fresh_var(v, taken)
                new_goal = subst_prop(body, {v: Var(v2, s)})
                ctx = merge_contexts(leaf.context, Context(((v2, s),), ()))
                new_leaf = Leaf(ctx, new_goal)

                def combine(ts, var=Var(v2, s)):
                    return k.forall_intro(ts[0], var)

                return Advanced(self._swap_leaf(state, new_leaf, combine, "rule-allI"))
            case Exists(_, _, _):
                return StepError(
                    "rule-mismatch",
                    "default rule for an existential needs a witness; matching is "
                    "first-order only -- use CHOOSE",
                )
            case Eq(App(f1, args1), App(f2, args2)) if (
                f1.name == f2.name and self.theory.datatype_of(f1.sig.result)
            ):
                return self._constructor_eq(state, leaf, goal, f1, args1, args2)
        return StepError("rule-mismatch", f"no default rule for this goal shape")

    def _apply_rulespec(
        self, state: ProofState, leaf: Leaf, goal: Prop, rule: RuleSpec
    ) -> StepOutcome:
        subst = match_rule_conclusion(rule.conclusion, goal)
        if subst is None:
            return StepError(
                "rule-mismatch", f"rule {rule.name} does not match the goal"
            )
        k = self.kernel
        premises = [apply_subst_prop(p, subst) for p in rule.premises]
        items = dict(subst)

        def rule_thm():
            return k.rule_axiom(rule.name, items)

        if not premises:
            new_leaf = Leaf(leaf.context, TrueP())

            def combine0(ts):
                return rule_thm()

            return Advanced(self._swap_leaf(state, new_leaf, combine0, f"rule-{rule.name}"))
        if len(premises) == 1:
            new_leaf = Leaf(leaf.context, premises[0])

            def combine1(ts):
                return k.implies_elim(rule_thm(), ts[0])

            return Advanced(self._swap_leaf(state, new_leaf, combine1, f"rule-{rule.name}"))

        children = [Leaf(EMPTY_CONTEXT, p) for p in premises]

        def combine_n(ts):
            t = rule_thm()
            for child in ts:
                t = k.implies_elim(t, child)
            return t

        return Advanced(
            self._split_leaf(state, leaf.context, children, combine_n, f"rule-{rule.name}")
        )

    def _constructor_eq(self, state, leaf, goal, fn, args1, args2) -> StepOutcome:
        k = self.kernel
        eqs = [Eq(a, b) for a, b in zip(args1, args2) if a != b]
        if not eqs:
            new_leaf = Leaf(leaf.context, TrueP())

            def combine0(ts, t=goal.lhs):
                return k.eq_refl(t)

            return Advanced(self._swap_leaf(state, new_leaf, combine0, "rule-refl"))

        def combine(ts):
            # chain eq_subst over argument positions, left to right
            current = k.eq_refl(goal.lhs)
            new_args = list(args1)
            ti = 0
            for i, (a, b) in enumerate(zip(args1, args2)):
                if a == b:
                    continue
                t_eq = ts[ti]
                ti += 1
                hole = derived.fresh_var(
                    fn.sig.args[i],
                    {v.name for v in free_vars(goal)},
                    base="_c",
                )
                rhs_args = list(new_args)
                rhs_args[i] = hole
                template = Eq(goal.lhs, App(fn, tuple(rhs_args)))
                current = k.eq_subst(t_eq, current, template, hole.name)
                new_args[i] = b
            return current

        if len(eqs) == 1:
            new_leaf = Leaf(leaf.context, eqs[0])
            return Advanced(
                self._swap_leaf(state, new_leaf, lambda ts: combine(ts), "rule-inject")
            )
        children = [Leaf(EMPTY_CONTEXT, e) for e in eqs]
        return Advanced(
            self._split_leaf(state, leaf.context, children, combine, "rule-inject")
        )

    # -- INTRO -----------------------------------------------------------------

    def t_intro(self, state: ProofState) -> StepOutcome:
        _, acc, leaf = self._accumulated(state)
        k = self.kernel
        goal = leaf.goal
        taken = set(acc.var_names())
        new_vars: list[tuple[str, Sort]] = []
        new_hyps: list[tuple[str, Prop]] = []
        steps: list[tuple[str, object]] = []  # ("var", Var) | ("hyp", Prop)
        st = state
        while True:
            match goal:
                case Forall(v, s, body):
                    v2 = self._fresh_var(v, taken)
                    taken.add(v2)
                    goal = subst_prop(body, {v: Var(v2, s)})
                    new_vars.append((v2, s))
                    steps.append(("var", Var(v2, s)))
                case Implies(a, b):
                    name, st = self._fresh_hyp(st)
                    new_hyps.append((name, a))
                    steps.append(("hyp", a))
                    goal = b
                case _:
                    break
        if not steps:
            return Advanced(state)
        ctx = merge_contexts(leaf.context, Context(tuple(new_vars), tuple(new_hyps)))
        new_leaf = Leaf(ctx, goal)

        def combine(ts, steps=tuple(steps)):
            t = ts[0]
            for kind, payload in reversed(steps):
                if kind == "hyp":
                    t = k.implies_intro(t, payload)
                else:
                    t = k.forall_intro(t, payload)
            return t

        return Advanced(self._swap_leaf(st, new_leaf, combine, "intro"))

    # -- HAVE --------------------------------------------------------------------

    def t_have(self, state: ProofState, stmt: HaveStmt) -> StepOutcome:
        _, acc, leaf = self._accumulated(state)
        k = self.kernel
        try:
            g_new = self._parser(state, acc).parse_prop(stmt.prop_text)
        except TermParseError as e:
            return StepError("term-error", f"HAVE proposition: {e.message}")
        st = state
        label = stmt.label
        if label is None:
            label, st = self._fresh_fact(st)

        left = Leaf(EMPTY_CONTEXT, g_new)
        right = Leaf(Context((), ((label, g_new),)), leaf.goal)

        def combine(ts, p=g_new):
            t_fact, t_goal = ts
            return k.implies_elim(k.implies_intro(t_goal, p), t_fact)

        return Advanced(self._split_leaf(st, leaf.context, [left, right], combine, "have"))

    # -- CONSIDER ------------------------------------------------------------------

    def t_consider_obtain(self, state: ProofState, stmt: ConsiderObtain) -> StepOutcome:
        _, acc, leaf = self._accumulated(state)
        k = self.kernel
        for v in stmt.variables:
            if v in acc.var_names():
                return StepError("term-error", f"variable {v} is already fixed")
        annot = f" :: {stmt.sort_text}" if stmt.sort_text else ""
        joined = " & ".join(f"({p})" for _, p in stmt.props)
        ex_text = f"exists {' '.join(stmt.variables)}{annot}. {joined}"
        parser = self._parser(state, acc)
        try:
            ex_prop = parser.parse_prop(ex_text)
        except TermParseError as e:
            return StepError("term-error", f"CONSIDER propositions: {e.message}")

        var_sorts: list[tuple[str, Sort]] = []
        probe = ex_prop
        for v in stmt.variables:
            assert isinstance(probe, Exists) and probe.var == v
            var_sorts.append((v, probe.sort))
            probe = probe.body

        st = state
        labeled: list[tuple[str, Prop]] = []
        inner_parser = PropParser(
            self.theory,
            ctx_vars={**dict(acc.variables), **dict(var_sorts)},
            notations={n.symbol: n for n in state.notations},
            abbrevs=dict(state.abbrevs),
        )
        for lbl, text in stmt.props:
            if lbl is None:
                lbl, st = self._fresh_fact(st)
            try:
                labeled.append((lbl, inner_parser.parse_prop(text)))
            except TermParseError as e:
                return StepError("term-error", f"CONSIDER propositions: {e.message}")

        left = Leaf(EMPTY_CONTEXT, ex_prop)
        right = Leaf(Context(tuple(var_sorts), tuple(labeled)), leaf.goal)
        eigens = [Var(v, s) for v, s in var_sorts]
        props = [p for _, p in labeled]

        def combine(ts):
            t_ex, t_goal = ts
            body = self._conj_chain(props)
            t = t_goal
            chain = k.assume(body)
            for prop, part in zip(props, self._conj_parts(chain, len(props))):
                t = k.implies_elim(k.implies_intro(t, prop), part)
            return self._elim_exists_chain(t_ex, eigens, t, body)

        return Advanced(
            self._split_leaf(st, leaf.context, [left, right], combine, "consider")
        )

    def _conj_chain(self, props: list[Prop]) -> Prop:
        out = props[-1]
        for p in reversed(props[:-1]):
            out = And(p, out)
        return out

    def _conj_parts(self, chain_thm: Thm, n: int) -> list[Thm]:
        k = self.kernel
        parts = []
        current = chain_thm
        for _ in range(n - 1):
            parts.append(k.conj_elim_left(current))
            current = k.conj_elim_right(current)
        parts.append(current)
        return parts

    def _elim_exists_chain(self, t_ex: Thm, eigens: list[Var], t_body: Thm, body: Prop) -> Thm:
        k = self.kernel
        if not eigens:
            return derived.discharge(k, t_body, t_ex)
        ex = t_ex.conclusion
        assert isinstance(ex, Exists)
        if len(eigens) == 1:
            if body not in t_body.hypotheses:
                return t_body
            return k.exists_elim(t_ex, t_body, eigens[0])
        inner_prop = ex.body  # binder names match the eigens by construction
        t_inner = self._elim_exists_chain(k.assume(inner_prop), eigens[1:], t_body, body)
        if inner_prop not in t_inner.hypotheses:
            return t_inner
        return k.exists_elim(t_ex, t_inner, eigens[0])

    def t_consider_cases(self, state: ProofState, stmt: ConsiderCases) -> StepOutcome:
        _, acc, leaf = self._accumulated(state)
        k = self.kernel
        if len(stmt.cases) < 2:
            return StepError("term-error", "CONSIDER needs at least two cases")
        parser = self._parser(state, acc)
        props: list[Prop] = []
        for text in stmt.cases:
            try:
                props.append(parser.parse_prop(text))
            except TermParseError as e:
                return StepError("term-error", f"CONSIDER case: {e.message}")
        disj = props[-1]
        for p in reversed(props[:-1]):
            disj = Or(p, disj)

        left = Leaf(EMPTY_CONTEXT, disj)
        case_leaves = [
            Leaf(Context((), ((f"case_{i + 1}", p),)), leaf.goal)
            for i, p in enumerate(props)
        ]

        def combine(ts):
            t_or, *cases = ts

            def fold(or_thm: Thm, case_thms: list[Thm]) -> Thm:
                d = or_thm.conclusion
                assert isinstance(d, Or)
                if len(case_thms) == 2:
                    return k.disj_elim(or_thm, case_thms[0], case_thms[1])
                rest = k.assume(d.right)
                right_thm = fold(rest, case_thms[1:])
                return k.disj_elim(or_thm, case_thms[0], right_thm)

            return fold(t_or, cases)

        return Advanced(
            self._split_leaf(state, leaf.context, [left, *case_leaves], combine, "cases")
        )

    # -- END / NEXT ------------------------------------------------------------------

    def t_end_next(self, state: ProofState, stmt: EndStmt) -> StepOutcome:
        _, acc, leaf = self._accumulated(state)
        goal = leaf.goal
        timeout = float(state.config_get("hammer_timeout", "5.0"))
        req = ProveRequest(
            context=acc,
            goal=goal,
            with_hints=tuple(stmt.with_names),
            without_hints=tuple(stmt.without_names),
            timeout=timeout,
            opened=state.opened,
        )
        result = self.hammer.prove(req)
        if not isinstance(result, Proved):
            reasons = ", ".join(f"{b}: {r}" for b, r in result.reasons)
            return StepError("atp-failed", f"no backend proved the goal ({reasons})")
        return self._close(state, acc, leaf, result.thm)

    def _close(self, state: ProofState, acc: Context, leaf: Leaf, thm: Thm) -> StepOutcome:
        k = self.kernel
        if thm.conclusion != leaf.goal:
            return StepError("op-inapplicable", "proof does not conclude the subgoal")
        if state.calculation is not None and state.calculation[0] in thm.hypotheses:
            thm = derived.discharge(k, thm, state.calculation[1])
        available = set(acc.hyp_props())
        leaked = [h for h in thm.hypotheses if h not in available]
        if leaked:
            return StepError(
                "op-inapplicable", "proof uses hypotheses outside the context"
            )
        state = self._update_chains(state, leaf.goal, thm)

        frames = list(state.frames)
        current = thm
        while frames:
            top = frames[-1]
            closed = top.closed + (current,)
            if len(closed) < top.total:
                frames[-1] = Frame(top.total, closed, top.combine, top.tag)
                current = None
                break
            frames.pop()
            current = top.combine(list(closed))

        new_tree = close_leftmost_leaf(state.tree)
        if new_tree is ALL_CLOSED:
            if current is None or frames:
                return StepError(
                    "op-inapplicable", "internal frame mismatch at completion"
                )
            if current.conclusion != state.goal:
                return StepError(
                    "op-inapplicable", "final theorem does not match the top goal"
                )
            done = replace(state, tree=None, completed=current, frames=())
            return Completed(current, done)
        return Advanced(replace(state, tree=new_tree, frames=tuple(frames)))

    # -- calculation chains ------------------------------------------------------------

    def _rel_fact(self, state: ProofState, prop: Prop):
        active = (state.config_get("calc_relations", DEFAULT_CALC_RELATIONS) or "").split()
        match prop:
            case Eq(a, b) if "=" in active:
                return ("=", a, b)
            case Atom(App(Const(name, _), (a, b))) if name in active:
                return (name, a, b)
        return None

    def _compose_rel(self, t1: Thm, rel1: str, t2: Thm, rel2: str):
        """Compose a R1 b and b R2 c; returns (rel, thm) or None."""
        k = self.kernel
        if rel1 == "=" and rel2 == "=":
            return "=", derived.eq_trans(k, t1, t2)
        if rel1 == "=":
            eq = t1.conclusion
            assert isinstance(eq, Eq)
            c2 = t2.conclusion
            hole = derived.fresh_var(
                self._term_sort(eq.lhs),
                {v.name for v in free_vars(c2) | free_vars(eq)},
                base="_t",
            )
            template = self._replace_first(c2, eq.rhs, hole, position=0)
            return rel2, k.eq_subst(derived.eq_sym(k, t1), t2, template, hole.name)
        if rel2 == "=":
            eq = t2.conclusion
            assert isinstance(eq, Eq)
            c1 = t1.conclusion
            hole = derived.fresh_var(
                self._term_sort(eq.lhs),
                {v.name for v in free_vars(c1) | free_vars(eq)},
                base="_t",
            )
            template = self._replace_first(c1, eq.lhs, hole, position=1)
            return rel1, k.eq_subst(t2, t1, template, hole.name)
        entry = self.theory.transitivity.get((rel1, rel2))
        if entry is None:
            return None
        rout, lemma = entry
        r1 = t1.conclusion
        r2 = t2.conclusion
        assert isinstance(r1, Atom) and isinstance(r2, Atom)
        a = r1.term.args[0]
        b = r1.term.args[1]
        c = r2.term.args[1]
        t = k.axiom(lemma)
        for w in (a, b, c):
            t = k.forall_elim(t, w)
        return rout, k.implies_elim(k.implies_elim(t, t1), t2)

    def _term_sort(self, t: Term) -> Sort:
        from .kernel import sort_of

        return sort_of(t)

    def _replace_first(self, p: Prop, needle: Term, hole: Var, position: int) -> Prop:
        """Template with the hole at one endpoint of a relational fact."""
        match p:
            case Eq(a, b):
                return Eq(hole, b) if position == 0 else Eq(a, hole)
            case Atom(App(fn, (a, b))):
                args = (hole, b) if position == 0 else (a, hole)
                return Atom(App(fn, args))
        raise KernelError("not a relational fact")

    def _update_chains(self, state: ProofState, prop: Prop, thm: Thm) -> ProofState:
        fact = self._rel_fact(state, prop)
        if fact is None:
            return state
        rel, a, b = fact
        chains = list(state.chains)
        new_chains: list[CalcChain] = []
        best: CalcChain | None = None
        for chain in chains:
            if chain.tail() != a:
                continue
            composed_base = chain.composed if chain.composed is not None else chain.facts[0]
            base_rel = chain.relation
            got = self._compose_rel(composed_base, base_rel, thm, rel)
            if got is None:
                continue
            rout, comp = got
            extended = CalcChain(rout, chain.terms + (b,), chain.facts + (thm,), comp)
            new_chains.append(extended)
            if best is None or len(extended.terms) >= len(best.terms):
                best = extended
        new_chains.append(CalcChain(rel, (a, b), (thm,), None))
        calc = state.calculation
        if best is not None and best.composed is not None:
            calc = (best.composed.conclusion, best.composed)
        return replace(state, chains=tuple(chains + new_chains), calculation=calc)

    # -- CHOOSE ----------------------------------------------------------------------

    def t_choose(self, state: ProofState, stmt: ChooseStmt) -> StepOutcome:
        _, acc, leaf = self._accumulated(state)
        k = self.kernel
        goal = leaf.goal
        if not isinstance(goal, Exists):
            return StepError("op-inapplicable", "CHOOSE needs an existential goal")
        parser = self._parser(state, acc)
        try:
            witness = parser.parse_term(stmt.term_text)
        except TermParseError as e:
            return StepError("term-error", f"CHOOSE witness: {e.message}")
        from .kernel import sort_of

        if sort_of(witness) != goal.sort:
            return StepError(
                "term-error",
                f"witness has sort {sort_of(witness)}, expected {goal.sort}",
            )
        new_goal = subst_prop(goal.body, {goal.var: witness})
        new_leaf = Leaf(leaf.context, new_goal)

        def combine(ts, ex=goal, w=witness):
            return k.exists_intro(ts[0], ex, w)

        return Advanced(self._swap_leaf(state, new_leaf, combine, "choose"))

    # -- SIMPLIFY / UNFOLD --------------------------------------------------------------

    def _rewrite_leaf(
        self, state: ProofState, leaf: Leaf, rules, tag: str, *, builtins: bool = True
    ) -> StepOutcome:
        k = self.kernel
        goal = leaf.goal
        rw = Rewriter(self.theory, rules, use_builtins=builtins)
        res = rw.rewrite(goal, int(state.config_get("simp_steps", "200") or 200))
        if not res.trace or res.prop == goal:
            return Advanced(state)
        new_leaf = Leaf(leaf.context, res.prop)
        trace = list(res.trace)

        def combine(ts, g=goal, tr=trace):
            conv = conv_from_trace(k, g, tr, self.theory)
            return derived.iff_mpr(k, conv, ts[0])

        return Advanced(self._swap_leaf(state, new_leaf, combine, tag))

    def t_simplify(self, state: ProofState, stmt: SimplifyStmt) -> StepOutcome:
        _, acc, leaf = self._accumulated(state)
        for name in stmt.names:
            if name not in self.theory.facts and name not in self.theory.rules:
                return StepError("bad-reference", f"unknown lemma {name}")
        try:
            rules = simp_rules_of(self.theory, list(stmt.names))
        except RuleFormatError as e:
            return StepError("bad-reference", str(e))
        return self._rewrite_leaf(state, leaf, rules, "simplify")

    def t_unfold(self, state: ProofState, stmt: UnfoldStmt) -> StepOutcome:
        _, acc, leaf = self._accumulated(state)
        rules = []
        for name in stmt.names:
            info = self.theory.facts.get(name)
            if info is None or info.definiendum is None:
                return StepError("bad-reference", f"{name} is not a definition")
            rules.append(rule_from_fact(name, info.prop))
        return self._rewrite_leaf(state, leaf, rules, "unfold", builtins=False)

    # -- CASE_SPLIT / INDUCT ---------------------------------------------------------------

    def t_case_split(self, state: ProofState, stmt: CaseSplitStmt) -> StepOutcome:
        _, acc, leaf = self._accumulated(state)
        k = self.kernel
        parser = self._parser(state, acc)
        try:
            scrut = parser.parse_term(stmt.term_text)
        except TermParseError as e:
            return StepError("term-error", f"CASE_SPLIT term: {e.message}")
        from .kernel import sort_of

        dt = self.theory.datatype_of(sort_of(scrut))
        if dt is None:
            return StepError(
                "op-inapplicable", f"sort {sort_of(scrut)} is not a datatype"
            )
        taken = set(acc.var_names()) | {v.name for v in free_vars(leaf.goal)}
        base = scrut.name if isinstance(scrut, Var) else "v"
        children: list[Leaf] = []
        case_infos: list[tuple[str, tuple[Var, ...], Prop]] = []
        for ctor in dt.constructors:
            cvars = []
            for i, s in enumerate(ctor.arg_sorts):
                name = self._fresh_var(f"{base}{i + 1}", taken)
                taken.add(name)
                cvars.append(Var(name, s))
            mk = Const(ctor.name, ConstSig(ctor.arg_sorts, dt.sort))
            value: Term = App(mk, tuple(cvars)) if cvars else mk
            hyp = Eq(scrut, value)
            ctx = Context(
                tuple((v.name, v.sort) for v in cvars),
                ((f"case_{ctor.name}", hyp),),
            )
            children.append(Leaf(ctx, leaf.goal))
            case_infos.append((ctor.name, tuple(cvars), hyp))

        exhaust_name = f"{dt.sort.name}_exhaust"

        def combine(ts):
            ax = k.forall_elim(k.axiom(exhaust_name), scrut)

            def fold(or_thm: Thm, idx: int) -> Thm:
                d = or_thm.conclusion
                if idx == len(case_infos) - 1:
                    return self._case_payload(d, case_infos[idx], ts[idx])
                assert isinstance(d, Or)
                left = self._case_payload(d.left, case_infos[idx], ts[idx])
                right = fold(k.assume(d.right), idx + 1)
                return k.disj_elim(or_thm, left, right)

            return fold(ax, 0)

        return Advanced(
            self._split_leaf(state, leaf.context, children, combine, "case-split")
        )

    def _case_payload(self, case_prop: Prop, info, t_case: Thm) -> Thm:
        """From the exhaustiveness disjunct (an exists-closed equation) and
        the per-case theorem, derive the goal for this case."""
        k = self.kernel
        _, cvars, hyp = info
        if not cvars:
            return derived.discharge(k, t_case, k.assume(case_prop))
        t = t_case
        body = hyp
        t_ex = k.assume(case_prop)
        return self._elim_case_exists(t_ex, list(cvars), t, body)

    def _elim_case_exists(self, t_ex: Thm, cvars: list[Var], t_body: Thm, hyp: Prop) -> Thm:
        k = self.kernel
        ex = t_ex.conclusion
        if not cvars:
            return derived.discharge(k, t_body, t_ex)
        if len(cvars) == 1:
            if hyp not in t_body.hypotheses:
                return t_body
            return k.exists_elim(t_ex, t_body, cvars[0])
        assert isinstance(ex, Exists)
        inner = self._elim_case_exists(k.assume(ex.body), cvars[1:], t_body, hyp)
        if ex.body not in inner.hypotheses:
            return inner
        return k.exists_elim(t_ex, inner, cvars[0])

    def t_induct(self, state: ProofState, stmt: InductStmt) -> StepOutcome:
        _, acc, leaf = self._accumulated(state)
        k = self.kernel
        var_sort = dict(acc.variables).get(stmt.var_name)
        if var_sort is None:
            return StepError("term-error", f"unknown variable {stmt.var_name}")
        dt = self.theory.datatype_of(var_sort)
        if dt is None:
            return StepError("op-inapplicable", f"sort {var_sort} is not a datatype")
        var = Var(stmt.var_name, var_sort)
        goal = leaf.goal
        taken = set(acc.var_names()) | {v.name for v in free_vars(goal)}
        children: list[Leaf] = []
        all_case_vars: list[tuple[Var, ...]] = []
        for ctor in dt.constructors:
            cvars = []
            for i, s in enumerate(ctor.arg_sorts):
                name = self._fresh_var(f"{stmt.var_name}{i + 1}", taken)
                taken.add(name)
                cvars.append(Var(name, s))
            mk = Const(ctor.name, ConstSig(ctor.arg_sorts, dt.sort))
            value: Term = App(mk, tuple(cvars)) if cvars else mk
            case_goal = subst_prop(goal, {var.name: value})
            ihs = tuple(
                (f"IH{j + 1}", subst_prop(goal, {var.name: v}))
                for j, v in enumerate(cv for cv in cvars if cv.sort == dt.sort)
            )
            ctx = Context(tuple((v.name, v.sort) for v in cvars), ihs)
            children.append(Leaf(ctx, case_goal))
            all_case_vars.append(tuple(cvars))

        def combine(ts):
            return k.induct(var, goal, ts, all_case_vars)

        return Advanced(
            self._split_leaf(state, leaf.context, children, combine, "induct")
        )

    # -- LET / NOTATION / CONFIG / OPEN ---------------------------------------------------

    def t_let(self, state: ProofState, stmt: LetStmt) -> StepOutcome:
        if any(n == stmt.name for n, _ in state.abbrevs):
            return StepError("term-error", f"duplicate abbreviation {stmt.name}")
        _, acc, _ = self._accumulated(state)
        try:
            self._parser(state, acc).parse_term(stmt.term_text)
        except TermParseError as e:
            return StepError("term-error", f"LET term: {e.message}")
        return Advanced(
            replace(state, abbrevs=state.abbrevs + ((stmt.name, stmt.term_text),))
        )

    def t_notation(self, state: ProofState, stmt: NotationStmt) -> StepOutcome:
        if stmt.const_name not in self.theory.consts:
            return StepError("bad-reference", f"unknown constant {stmt.const_name}")
        notation = Notation(stmt.symbol, stmt.const_name, stmt.prec, stmt.fixity == "infixr")
        rest = tuple(n for n in state.notations if n.symbol != stmt.symbol)
        return Advanced(replace(state, notations=rest + (notation,)))

    def t_config(self, state: ProofState, stmt: ConfigStmt) -> StepOutcome:
        rest = tuple((key, v) for key, v in state.config if key != stmt.key)
        return Advanced(replace(state, config=rest + ((stmt.key, stmt.value),)))

    def t_open(self, state: ProofState, stmt: OpenStmt) -> StepOutcome:
        for name in stmt.names:
            if name not in self.theory.bundles:
                return StepError("bad-reference", f"unknown bundle {name}")
        merged = state.opened + tuple(n for n in stmt.names if n not in state.opened)
        return Advanced(replace(state, opened=merged))

    # -- APPLY -------------------------------------------------------------------------

    TACTICS = ("auto_t", "fastforce_t", "unfold_tac", "rule_t")

    def t_apply(self, state: ProofState, stmt: ApplyStmt) -> StepOutcome:
        if stmt.tactic not in self.TACTICS:
            return StepError("op-inapplicable", f"unknown tactic {stmt.tactic}")
        _, acc, leaf = self._accumulated(state)
        if stmt.tactic == "rule_t":
            if len(stmt.pos_args) != 1:
                return StepError("op-inapplicable", "rule_t expects one rule name")
            rule = self.theory.rules.get(stmt.pos_args[0])
            if rule is None:
                return StepError("op-inapplicable", f"unknown rule {stmt.pos_args[0]}")
            out = self._apply_rulespec(state, leaf, leaf.goal, rule)
            if isinstance(out, StepError):
                return StepError("op-inapplicable", out.detail)
            return out
        if stmt.tactic == "unfold_tac":
            rules = []
            for name in stmt.pos_args:
                info = self.theory.facts.get(name)
                if info is None or info.definiendum is None:
                    return StepError("op-inapplicable", f"{name} is not a definition")
                rules.append(rule_from_fact(name, info.prop))
            return self._rewrite_leaf(state, leaf, rules, "unfold_tac", builtins=False)
        return self._auto_like(state, acc, leaf, stmt)

    def _relevant_axioms(self, state: ProofState, goal, acc: Context, limit: int) -> list[str]:
        """Symbol-relevance premise seeding for the builtin tactics."""
        from .hammer.features import mepo_scores

        db = self.hammer.db
        opened = set(state.opened)
        visible = {
            n: syms
            for n, syms in db.lemma_syms.items()
            if db.lemmas[n].bundle is None or db.lemmas[n].bundle in opened
        }
        scores = mepo_scores(goal, acc.hyp_props(), visible)
        ranked = sorted(visible, key=lambda n: (-scores.get(n, 0.0), n))
        return [n for n in ranked if scores.get(n, 0.0) > 0.0][:limit]

    def _auto_like(self, state: ProofState, acc: Context, leaf: Leaf, stmt: ApplyStmt) -> StepOutcome:
        k = self.kernel
        goal = leaf.goal
        names = [n for n in stmt.pos_args if n in self.theory.facts]
        neg = set(stmt.neg_args)
        try:
            rules = [
                r for r in simp_rules_of(self.theory, names) if r.name not in neg
            ]
        except RuleFormatError:
            rules = [r for r in simp_rules_of(self.theory) if r.name not in neg]

        new_goal = goal
        trace: list = []
        if stmt.tactic == "auto_t":
            rw = Rewriter(self.theory, rules)
            res = rw.rewrite(goal, int(state.config_get("simp_steps", "200") or 200))
            new_goal, trace = res.prop, list(res.trace)

        closed_thm = None
        if not isinstance(new_goal, TrueP):
            from .hammer.prove import resolution_prove
            from .hammer.resolution import ResolutionConfig

            hyp_thms = [k.assume(p) for p in acc.hyp_props()]
            seeds = list(names)
            for cand in self._relevant_axioms(state, new_goal, acc, limit=12):
                if cand not in seeds and cand not in neg:
                    seeds.append(cand)
            deadline = time.monotonic() + float(
                state.config_get("tactic_timeout", "3.0") or 3.0
            )
            got = resolution_prove(
                k, hyp_thms, seeds, new_goal,
                ResolutionConfig(max_iterations=1500),
                TableauConfig(max_depth=8, max_steps=6000),
                deadline,
            )
            if isinstance(got, Thm):
                closed_thm = got
            else:
                # equation-shaped lemmas act through the rewriter; the rest
                # seed the search as facts.  Context-only search goes first.
                gamma_seeds: list[str] = []
                search_rules = list(rules)
                have_rules = {r.name for r in search_rules}
                for n in seeds:
                    info = self.hammer.db.lemmas.get(n)
                    if info is not None and info.usage == "rewrite":
                        if n in have_rules:
                            continue
                        try:
                            search_rules.append(rule_from_fact(n, info.prop))
                            have_rules.add(n)
                            continue
                        except RuleFormatError:
                            pass
                    gamma_seeds.append(n)
                depth, steps = (6, 2500) if stmt.tactic == "auto_t" else (8, 8000)
                fact_sets = [hyp_thms, hyp_thms + [k.axiom(n) for n in gamma_seeds]]
                for facts in fact_sets:
                    prover = TableauProver(
                        k,
                        TableauConfig(max_depth=depth, max_steps=steps),
                        rewrite_rules=tuple(search_rules),
                        deadline=deadline,
                    )
                    try:
                        closed_thm = prover.prove(facts, new_goal)
                    except OutOfBudget:
                        closed_thm = None
                    if closed_thm is not None:
                        break

        if isinstance(new_goal, TrueP) or closed_thm is not None:
            # the goal is settled; leave the placeholder for END to close
            if closed_thm is not None and trace:
                conv = conv_from_trace(k, goal, trace, self.theory)
                thm_goal = derived.iff_mpr(k, conv, closed_thm)
            elif closed_thm is not None:
                thm_goal = closed_thm
            else:
                conv = conv_from_trace(k, goal, trace, self.theory)
                thm_goal = derived.iff_mpr(k, conv, k.true_intro())
            new_leaf = Leaf(leaf.context, TrueP())

            def combine(ts, t=thm_goal):
                return t

            return Advanced(self._swap_leaf(state, new_leaf, combine, stmt.tactic))

        if new_goal == goal:
            return StepError("op-inapplicable", f"{stmt.tactic} made no progress")
        new_leaf = Leaf(leaf.context, new_goal)

        def combine_rw(ts, g=goal, tr=tuple(trace)):
            conv = conv_from_trace(k, g, list(tr), self.theory)
            return derived.iff_mpr(k, conv, ts[0])

        return Advanced(self._swap_leaf(state, new_leaf, combine_rw, stmt.tactic))
