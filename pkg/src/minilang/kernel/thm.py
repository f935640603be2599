"""Theorems and the primitive inference steps that construct them.

LCF discipline: ``Thm`` values can only be produced by the primitives on
``Kernel``.  Every primitive appends a step to an append-only log, so any
theorem can later be replayed from scratch and checked for equality.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any

from .props import (
    FALSE,
    TRUE,
    And,
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
    subst_prop,
)
from .terms import App, Const, ConstSig, KernelError, Sort, Term, Var, sort_of
from .theory import Theory, TheoryError, instantiate_rule

_TOKEN = object()


@dataclass(frozen=True, slots=True)
class Thm:
    hypotheses: frozenset[Prop]
    conclusion: Prop
    cert: int
    _guard: Any

    def __post_init__(self) -> None:
        if self._guard is not _TOKEN:
            raise KernelError("Thm values can only be built by kernel primitives")

    def __repr__(self) -> str:
        hyps = ", ".join(sorted(repr(h) for h in self.hypotheses))
        return f"Thm([{hyps}] |- {self.conclusion!r})"


@dataclass(frozen=True, slots=True)
class Step:
    op: str
    thm_args: tuple[int, ...]
    params: tuple[Any, ...]
    hypotheses: frozenset[Prop]
    conclusion: Prop


class Kernel:
    """Primitive natural-deduction calculus over a frozen theory."""

    def __init__(self, theory: Theory) -> None:
        if not theory.frozen:
            raise KernelError("kernel requires a frozen theory")
        self.theory = theory
        self._log: dict[int, Step] = {}
        self._next = 0

    # -- plumbing --------------------------------------------------------

    def _emit(
        self,
        op: str,
        thm_args: tuple[Thm, ...],
        params: tuple[Any, ...],
        hyps: frozenset[Prop],
        concl: Prop,
    ) -> Thm:
        cert = self._next
        self._next += 1
        self._log[cert] = Step(op, tuple(t.cert for t in thm_args), params, hyps, concl)
        return Thm(hyps, concl, cert, _TOKEN)

    def step(self, cert: int) -> Step:
        return self._log[cert]

    def _check_prop(self, p: Prop) -> None:
        if not isinstance(p, Prop):
            raise KernelError(f"not a proposition: {p!r}")

    # -- primitives ------------------------------------------------------

    def assume(self, p: Prop) -> Thm:
        self._check_prop(p)
        return self._emit("assume", (), (p,), frozenset([p]), p)

    def axiom(self, name: str) -> Thm:
        prop = self.theory.fact(name)
        return self._emit("axiom", (), (name,), frozenset(), prop)

    def rule_axiom(self, name: str, subst: dict[str, Prop | Term]) -> Thm:
        if name not in self.theory.rules:
            raise KernelError(f"unknown rule {name}")
        rule = self.theory.rules[name]
        prop = instantiate_rule(rule, subst)
        if any(v.is_schematic for v in free_vars(prop)):
            raise KernelError(f"rule {name}: instantiation left schematics open")
        return self._emit("rule_axiom", (), (name, tuple(sorted(subst.items()))), frozenset(), prop)

    def implies_intro(self, t: Thm, p: Prop) -> Thm:
        self._check_prop(p)
        hyps = t.hypotheses - {p}
        return self._emit("implies_intro", (t,), (p,), hyps, Implies(p, t.conclusion))

    def implies_elim(self, t_imp: Thm, t_arg: Thm) -> Thm:
        concl = t_imp.conclusion
        if not isinstance(concl, Implies):
            raise KernelError(f"implies_elim: not an implication: {concl!r}")
        if concl.left != t_arg.conclusion:
            raise KernelError("implies_elim: argument does not match antecedent")
        hyps = t_imp.hypotheses | t_arg.hypotheses
        return self._emit("implies_elim", (t_imp, t_arg), (), hyps, concl.right)

    def forall_intro(self, t: Thm, var: Var) -> Thm:
        for h in t.hypotheses:
            if var in free_vars(h):
                raise KernelError(
                    f"forall_intro: {var.name} is free in a hypothesis"
                )
        return self._emit(
            "forall_intro", (t,), (var,), t.hypotheses, Forall(var.name, var.sort, t.conclusion)
        )

    def forall_elim(self, t: Thm, witness: Term) -> Thm:
        concl = t.conclusion
        if not isinstance(concl, Forall):
            raise KernelError(f"forall_elim: not universal: {concl!r}")
        if sort_of(witness) != concl.sort:
            raise KernelError(
                f"forall_elim: witness sort {sort_of(witness)} != {concl.sort}"
            )
        body = subst_prop(concl.body, {concl.var: witness})
        return self._emit("forall_elim", (t,), (witness,), t.hypotheses, body)

    def exists_intro(self, t: Thm, ex: Prop, witness: Term) -> Thm:
        if not isinstance(ex, Exists):
            raise KernelError(f"exists_intro: not existential: {ex!r}")
        if sort_of(witness) != ex.sort:
            raise KernelError("exists_intro: witness sort mismatch")
        inst = subst_prop(ex.body, {ex.var: witness})
        if inst != t.conclusion:
            raise KernelError(
                "exists_intro: conclusion is not the instance at the witness"
            )
        return self._emit("exists_intro", (t,), (ex, witness), t.hypotheses, ex)

    def exists_elim(self, t_ex: Thm, t_body: Thm, eigen: Var) -> Thm:
        ex = t_ex.conclusion
        if not isinstance(ex, Exists):
            raise KernelError(f"exists_elim: not existential: {ex!r}")
        if eigen.sort != ex.sort:
            raise KernelError("exists_elim: eigenvariable sort mismatch")
        inst = subst_prop(ex.body, {ex.var: eigen})
        if inst not in t_body.hypotheses:
            raise KernelError("exists_elim: body does not assume the instance")
        if eigen in free_vars(t_body.conclusion):
            raise KernelError("exists_elim: eigenvariable escapes into conclusion")
        if eigen in free_vars(ex):
            raise KernelError("exists_elim: eigenvariable free in the existential")
        rest = t_body.hypotheses - {inst}
        for h in rest:
            if eigen in free_vars(h):
                raise KernelError("exists_elim: eigenvariable free in a hypothesis")
        hyps = t_ex.hypotheses | rest
        return self._emit("exists_elim", (t_ex, t_body), (eigen,), hyps, t_body.conclusion)

    def conj_intro(self, a: Thm, b: Thm) -> Thm:
        return self._emit(
            "conj_intro", (a, b), (), a.hypotheses | b.hypotheses, And(a.conclusion, b.conclusion)
        )

    def conj_elim_left(self, t: Thm) -> Thm:
        c = t.conclusion
        if not isinstance(c, And):
            raise KernelError("conj_elim_left: not a conjunction")
        return self._emit("conj_elim_left", (t,), (), t.hypotheses, c.left)

    def conj_elim_right(self, t: Thm) -> Thm:
        c = t.conclusion
        if not isinstance(c, And):
            raise KernelError("conj_elim_right: not a conjunction")
        return self._emit("conj_elim_right", (t,), (), t.hypotheses, c.right)

    def disj_intro_left(self, t: Thm, right: Prop) -> Thm:
        self._check_prop(right)
        return self._emit(
            "disj_intro_left", (t,), (right,), t.hypotheses, Or(t.conclusion, right)
        )

    def disj_intro_right(self, t: Thm, left: Prop) -> Thm:
        self._check_prop(left)
        return self._emit(
            "disj_intro_right", (t,), (left,), t.hypotheses, Or(left, t.conclusion)
        )

    def disj_elim(self, t_or: Thm, t_a: Thm, t_b: Thm) -> Thm:
        c = t_or.conclusion
        if not isinstance(c, Or):
            raise KernelError("disj_elim: not a disjunction")
        if t_a.conclusion != t_b.conclusion:
            raise KernelError("disj_elim: branch conclusions differ")
        hyps = t_or.hypotheses | (t_a.hypotheses - {c.left}) | (t_b.hypotheses - {c.right})
        return self._emit("disj_elim", (t_or, t_a, t_b), (), hyps, t_a.conclusion)

    def not_intro(self, t: Thm, a: Prop) -> Thm:
        if not isinstance(t.conclusion, FalseP):
            raise KernelError("not_intro: body must conclude False")
        return self._emit("not_intro", (t,), (a,), t.hypotheses - {a}, Not(a))

    def not_elim(self, t_not: Thm, t_a: Thm) -> Thm:
        c = t_not.conclusion
        if not isinstance(c, Not):
            raise KernelError("not_elim: not a negation")
        if c.body != t_a.conclusion:
            raise KernelError("not_elim: proposition mismatch")
        return self._emit(
            "not_elim", (t_not, t_a), (), t_not.hypotheses | t_a.hypotheses, FALSE
        )

    def contradiction(self, t: Thm, a: Prop) -> Thm:
        """Classical: from (not A |- False) conclude A."""
        if not isinstance(t.conclusion, FalseP):
            raise KernelError("contradiction: body must conclude False")
        return self._emit("contradiction", (t,), (a,), t.hypotheses - {Not(a)}, a)

    def iff_intro(self, t_ab: Thm, t_ba: Thm) -> Thm:
        ab, ba = t_ab.conclusion, t_ba.conclusion
        if not (isinstance(ab, Implies) and isinstance(ba, Implies)):
            raise KernelError("iff_intro: both arguments must be implications")
        if ab.left != ba.right or ab.right != ba.left:
            raise KernelError("iff_intro: implications are not converses")
        return self._emit(
            "iff_intro", (t_ab, t_ba), (), t_ab.hypotheses | t_ba.hypotheses, Iff(ab.left, ab.right)
        )

    def iff_elim_left(self, t: Thm) -> Thm:
        c = t.conclusion
        if not isinstance(c, Iff):
            raise KernelError("iff_elim_left: not an iff")
        return self._emit("iff_elim_left", (t,), (), t.hypotheses, Implies(c.left, c.right))

    def iff_elim_right(self, t: Thm) -> Thm:
        c = t.conclusion
        if not isinstance(c, Iff):
            raise KernelError("iff_elim_right: not an iff")
        return self._emit("iff_elim_right", (t,), (), t.hypotheses, Implies(c.right, c.left))

    def true_intro(self) -> Thm:
        return self._emit("true_intro", (), (), frozenset(), TRUE)

    def false_elim(self, t: Thm, p: Prop) -> Thm:
        if not isinstance(t.conclusion, FalseP):
            raise KernelError("false_elim: not False")
        self._check_prop(p)
        return self._emit("false_elim", (t,), (p,), t.hypotheses, p)

    def eq_refl(self, term: Term) -> Thm:
        return self._emit("eq_refl", (), (term,), frozenset(), Eq(term, term))

    def eq_subst(self, t_eq: Thm, t_target: Thm, template: Prop, hole: str) -> Thm:
        """From a = b and P[a/hole] derive P[b/hole]."""
        eq = t_eq.conclusion
        if not isinstance(eq, Eq):
            raise KernelError("eq_subst: first argument must prove an equation")
        hole_var = Var(hole, sort_of(eq.lhs))
        if hole_var not in free_vars(template) and template != t_target.conclusion:
            # A template without the hole is only valid if it is already
            # the target (degenerate substitution).
            raise KernelError("eq_subst: template does not mention the hole")
        lhs_inst = subst_prop(template, {hole: eq.lhs})
        if lhs_inst != t_target.conclusion:
            raise KernelError("eq_subst: template at lhs is not the target")
        result = subst_prop(template, {hole: eq.rhs})
        hyps = t_eq.hypotheses | t_target.hypotheses
        return self._emit("eq_subst", (t_eq, t_target), (template, hole), hyps, result)

    def induct(
        self,
        var: Var,
        goal: Prop,
        cases: list[Thm],
        case_vars: list[tuple[Var, ...]],
    ) -> Thm:
        """Structural induction over a registered datatype.

        ``cases[i]`` must conclude ``goal[var := Ci(case_vars[i])]`` and may
        assume the induction hypotheses ``goal[var := v]`` for recursive
        ``v``; those assumptions are discharged here.
        """
        dt = self.theory.datatype_of(var.sort)
        if dt is None:
            raise KernelError(f"induct: {var.sort} is not a datatype")
        if len(cases) != len(dt.constructors) or len(case_vars) != len(dt.constructors):
            raise KernelError("induct: one case per constructor required")
        hyps: frozenset[Prop] = frozenset()
        for ctor, thm, cvars in zip(dt.constructors, cases, case_vars):
            if tuple(v.sort for v in cvars) != ctor.arg_sorts:
                raise KernelError(f"induct: case variables mismatch for {ctor.name}")
            mk = Const(ctor.name, ConstSig(ctor.arg_sorts, dt.sort))
            value: Term = App(mk, tuple(cvars)) if cvars else mk
            want = subst_prop(goal, {var.name: value})
            if thm.conclusion != want:
                raise KernelError(f"induct: case for {ctor.name} proves the wrong goal")
            ihs = {
                subst_prop(goal, {var.name: v}) for v in cvars if v.sort == dt.sort
            }
            rest = thm.hypotheses - ihs
            for v in cvars:
                if v in free_vars(goal):
                    raise KernelError("induct: case variable occurs in the goal")
                for h in rest:
                    if v in free_vars(h):
                        raise KernelError(
                            "induct: case variable free in an undischarged hypothesis"
                        )
            hyps |= rest
        return self._emit(
            "induct",
            tuple(cases),
            (var, goal, tuple(tuple(cv) for cv in case_vars)),
            hyps,
            goal,
        )

    # -- replay -----------------------------------------------------------

    def replay(self, thm: Thm) -> bool:
        """Re-run the certificate of ``thm`` through a fresh kernel.

        Raises KernelError on any divergence; returns True on success.
        """
        needed: list[int] = []
        seen: set[int] = set()
        stack = [thm.cert]
        while stack:
            c = stack.pop()
            if c in seen:
                continue
            seen.add(c)
            needed.append(c)
            stack.extend(self._log[c].thm_args)
        needed.sort()

        fresh = Kernel(self.theory)
        rebuilt: dict[int, Thm] = {}
        for cert in needed:
            step = self._log[cert]
            args = [rebuilt[c] for c in step.thm_args]
            method = getattr(fresh, step.op)
            if step.op == "rule_axiom":
                name, items = step.params
                result = method(name, dict(items))
            elif step.op == "induct":
                var, goal, cvars = step.params
                result = method(var, goal, args, [tuple(cv) for cv in cvars])
            else:
                result = method(*args, *step.params)
            if result.hypotheses != step.hypotheses or result.conclusion != step.conclusion:
                raise KernelError(f"replay divergence at step {cert} ({step.op})")
            rebuilt[cert] = result
        final = rebuilt[thm.cert]
        if final.hypotheses != thm.hypotheses or final.conclusion != thm.conclusion:
            raise KernelError("replay result differs from original theorem")
        return True
