"""Goal-directed search that emits kernel certificates directly.

The prover refutes ``facts + not goal`` with a tableau whose every move
is a kernel inference, so a successful run yields a theorem of the goal
with no separate checking pass.  Universal facts are instantiated by
hint substitutions (e.g. extracted from a resolution refutation), by
matching premises and conclusions against the branch, and finally by
bounded enumeration of branch terms.
"""

from __future__ import annotations

import itertools
import time
from dataclasses import dataclass, field

from ..kernel import (
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
    Term,
    TrueP,
    Theory,
    Var,
    free_vars,
    strip_forall,
    strip_implies,
    subst_prop,
)
from ..kernel import derived
from ..kernel.matching import NoMatch, apply_subst_prop, match_prop
from ..kernel.rewrite import RewriteRule, Rewriter, conv_from_trace
from ..kernel.terms import App, Const, sort_of
from ..kernel.thm import Kernel, Thm


class OutOfBudget(Exception):
    def __init__(self, reason: str) -> None:
        super().__init__(reason)
        self.reason = reason


@dataclass(slots=True)
class TableauConfig:
    max_depth: int = 10
    gamma_per_fact: int = 24
    gamma_total: int = 200
    max_facts: int = 400
    max_steps: int = 20000
    enum_tuple_cap: int = 24
    rewrite_budget: int = 120


class _Budget:
    __slots__ = ("steps", "deadline", "check")

    def __init__(self, max_steps: int, deadline: float | None) -> None:
        self.steps = max_steps
        self.deadline = deadline
        self.check = 0

    def tick(self, n: int = 1) -> None:
        self.steps -= n
        if self.steps <= 0:
            raise OutOfBudget("depth-exhausted")
        self.check += 1
        if self.deadline is not None and self.check % 64 == 0:
            if time.monotonic() > self.deadline:
                raise OutOfBudget("timeout")


def _schematize(binders: list[tuple[str, object]], p: Prop) -> Prop:
    mapping = {v: Var("?" + v, s) for v, s in binders}
    return subst_prop(p, mapping)


@dataclass(slots=True)
class _Branch:
    thms: list[Thm]
    props: dict[Prop, Thm]
    alpha_done: set[Prop]
    mp_done: set[tuple[Prop, Prop]]
    eq_done: set[tuple[Prop, Prop]]
    rw_done: set[Prop]
    gamma_done: dict[Prop, set[tuple]]
    gamma_counts: dict[Prop, int]
    gamma_total: int
    ground_terms: list[Term]

    def clone(self) -> "_Branch":
        return _Branch(
            list(self.thms),
            dict(self.props),
            set(self.alpha_done),
            set(self.mp_done),
            set(self.eq_done),
            set(self.rw_done),
            {k: set(v) for k, v in self.gamma_done.items()},
            dict(self.gamma_counts),
            self.gamma_total,
            list(self.ground_terms),
        )


def _collect_ground_terms(
    p: Prop, out: list[Term], seen: set, bound: frozenset[str] = frozenset()
) -> None:
    from ..kernel import term_vars

    def usable(t: Term) -> bool:
        return not any(v.is_schematic or v.name in bound for v in term_vars(t))

    def walk_term(t: Term) -> None:
        if usable(t) and t not in seen:
            seen.add(t)
            out.append(t)
        if isinstance(t, App):
            for a in t.args:
                walk_term(a)

    match p:
        case Atom(t):
            walk_term(t)
        case Eq(a, b):
            walk_term(a)
            walk_term(b)
        case Not(b):
            _collect_ground_terms(b, out, seen, bound)
        case And(a, b) | Or(a, b) | Implies(a, b) | Iff(a, b):
            _collect_ground_terms(a, out, seen, bound)
            _collect_ground_terms(b, out, seen, bound)
        case Forall(v, _, b) | Exists(v, _, b):
            _collect_ground_terms(b, out, seen, bound | {v})
        case _:
            pass


class TableauProver:
    def __init__(
        self,
        kernel: Kernel,
        config: TableauConfig,
        *,
        rewrite_rules: tuple[RewriteRule, ...] = (),
        instance_hints: dict[Prop, list[tuple[Term, ...]]] | None = None,
        deadline: float | None = None,
    ) -> None:
        self.k = kernel
        self.theory = kernel.theory
        self.cfg = config
        self.rules = rewrite_rules
        self.hints = instance_hints or {}
        self.budget = _Budget(config.max_steps, deadline)
        self._eigen = 0

    # -- public ----------------------------------------------------------

    def prove(self, facts: list[Thm], goal: Prop) -> Thm | None:
        """Theorem for ``goal`` under the facts' hypotheses, or None."""
        neg = self.k.assume(Not(goal))
        t_false = self.refute([*facts, neg])
        if t_false is None:
            return None
        return self.k.contradiction(t_false, goal)

    def refute(self, facts: list[Thm]) -> Thm | None:
        branch = _Branch([], {}, set(), set(), set(), set(), {}, {}, 0, [])
        seen: set = set()
        for t in facts:
            self._add(branch, t)
        for t in facts:
            _collect_ground_terms(t.conclusion, branch.ground_terms, seen)
        avoid = set()
        for t in facts:
            for h in t.hypotheses:
                avoid |= {v.name for v in free_vars(h)}
            avoid |= {v.name for v in free_vars(t.conclusion)}
        self._avoid = avoid
        return self._close(branch, self.cfg.max_depth)

    # -- plumbing ----------------------------------------------------------

    def _add(self, branch: _Branch, thm: Thm) -> bool:
        p = thm.conclusion
        if p in branch.props:
            return False
        if len(branch.thms) >= self.cfg.max_facts:
            raise OutOfBudget("depth-exhausted")
        branch.thms.append(thm)
        branch.props[p] = thm
        seen = set(branch.ground_terms)
        _collect_ground_terms(p, branch.ground_terms, seen)
        return True

    def _fresh_eigen(self, sort) -> Var:
        while True:
            self._eigen += 1
            name = f"_e{self._eigen}"
            if name not in self._avoid:
                return Var(name, sort)

    # -- main refutation loop ----------------------------------------------

    def _close(self, branch: _Branch, depth: int) -> Thm | None:
        while True:
            self.budget.tick()

            hit = self._immediate(branch)
            if hit is not None:
                return hit
            if self._alpha(branch):
                continue
            if self._modus_ponens(branch):
                continue
            delta = self._delta(branch, depth)
            if delta is not NotImplemented:
                return delta
            if self._equalities(branch):
                continue
            if self._user_rewrites(branch):
                continue
            if self._gamma(branch, hints_only=True):
                continue
            if self._gamma(branch, hints_only=False):
                continue
            beta = self._beta(branch, depth)
            if beta is not NotImplemented:
                return beta
            return None

    def _immediate(self, branch: _Branch) -> Thm | None:
        for t in branch.thms:
            if isinstance(t.conclusion, FalseP):
                return t
        for p, t in branch.props.items():
            if isinstance(p, Not):
                body = p.body
                pos = branch.props.get(body)
                if pos is not None:
                    return self.k.not_elim(t, pos)
                if isinstance(body, Eq) and body.lhs == body.rhs:
                    return self.k.not_elim(t, self.k.eq_refl(body.lhs))
                if isinstance(body, TrueP):
                    return self.k.not_elim(t, self.k.true_intro())
        return None

    def _alpha(self, branch: _Branch) -> bool:
        for t in list(branch.thms):
            p = t.conclusion
            if p in branch.alpha_done:
                continue
            match p:
                case And(_, _):
                    branch.alpha_done.add(p)
                    added = self._add(branch, self.k.conj_elim_left(t))
                    added |= self._add(branch, self.k.conj_elim_right(t))
                    if added:
                        return True
                case Not(Not(_)):
                    branch.alpha_done.add(p)
                    if self._add(branch, derived.not_not_elim(self.k, t)):
                        return True
                case Iff(_, _):
                    branch.alpha_done.add(p)
                    added = self._add(branch, self.k.iff_elim_left(t))
                    added |= self._add(branch, self.k.iff_elim_right(t))
                    if added:
                        return True
                case Not(Or(_, _)):
                    branch.alpha_done.add(p)
                    na, nb = derived.neg_or_elim(self.k, t)
                    added = self._add(branch, na)
                    added |= self._add(branch, nb)
                    if added:
                        return True
                case Not(Implies(_, _)):
                    branch.alpha_done.add(p)
                    ta, tnb = derived.neg_imp_elim(self.k, t)
                    added = self._add(branch, ta)
                    added |= self._add(branch, tnb)
                    if added:
                        return True
                case Not(And(_, _)):
                    branch.alpha_done.add(p)
                    if self._add(branch, derived.neg_and_to_disj(self.k, t)):
                        return True
                case Not(Iff(_, _)):
                    branch.alpha_done.add(p)
                    if self._add(branch, derived.neg_iff_to_disj(self.k, t)):
                        return True
                case Not(Exists(_, _, _)):
                    branch.alpha_done.add(p)
                    eigen = self._fresh_eigen(p.body.sort)
                    if self._add(branch, derived.neg_exists_to_forall(self.k, t, eigen)):
                        return True
                case Not(Forall(_, _, _)):
                    branch.alpha_done.add(p)
                    eigen = self._fresh_eigen(p.body.sort)
                    if self._add(branch, derived.neg_forall_to_exists(self.k, t, eigen)):
                        return True
        return False

    def _modus_ponens(self, branch: _Branch) -> bool:
        for t in list(branch.thms):
            p = t.conclusion
            if not isinstance(p, Implies):
                continue
            arg = branch.props.get(p.left)
            if arg is None:
                continue
            key = (p, p.left)
            if key in branch.mp_done:
                continue
            branch.mp_done.add(key)
            # once detached, branching on this implication adds nothing
            branch.alpha_done.add(p)
            if self._add(branch, self.k.implies_elim(t, arg)):
                return True
        return False

    def _delta(self, branch: _Branch, depth: int):
        """Eliminate the first unexpanded existential; NotImplemented if none."""
        for t in list(branch.thms):
            p = t.conclusion
            if not isinstance(p, Exists) or p in branch.alpha_done:
                continue
            branch.alpha_done.add(p)
            eigen = self._fresh_eigen(p.sort)
            inst = subst_prop(p.body, {p.var: eigen})
            inner = branch.clone()
            witness = self.k.assume(inst)
            self._add(inner, witness)
            body = self._close(inner, depth)
            if body is None:
                return None
            if inst not in body.hypotheses:
                return body
            return self.k.exists_elim(t, body, eigen)
        return NotImplemented

    def _equalities(self, branch: _Branch) -> bool:
        for t_eq in list(branch.thms):
            eq = t_eq.conclusion
            if not isinstance(eq, Eq) or eq.lhs == eq.rhs:
                continue
            if any(v.is_schematic for v in free_vars(eq)):
                continue
            oriented = self._orient(t_eq, eq)
            if oriented is None:
                continue
            t_eq2, src = oriented
            for target in list(branch.thms):
                tp = target.conclusion
                if tp is eq or not self._is_literal(tp):
                    continue
                key = (eq, tp)
                if key in branch.eq_done:
                    continue
                branch.eq_done.add(key)
                if not _prop_mentions(tp, src):
                    continue
                self.budget.tick()
                rewritten = self._subst_all(t_eq2, target)
                if rewritten is not None and self._add(branch, rewritten):
                    return True
        return False

    def _orient(self, t_eq: Thm, eq: Eq) -> tuple[Thm, Term] | None:
        """Pick a terminating direction: eliminate variables, else shrink."""
        from ..kernel.terms import term_size

        l, r = eq.lhs, eq.rhs
        if isinstance(l, Var) and not _occurs_in(l, r):
            return t_eq, l
        if isinstance(r, Var) and not _occurs_in(r, l):
            return derived.eq_sym(self.k, t_eq), r
        sl, sr = term_size(l), term_size(r)
        if sl > sr and not _occurs_in(l, r):
            return t_eq, l
        if sr > sl and not _occurs_in(r, l):
            return derived.eq_sym(self.k, t_eq), r
        if sl == sr:
            # same size: fixed arbitrary orientation by canonical key
            key_l, key_r = repr(l), repr(r)
            if key_l > key_r and not _occurs_in(l, r):
                return t_eq, l
            if key_r > key_l and not _occurs_in(r, l):
                return derived.eq_sym(self.k, t_eq), r
        return None

    def _is_literal(self, p: Prop) -> bool:
        match p:
            case Atom(_) | Eq(_, _) | Not(Atom(_)) | Not(Eq(_, _)):
                return True
        return False

    def _subst_all(self, t_eq: Thm, target: Thm) -> Thm | None:
        """Replace every occurrence of the equation's lhs in the target."""
        eq = t_eq.conclusion
        assert isinstance(eq, Eq)
        hole = derived.fresh_var(
            sort_of(eq.lhs),
            {v.name for v in free_vars(target.conclusion)} | {v.name for v in free_vars(eq)},
            base="_h",
        )
        template = _replace_term_in_prop(target.conclusion, eq.lhs, hole)
        if template == target.conclusion:
            return None
        return self.k.eq_subst(t_eq, target, template, hole.name)

    def _user_rewrites(self, branch: _Branch) -> bool:
        if not self.rules:
            return False
        rw = Rewriter(self.theory, list(self.rules))
        for t in list(branch.thms):
            p = t.conclusion
            if p in branch.rw_done or not self._is_literal(p):
                continue
            branch.rw_done.add(p)
            res = rw.rewrite(p, self.cfg.rewrite_budget)
            if not res.trace or res.prop == p:
                continue
            conv = conv_from_trace(self.k, p, res.trace, self.theory)
            if self._add(branch, derived.iff_mp(self.k, conv, t)):
                return True
        return False

    def _beta(self, branch: _Branch, depth: int):
        for t in list(branch.thms):
            p = t.conclusion
            disj: Thm | None = None
            if isinstance(p, Or) and p not in branch.alpha_done:
                if _trivially_true(p):
                    branch.alpha_done.add(p)  # entailed: branching adds nothing
                    continue
                disj = t
            elif isinstance(p, Implies) and p not in branch.alpha_done:
                disj = None  # converted below
            else:
                continue
            if depth <= 0:
                return None
            branch.alpha_done.add(p)
            if disj is None:
                disj = derived.imp_to_disj(self.k, t)
            d = disj.conclusion
            assert isinstance(d, Or)
            left = branch.clone()
            th_a = self.k.assume(d.left)
            self._add(left, th_a)
            ta = self._close(left, depth - 1)
            if ta is None:
                return None
            right = branch.clone()
            th_b = self.k.assume(d.right)
            self._add(right, th_b)
            tb = self._close(right, depth - 1)
            if tb is None:
                return None
            return self.k.disj_elim(disj, ta, tb)
        return NotImplemented

    # -- universal instantiation -------------------------------------------

    def _gamma(self, branch: _Branch, hints_only: bool) -> bool:
        """One fair sweep: each universal fact contributes at most one new
        instance per call, so early facts cannot starve later ones."""
        added = False
        for t in list(branch.thms):
            p = t.conclusion
            if not isinstance(p, Forall):
                continue
            if branch.gamma_counts.get(p, 0) >= self.cfg.gamma_per_fact:
                continue
            if branch.gamma_total >= self.cfg.gamma_total:
                return added
            cands = self._hint_instances(p)
            if not hints_only:
                cands = cands + self._guided_instances(branch, p)
            done = branch.gamma_done.setdefault(p, set())
            for tup in cands:
                if tup in done:
                    continue
                done.add(tup)
                branch.gamma_counts[p] = branch.gamma_counts.get(p, 0) + 1
                branch.gamma_total += 1
                inst = t
                ok = True
                for term in tup:
                    c = inst.conclusion
                    if not isinstance(c, Forall) or sort_of(term) != c.sort:
                        ok = False
                        break
                    inst = self.k.forall_elim(inst, term)
                if ok and self._add(branch, inst):
                    added = True
                    break
                if branch.gamma_counts.get(p, 0) >= self.cfg.gamma_per_fact:
                    break
        return added

    def _hint_instances(self, p: Forall) -> list[tuple[Term, ...]]:
        return list(self.hints.get(p, ()))

    def _guided_instances(self, branch: _Branch, p: Forall) -> list[tuple[Term, ...]]:
        binders, core = strip_forall(p)
        names = [n for n, _ in binders]
        schematic = _schematize(binders, core)
        premises, concl = strip_implies(schematic)

        partials: list[dict] = []
        # backward: conclusion against complementary facts; fully schematic
        # conclusions (e.g. bare ?a = ?b) match everything and guide nothing
        from ..kernel import prop_consts

        concl_informative = bool(prop_consts(concl))
        for q in branch.props:
            if not concl_informative:
                break
            if isinstance(q, Not) and not isinstance(concl, (FalseP, Not)):
                sub: dict = {}
                try:
                    match_prop(concl, q.body, sub)
                    partials.append(sub)
                except NoMatch:
                    pass
            elif isinstance(concl, Not) and not isinstance(q, Not):
                sub = {}
                try:
                    match_prop(concl.body, q, sub)
                    partials.append(sub)
                except NoMatch:
                    pass
        # forward: each premise against positive facts
        for prem in premises:
            for q in branch.props:
                sub = {}
                try:
                    match_prop(prem, q, sub)
                    partials.append(sub)
                except NoMatch:
                    pass
        if not partials:
            partials = [{}]
        # fully-determined matches first, then by how much enumeration is left
        partials.sort(key=lambda sub: sum(1 for n, _ in binders if "?" + n not in sub))

        out: list[tuple[Term, ...]] = []
        seen: set[tuple] = set()
        by_sort: dict[str, list[Term]] = {}
        from ..kernel.terms import term_size

        # eigen/context variables make the informative instances; try them
        # before constructor terms, smallest first
        ordered = sorted(
            branch.ground_terms,
            key=lambda t: (not isinstance(t, Var), term_size(t)),
        )
        for term in ordered:
            by_sort.setdefault(str(sort_of(term)), []).append(term)

        for sub in partials:
            missing = [(n, s) for n, s in binders if "?" + n not in sub]
            pools = []
            feasible = True
            for _, s in missing:
                pool = by_sort.get(str(s), [])
                if not pool:
                    feasible = False
                    break
                pools.append(pool[: self.cfg.enum_tuple_cap])
            if not feasible:
                continue
            count = 0
            for combo in itertools.product(*pools):
                if count >= self.cfg.enum_tuple_cap:
                    break
                count += 1
                full = dict(sub)
                for (n, _), term in zip(missing, combo):
                    full["?" + n] = term
                tup = tuple(full["?" + n] for n in names)
                if tup not in seen:
                    seen.add(tup)
                    out.append(tup)
        return out


def _trivially_true(p: Prop) -> bool:
    """A disjunction with a reflexive-equation disjunct carries no information."""
    match p:
        case Or(a, b):
            return _trivially_true(a) or _trivially_true(b)
        case Eq(l, r):
            return l == r
        case Exists(_, _, b):
            return _trivially_true(b)
        case TrueP():
            return True
    return False


def _occurs_in(needle: Term, hay: Term) -> bool:
    if hay == needle:
        return True
    if isinstance(hay, App):
        return any(_occurs_in(needle, a) for a in hay.args)
    return False


def _prop_mentions(p: Prop, needle: Term) -> bool:
    match p:
        case Atom(t):
            return _occurs_in(needle, t)
        case Eq(a, b):
            return _occurs_in(needle, a) or _occurs_in(needle, b)
        case Not(b):
            return _prop_mentions(b, needle)
    return False


def _replace_term_in_prop(p: Prop, needle: Term, repl: Term) -> Prop:
    def in_term(t: Term) -> Term:
        if t == needle:
            return repl
        if isinstance(t, App):
            return App(t.fn, tuple(in_term(a) for a in t.args))
        return t

    match p:
        case Atom(t):
            return Atom(in_term(t))
        case Eq(a, b):
            return Eq(in_term(a), in_term(b))
        case Not(b):
            return Not(_replace_term_in_prop(b, needle, repl))
        case And(a, b):
            return And(_replace_term_in_prop(a, needle, repl), _replace_term_in_prop(b, needle, repl))
        case Or(a, b):
            return Or(_replace_term_in_prop(a, needle, repl), _replace_term_in_prop(b, needle, repl))
        case Implies(a, b):
            return Implies(_replace_term_in_prop(a, needle, repl), _replace_term_in_prop(b, needle, repl))
        case Iff(a, b):
            return Iff(_replace_term_in_prop(a, needle, repl), _replace_term_in_prop(b, needle, repl))
        case _:
            return p
