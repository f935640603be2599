"""Clausal resolution search.

Finds refutations fast and reports which premises it used together with
the ground instantiations it applied to them.  Certificates are not
produced here; the tableau replays the proof through the kernel, guided
by the extracted instances.
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
    Var,
    alpha_key,
    strip_forall,
    subst_prop,
)
from ..kernel.matching import apply_subst_term
from ..kernel.terms import App, Const, ConstSig, Sort, sort_of, term_vars

Lit = tuple[bool, Prop]
Clause = tuple[Lit, ...]

SKOLEM_PREFIX = "_sk"


@dataclass(slots=True)
class ResolutionConfig:
    max_iterations: int = 3000
    max_clauses: int = 10000
    max_clause_len: int = 12
    max_cnf_clauses: int = 400
    max_term_depth: int = 10
    age_ratio: int = 4  # every (ratio+1)-th given clause is picked by age


@dataclass(slots=True)
class _ClauseInfo:
    lits: Clause
    origin: tuple  # ("input", key, binder_map) | ("res", i, j, sigma, rho) | ("fact", i, sigma)
    size: int
    cid: int

    def eligible(self) -> tuple[int, ...]:
        """Negative-literal selection: clauses with a negative literal may
        only resolve on the first one; positive clauses on any literal."""
        for i, (sign, _) in enumerate(self.lits):
            if not sign:
                return (i,)
        return tuple(range(len(self.lits)))


@dataclass(slots=True)
class ResolutionOutcome:
    proved: bool
    reason: str  # "proved" | "saturated" | "depth-exhausted" | "timeout"
    used_inputs: set = field(default_factory=set)
    instances: dict = field(default_factory=dict)  # input key -> list of term tuples


def _head_of(atom: Prop) -> object:
    """Index key: predicate symbol of an atom, "=" for equations."""
    match atom:
        case Atom(App(fn, _)):
            return fn.name
        case Atom(Const(name, _)):
            return name
        case Atom(_):
            return "?"
        case Eq(_, _):
            return "="
    return "?"


class _Clausifier:
    def __init__(self) -> None:
        self.var_counter = 0
        self.sk_counter = 0

    def fresh_var(self, sort: Sort) -> Var:
        self.var_counter += 1
        return Var(f"?u{self.var_counter}", sort)

    def skolem(self, sort: Sort, scope: list[Var]) -> Term:
        self.sk_counter += 1
        sig = ConstSig(tuple(v.sort for v in scope), sort)
        const = Const(f"{SKOLEM_PREFIX}{self.sk_counter}", sig)
        return App(const, tuple(scope)) if scope else const

    def clauses(
        self, p: Prop, positive: bool, env: dict[str, Term], scope: list[Var],
        cap: int,
    ) -> list[list[Lit]] | None:
        def cross(xs: list[list[Lit]], ys: list[list[Lit]]) -> list[list[Lit]] | None:
            if len(xs) * len(ys) > cap:
                return None
            return [a + b for a in xs for b in ys]

        match p:
            case TrueP():
                return [] if positive else [[]]
            case FalseP():
                return [[]] if positive else []
            case Atom(_) | Eq(_, _):
                inst = subst_prop(p, env)
                return [[(positive, inst)]]
            case Not(b):
                return self.clauses(b, not positive, env, scope, cap)
            case And(a, b):
                ca = self.clauses(a, positive, env, scope, cap)
                cb = self.clauses(b, positive, env, scope, cap)
                if ca is None or cb is None:
                    return None
                return ca + cb if positive else cross(ca, cb)
            case Or(a, b):
                ca = self.clauses(a, positive, env, scope, cap)
                cb = self.clauses(b, positive, env, scope, cap)
                if ca is None or cb is None:
                    return None
                return cross(ca, cb) if positive else ca + cb
            case Implies(a, b):
                ca = self.clauses(a, not positive, env, scope, cap)
                cb = self.clauses(b, positive, env, scope, cap)
                if ca is None or cb is None:
                    return None
                return cross(ca, cb) if positive else ca + cb
            case Iff(a, b):
                expanded = And(Implies(a, b), Implies(b, a))
                return self.clauses(expanded, positive, env, scope, cap)
            case Forall(v, s, b):
                if positive:
                    u = self.fresh_var(s)
                    return self.clauses(b, positive, {**env, v: u}, scope + [u], cap)
                sk = self.skolem(s, scope)
                return self.clauses(b, positive, {**env, v: sk}, scope, cap)
            case Exists(v, s, b):
                if positive:
                    sk = self.skolem(s, scope)
                    return self.clauses(b, positive, {**env, v: sk}, scope, cap)
                u = self.fresh_var(s)
                return self.clauses(b, positive, {**env, v: u}, scope + [u], cap)
        raise AssertionError(f"not a proposition: {p!r}")


# -- unification ---------------------------------------------------------


def _walk(t: Term, sigma: dict[str, Term]) -> Term:
    while isinstance(t, Var) and t.is_schematic and t.name in sigma:
        t = sigma[t.name]
    return t


def _occurs(name: str, t: Term, sigma: dict[str, Term]) -> bool:
    t = _walk(t, sigma)
    if isinstance(t, Var):
        return t.name == name
    if isinstance(t, App):
        return any(_occurs(name, a, sigma) for a in t.args)
    return False


def unify_terms(a: Term, b: Term, sigma: dict[str, Term]) -> bool:
    a, b = _walk(a, sigma), _walk(b, sigma)
    if isinstance(a, Var) and a.is_schematic:
        if isinstance(b, Var) and b.name == a.name:
            return True
        if _occurs(a.name, b, sigma) or sort_of(b) != a.sort:
            return False
        sigma[a.name] = b
        return True
    if isinstance(b, Var) and b.is_schematic:
        return unify_terms(b, a, sigma)
    match a, b:
        case Var(n1, s1), Var(n2, s2):
            return n1 == n2 and s1 == s2
        case Const(n1, _), Const(n2, _):
            return n1 == n2
        case App(f1, args1), App(f2, args2):
            if f1.name != f2.name or len(args1) != len(args2):
                return False
            return all(unify_terms(x, y, sigma) for x, y in zip(args1, args2))
    return False


def unify_atoms(p: Prop, q: Prop, sigma: dict[str, Term]) -> bool:
    match p, q:
        case Atom(t1), Atom(t2):
            return unify_terms(t1, t2, sigma)
        case Eq(l1, r1), Eq(l2, r2):
            return unify_terms(l1, l2, sigma) and unify_terms(r1, r2, sigma)
    return False


def _resolve_sigma_term(t: Term, sigma: dict[str, Term]) -> Term:
    t = _walk(t, sigma)
    if isinstance(t, App):
        return App(t.fn, tuple(_resolve_sigma_term(a, sigma) for a in t.args))
    return t


def _apply_lit(lit: Lit, sigma: dict[str, Term]) -> Lit:
    sign, atom = lit
    match atom:
        case Atom(t):
            return (sign, Atom(_resolve_sigma_term(t, sigma)))
        case Eq(a, b):
            return (sign, Eq(_resolve_sigma_term(a, sigma), _resolve_sigma_term(b, sigma)))
    raise AssertionError(atom)


def _rename_clause(lits: Clause, suffix: str) -> tuple[Clause, dict[str, Term]]:
    mapping: dict[str, Term] = {}

    def ren_term(t: Term) -> Term:
        if isinstance(t, Var) and t.is_schematic:
            if t.name not in mapping:
                mapping[t.name] = Var(t.name + suffix, t.sort)
            return mapping[t.name]
        if isinstance(t, App):
            return App(t.fn, tuple(ren_term(a) for a in t.args))
        return t

    out = []
    for sign, atom in lits:
        match atom:
            case Atom(t):
                out.append((sign, Atom(ren_term(t))))
            case Eq(a, b):
                out.append((sign, Eq(ren_term(a), ren_term(b))))
    return tuple(out), mapping


def _canon(lits: Clause) -> tuple:
    keys = sorted((lit[0], alpha_key(lit[1])) for lit in lits)
    return tuple(keys)


def _is_tautology(lits: Clause) -> bool:
    pos = {alpha_key(a) for s, a in lits if s}
    neg = {alpha_key(a) for s, a in lits if not s}
    return bool(pos & neg)


def _clause_ground(lits: Clause) -> bool:
    for _, atom in lits:
        match atom:
            case Atom(t):
                if any(v.is_schematic for v in term_vars(t)):
                    return False
            case Eq(a, b):
                if any(v.is_schematic for v in term_vars(a) | term_vars(b)):
                    return False
    return True


def _dedup(lits: list[Lit]) -> Clause:
    seen = set()
    out = []
    for lit in lits:
        key = (lit[0], alpha_key(lit[1]))
        if key not in seen:
            seen.add(key)
            out.append(lit)
    return tuple(out)


class ResolutionProver:
    def __init__(self, config: ResolutionConfig, deadline: float | None = None) -> None:
        self.cfg = config
        self.deadline = deadline

    def run(self, inputs: list[tuple[object, Prop]]) -> ResolutionOutcome:
        """Refute the conjunction of input props (goal already negated).

        Set-of-support: only clauses descending from the goal or from
        context hypotheses are selected for resolution, which is complete
        as long as the lemma base itself is satisfiable.
        """
        import heapq

        cl = _Clausifier()
        infos: list[_ClauseInfo] = []
        seen: set[tuple] = set()
        sos_flags: list[bool] = []
        heap: list[tuple[int, int, int]] = []

        def add_clause(lits: Clause, origin: tuple, sos: bool) -> _ClauseInfo | None:
            if _is_tautology(lits) or len(lits) > self.cfg.max_clause_len:
                return None
            if lits and max(_lit_depth(l) for l in lits) > self.cfg.max_term_depth:
                return None
            key = _canon(lits)
            if key in seen:
                return None
            seen.add(key)
            info = _ClauseInfo(lits, origin, sum(_lit_size(l) for l in lits), len(infos))
            infos.append(info)
            sos_flags.append(sos)
            if sos:
                heapq.heappush(heap, (len(lits), info.size, info.cid))
                age_queue.append(info.cid)
            return info

        age_queue: list[int] = []

        for key, prop in inputs:
            binders, _ = strip_forall(prop)
            start = cl.var_counter
            raw = cl.clauses(prop, True, {}, [], self.cfg.max_cnf_clauses)
            if raw is None:
                return ResolutionOutcome(False, "saturated")
            binder_map = tuple(
                (f"?u{start + i + 1}", s) for i, (_, s) in enumerate(binders)
            )
            in_sos = not (isinstance(key, tuple) and key and key[0] == "lemma")
            for lits in raw:
                add_clause(_dedup(lits), ("input", key, binder_map), in_sos)

        def outcome_for(cid: int) -> ResolutionOutcome:
            used: set = set()
            instances: dict = {}
            self._extract(infos, cid, {}, used, instances)
            return ResolutionOutcome(True, "proved", used, instances)

        for info in infos:
            if not info.lits:
                return outcome_for(info.cid)

        # ground pre-pass: saturate the goal clauses alone, unrestricted.
        # Complete for propositional goals, where no premise is needed.
        goal_ids = [
            i.cid for i in infos
            if i.origin[0] == "input" and i.origin[1] == ("goal",)
        ]
        if goal_ids and all(_clause_ground(infos[i].lits) for i in goal_ids):
            got = self._ground_saturate(infos, goal_ids, add_clause, outcome_for)
            if got is not None:
                return got

        # literal index over selectable partner literals
        index: dict[tuple[bool, object], list[int]] = {}
        for info in infos:
            if not sos_flags[info.cid]:
                self._index_clause(index, info)
        iterations = 0
        popped: set[int] = set()
        age_i = 0

        while heap or age_i < len(age_queue):
            iterations += 1
            if iterations > self.cfg.max_iterations or len(infos) > self.cfg.max_clauses:
                return ResolutionOutcome(False, "depth-exhausted")
            if self.deadline is not None and iterations % 16 == 0:
                if time.monotonic() > self.deadline:
                    return ResolutionOutcome(False, "timeout")

            gi = -1
            by_age = iterations % (self.cfg.age_ratio + 1) == 0
            if by_age or not heap:
                while age_i < len(age_queue) and age_queue[age_i] in popped:
                    age_i += 1
                if age_i < len(age_queue):
                    gi = age_queue[age_i]
                    age_i += 1
            if gi < 0:
                while heap:
                    _, _, cand = heapq.heappop(heap)
                    if cand not in popped:
                        gi = cand
                        break
                if gi < 0:
                    continue
            popped.add(gi)
            g = infos[gi]

            # factoring
            for i, j in itertools.combinations(range(len(g.lits)), 2):
                if g.lits[i][0] != g.lits[j][0]:
                    continue
                sigma: dict[str, Term] = {}
                if unify_atoms(g.lits[i][1], g.lits[j][1], sigma):
                    lits = _dedup([_apply_lit(l, sigma) for l in g.lits])
                    info = add_clause(lits, ("fact", gi, sigma), True)
                    if info is not None and not lits:
                        return outcome_for(info.cid)

            got = self._resolve_against(infos, index, g, add_clause, outcome_for, iterations)
            if got is not None:
                return got
            self._index_clause(index, g)

        return ResolutionOutcome(False, "saturated")

    def _resolve_against(self, infos, index, g, add_clause, outcome_for, iterations):
        partner_ids: list[int] = []
        partner_seen: set[int] = set()
        g_eligible = g.eligible()
        for li in g_eligible:
            s1, a1 = g.lits[li]
            head = _head_of(a1)
            keys = [(not s1, head), (not s1, "?")]
            if head == "?":  # atom variable unifies with any head
                keys = [k for k in index if k[0] == (not s1)]
            for key in keys:
                for pid in index.get(key, ()):
                    if pid not in partner_seen and pid != g.cid:
                        partner_seen.add(pid)
                        partner_ids.append(pid)
        partner_ids.append(g.cid)  # allow self-resolution

        for pi in partner_ids:
            c = infos[pi]
            renamed, rho = _rename_clause(c.lits, f"_r{iterations}_{pi}")
            for li in g_eligible:
                s1, a1 = g.lits[li]
                for lj in c.eligible():
                    s2, a2 = renamed[lj]
                    if s1 == s2:
                        continue
                    sigma: dict[str, Term] = {}
                    if not unify_atoms(a1, a2, sigma):
                        continue
                    rest = [
                        _apply_lit(l, sigma)
                        for k, l in enumerate(g.lits) if k != li
                    ] + [
                        _apply_lit(l, sigma)
                        for k, l in enumerate(renamed) if k != lj
                    ]
                    lits = _dedup(rest)
                    info = add_clause(lits, ("res", g.cid, pi, sigma, rho), True)
                    if info is not None and not lits:
                        return outcome_for(info.cid)
        return None

    def _ground_saturate(self, infos, seed_ids, add_clause, outcome_for):
        """Unrestricted saturation over ground clauses; propositionally complete."""
        import heapq as _hq

        queue = list(seed_ids)
        members = set(seed_ids)
        iterations = 0
        qi = 0
        while qi < len(queue):
            gi = queue[qi]
            qi += 1
            g = infos[gi]
            for pi in queue[:qi]:
                iterations += 1
                if iterations > self.cfg.max_iterations:
                    return None
                c = infos[pi]
                for li, (s1, a1) in enumerate(g.lits):
                    for lj, (s2, a2) in enumerate(c.lits):
                        if s1 == s2 or alpha_key(a1) != alpha_key(a2):
                            continue
                        rest = [l for k, l in enumerate(g.lits) if k != li] + [
                            l for k, l in enumerate(c.lits) if k != lj
                        ]
                        lits = _dedup(rest)
                        info = add_clause(lits, ("res", gi, pi, {}, {}), True)
                        if info is not None:
                            if not lits:
                                return outcome_for(info.cid)
                            queue.append(info.cid)
                            members.add(info.cid)
            if self.deadline is not None and qi % 32 == 0:
                if time.monotonic() > self.deadline:
                    return ResolutionOutcome(False, "timeout")
        return None

    @staticmethod
    def _index_clause(index: dict, info: _ClauseInfo) -> None:
        for i in info.eligible():
            sign, atom = info.lits[i]
            index.setdefault((sign, _head_of(atom)), []).append(info.cid)

    def _extract(
        self,
        infos: list[_ClauseInfo],
        cid: int,
        acc: dict[str, Term],
        used: set,
        instances: dict,
    ) -> None:
        info = infos[cid]
        kind = info.origin[0]
        if kind == "input":
            _, key, binder_map = info.origin
            used.add(key)
            if binder_map:
                terms = [
                    _resolve_sigma_term(Var(vname, sort), acc)
                    for vname, sort in binder_map
                ]
                if all(_ground_no_skolem(t) for t in terms):
                    instances.setdefault(key, []).append(tuple(terms))
            return
        if kind == "fact":
            _, parent, sigma = info.origin
            self._extract(infos, parent, _compose(sigma, acc), used, instances)
            return
        _, left, right, sigma, rho = info.origin
        self._extract(infos, left, _compose(sigma, acc), used, instances)
        rho_subst = {orig: t for orig, t in rho.items()}
        self._extract(infos, right, _compose(rho_subst, _compose(sigma, acc)), used, instances)


def _compose(f: dict[str, Term], g: dict[str, Term]) -> dict[str, Term]:
    """Apply f, then g."""
    out = {v: _resolve_sigma_term(t, g) for v, t in f.items()}
    for v, t in g.items():
        out.setdefault(v, t)
    return out


def _ground_no_skolem(t: Term) -> bool:
    match t:
        case Var(name, _):
            return not name.startswith("?")
        case Const(name, _):
            return not name.startswith(SKOLEM_PREFIX)
        case App(fn, args):
            if fn.name.startswith(SKOLEM_PREFIX):
                return False
            return all(_ground_no_skolem(a) for a in args)
    return False


def _lit_size(lit: Lit) -> int:
    from ..kernel.terms import term_size

    match lit[1]:
        case Atom(t):
            return term_size(t)
        case Eq(a, b):
            return term_size(a) + term_size(b)
    return 1


def _term_depth(t: Term) -> int:
    if isinstance(t, App):
        return 1 + max((_term_depth(a) for a in t.args), default=0)
    return 1


def _lit_depth(lit: Lit) -> int:
    match lit[1]:
        case Atom(t):
            return _term_depth(t)
        case Eq(a, b):
            return max(_term_depth(a), _term_depth(b))
    return 1
