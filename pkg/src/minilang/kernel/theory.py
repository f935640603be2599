"""Theory registry: sorts, constants, datatypes, axioms, rules, bundles.

A theory is the frozen signature a kernel instance works over.  All named
facts (axioms, rewrite rules, definitions, lemmas) live in one table; the
declaration kind only adds metadata (simp flag, definiendum, bundle tag).
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .props import (
    FALSE,
    And,
    Atom,
    Eq,
    Exists,
    Forall,
    Iff,
    Implies,
    Not,
    Or,
    Prop,
    free_vars,
    implies_chain,
    prop_consts,
    strip_forall,
    strip_implies,
)
from .terms import BOOL, App, Const, ConstSig, KernelError, Sort, Term, Var


class TheoryError(Exception):
    """Malformed or conflicting theory declaration."""


@dataclass(frozen=True, slots=True)
class RuleSpec:
    """Inference-rule schema: instances of ``premises => conclusion``.

    Schematic variables are ``?``-prefixed; bool-sorted schematics stand
    for whole propositions.  Every schematic in the premises must occur
    in the conclusion, so first-order matching of the conclusion fully
    determines an instance.
    """

    name: str
    premises: tuple[Prop, ...]
    conclusion: Prop
    kind: str  # intro | elim | dest | rewrite

    def __post_init__(self) -> None:
        if self.kind not in ("intro", "elim", "dest", "rewrite"):
            raise TheoryError(f"rule {self.name}: unknown kind {self.kind!r}")
        concl_scheme = {v.name for v in free_vars(self.conclusion) if v.is_schematic}
        for p in self.premises:
            for v in free_vars(p):
                if v.is_schematic and v.name not in concl_scheme:
                    raise TheoryError(
                        f"rule {self.name}: schematic {v.name} occurs in a "
                        "premise but not in the conclusion"
                    )


@dataclass(frozen=True, slots=True)
class Constructor:
    name: str
    arg_sorts: tuple[Sort, ...]


@dataclass(frozen=True, slots=True)
class Datatype:
    sort: Sort
    constructors: tuple[Constructor, ...]


@dataclass(frozen=True, slots=True)
class FactInfo:
    """Metadata for a named fact in the theory."""

    prop: Prop
    simp: bool = False
    definiendum: str | None = None
    bundle: str | None = None


def _schematic_prop(name: str) -> Prop:
    return Atom(Var(name, BOOL))


def _builtin_rules() -> dict[str, RuleSpec]:
    a = _schematic_prop("?A")
    b = _schematic_prop("?B")
    rules = [
        RuleSpec("notI", (Implies(a, FALSE),), Not(a), "intro"),
        RuleSpec("conjI", (a, b), And(a, b), "intro"),
        RuleSpec("disjCI", (Implies(Not(a), b),), Or(a, b), "intro"),
        RuleSpec("disjI1", (a,), Or(a, b), "intro"),
        RuleSpec("disjI2", (b,), Or(a, b), "intro"),
        RuleSpec("iffI", (Implies(a, b), Implies(b, a)), Iff(a, b), "intro"),
    ]
    return {r.name: r for r in rules}


class Theory:
    """Mutable while loading; frozen before proving starts."""

    def __init__(self, name: str) -> None:
        self.name = name
        self.sorts: dict[str, int] = {"bool": 0}
        self.consts: dict[str, ConstSig] = {}
        self.datatypes: dict[str, Datatype] = {}
        self.facts: dict[str, FactInfo] = {}
        self.rules: dict[str, RuleSpec] = dict(_builtin_rules())
        self.bundles: dict[str, tuple[str, ...]] = {}
        # (rel1, rel2) -> (result rel, composing lemma name); "=" composes
        # with anything via kernel substitution and needs no table entry.
        self.transitivity: dict[tuple[str, str], tuple[str, str]] = {}
        # bookkeeping so a dump can reconstruct the source declarations
        self.auto_facts: set[str] = set()
        self.ctor_consts: set[str] = set()
        self.includes: list[str] = []
        self._frozen = False

    # -- declaration ----------------------------------------------------

    def _check_open(self) -> None:
        if self._frozen:
            raise TheoryError(f"theory {self.name} is frozen")

    def add_sort(self, name: str, arity: int = 0) -> None:
        self._check_open()
        if name in self.sorts and self.sorts[name] != arity:
            raise TheoryError(f"sort {name} redeclared with different arity")
        self.sorts[name] = arity

    def check_sort(self, sort: Sort) -> None:
        if sort.name not in self.sorts:
            raise TheoryError(f"unknown sort {sort.name}")
        if len(sort.params) != self.sorts[sort.name]:
            raise TheoryError(
                f"sort {sort.name} expects {self.sorts[sort.name]} parameters"
            )
        for p in sort.params:
            self.check_sort(p)

    def add_const(self, name: str, sig: ConstSig) -> None:
        self._check_open()
        for s in sig.args:
            self.check_sort(s)
        self.check_sort(sig.result)
        if name in self.consts and self.consts[name] != sig:
            raise TheoryError(f"constant {name} redeclared with different signature")
        self.consts[name] = sig

    def const(self, name: str) -> Const:
        if name not in self.consts:
            raise TheoryError(f"unknown constant {name}")
        return Const(name, self.consts[name])

    def add_datatype(self, sort: Sort, ctors: list[tuple[str, list[Sort]]]) -> None:
        self._check_open()
        self.add_sort(sort.name, len(sort.params))
        key = str(sort)
        if key in self.datatypes:
            raise TheoryError(f"datatype {key} redeclared")
        built = []
        for cname, args in ctors:
            self.add_const(cname, ConstSig(tuple(args), sort))
            self.ctor_consts.add(cname)
            built.append(Constructor(cname, tuple(args)))
        dt = Datatype(sort, tuple(built))
        self.datatypes[key] = dt
        before = set(self.facts)
        self._add_datatype_facts(dt)
        self.auto_facts |= set(self.facts) - before

    def _add_datatype_facts(self, dt: Datatype) -> None:
        """Exhaustiveness, distinctness and injectivity axioms."""
        x = Var("x", dt.sort)

        def ctor_case(c: Constructor) -> Prop:
            args = [Var(f"a{i + 1}", s) for i, s in enumerate(c.arg_sorts)]
            mk = Const(c.name, ConstSig(c.arg_sorts, dt.sort))
            value: Term = App(mk, tuple(args)) if args else mk
            body: Prop = Eq(x, value)
            for v in reversed(args):
                body = Exists(v.name, v.sort, body)
            return body

        cases = [ctor_case(c) for c in dt.constructors]
        exhaust = cases[-1]
        for c in reversed(cases[:-1]):
            exhaust = Or(c, exhaust)
        tag = dt.sort.name
        self.add_fact(f"{tag}_exhaust", Forall("x", dt.sort, exhaust))

        for i, c1 in enumerate(dt.constructors):
            mk1 = Const(c1.name, ConstSig(c1.arg_sorts, dt.sort))
            for c2 in dt.constructors[i + 1 :]:
                mk2 = Const(c2.name, ConstSig(c2.arg_sorts, dt.sort))
                a1 = [Var(f"a{k + 1}", s) for k, s in enumerate(c1.arg_sorts)]
                a2 = [Var(f"b{k + 1}", s) for k, s in enumerate(c2.arg_sorts)]
                t1: Term = App(mk1, tuple(a1)) if a1 else mk1
                t2: Term = App(mk2, tuple(a2)) if a2 else mk2
                for name, eq in (
                    (f"{c1.name}_neq_{c2.name}", Eq(t1, t2)),
                    (f"{c2.name}_neq_{c1.name}", Eq(t2, t1)),
                ):
                    prop: Prop = Not(eq)
                    for v in reversed(a1 + a2):
                        prop = Forall(v.name, v.sort, prop)
                    self.add_fact(name, prop)
            if c1.arg_sorts:
                a1 = [Var(f"a{k + 1}", s) for k, s in enumerate(c1.arg_sorts)]
                b1 = [Var(f"b{k + 1}", s) for k, s in enumerate(c1.arg_sorts)]
                eqs = [Eq(a, b) for a, b in zip(a1, b1)]
                concl = eqs[0]
                for e in eqs[1:]:
                    concl = And(concl, e)
                prop = Implies(Eq(App(mk1, tuple(a1)), App(mk1, tuple(b1))), concl)
                for v in reversed(a1 + b1):
                    prop = Forall(v.name, v.sort, prop)
                self.add_fact(f"{c1.name}_inject", prop)

    def datatype_of(self, sort: Sort) -> Datatype | None:
        return self.datatypes.get(str(sort))

    def add_fact(
        self,
        name: str,
        prop: Prop,
        *,
        simp: bool = False,
        definiendum: str | None = None,
        bundle: str | None = None,
    ) -> None:
        self._check_open()
        if name in self.facts or name in self.rules:
            raise TheoryError(f"duplicate fact name {name}")
        if any(not v.is_schematic for v in free_vars(prop)):
            raise TheoryError(f"fact {name} has free variables; close with forall")
        if definiendum is not None:
            self._check_definition(name, prop, definiendum)
        self.facts[name] = FactInfo(prop, simp=simp, definiendum=definiendum, bundle=bundle)

    def _check_definition(self, name: str, prop: Prop, head: str) -> None:
        _, core = strip_forall(prop)
        match core:
            case Eq(App(Const(h, _), _), rhs) if h == head:
                body_syms = prop_consts_term_safe(rhs)
            case Iff(Atom(App(Const(h, _), _)), rhs) if h == head:
                body_syms = prop_consts(rhs)
            case _:
                raise TheoryError(
                    f"definition {name} must equate an application of {head}"
                )
        if head in body_syms:
            raise TheoryError(f"definition {name} is recursive")

    def add_rule(self, rule: RuleSpec) -> None:
        self._check_open()
        if rule.name in self.rules or rule.name in self.facts:
            raise TheoryError(f"duplicate rule name {rule.name}")
        self.rules[rule.name] = rule

    def add_bundle(self, name: str, lemmas: list[str]) -> None:
        self._check_open()
        if name in self.bundles:
            raise TheoryError(f"duplicate bundle {name}")
        for lem in lemmas:
            if lem not in self.facts:
                raise TheoryError(f"bundle {name}: unknown lemma {lem}")
            info = self.facts[lem]
            self.facts[lem] = FactInfo(info.prop, info.simp, info.definiendum, name)
        self.bundles[name] = tuple(lemmas)

    def add_transitivity(self, r1: str, r2: str, rout: str, lemma: str) -> None:
        self._check_open()
        if lemma not in self.facts:
            raise TheoryError(f"transitivity lemma {lemma} not declared")
        self.transitivity[(r1, r2)] = (rout, lemma)

    def merge(self, other: Theory) -> None:
        """Used by ``include``: pull all declarations of another theory."""
        self._check_open()
        for s, ar in other.sorts.items():
            self.add_sort(s, ar)
        for c, sig in other.consts.items():
            if c not in self.consts:
                self.consts[c] = sig
            elif self.consts[c] != sig:
                raise TheoryError(f"include clash on constant {c}")
        for key, dt in other.datatypes.items():
            if key not in self.datatypes:
                self.datatypes[key] = dt
        for n, info in other.facts.items():
            if n not in self.facts:
                self.facts[n] = info
            elif self.facts[n].prop != info.prop:
                raise TheoryError(f"include clash on fact {n}")
        for n, rule in other.rules.items():
            if n not in self.rules:
                self.rules[n] = rule
        for n, b in other.bundles.items():
            if n not in self.bundles:
                self.bundles[n] = b
        for k, v in other.transitivity.items():
            self.transitivity.setdefault(k, v)
        self.auto_facts |= other.auto_facts
        self.ctor_consts |= other.ctor_consts
        self.includes.append(other.name)

    def freeze(self) -> Theory:
        self._frozen = True
        return self

    @property
    def frozen(self) -> bool:
        return self._frozen

    # -- queries used by provers and the interpreter --------------------

    def fact(self, name: str) -> Prop:
        if name not in self.facts:
            raise TheoryError(f"unknown fact {name}")
        return self.facts[name].prop

    def simp_names(self) -> list[str]:
        return [n for n, info in self.facts.items() if info.simp]

    def definition_names(self) -> list[str]:
        return [n for n, info in self.facts.items() if info.definiendum]


def prop_consts_term_safe(t) -> set[str]:
    from .terms import term_consts

    return term_consts(t)


def rule_schema_prop(rule: RuleSpec) -> Prop:
    """The implication chain a rule instance proves."""
    return implies_chain(list(rule.premises), rule.conclusion)


def instantiate_rule(rule: RuleSpec, subst: dict[str, Prop | Term]) -> Prop:
    """Instantiate schematics; prop-valued entries replace bool atoms."""
    from .matching import apply_subst_prop

    return apply_subst_prop(rule_schema_prop(rule), subst)


__all__ = [
    "Theory",
    "TheoryError",
    "RuleSpec",
    "Datatype",
    "Constructor",
    "FactInfo",
    "rule_schema_prop",
    "instantiate_rule",
]
