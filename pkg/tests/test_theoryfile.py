"""Theory file format: loading, dumping, round-trips, error cases."""

import pytest

from minilang.theoryfile import (
    TheoryFileError,
    TheoryRegistry,
    builtin_registry,
    dump_theory,
    load_theory_text,
)


def test_bundled_theories_load(registry):
    assert set(registry.names()) >= {
        "arith", "isar_demo", "order_demo", "prop_demo", "sqrt2_axioms",
    }


def test_dump_round_trips_every_bundled_theory(registry):
    for name in registry.names():
        th = registry.get(name)
        dumped = dump_theory(th, registry)
        # reload in a registry that still provides the includes
        reg2 = TheoryRegistry()
        for inc in th.includes:
            reg2.add_text(dump_theory(registry.get(inc), registry))
        th2 = reg2.add_text(dumped)
        assert set(th2.facts) == set(th.facts), name
        for fact in th.facts:
            assert th2.facts[fact].prop == th.facts[fact].prop, (name, fact)
            assert th2.facts[fact].simp == th.facts[fact].simp, (name, fact)
            assert th2.facts[fact].definiendum == th.facts[fact].definiendum
        assert set(th2.consts) == set(th.consts)
        assert th2.datatypes.keys() == th.datatypes.keys()
        assert set(th2.rules) == set(th.rules)
        assert th2.bundles == th.bundles
        assert th2.transitivity == th.transitivity


def test_recursive_definition_rejected():
    text = "\n".join([
        "theory bad",
        "sort t",
        "const f : t -> t",
        "const c0 : t",
        'definition f_def : "forall x. f(x) = f(f(x))"',
    ])
    with pytest.raises(TheoryFileError):
        load_theory_text(text)


def test_duplicate_fact_rejected():
    text = "\n".join([
        "theory bad",
        "const p : bool",
        'axiom one : "p"',
        'axiom one : "p"',
    ])
    with pytest.raises(TheoryFileError):
        load_theory_text(text)


def test_unknown_sort_rejected():
    with pytest.raises(TheoryFileError):
        load_theory_text("theory bad\nconst x : ghost_sort")


def test_missing_header_rejected():
    with pytest.raises(TheoryFileError):
        load_theory_text("sort t")


def test_bundle_requires_known_lemmas():
    text = "\n".join([
        "theory bad",
        "const p : bool",
        "bundle b : ghost",
    ])
    with pytest.raises(TheoryFileError):
        load_theory_text(text)


def test_datatype_brings_structural_facts(arith):
    assert "nat_exhaust" in arith.facts
    assert "suc_inject" in arith.facts
    assert "zero_neq_suc" in arith.facts and "suc_neq_zero" in arith.facts
    # auto-generated facts are regenerated, never dumped
    assert "nat_exhaust" in arith.auto_facts
    assert "nat_exhaust" not in dump_theory(arith)
