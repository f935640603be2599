"""Frontend: Isar-S parsing, the pass pipeline, emission, refinement."""

import pathlib

import pytest

from minilang.engine import Engine
from minilang.interp import Completed
from minilang.syntax.script import ApplyStmt, EndStmt, HaveStmt, SimplifyStmt, UnfoldStmt
from minilang.translate import (
    IsarParseError,
    apply_count,
    normalize,
    parse_isar,
    refine,
    to_minilang,
    translate_corpus,
    translate_proof,
)
from minilang.translate.isar import Brace, Have, Justification, Show, TacticApp
from minilang.translate.passes import (
    Untranslatable,
    n4_connectives_to_using,
    n13_braces,
    n14_combinators,
)

CORPUS = pathlib.Path("src/minilang/corpus/isar")
FIG1C = (CORPUS / "c99_fig1c.isar") if (CORPUS / "c99_fig1c.isar").exists() else None

SQRT2_ISAR = '''--theory sqrt2_axioms
lemma sqrt2_not_rational: "~ rat(sq2)"
proof
  let ?x = "sq2"
  assume "rat(?x)"
  then obtain m n :: nat where
    "abs(?x) = m / n" and "coprime(m, n)" by fastforce
  hence "m ^ 2 = ?x ^ 2 * n ^ 2" by fastforce
  hence eq: "m ^ 2 = 2 * n ^ 2"
    using of_nat_eq_iff power2_eq_square by fastforce
  hence "2 dvd m ^ 2" by fastforce
  hence "2 dvd m" by fastforce
  have "2 dvd n" proof -
    from "2 dvd m" obtain k where "m = 2 * k" by fastforce
    with eq have "2 * n ^ 2 = 2 ^ 2 * k ^ 2" by fastforce
    hence "2 dvd n ^ 2" by fastforce
    thus "2 dvd n" by fastforce
  qed
  with "2 dvd m" have "2 dvd gcd(m, n)" by fastforce
  with lowest_terms have "2 dvd 1" by fastforce
  thus "False" using odd_one by fastforce
qed
'''


def test_parse_fig1c_analog():
    script = parse_isar(SQRT2_ISAR)
    assert script.name == "sqrt2_not_rational"
    assert script.just.kind == "proof"
    assert script.just.sub.method is None  # bare `proof`: the default rule


def test_parse_brace_block():
    text = '''--theory isar_demo
lemma b: "p --> q"
proof -
  {
    assume h: "p"
    have c: "q" using h pq by blast
  }
  thus "p --> q" by blast
qed
'''
    script = parse_isar(text)
    kinds = [type(s).__name__ for s in script.just.sub.body]
    assert "Brace" in kinds


def test_stray_qed_is_parse_error():
    with pytest.raises(IsarParseError):
        parse_isar('lemma x: "p"\nqed')


def test_n4_then_becomes_using():
    text = '''--theory isar_demo
lemma t: "q"
proof -
  have a: "p" by blast
  then have b: "q" by blast
  thus "q" by blast
qed
'''
    norm = normalize(parse_isar(text))
    haves = [s for s in norm.just.sub.body if isinstance(s, Have)]
    assert haves[1].just.using == ("a",)
    assert haves[1].chain == ()


def test_n13_brace_to_have_if_for():
    text = '''--theory isar_demo
lemma b: "p --> q"
proof -
  {
    fix x
    assume h: "p"
    have c: "q" using h pq by blast
  }
  thus "p --> q" by blast
qed
'''
    norm = normalize(parse_isar(text))
    haves = [s for s in norm.just.sub.body if isinstance(s, Have)]
    assert haves[0].if_texts == (("h", "p"),)
    assert haves[0].for_vars == ("x",)
    assert haves[0].just.kind == "proof"
    inner = haves[0].just.sub.body
    assert isinstance(inner[-1], Show)


def test_n14_combinator_expansion():
    text = '''--theory arith
lemma c: "len(nil) = zero & 1 = 1"
  by (rule conjI, simp, simp)
'''
    norm = normalize(parse_isar(text))
    tactics = norm.just.tactics
    assert all(isinstance(t, TacticApp) for t in tactics)
    assert [t.name for t in tactics] == ["rule", "simp", "simp"]


def test_n15_duplicates_per_goal():
    text = '''--theory arith
lemma d: "len(nil) = zero & 1 = 1"
  by (rule conjI, auto)
'''
    norm = normalize(parse_isar(text))
    assert [t.name for t in norm.just.tactics] == ["rule", "auto", "auto"]


def test_normalize_idempotent_on_corpus():
    for path in sorted(CORPUS.glob("*.isar")):
        script = parse_isar(path.read_text())
        once = normalize(script)
        twice = normalize(once)
        assert once == twice, path.name


def test_to_minilang_bare_by(engine):
    text = '--theory prop_demo\nlemma t: "p --> p"\n  by blast\n'
    mini = to_minilang(normalize(parse_isar(text)), engine.registry.get("prop_demo"))
    assert [s.command for s in mini.statements] == ["APPLY", "END"]


def test_golden_pair_statement_shapes(engine):
    """Fig. 1c-analog translates to the Fig. 1d golden shape (modulo names)."""
    from minilang.syntax.script import parse_script

    golden = parse_script(open("src/minilang/corpus/golden/sqrt2.mini").read())
    script, stage, reason, *_ = translate_proof(SQRT2_ISAR, engine)
    assert script is not None, (stage, reason)
    assert [s.command for s in script.statements] == [
        s.command for s in golden.statements
    ]


def test_nested_proof_maps_to_nested_statements(engine):
    script, *_ = translate_proof(SQRT2_ISAR, engine)
    cmds = [s.command for s in script.statements]
    i = cmds.index("CONSIDER", cmds.index("HAVE", 5))  # the inner CONSIDER k
    assert cmds[i + 1] == "END"


def test_refine_eliminates_redundant_apply(engine):
    from minilang.syntax.script import Script, parse_script

    text = '--theory prop_demo\ntheorem t: "p --> p"\nAPPLY fastforce_t\nEND\n'
    script = parse_script(text)
    refined = refine(script, engine)
    assert apply_count(refined) == 0
    assert [s.command for s in refined.statements] == ["END"]


def test_refine_specialized_map_unfold(engine):
    from minilang.syntax.script import parse_script

    text = (
        '--theory arith\ntheorem t: "odd(1)"\n'
        "APPLY (unfold_tac odd_def even_def)\nAPPLY fastforce_t\nEND\n"
    )
    script = parse_script(text)
    outcome, _ = engine.check_script(script)
    assert isinstance(outcome, Completed)
    refined = refine(script, engine)
    assert apply_count(refined) < apply_count(script)
    outcome2, _ = engine.check_script(refined)
    assert isinstance(outcome2, Completed)


def test_refine_keeps_essential_tactic(engine):
    from minilang.syntax.script import parse_script

    # the hammer alone cannot produce a witness for this without unfolding:
    # refinement must stop at the fixpoint where checking would break
    text = (
        '--theory arith\ntheorem t: "even(4)"\n'
        'CONFIG hammer_timeout = "1.5"\n'
        "APPLY (unfold_tac even_def)\nCHOOSE \"2\"\nSIMPLIFY\nEND\n"
    )
    script = parse_script(text)
    outcome, _ = engine.check_script(script)
    assert isinstance(outcome, Completed)
    refined = refine(script, engine)
    outcome2, _ = engine.check_script(refined)
    assert isinstance(outcome2, Completed)


def test_translate_corpus_empty_dir(tmp_path, engine):
    report = translate_corpus(tmp_path, engine, tmp_path / "out")
    data = report.to_dict()
    assert data["proofs"] == []
    assert data["success_rate"] == 0.0


def test_translate_corpus_single_by(tmp_path, engine):
    (tmp_path / "one.isar").write_text(
        '--theory prop_demo\nlemma one: "p --> p"\n  by blast\n'
    )
    report = translate_corpus(tmp_path, engine, tmp_path / "out")
    data = report.to_dict()
    assert data["success_rate"] == 1.0
    emitted = (tmp_path / "out" / "one.mini").read_text()
    assert "END" in emitted
