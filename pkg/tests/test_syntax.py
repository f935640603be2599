"""Script and proposition syntax: parsing, rendering, round-trips, fuzz."""

import pytest
from hypothesis import given, settings, strategies as st

from minilang.kernel import NoMatch, match_rule_conclusion
from minilang.syntax.script import (
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
    ParseError,
    RuleStmt,
    SimplifyStmt,
    UnfoldStmt,
    parse_script,
    parse_statements,
    render_script,
    render_statement,
)
from minilang.syntax.terms import PropParser, TermParseError, render_prop

GOLDEN = open("src/minilang/corpus/golden/sqrt2.mini").read()


def test_golden_script_parses(sqrt2):
    script = parse_script(GOLDEN)
    assert script.theory == "sqrt2_axioms"
    assert script.name == "sqrt2_not_rational"
    assert [s.command for s in script.statements[:4]] == ["RULE", "INTRO", "LET", "CONSIDER"]
    assert len(script.statements) == 26


def test_trivial_script():
    script = parse_script('theorem t: "True"\nEND')
    assert len(script.statements) == 1
    assert isinstance(script.statements[0], EndStmt)


def test_malformed_prop_is_parse_error():
    with pytest.raises(ParseError) as err:
        parse_script('theorem t: "True"\nHAVE : ==')
    assert err.value.line == 2


def test_non_command_keyword_rejected():
    with pytest.raises(ParseError):
        parse_script('theorem t: "True"\nqed')


def test_parser_never_panics_on_bytes():
    import random

    rng = random.Random(7)
    alphabet = 'abcXYZ ":=|()_?\n\t0159-~&'
    for _ in range(500):
        text = "".join(rng.choice(alphabet) for _ in range(rng.randrange(0, 60)))
        try:
            parse_script(text)
        except ParseError:
            pass  # the only acceptable failure mode


# -- statement round-trip property --------------------------------------------

names = st.from_regex(r"[a-z][a-z0-9_]{0,5}", fullmatch=True).filter(
    lambda s: s not in ("add", "del", "where", "and", "infixl", "infixr")
)
prop_texts = st.sampled_from(
    ["True", "p", "p --> q", "m = 2 * k", "exists k. m = 2 * k", "~rat(sq2)", "a <= b"]
)
name_lists = st.lists(names, min_size=0, max_size=3).map(tuple)

statements = st.one_of(
    st.builds(RuleStmt, st.one_of(st.none(), names)),
    st.just(IntroStmt()),
    st.builds(HaveStmt, st.one_of(st.none(), names), prop_texts),
    st.builds(
        ConsiderObtain,
        st.lists(names, min_size=1, max_size=2, unique=True).map(tuple),
        st.one_of(st.none(), st.just("nat")),
        st.lists(st.tuples(st.one_of(st.none(), names), prop_texts), min_size=1, max_size=2).map(tuple),
    ),
    st.builds(ConsiderCases, st.lists(prop_texts, min_size=2, max_size=3).map(tuple)),
    st.builds(EndStmt, name_lists, name_lists, st.booleans()),
    st.builds(ChooseStmt, st.sampled_from(["j", "2 * k", "zero"])),
    st.builds(SimplifyStmt, name_lists),
    st.builds(UnfoldStmt, st.lists(names, min_size=1, max_size=2).map(tuple)),
    st.builds(CaseSplitStmt, st.sampled_from(["b", "n", "suc(n)"])),
    st.builds(InductStmt, names),
    st.builds(LetStmt, names.map(lambda n: "?" + n), prop_texts),
    st.builds(
        NotationStmt,
        st.sampled_from(["infixl", "infixr"]),
        st.integers(min_value=1, max_value=99),
        st.sampled_from(["<+>", "<*>", ":::"]),
        names,
    ),
    st.builds(ConfigStmt, names, st.sampled_from(["1", "0", "on", "2.5"])),
    st.builds(OpenStmt, st.lists(names, min_size=1, max_size=2).map(tuple)),
    st.builds(ApplyStmt, st.sampled_from(["auto_t", "fastforce_t", "rule_t"]), name_lists, name_lists),
)


@settings(max_examples=300, deadline=None)
@given(statements)
def test_statement_round_trip(stmt):
    text = render_statement(stmt)
    parsed = parse_statements(text)
    assert parsed == [stmt]


def test_script_round_trip(sqrt2):
    script = parse_script(GOLDEN)
    assert parse_script(render_script(script)) == script


# -- proposition syntax ---------------------------------------------------------


def test_let_abbreviation_expansion(sqrt2):
    from minilang.kernel import Sort

    parser = PropParser(
        sqrt2, ctx_vars={"m": Sort("nat"), "n": Sort("nat")}, abbrevs={"?x": "sq2"}
    )
    assert parser.parse_prop("?x = m / n") == PropParser(
        sqrt2, ctx_vars={"m": Sort("nat"), "n": Sort("nat")}
    ).parse_prop("sq2 = m / n")


def test_parse_true(prop_demo):
    from minilang.kernel import TrueP

    assert isinstance(PropParser(prop_demo).parse_prop("True"), TrueP)


def test_parse_dvd_atom(sqrt2):
    from minilang.kernel import Atom, Sort

    got = PropParser(sqrt2, ctx_vars={"m": Sort("nat")}).parse_prop("2 dvd m")
    assert isinstance(got, Atom)
    assert got.term.fn.name == "dvd"


def test_unknown_constant_rejected(prop_demo):
    with pytest.raises(TermParseError):
        PropParser(prop_demo).parse_prop("ghostly(1)")


def test_prop_render_round_trip(arith, sqrt2, order_demo):
    from minilang.kernel import Sort

    nat = Sort("nat")
    cases = [
        (arith, "forall x::nat. even(x) --> even(suc(suc(x)))", {}),
        (arith, "~(exists k. 4 = 2 * k) | len(nil) = zero", {}),
        (sqrt2, "m ^ 2 = 2 * n ^ 2 & coprime(m, n)", {"m": nat, "n": nat}),
        (order_demo, "a <= b --> (b < c <-> a < c)", {}),
    ]
    for th, text, vars in cases:
        parser = PropParser(th, ctx_vars=vars)
        p = parser.parse_prop(text)
        assert PropParser(th, ctx_vars=vars).parse_prop(render_prop(p)) == p


# -- rule matching examples -------------------------------------------------------


def test_match_rule_examples(sqrt2):
    from minilang.kernel import Not

    notI = sqrt2.rules["notI"]
    goal = PropParser(sqrt2).parse_prop("~rat(sq2)")
    subst = match_rule_conclusion(notI.conclusion, goal)
    assert subst is not None
    assert subst["?A"] == PropParser(sqrt2).parse_prop("rat(sq2)")

    conjI = sqrt2.rules["conjI"]
    disj_goal = PropParser(sqrt2).parse_prop("rat(sq2) | rat(1)")
    assert match_rule_conclusion(conjI.conclusion, disj_goal) is None
