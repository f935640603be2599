"""Per-command transition semantics, chains, placeholders, locality."""

import pytest

from minilang.interp import Advanced, Completed, StepError
from minilang.proofstate import (
    Leaf,
    Node,
    all_leaves,
    check_invariant,
    leaf_count,
    leftmost_leaf,
    serialize_state,
    structure_key,
)
from minilang.syntax.script import parse_statements
from minilang.syntax.terms import PropParser, render_prop


def session_for(engine, theory, goal):
    s = engine.new_session(theory)
    err = s.set_goal(goal)
    assert err is None, err
    return s


def run(session, text):
    outs = session.execute_text(text)
    return outs[-1]


def test_rule_default_not(engine, sqrt2):
    s = session_for(engine, "sqrt2_axioms", "~rat(sq2)")
    out = run(s, "RULE")
    assert isinstance(out, Advanced)
    _, _, leaf = leftmost_leaf(s.state.tree)
    assert render_prop(leaf.goal) == "rat(sq2) --> False"


def test_rule_conji_two_siblings(engine):
    s = session_for(engine, "prop_demo", "p & q")
    out = run(s, "RULE")
    assert isinstance(out, Advanced)
    tree = s.state.tree
    assert isinstance(tree, Node) and len(tree.children) == 2
    goals = [render_prop(leaf.goal) for _, _, leaf in all_leaves(tree)]
    assert goals == ["p", "q"]


def test_rule_mismatch_on_atom(engine):
    s = session_for(engine, "prop_demo", "p")
    out = run(s, "RULE")
    assert isinstance(out, StepError) and out.kind == "rule-mismatch"


def test_rule_exists_needs_witness(engine, arith):
    s = session_for(engine, "arith", "exists k. even(k)")
    out = run(s, "RULE")
    assert isinstance(out, StepError) and out.kind == "rule-mismatch"


def test_intro_forall_implication(engine, arith):
    s = session_for(engine, "arith", "forall x. even(x) --> even(suc(suc(x)))")
    out = run(s, "INTRO")
    assert isinstance(out, Advanced)
    _, acc, leaf = leftmost_leaf(s.state.tree)
    assert acc.var_names() == {"x"}
    assert acc.lookup("Hyp1") is not None
    assert render_prop(leaf.goal) == "even(suc(suc(x)))"


def test_intro_noop_on_atom(engine):
    s = session_for(engine, "prop_demo", "p")
    before = structure_key(s.state.tree)
    out = run(s, "INTRO")
    assert isinstance(out, Advanced)
    assert structure_key(s.state.tree) == before


def test_intro_idempotent(engine, arith):
    s = session_for(engine, "arith", "forall x. even(x) --> even(x)")
    run(s, "INTRO")
    k1 = structure_key(s.state.tree)
    run(s, "INTRO")
    assert structure_key(s.state.tree) == k1


def test_intro_sqrt2_shape(engine):
    s = session_for(engine, "sqrt2_axioms", "~rat(sq2)")
    run(s, "RULE")
    run(s, "INTRO")
    _, acc, leaf = leftmost_leaf(s.state.tree)
    assert acc.lookup("Hyp1") == PropParser(
        engine.registry.get("sqrt2_axioms")
    ).parse_prop("rat(sq2)")
    assert render_prop(leaf.goal) == "False"


def test_have_shapes_two_children(engine):
    s = session_for(engine, "prop_demo", "r")
    out = run(s, 'HAVE a: "q"')
    assert isinstance(out, Advanced)
    tree = s.state.tree
    assert isinstance(tree, Node) and len(tree.children) == 2
    left, right = tree.children
    assert isinstance(left, Leaf) and render_prop(left.goal) == "q"
    assert isinstance(right, Leaf) and right.context.lookup("a") is not None


def test_have_true_then_end_restores_goal(engine):
    s = session_for(engine, "prop_demo", "q")
    run(s, 'HAVE t: "True"')
    out = run(s, "END")
    assert isinstance(out, Advanced)
    _, acc, leaf = leftmost_leaf(s.state.tree)
    assert render_prop(leaf.goal) == "q"
    assert acc.lookup("t") is not None


def test_have_ill_sorted_prop(engine):
    s = session_for(engine, "prop_demo", "q")
    out = run(s, 'HAVE x: "nonexistent(3)"')
    assert isinstance(out, StepError) and out.kind == "term-error"


def test_consider_obtain_three_subgoal_tree(engine):
    # the k-witness step of the golden proof, in isolation
    s = session_for(engine, "sqrt2_axioms", "~rat(sq2)")
    for line in [
        "RULE", "INTRO",
        'CONSIDER m n :: nat where A1: "abs(sq2) = m / n" and A2: "coprime(m, n)"',
        "END",
        'HAVE D: "2 dvd m" END WITH A1 A2 sq_of_ratio of_nat_eq_iff sq2_sq dvd_factor two_dvd_power2',
        'HAVE E: "2 dvd n"',
        'CONSIDER k where F: "m = 2 * k"',
    ]:
        out = run(s, line)
        assert not isinstance(out, StepError), (line, out)
    leaves = all_leaves(s.state.tree)
    assert len(leaves) == 3
    goals = [render_prop(leaf.goal) for _, _, leaf in leaves]
    assert goals[0].startswith("exists k")
    assert goals[1] == "2 dvd n"
    assert goals[2] == "False"
    # middle leaf is entitled to the fixed k and its condition
    _, acc_mid, _ = leaves[1]
    assert "k" in acc_mid.var_names()
    assert acc_mid.lookup("F") is not None


def test_consider_cases_three_way(engine):
    s = session_for(engine, "order_demo", "a <= a")
    out = run(s, 'CONSIDER "a <= b" | "a = b" | "b < a"')
    assert isinstance(out, Advanced)
    tree = s.state.tree
    assert isinstance(tree, Node) and len(tree.children) == 4
    first = tree.children[0]
    assert render_prop(first.goal) == "a <= b | a = b | b < a"
    for i, child in enumerate(tree.children[1:], start=1):
        assert child.context.lookup(f"case_{i}") is not None


def test_consider_single_case_rejected(engine):
    from minilang.syntax.script import ParseError

    s = session_for(engine, "prop_demo", "p")
    with pytest.raises(ParseError):
        parse_statements('CONSIDER "p"')


def test_end_closes_true_immediately(engine):
    s = session_for(engine, "prop_demo", "True")
    out = run(s, "END")
    assert isinstance(out, Completed)
    assert s.kernel.replay(out.thm)


def test_end_unknown_with_hint_still_succeeds(engine):
    s = session_for(engine, "prop_demo", "q")
    out = run(s, "END WITH nonexistent_lemma p_holds pq")
    assert isinstance(out, Completed)


def test_end_atp_failure(engine):
    s = session_for(engine, "prop_demo", "s")
    out = run(s, 'CONFIG hammer_timeout = "1.5"\nEND')
    assert isinstance(out, StepError) and out.kind == "atp-failed"


def test_choose_witness(engine, arith):
    s = session_for(engine, "arith", "exists k. 4 = 2 * k")
    out = run(s, 'CHOOSE "2"')
    assert isinstance(out, Advanced)
    _, _, leaf = leftmost_leaf(s.state.tree)
    assert render_prop(leaf.goal) == "4 = 2 * 2"
    out = run(s, "SIMPLIFY")
    _, _, leaf = leftmost_leaf(s.state.tree)
    assert render_prop(leaf.goal) == "True"
    assert isinstance(run(s, "END"), Completed)


def test_choose_on_non_existential(engine):
    s = session_for(engine, "prop_demo", "p")
    out = run(s, 'CHOOSE "p"')
    assert isinstance(out, StepError) and out.kind == "op-inapplicable"


def test_simplify_placeholder_not_autoclosed(engine, arith):
    s = session_for(engine, "arith", "1 = 1")
    out = run(s, "SIMPLIFY")
    assert isinstance(out, Advanced)  # intentionally a placeholder, not closed
    _, _, leaf = leftmost_leaf(s.state.tree)
    assert render_prop(leaf.goal) == "True"
    assert isinstance(run(s, "END"), Completed)


def test_simplify_unknown_name_is_bad_reference(engine, arith):
    s = session_for(engine, "arith", "1 = 1")
    out = run(s, "SIMPLIFY no_such_rule")
    assert isinstance(out, StepError) and out.kind == "bad-reference"


def test_simplify_left_unit(engine, arith):
    s = session_for(engine, "arith", "even(zero + 2)")
    run(s, "SIMPLIFY")
    _, _, leaf = leftmost_leaf(s.state.tree)
    assert render_prop(leaf.goal) == "even(2)"


def test_unfold_even(engine, arith):
    s = session_for(engine, "arith", "even(4)")
    out = run(s, "UNFOLD even_def")
    assert isinstance(out, Advanced)
    _, _, leaf = leftmost_leaf(s.state.tree)
    assert render_prop(leaf.goal) == "exists k::nat. 4 = 2 * k"


def test_unfold_absent_name_unchanged(engine, arith):
    s = session_for(engine, "arith", "1 = 1")
    before = structure_key(s.state.tree)
    out = run(s, "UNFOLD even_def")
    assert isinstance(out, Advanced)
    assert structure_key(s.state.tree) == before


def test_unfold_two_definitions(engine, arith):
    s = session_for(engine, "arith", "odd(1)")
    run(s, "UNFOLD odd_def even_def")
    _, _, leaf = leftmost_leaf(s.state.tree)
    assert render_prop(leaf.goal) == "~(exists k::nat. 1 = 2 * k)"


def test_unfold_non_definition_is_bad_reference(engine, arith):
    s = session_for(engine, "arith", "1 = 1")
    out = run(s, "UNFOLD add_zero")
    assert isinstance(out, StepError) and out.kind == "bad-reference"


def test_case_split_nat(engine, arith):
    s = session_for(engine, "arith", "forall n. even(n) | odd(n)")
    run(s, "INTRO")
    out = run(s, 'CASE_SPLIT "n"')
    assert isinstance(out, Advanced)
    tree = s.state.tree
    assert isinstance(tree, Node) and len(tree.children) == 2
    zero_case, suc_case = tree.children
    assert zero_case.context.lookup("case_zero") is not None
    assert "n1" in suc_case.context.var_names()


def test_case_split_non_datatype(engine, order_demo):
    s = session_for(engine, "order_demo", "a <= a")
    out = run(s, 'CASE_SPLIT "a"')
    assert isinstance(out, StepError) and out.kind == "op-inapplicable"


def test_induct_nat_shapes(engine, arith):
    s = session_for(engine, "arith", "forall n. n + zero = n")
    run(s, "INTRO")
    out = run(s, "INDUCT n")
    assert isinstance(out, Advanced)
    tree = s.state.tree
    assert isinstance(tree, Node) and len(tree.children) == 2
    base, step = tree.children
    assert render_prop(base.goal) == "zero + zero = zero"
    assert render_prop(step.goal) == "suc(n1) + zero = suc(n1)"
    assert render_prop(step.context.lookup("IH1")) == "n1 + zero = n1"
    # both cases close; the final theorem replays
    out = run(s, "NEXT")
    assert isinstance(out, Advanced)
    out = run(s, "END")
    assert isinstance(out, Completed)
    assert s.kernel.replay(out.thm)


def test_induct_unknown_variable(engine, arith):
    s = session_for(engine, "arith", "1 = 1")
    out = run(s, "INDUCT zz")
    assert isinstance(out, StepError) and out.kind == "term-error"


def test_induct_list(engine, arith):
    s = session_for(engine, "arith", "forall xs. len(append(xs, nil)) = len(xs)")
    run(s, "INTRO")
    out = run(s, "INDUCT xs")
    assert isinstance(out, Advanced)
    tree = s.state.tree
    assert len(tree.children) == 2
    assert isinstance(run(s, "NEXT"), Advanced)
    out = run(s, "END")
    assert isinstance(out, Completed)


def test_let_and_duplicate(engine):
    s = session_for(engine, "sqrt2_axioms", "~rat(sq2)")
    out = run(s, 'LET ?x = "sq2"')
    assert isinstance(out, Advanced)
    out = run(s, 'HAVE a: "rat(?x) --> rat(sq2)"')
    assert isinstance(out, Advanced)
    out = run(s, 'LET ?x = "sq2"')
    assert isinstance(out, StepError) and out.kind == "term-error"


def test_config_unknown_flag_recorded(engine):
    s = session_for(engine, "prop_demo", "p")
    out = run(s, "CONFIG unknown_flag = 1")
    assert isinstance(out, Advanced)
    assert s.state.config_get("unknown_flag") == "1"


def test_open_bundle_gates_hammer(engine):
    s = session_for(engine, "prop_demo", "s")
    out = run(s, 'CONFIG hammer_timeout = "1.5"\nEND')
    assert isinstance(out, StepError) and out.kind == "atp-failed"
    out = run(s, "OPEN s_bundle\nEND")
    assert isinstance(out, Completed)


def test_open_unknown_bundle(engine):
    s = session_for(engine, "prop_demo", "p")
    out = run(s, "OPEN ghost_bundle")
    assert isinstance(out, StepError) and out.kind == "bad-reference"


def test_notation_declares_infix(engine, arith):
    s = session_for(engine, "arith", "forall x. even(x) --> even(x)")
    out = run(s, 'NOTATION infixl 60 "<+>" = +')
    assert isinstance(out, Advanced)
    out = run(s, 'HAVE a: "zero <+> 2 = 2"')
    assert isinstance(out, Advanced)
    _, _, leaf = leftmost_leaf(s.state.tree)
    assert render_prop(leaf.goal) == "zero + 2 = 2"


def test_apply_rule_t(engine):
    s = session_for(engine, "prop_demo", "p & q")
    out = run(s, "APPLY (rule_t conjI)")
    assert isinstance(out, Advanced)
    assert leaf_count(s.state.tree) == 2


def test_apply_auto_leaves_placeholder(engine, arith):
    s = session_for(engine, "arith", "2 + 2 = 4")
    out = run(s, "APPLY auto_t")
    assert isinstance(out, Advanced)
    _, _, leaf = leftmost_leaf(s.state.tree)
    assert render_prop(leaf.goal) == "True"  # must still be ENDed
    assert isinstance(run(s, "END"), Completed)


def test_apply_failure_is_op_inapplicable(engine):
    s = session_for(engine, "prop_demo", "s")
    out = run(s, 'CONFIG tactic_timeout = "1.0"\nAPPLY fastforce_t')
    assert isinstance(out, StepError) and out.kind == "op-inapplicable"


def test_unknown_tactic(engine):
    s = session_for(engine, "prop_demo", "p")
    out = run(s, "APPLY mystery_t")
    assert isinstance(out, StepError) and out.kind == "op-inapplicable"


def test_step_on_completed_state(engine):
    s = session_for(engine, "prop_demo", "True")
    assert isinstance(run(s, "END"), Completed)
    out = run(s, "INTRO")
    assert isinstance(out, StepError) and out.kind == "op-inapplicable"


# -- calculation chains ---------------------------------------------------------


def test_chain_le_le(engine):
    s = session_for(engine, "order_demo", "a <= c")
    run(s, 'HAVE s1: "a <= b" END WITH ax_ab')
    run(s, 'HAVE s2: "b <= c" END WITH ax_bc')
    calc = s.state.calculation
    assert calc is not None
    assert render_prop(calc[0]) == "a <= c"
    out = run(s, "END WITH calculation")
    assert isinstance(out, Completed)
    assert s.kernel.replay(out.thm)


def test_chain_mixed_le_lt(engine):
    s = session_for(engine, "order_demo", "a < c")
    run(s, 'HAVE s1: "a <= b" END WITH ax_ab')
    run(s, 'HAVE s2: "b < c" END WITH ax_bc_lt')
    calc = s.state.calculation
    assert calc is not None
    assert render_prop(calc[0]) == "a < c"


def test_chain_unlinked_facts(engine):
    s = session_for(engine, "order_demo", "a <= b")
    run(s, 'HAVE s1: "a <= b" END WITH ax_ab')
    run(s, 'HAVE s2: "c <= d" END WITH ax_cd')
    assert s.state.calculation is None
    assert len(s.state.chains) == 2


def test_chains_never_removed(engine):
    s = session_for(engine, "order_demo", "a <= d")
    run(s, 'HAVE s1: "a <= b" END WITH ax_ab')
    n1 = len(s.state.chains)
    run(s, 'HAVE s2: "b <= c" END WITH ax_bc')
    n2 = len(s.state.chains)
    assert n2 > n1  # extension adds a chain and keeps the old one
    run(s, 'HAVE s3: "c <= d" END WITH ax_cd')
    calc = s.state.calculation
    assert render_prop(calc[0]) == "a <= d"
    assert s.kernel.replay(calc[1])


# -- locality and placeholder discipline ----------------------------------------


def test_transition_locality(engine):
    s = session_for(engine, "prop_demo", "p & (q & r)")
    run(s, "RULE")  # two leaves
    tree0 = s.state.tree
    sibling_before = structure_key(tree0.children[1])
    for text in ['HAVE h: "p"', "INTRO", "SIMPLIFY", 'APPLY (rule_t conjI)' ]:
        out = s.execute_statement(parse_statements(text)[0])
        tree = s.state.tree
        assert structure_key(tree.children[1]) == sibling_before, text
        check_invariant(tree)


def test_only_end_reduces_leaf_count(engine):
    s = session_for(engine, "prop_demo", "p & q")
    counts = [leaf_count(s.state.tree)]
    for text in ["RULE", 'HAVE h: "True"', "SIMPLIFY"]:
        s.execute_statement(parse_statements(text)[0])
        counts.append(leaf_count(s.state.tree))
    assert all(b >= a for a, b in zip(counts, counts[1:]))
