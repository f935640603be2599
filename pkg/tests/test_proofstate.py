"""Tree navigation, automatic reduction, and state serialization."""

import pytest

from minilang.kernel import Sort
from minilang.proofstate import (
    ALL_CLOSED,
    Context,
    EMPTY_CONTEXT,
    Leaf,
    Node,
    ProofStateError,
    auto_reduce,
    check_invariant,
    close_leftmost_leaf,
    initial_state,
    leaf_count,
    leftmost_leaf,
    merge_contexts,
    replace_leftmost_leaf,
    serialize_state,
    structure_key,
)
from minilang.syntax.terms import PropParser

NAT = Sort("nat")


def pp(theory, text, **vars):
    return PropParser(theory, ctx_vars={k: NAT for k in vars}).parse_prop(text)


def test_initial_state_sqrt2(sqrt2):
    st = initial_state("sqrt2_axioms", pp(sqrt2, "~rat(sq2)"))
    assert isinstance(st.tree, Leaf)
    assert st.tree.context == EMPTY_CONTEXT
    assert st.tree.goal == pp(sqrt2, "~rat(sq2)")


def test_initial_state_true(prop_demo):
    st = initial_state("prop_demo", pp(prop_demo, "True"))
    assert isinstance(st.tree, Leaf)


def test_initial_state_rejects_free_variables(arith):
    with pytest.raises(ProofStateError):
        initial_state("arith", pp(arith, "even(x)", x="nat"))


def _three_leaf_tree(th):
    # Node(A, [Node(B, [L1, L2]), L3]) with distinct contexts
    a = Context((("m", NAT),), (("H", pp(th, "p")),))
    b = Context((), (("K", pp(th, "q")),))
    l1 = Leaf(EMPTY_CONTEXT, pp(th, "p"))
    l2 = Leaf(Context((("k", NAT),), ()), pp(th, "q"))
    l3 = Leaf(EMPTY_CONTEXT, pp(th, "r"))
    return Node(a, (Node(b, (l1, l2)), l3))


def test_leftmost_leaf_accumulates_contexts(prop_demo):
    tree = _three_leaf_tree(prop_demo)
    path, acc, leaf = leftmost_leaf(tree)
    assert path == (0, 0)
    assert leaf.goal == pp(prop_demo, "p")
    assert acc.hyp_names() == {"H", "K"}
    assert acc.var_names() == {"m"}


def test_leftmost_on_single_leaf(prop_demo):
    leaf = Leaf(Context((), (("H", pp(prop_demo, "p")),)), pp(prop_demo, "q"))
    path, acc, got = leftmost_leaf(leaf)
    assert path == ()
    assert got is leaf
    assert acc.hyp_names() == {"H"}


def test_close_advances_to_next_leaf(prop_demo):
    tree = _three_leaf_tree(prop_demo)
    t2 = close_leftmost_leaf(tree)
    _, _, leaf = leftmost_leaf(t2)
    assert leaf.goal == pp(prop_demo, "q")
    t3 = close_leftmost_leaf(t2)
    _, _, leaf3 = leftmost_leaf(t3)
    assert leaf3.goal == pp(prop_demo, "r")
    assert close_leftmost_leaf(t3) is ALL_CLOSED


def test_replace_leftmost_keeps_siblings(prop_demo):
    tree = _three_leaf_tree(prop_demo)
    rep = Node(EMPTY_CONTEXT, (Leaf(EMPTY_CONTEXT, pp(prop_demo, "s")),
                               Leaf(EMPTY_CONTEXT, pp(prop_demo, "p"))))
    out = replace_leftmost_leaf(tree, rep)
    check_invariant(out)
    assert leaf_count(out) == leaf_count(tree) + 1
    # all non-leftmost subtrees are structurally identical
    assert structure_key(out.children[1]) == structure_key(tree.children[1])
    assert structure_key(out.children[0].children[1]) == structure_key(
        tree.children[0].children[1]
    )


def test_replace_with_identical_leaf_is_identity(prop_demo):
    tree = _three_leaf_tree(prop_demo)
    _, _, leaf = leftmost_leaf(tree)
    assert structure_key(replace_leftmost_leaf(tree, leaf)) == structure_key(tree)


def test_single_child_node_is_reduced(prop_demo):
    tree = _three_leaf_tree(prop_demo)
    single = Node(Context((), (("N", pp(prop_demo, "s")),)),
                  (Leaf(EMPTY_CONTEXT, pp(prop_demo, "s")),))
    out = replace_leftmost_leaf(tree, single)
    check_invariant(out)
    # reduction merged the label into the leaf
    _, acc, leaf = leftmost_leaf(out)
    assert "N" in acc.hyp_names()
    assert leaf.goal == pp(prop_demo, "s")


def test_auto_reduce_nested_merge(prop_demo):
    a = Context((), (("A", pp(prop_demo, "p")),))
    b = Context((), (("B", pp(prop_demo, "q")),))
    c = Context((), (("C", pp(prop_demo, "r")),))
    tree = Node(a, (Node(b, (Leaf(c, pp(prop_demo, "s")),)),))
    out = auto_reduce(tree)
    assert isinstance(out, Leaf)
    assert out.context.hyp_names() == {"A", "B", "C"}


def test_merge_collision_primes_inner_name(prop_demo):
    outer = Context((), (("H", pp(prop_demo, "p")),))
    inner = Context((), (("H", pp(prop_demo, "q")),))
    merged = merge_contexts(outer, inner)
    assert merged.lookup("H") == pp(prop_demo, "p")
    assert merged.lookup("H'") == pp(prop_demo, "q")
    # identical (name, prop) entries fold away instead
    same = merge_contexts(outer, outer)
    assert len(same.hypotheses) == 1


def test_serialization_golden_shape(prop_demo):
    st = initial_state("prop_demo", pp(prop_demo, "p --> p"))
    text = serialize_state(st)
    assert text.splitlines()[0] == "proofstate v1 theory=prop_demo"
    assert 'leaf [ | ] |- "p --> p"' in text
