"""Rewriting engine: evaluation, budgets, certificates, idempotence."""

import pytest

from minilang.kernel import Eq, Kernel, TrueP, derived
from minilang.kernel.rewrite import (
    Rewriter,
    conv_from_trace,
    kernel_rewrite,
    rule_from_fact,
    simp_rules_of,
)
from minilang.syntax.terms import PropParser, render_prop


def pp(theory, text, **vars):
    from minilang.kernel import Sort

    return PropParser(theory, ctx_vars={k: Sort(v) for k, v in vars.items()}).parse_prop(text)


def test_left_unit_law(kernel_arith, arith):
    goal = pp(arith, "even(zero + x)", x="nat")
    rw = Rewriter(arith, simp_rules_of(arith))
    res = rw.rewrite(goal, 10)
    assert res.prop == pp(arith, "even(x)", x="nat")


def test_len_evaluates_to_closable_identity(kernel_arith, arith):
    goal = pp(arith, "len(cons(a, nil)) = 1", a="nat")
    rules = [r for r in simp_rules_of(arith)]
    rw = Rewriter(arith, rules)
    res = rw.rewrite(goal, 50)
    # len evaluates to 1 = 1, which the builtin reflexivity step closes
    assert isinstance(res.prop, TrueP)
    conv = conv_from_trace(kernel_arith, goal, res.trace, arith)
    thm = derived.iff_mpr(kernel_arith, conv, kernel_arith.true_intro())
    assert thm.conclusion == goal
    assert kernel_arith.replay(thm)


def test_max_steps_zero_is_identity(kernel_arith, arith):
    t = kernel_arith.assume(pp(arith, "even(zero + zero)"))
    out = kernel_rewrite(kernel_arith, t, simp_rules_of(arith), 0)
    assert out.conclusion == t.conclusion


def test_kernel_rewrite_certificate(kernel_arith, arith):
    t = kernel_arith.assume(pp(arith, "even(zero + 2)"))
    out = kernel_rewrite(kernel_arith, t, simp_rules_of(arith), 50)
    assert out.conclusion == pp(arith, "even(2)")
    assert kernel_arith.replay(out)


def test_idempotent_on_confluent_demo_set(arith):
    rw = Rewriter(arith, simp_rules_of(arith))
    goal = pp(arith, "len(append(cons(1, nil), cons(2, nil))) = 2")
    res1 = rw.rewrite(goal, 200)
    res2 = rw.rewrite(res1.prop, 200)
    assert res2.prop == res1.prop
    assert not res2.trace


def test_terminates_under_budget(arith):
    rw = Rewriter(arith, simp_rules_of(arith))
    goal = pp(arith, "2 * 3 = 6")
    res = rw.rewrite(goal, 3)  # far too small on purpose
    assert len(res.trace) <= 3


def test_rule_from_fact_rejects_unbound_rhs(arith):
    from minilang.kernel.rewrite import RuleFormatError

    with pytest.raises(RuleFormatError):
        rule_from_fact("bad", pp(arith, "forall x. len(nil) = x + x"))


def test_conditional_rule(registry):
    from minilang.kernel import Theory, ConstSig, Sort, BOOL
    from minilang.theoryfile import load_theory_text

    th = load_theory_text(
        "\n".join(
            [
                "theory cond_demo",
                "sort t",
                "const f : t -> t",
                "const g : t -> t",
                "const ok : t -> bool",
                "const c0 : t",
                "rewrite ok_c0 : \"ok(c0) <-> True\"",
                "rewrite f_g : \"forall x. ok(x) --> f(x) = g(x)\"",
            ]
        )
    ).freeze()
    k = Kernel(th)
    goal = PropParser(th).parse_prop("f(c0) = g(c0)")
    rw = Rewriter(th, simp_rules_of(th))
    res = rw.rewrite(goal, 30)
    assert isinstance(res.prop, TrueP)
    conv = conv_from_trace(k, goal, res.trace, th)
    assert k.replay(conv)
    # the safe rewriter must skip the conditional rule
    safe = Rewriter(th, simp_rules_of(th), safe_only=True)
    res2 = safe.rewrite(goal, 30)
    assert not isinstance(res2.prop, TrueP)
