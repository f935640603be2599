"""Inference combinators derived from the kernel primitives.

Nothing here extends the trusted base: every function only composes
primitive steps, so certificates of derived inferences replay through
primitives alone.
"""

from __future__ import annotations

from .props import (
    FALSE,
    And,
    Eq,
    Exists,
    Forall,
    Iff,
    Implies,
    Not,
    Or,
    Prop,
    free_vars,
    subst_prop,
)
from .terms import Sort, Term, Var
from .thm import Kernel, Thm


def fresh_var(sort: Sort, avoid: set[str], base: str = "x") -> Var:
    name = base
    i = 0
    while name in avoid:
        i += 1
        name = f"{base}{i}"
    return Var(name, sort)


def names_in(*thms: Thm) -> set[str]:
    out: set[str] = set()
    for t in thms:
        for h in t.hypotheses:
            out |= {v.name for v in free_vars(h)}
        out |= {v.name for v in free_vars(t.conclusion)}
    return out


def discharge(k: Kernel, t: Thm, fact: Thm) -> Thm:
    """Replace hypothesis ``fact.conclusion`` of ``t`` by fact's own hypotheses."""
    return k.implies_elim(k.implies_intro(t, fact.conclusion), fact)


def imp_compose(k: Kernel, t_ab: Thm, t_bc: Thm) -> Thm:
    a = t_ab.conclusion
    assert isinstance(a, Implies)
    ha = k.assume(a.left)
    b = k.implies_elim(t_ab, ha)
    c = k.implies_elim(t_bc, b)
    return k.implies_intro(c, a.left)


def iff_mp(k: Kernel, t_iff: Thm, t_a: Thm) -> Thm:
    return k.implies_elim(k.iff_elim_left(t_iff), t_a)


def iff_mpr(k: Kernel, t_iff: Thm, t_b: Thm) -> Thm:
    return k.implies_elim(k.iff_elim_right(t_iff), t_b)


def iff_refl(k: Kernel, p: Prop) -> Thm:
    imp = k.implies_intro(k.assume(p), p)
    return k.iff_intro(imp, imp)


def iff_sym(k: Kernel, t: Thm) -> Thm:
    return k.iff_intro(k.iff_elim_right(t), k.iff_elim_left(t))


def iff_trans(k: Kernel, t1: Thm, t2: Thm) -> Thm:
    ab = k.iff_elim_left(t1)
    bc = k.iff_elim_left(t2)
    cb = k.iff_elim_right(t2)
    ba = k.iff_elim_right(t1)
    return k.iff_intro(imp_compose(k, ab, bc), imp_compose(k, cb, ba))


def eq_sym(k: Kernel, t: Thm) -> Thm:
    eq = t.conclusion
    assert isinstance(eq, Eq)
    from .terms import sort_of

    hole = fresh_var(sort_of(eq.lhs), names_in(t), base="h")
    template = Eq(hole, eq.lhs)
    return k.eq_subst(t, k.eq_refl(eq.lhs), template, hole.name)


def eq_trans(k: Kernel, t1: Thm, t2: Thm) -> Thm:
    e1, e2 = t1.conclusion, t2.conclusion
    assert isinstance(e1, Eq) and isinstance(e2, Eq)
    from .terms import sort_of

    hole = fresh_var(sort_of(e1.lhs), names_in(t1, t2), base="h")
    template = Eq(hole, e2.rhs)
    return k.eq_subst(eq_sym(k, t1), t2, template, hole.name)


def not_not_elim(k: Kernel, t: Thm) -> Thm:
    nn = t.conclusion
    assert isinstance(nn, Not) and isinstance(nn.body, Not)
    a = nn.body.body
    bad = k.not_elim(t, k.assume(Not(a)))
    return k.contradiction(bad, a)


def excluded_middle(k: Kernel, a: Prop) -> Thm:
    target = Or(a, Not(a))
    neg = k.assume(Not(target))
    f1 = k.not_elim(neg, k.disj_intro_left(k.assume(a), Not(a)))
    not_a = k.not_intro(f1, a)
    f2 = k.not_elim(neg, k.disj_intro_right(not_a, a))
    return k.contradiction(f2, target)


def imp_to_disj(k: Kernel, t: Thm) -> Thm:
    """A -> B yields (not A) | B (classical)."""
    imp = t.conclusion
    assert isinstance(imp, Implies)
    a, b = imp.left, imp.right
    em = excluded_middle(k, a)
    pos = k.disj_intro_right(k.implies_elim(t, k.assume(a)), Not(a))
    neg = k.disj_intro_left(k.assume(Not(a)), b)
    return k.disj_elim(em, pos, neg)


def ex_falso(k: Kernel, t_false: Thm, p: Prop) -> Thm:
    return k.false_elim(t_false, p)


def neg_or_elim(k: Kernel, t: Thm) -> tuple[Thm, Thm]:
    no = t.conclusion
    assert isinstance(no, Not) and isinstance(no.body, Or)
    a, b = no.body.left, no.body.right
    fa = k.not_elim(t, k.disj_intro_left(k.assume(a), b))
    fb = k.not_elim(t, k.disj_intro_right(k.assume(b), a))
    return k.not_intro(fa, a), k.not_intro(fb, b)


def neg_and_to_disj(k: Kernel, t: Thm) -> Thm:
    na = t.conclusion
    assert isinstance(na, Not) and isinstance(na.body, And)
    a, b = na.body.left, na.body.right
    target = Or(Not(a), Not(b))
    em_a = excluded_middle(k, a)
    em_b = excluded_middle(k, b)
    both = k.not_elim(t, k.conj_intro(k.assume(a), k.assume(b)))
    case_ab = ex_falso(k, both, target)  # hyps {a, b}
    case_a_nb = k.disj_intro_right(k.assume(Not(b)), Not(a))
    case_a = k.disj_elim(em_b, case_ab, case_a_nb)
    case_na = k.disj_intro_left(k.assume(Not(a)), Not(b))
    return k.disj_elim(em_a, case_a, case_na)


def vacuous_imp(k: Kernel, t_na: Thm, b: Prop) -> Thm:
    """From not A conclude A -> B."""
    na = t_na.conclusion
    assert isinstance(na, Not)
    f = k.not_elim(t_na, k.assume(na.body))
    return k.implies_intro(ex_falso(k, f, b), na.body)


def weak_imp(k: Kernel, t_b: Thm, a: Prop) -> Thm:
    """From B conclude A -> B."""
    return k.implies_intro(t_b, a)


def neg_imp_elim(k: Kernel, t: Thm) -> tuple[Thm, Thm]:
    ni = t.conclusion
    assert isinstance(ni, Not) and isinstance(ni.body, Implies)
    a, b = ni.body.left, ni.body.right
    f_a = k.not_elim(t, vacuous_imp(k, k.assume(Not(a)), b))
    t_a = k.contradiction(f_a, a)
    f_b = k.not_elim(t, weak_imp(k, k.assume(b), a))
    t_nb = k.not_intro(f_b, b)
    return t_a, t_nb


def neg_iff_to_disj(k: Kernel, t: Thm) -> Thm:
    """not (A <-> B) yields (A & not B) | (not A & B)."""
    ni = t.conclusion
    assert isinstance(ni, Not) and isinstance(ni.body, Iff)
    a, b = ni.body.left, ni.body.right
    target = Or(And(a, Not(b)), And(Not(a), b))

    def falsum_from(ab: Thm, ba: Thm) -> Thm:
        return k.not_elim(t, k.iff_intro(ab, ba))

    # case A, B
    f_ab = falsum_from(weak_imp(k, k.assume(b), a), weak_imp(k, k.assume(a), b))
    c_ab = ex_falso(k, f_ab, target)
    # case A, not B
    c_anb = k.disj_intro_left(k.conj_intro(k.assume(a), k.assume(Not(b))), And(Not(a), b))
    # case not A, B
    c_nab = k.disj_intro_right(k.conj_intro(k.assume(Not(a)), k.assume(b)), And(a, Not(b)))
    # case not A, not B
    f_nn = falsum_from(vacuous_imp(k, k.assume(Not(a)), b), vacuous_imp(k, k.assume(Not(b)), a))
    c_nn = ex_falso(k, f_nn, target)

    em_b = excluded_middle(k, b)
    case_a = k.disj_elim(em_b, c_ab, c_anb)
    case_na = k.disj_elim(em_b, c_nab, c_nn)
    return k.disj_elim(excluded_middle(k, a), case_a, case_na)


def iff_to_implications(k: Kernel, t: Thm) -> tuple[Thm, Thm]:
    return k.iff_elim_left(t), k.iff_elim_right(t)


def neg_exists_to_forall(k: Kernel, t: Thm, eigen: Var) -> Thm:
    ne = t.conclusion
    assert isinstance(ne, Not) and isinstance(ne.body, Exists)
    ex = ne.body
    inst = subst_prop(ex.body, {ex.var: eigen})
    witness = k.exists_intro(k.assume(inst), ex, eigen)
    f = k.not_elim(t, witness)
    return k.forall_intro(k.not_intro(f, inst), eigen)


def neg_forall_to_exists(k: Kernel, t: Thm, eigen: Var) -> Thm:
    nf = t.conclusion
    assert isinstance(nf, Not) and isinstance(nf.body, Forall)
    fa = nf.body
    target = Exists(fa.var, fa.sort, Not(fa.body))
    h = k.assume(Not(target))
    all_nn = neg_exists_to_forall(k, h, eigen)  # forall x. not not P(x)
    body = not_not_elim(k, k.forall_elim(all_nn, eigen))
    proved_fa = k.forall_intro(body, eigen)
    f = k.not_elim(t, proved_fa)
    return k.contradiction(f, target)


def cong_not(k: Kernel, t: Thm) -> Thm:
    iff = t.conclusion
    assert isinstance(iff, Iff)
    a, b = iff.left, iff.right

    def side(src: Prop, dst: Prop, fwd: Thm) -> Thm:
        # from src<->dst direction fwd: dst->... build not src -> not dst? no:
        # we want not a -> not b from b -> a.
        hb = k.assume(dst)
        f = k.not_elim(k.assume(Not(src)), k.implies_elim(fwd, hb))
        return k.implies_intro(k.not_intro(f, dst), Not(src))

    ab = k.iff_elim_left(t)
    ba = k.iff_elim_right(t)
    return k.iff_intro(side(a, b, ba), side(b, a, ab))


def _cong_binary(k: Kernel, cls, t1: Thm, t2: Thm) -> Thm:
    i1, i2 = t1.conclusion, t2.conclusion
    assert isinstance(i1, Iff) and isinstance(i2, Iff)
    if cls is Implies:
        return k.iff_intro(
            _imp_cong_dir(k, t1, t2, forward=True),
            _imp_cong_dir(k, t1, t2, forward=False),
        )
    a, a2 = i1.left, i1.right
    b, b2 = i2.left, i2.right

    def transport(src_l: Prop, src_r: Prop, dst_l: Prop, dst_r: Prop,
                  l_imp: Thm, r_imp: Thm) -> Thm:
        src = cls(src_l, src_r)
        h = k.assume(src)
        if cls is And:
            out = k.conj_intro(
                k.implies_elim(l_imp, k.conj_elim_left(h)),
                k.implies_elim(r_imp, k.conj_elim_right(h)),
            )
        else:
            la = k.disj_intro_left(k.implies_elim(l_imp, k.assume(src_l)), dst_r)
            rb = k.disj_intro_right(k.implies_elim(r_imp, k.assume(src_r)), dst_l)
            out = k.disj_elim(h, la, rb)
        return k.implies_intro(out, src)

    fwd = transport(a, b, a2, b2, k.iff_elim_left(t1), k.iff_elim_left(t2))
    bwd = transport(a2, b2, a, b, k.iff_elim_right(t1), k.iff_elim_right(t2))
    return k.iff_intro(fwd, bwd)


def _imp_cong_dir(k: Kernel, t1: Thm, t2: Thm, forward: bool) -> Thm:
    i1, i2 = t1.conclusion, t2.conclusion
    assert isinstance(i1, Iff) and isinstance(i2, Iff)
    if forward:
        src = Implies(i1.left, i2.left)
        back_l, fwd_r = k.iff_elim_right(t1), k.iff_elim_left(t2)
        dst_l = i1.right
    else:
        src = Implies(i1.right, i2.right)
        back_l, fwd_r = k.iff_elim_left(t1), k.iff_elim_right(t2)
        dst_l = i1.left
    h = k.assume(src)
    ha = k.assume(dst_l)
    out = k.implies_elim(fwd_r, k.implies_elim(h, k.implies_elim(back_l, ha)))
    return k.implies_intro(k.implies_intro(out, dst_l), src)


def cong_and(k: Kernel, t1: Thm, t2: Thm) -> Thm:
    return _cong_binary(k, And, t1, t2)


def cong_or(k: Kernel, t1: Thm, t2: Thm) -> Thm:
    return _cong_binary(k, Or, t1, t2)


def cong_implies(k: Kernel, t1: Thm, t2: Thm) -> Thm:
    return _cong_binary(k, Implies, t1, t2)


def cong_iff(k: Kernel, t1: Thm, t2: Thm) -> Thm:
    # (a<->a2) and (b<->b2) give (a<->b) <-> (a2<->b2)
    i1, i2 = t1.conclusion, t2.conclusion
    assert isinstance(i1, Iff) and isinstance(i2, Iff)

    def direction(src: Iff, t_l: Thm, t_r: Thm) -> Thm:
        # from src = (l<->r) and l<->l', r<->r' build l'<->r'
        h = k.assume(src)
        lp = i1.right if src.left == i1.left else i1.left
        rp = i2.right if src.right == i2.left else i2.left
        l_to_lp = k.iff_elim_left(t_l) if src.left == i1.left else k.iff_elim_right(t_l)
        lp_to_l = k.iff_elim_right(t_l) if src.left == i1.left else k.iff_elim_left(t_l)
        r_to_rp = k.iff_elim_left(t_r) if src.right == i2.left else k.iff_elim_right(t_r)
        rp_to_r = k.iff_elim_right(t_r) if src.right == i2.left else k.iff_elim_left(t_r)
        hl = k.assume(lp)
        fwd = k.implies_intro(
            k.implies_elim(
                r_to_rp, k.implies_elim(k.iff_elim_left(h), k.implies_elim(lp_to_l, hl))
            ),
            lp,
        )
        hr = k.assume(rp)
        bwd = k.implies_intro(
            k.implies_elim(
                l_to_lp, k.implies_elim(k.iff_elim_right(h), k.implies_elim(rp_to_r, hr))
            ),
            rp,
        )
        return k.implies_intro(k.iff_intro(fwd, bwd), src)

    fwd = direction(Iff(i1.left, i2.left), t1, t2)
    bwd = direction(Iff(i1.right, i2.right), t1, t2)
    return k.iff_intro(fwd, bwd)


def cong_quant(k: Kernel, cls, var: Var, t_body: Thm) -> Thm:
    """From body <-> body' (with ``var`` arbitrary) derive the quantified iff."""
    iff = t_body.conclusion
    assert isinstance(iff, Iff)
    a, b = iff.left, iff.right

    def direction(src: Prop, dst: Prop, imp: Thm) -> Thm:
        h = k.assume(cls(var.name, var.sort, src))
        if cls is Forall:
            inst = k.forall_elim(h, var)
            out = k.forall_intro(k.implies_elim(imp, inst), var)
        else:
            inst = k.assume(src)
            witness = k.exists_intro(
                k.implies_elim(imp, inst), Exists(var.name, var.sort, dst), var
            )
            out = k.exists_elim(h, witness, var)
        return k.implies_intro(out, cls(var.name, var.sort, src))

    return k.iff_intro(
        direction(a, b, k.iff_elim_left(t_body)),
        direction(b, a, k.iff_elim_right(t_body)),
    )


def iff_by_eq(k: Kernel, t_eq: Thm, template: Prop, hole: str) -> Thm:
    """From a = b derive P[a/hole] <-> P[b/hole]."""
    eq = t_eq.conclusion
    assert isinstance(eq, Eq)
    pa = subst_prop(template, {hole: eq.lhs})
    pb = subst_prop(template, {hole: eq.rhs})
    fwd = k.implies_intro(k.eq_subst(t_eq, k.assume(pa), template, hole), pa)
    bwd = k.implies_intro(k.eq_subst(eq_sym(k, t_eq), k.assume(pb), template, hole), pb)
    return k.iff_intro(fwd, bwd)
