"""A tour of the trusted kernel: terms, theorems, rewriting, replay.

Run as: python demos/01_kernel_and_rewriting.py
"""

from minilang.kernel import Kernel, derived
from minilang.kernel.rewrite import Rewriter, conv_from_trace, simp_rules_of
from minilang.syntax.terms import PropParser, render_prop
from minilang.theoryfile import builtin_registry

registry = builtin_registry()
arith = registry.get("arith")
kernel = Kernel(arith)
parse = PropParser(arith).parse_prop

print("== The kernel only hands out theorems through primitives ==")
p = parse("even(2)")
t = kernel.assume(p)
print(f"assume:        {sorted(map(render_prop, t.hypotheses))} |- {render_prop(t.conclusion)}")

imp = kernel.implies_intro(t, p)
print(f"implies_intro: |- {render_prop(imp.conclusion)}")

print("\n== Classical moves are derived, never new trust ==")
em = derived.excluded_middle(kernel, parse("even(2)"))
print(f"excluded middle: |- {render_prop(em.conclusion)}")

print("\n== Rewriting evaluates by the theory's defining equations ==")
goal = parse("len(cons(1, cons(2, nil))) = 2")
rewriter = Rewriter(arith, simp_rules_of(arith))
result = rewriter.rewrite(goal, 100)
print(f"{render_prop(goal)}  ~~>  {render_prop(result.prop)}  ({len(result.trace)} steps)")

print("\n== Every rewrite is certificate-backed ==")
conv = conv_from_trace(kernel, goal, result.trace, arith)
theorem = derived.iff_mpr(kernel, conv, kernel.true_intro())
print(f"theorem: |- {render_prop(theorem.conclusion)}")
print("replaying the certificate through fresh primitives:",
      kernel.replay(theorem))
