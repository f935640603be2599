"""Premise selection and the learning database.

Run as: python demos/03_hammer_premises.py
"""

from minilang.hammer import Hammer, LemmaDB, ProveRequest, Proved, select_premises
from minilang.kernel import Kernel
from minilang.proofstate import Context
from minilang.syntax.terms import PropParser
from minilang.theoryfile import builtin_registry

theory = builtin_registry().get("prop_demo")
kernel = Kernel(theory)
db = LemmaDB(theory)
hammer = Hammer(kernel, db)
parse = PropParser(theory).parse_prop

goal = parse("r")
print("goal: r")
print("selection, no hints:    ", select_premises(ProveRequest(Context(), goal), db, 8))
print("selection, WITH qr:     ", select_premises(ProveRequest(Context(), goal, with_hints=("qr",)), db, 8))
print("selection, WITHOUT pq:  ", select_premises(ProveRequest(Context(), goal, without_hints=("pq",)), db, 8))

result = hammer.prove(ProveRequest(Context(), goal))
assert isinstance(result, Proved)
print(f"\nproved via {result.backend}, used premises: {result.used_premises}")
print("records learned:", db.size())

print("\nafter learning, the used premises rank earlier for similar goals:")
print("selection, warmed DB:   ", select_premises(ProveRequest(Context(), goal), db, 8))
db.reset()
print("after reset_db:         ", select_premises(ProveRequest(Context(), goal), db, 8))
