"""The golden proof: irrationality of sqrt 2 over the bundled axioms.

Watches the labeled tree evolve and replays the final theorem.
Run as: python demos/02_prove_sqrt2.py
"""

from minilang.engine import Engine
from minilang.interp import Completed
from minilang.syntax.script import parse_script, render_statement

engine = Engine()
script = parse_script(open("src/minilang/corpus/golden/sqrt2.mini").read())
session = engine.new_session(script.theory)
session.set_goal(script.goal_text)

print(f"theorem {script.name}: \"{script.goal_text}\"\n")
outcome = None
for i, stmt in enumerate(script.statements, start=1):
    outcome = session.execute_statement(stmt)
    print(f"[{i:2d}] {render_statement(stmt)}")
    if i == 15:  # right after the witness CONSIDER: the paper's 3-subgoal tree
        print("\n--- state after fixing k ---")
        print(session.serialized())

assert isinstance(outcome, Completed)
print("proof complete; replaying the certificate:", session.kernel.replay(outcome.thm))
