"""Source-to-source translation: Isar-S in, checked MiniLang out.

Run as: python demos/04_translate_isar.py
"""

from minilang.engine import Engine
from minilang.translate import apply_count, normalize, parse_isar, refine, to_minilang
from minilang.syntax.script import render_script

SOURCE = '''--theory isar_demo
lemma chain_s: "s"
proof -
  have "p" using p_holds by blast
  hence "q" using pq by blast
  moreover have "p & q" using "p" "q" by blast
  ultimately show "s" using pq_conj by blast
qed
'''

engine = Engine()
print("== Isar-S source ==")
print(SOURCE)

isar = parse_isar(SOURCE)
norm = normalize(isar)
mini = to_minilang(norm, engine.registry.get("isar_demo"))
print("== after the normalization passes + statement mapping ==")
print(render_script(mini))
print(f"APPLY statements before refinement: {apply_count(mini)}")

refined = refine(mini, engine)
print("\n== after tactic-elimination refinement ==")
print(render_script(refined))
print(f"APPLY statements after refinement: {apply_count(refined)}")
