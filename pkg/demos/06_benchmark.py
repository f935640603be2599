"""The pass@k harness over the bundled goal corpus and attempt sets.

Run as: python demos/06_benchmark.py
"""

from minilang.bench import BenchConfig, run_benchmark
from minilang.engine import Engine

report = run_benchmark(
    "src/minilang/corpus/bench/goals.jsonl",
    "src/minilang/corpus/bench/attempts",
    BenchConfig(ks=(1, 2, 4, 8), reset_db=True),
    Engine(),
)

print("pass@k:")
for k, v in report["pass_at"].items():
    print(f"  pass@{k}: {v:.2f}")
print("\nfailure histogram (first error per failing attempt):")
for category, count in report["failure_histogram"].items():
    print(f"  {category:24s} {count}")
print("\nverdicts for entry b03:")
for att in report["entries"]["b03"]:
    print(f"  sample {att['sample']}: {att['verdict']}")
