"""Deterministic random statement generators for the fuzz suites."""

from __future__ import annotations

import random

from minilang.engine import Engine, Session
from minilang.interp import Advanced, Completed, StepError
from minilang.syntax.script import parse_statements

# goals the hammer settles quickly, for accepted-script generation
EASY_GOALS = [
    ("prop_demo", "q"),
    ("prop_demo", "r"),
    ("prop_demo", "p --> p"),
    ("prop_demo", "p | ~p"),
    ("prop_demo", "p & q --> q & p"),
    ("arith", "1 + 1 = 2"),
    ("arith", "len(cons(1, nil)) = 1"),
    ("order_demo", "a <= b"),
]

# moves the generator may try; failures are skipped during generation
SAFE_MOVES = [
    "INTRO",
    "SIMPLIFY",
    'HAVE tt: "True"',
    "RULE",
    'CONFIG fuzz_flag = 1',
]

# arbitrary statements for the invariant fuzz, valid and invalid alike
WILD_MOVES = SAFE_MOVES + [
    "END",
    "NEXT",
    'CHOOSE "1"',
    'CHOOSE "zz"',
    "INDUCT n",
    "INDUCT ghost",
    'CASE_SPLIT "b"',
    "UNFOLD even_def",
    "UNFOLD mystery",
    "SIMPLIFY ghost_rule",
    'HAVE bad: "mystery(1)"',
    'CONSIDER "p" | "~p"',
    'CONSIDER j where "1 = 1"',
    "OPEN ghost_bundle",
    "APPLY auto_t",
    "APPLY (rule_t conjI)",
    "APPLY mystery_t",
    'LET ?zz = "1"',
    "RULE conjI",
    "RULE ghost_rule",
]


def generate_accepted_script(engine: Engine, rng: random.Random):
    """Drive a session with random safe moves, then close everything.

    Returns (theory, goal, statements, session) with the session Completed.
    """
    theory, goal = rng.choice(EASY_GOALS)
    session = engine.new_session(theory)
    err = session.set_goal(goal)
    assert err is None
    session.execute_text('CONFIG hammer_timeout = "2.0"')
    taken = ['CONFIG hammer_timeout = "2.0"']
    budget = rng.randrange(0, 4)
    labels = 0
    for _ in range(budget):
        move = rng.choice(SAFE_MOVES)
        if move.startswith("HAVE"):
            labels += 1
            move = f'HAVE tt{labels}: "True"'
        [stmt] = parse_statements(move)
        out = session.execute_statement(stmt)
        if isinstance(out, StepError):
            continue
        taken.append(move)
        if isinstance(out, Completed):
            return theory, goal, taken, session
    # close all remaining leaves
    for _ in range(64):
        [stmt] = parse_statements("END")
        out = session.execute_statement(stmt)
        if isinstance(out, Completed):
            taken.append("END")
            return theory, goal, taken, session
        if isinstance(out, StepError):
            raise AssertionError(f"fuzz script failed to close: {out}")
        taken.append("END")
    raise AssertionError("fuzz script did not terminate")


def random_wild_statement(rng: random.Random) -> str:
    return rng.choice(WILD_MOVES)
