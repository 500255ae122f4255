"""Compare each violation automaton with the oracle, rule by rule.

For every random execution, an automaton should accept some renaming
exactly when some projection whose last rule is that rule fails its
matching set.

    python3 scripts/sweep_automata.py --count 1000
"""
import argparse
import random

from linreach.automata import build, match_execution, rules_with_automata
from linreach.core import history_of
from linreach.oracle import has_rule_violation
from linreach.rules import builtin
from linreach.sampling import random_trace


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--count", type=int, default=1000, help="executions per specification")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--spec", choices=("queue", "stack", "register", "mutex"), action="append")
    p.add_argument("--show", type=int, default=2, help="disagreements to print per rule")
    args = p.parse_args()
    failed = False
    for spec in args.spec or ("queue", "stack"):
        S = builtin(spec)
        traces = [random_trace(spec, random.Random(f"{args.seed}-{spec}-{i}")) for i in range(args.count)]
        for rule in rules_with_automata(S):
            A = build(rule)
            bad = hits = 0
            for i, e in enumerate(traces):
                oracle = has_rule_violation(history_of(e), S, rule)
                found = match_execution(A, e, S)
                hits += oracle
                if (found is not None) != oracle:
                    bad += 1
                    if bad <= args.show:
                        side = "automaton only" if found is not None else "oracle only"
                        print(f"  {rule} sample {i} ({side}): {e}")
            failed |= bad > 0
            print(f"{rule:11s} {args.count - bad}/{args.count} agree, {hits} violating")
    raise SystemExit(1 if failed else 0)


if __name__ == "__main__":
    main()
