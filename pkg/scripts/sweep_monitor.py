"""Compare the monitor with the brute-force oracle on random small histories.

    python3 scripts/sweep_monitor.py --count 2000 --seed 0
"""
import argparse
import random
import time

from linreach.monitor import check
from linreach.oracle import is_linearizable
from linreach.rules import SPEC_NAMES, builtin
from linreach.sampling import random_history


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--count", type=int, default=2000, help="histories per specification")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--max-ops", type=int, default=7)
    p.add_argument("--max-values", type=int, default=4)
    p.add_argument("--spec", choices=SPEC_NAMES, action="append")
    args = p.parse_args()
    failed = False
    for spec in args.spec or SPEC_NAMES:
        S = builtin(spec)
        t0 = time.perf_counter()
        bad = lin = 0
        for i in range(args.count):
            h = random_history(spec, random.Random(f"{args.seed}-{spec}-{i}"), args.max_ops, args.max_values)
            expected = is_linearizable(h, S) is not None
            lin += expected
            if check(h, S).linearizable != expected:
                bad += 1
                if bad <= 3:
                    print(f"  mismatch on {spec} sample {i}: {h}")
        failed |= bad > 0
        print(f"{spec:9s} {args.count} histories, {lin} linearizable, {bad} mismatches, "
              f"{time.perf_counter() - t0:.1f}s")
    raise SystemExit(1 if failed else 0)


if __name__ == "__main__":
    main()
