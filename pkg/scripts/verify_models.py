"""Verify every sample model with both engines and print a table.

    python3 scripts/verify_models.py [--threads 2] [--skip-unbounded]
"""
import argparse
import time
from pathlib import Path

from linreach.automata import for_spec
from linreach.modelcheck import coverable, load_model, to_petri_net, verify
from linreach.rules import builtin

MODELS = Path(__file__).resolve().parent.parent / "models"


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--threads", type=int, default=2)
    p.add_argument("--skip-unbounded", action="store_true")
    p.add_argument("models", nargs="*", help="model files (default: models/*.json)")
    args = p.parse_args()
    paths = [Path(m) for m in args.models] or sorted(MODELS.glob("*.json"))
    disagree = False
    for path in paths:
        m = load_model(path)
        t0 = time.perf_counter()
        v = verify(m, threads=args.threads)
        line = f"{m.name:22s} bfs[{args.threads}]: {v.status:12s} {time.perf_counter() - t0:5.1f}s"
        if v.violation:
            line += f" {v.violation.rule}"
        t0 = time.perf_counter()
        net, target = to_petri_net(m, for_spec(builtin(m.spec)), threads=args.threads)
        res = coverable(net, target)
        same = res.coverable == (v.status == "violation")
        disagree |= not same
        line += f" | net[{args.threads}]: {'coverable' if res.coverable else 'not coverable':13s} " \
                f"{time.perf_counter() - t0:5.1f}s{'' if same else ' DISAGREES'}"
        if not args.skip_unbounded:
            t0 = time.perf_counter()
            u = verify(m, unbounded=True)
            line += f" | unbounded: {u.status} {time.perf_counter() - t0:.1f}s"
        print(line, flush=True)
    raise SystemExit(1 if disagree else 0)


if __name__ == "__main__":
    main()
