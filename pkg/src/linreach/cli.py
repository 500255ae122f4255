"""Command-line entry point: ``linreach <command> ...``.

Exit codes: 0 linearizable, 1 violation, 2 inconclusive or a limit was
hit, 64 usage or input error.
"""
from __future__ import annotations

import argparse
import json
import sys
import time
from dataclasses import dataclass, field
from typing import Optional

from .automata import build, emit, for_spec, match_execution, rules_with_automata
from .core import Execution, complete, history_of, is_differentiated
from .generate import GeneratorConfig, UnknownVariant, generate
from .monitor import Violation, check
from .oracle import DEFAULT_BOUND, TooLarge, is_linearizable
from .rules import SPEC_NAMES, builtin
from .traceio import IoFailure, MalformedLine, dumps, parse_trace, write_trace

EXIT_OK, EXIT_VIOLATION, EXIT_INCONCLUSIVE, EXIT_USAGE = 0, 1, 2, 64
VERDICT_CODES = {"linearizable": EXIT_OK, "violation": EXIT_VIOLATION, "inconclusive": EXIT_INCONCLUSIVE}


class UsageError(Exception):
    pass


@dataclass
class RunReport:
    verdict: str
    violation: Optional[dict] = None
    timing: float = 0.0
    counts: dict = field(default_factory=dict)
    detail: dict = field(default_factory=dict)

    @property
    def exit_code(self) -> int:
        return VERDICT_CODES[self.verdict]

    def to_dict(self, timing: bool = False) -> dict:
        d = {"verdict": self.verdict, "violation": self.violation, "counts": self.counts}
        d.update(self.detail)
        if timing:
            d["timing"] = round(self.timing, 6)
        return d


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _load(path: str, spec: str) -> Execution:
    e = parse_trace(path)
    pending = e.pending()
    if pending:
        print(f"warning: completing {len(pending)} pending operation(s): {', '.join(pending)}",
              file=sys.stderr)
        e = complete(e)
    S = builtin(spec)
    if not is_differentiated(e, S.input_methods):
        raise UsageError(
            "trace is not differentiated: each value must be added by at most one "
            f"{'/'.join(sorted(S.input_methods))} call. Results are only guaranteed for "
            "differentiated traces, since data independence reduces every trace to "
            "its differentiated renamings; rename the values and retry")
    return e


def _counts(e: Execution) -> dict:
    values = {a.value for a in e.actions if a.value is not None}
    return {"ops": len(e.ops()), "values": len(values)}


def _emit(report: RunReport, args, text: str) -> int:
    if args.json:
        print(json.dumps(report.to_dict(args.timing), sort_keys=True))
    else:
        print(text)
        if args.timing:
            print(f"time: {report.timing:.3f}s")
    return report.exit_code


def _violation_line(v: Violation) -> str:
    vals = ", ".join(map(str, v.witnesses))
    return f"violation of {v.rule} (values: {vals})"


def cmd_check(args) -> int:
    e = _load(args.trace, args.spec)
    t0 = time.perf_counter()
    verdict = check(history_of(e), builtin(args.spec))
    rep = RunReport("linearizable" if verdict.linearizable else "violation",
                    None if verdict.linearizable else verdict.violation.to_dict(),
                    time.perf_counter() - t0, _counts(e))
    return _emit(rep, args, "linearizable" if verdict.linearizable else _violation_line(verdict.violation))


def cmd_oracle(args) -> int:
    e = _load(args.trace, args.spec)
    t0 = time.perf_counter()
    try:
        lin = is_linearizable(history_of(e), builtin(args.spec), bound=args.bound)
    except TooLarge as exc:
        rep = RunReport("inconclusive", None, time.perf_counter() - t0, _counts(e), {"reason": str(exc)})
        return _emit(rep, args, f"inconclusive: {exc}")
    if lin is None:
        rep = RunReport("violation", None, time.perf_counter() - t0, _counts(e))
        return _emit(rep, args, "violation: no linearization belongs to the specification")
    rep = RunReport("linearizable", None, time.perf_counter() - t0, _counts(e),
                    {"linearization": [str(ev) for ev in lin.seq.events]})
    return _emit(rep, args, "linearizable: " + str(lin.seq))


def cmd_match(args) -> int:
    S = builtin(args.spec)
    if args.emit_automaton:
        which = args.emit_automaton
        if which == "all":
            A = for_spec(S)
        elif which in rules_with_automata(S):
            A = build(which)
        else:
            raise UsageError(f"{args.spec} has no automaton named {which!r}; "
                             f"choose from {', '.join(rules_with_automata(S))} or all")
        sys.stdout.write(emit(A))
        return EXIT_OK
    rules = [args.rule] if args.rule else rules_with_automata(S)
    if args.rule and args.rule not in rules_with_automata(S):
        raise UsageError(f"{args.spec} has no automaton named {args.rule!r}")
    if args.trace is None:
        raise UsageError("match needs a trace unless --emit-automaton is given")
    e = _load(args.trace, args.spec)
    t0 = time.perf_counter()
    hits = {}
    for r in rules:
        found = match_execution(build(r), e, S)
        if found is not None:
            hits[r] = {("op:" + k[1]) if isinstance(k, tuple) else str(k): v for k, v in found.items()}
    rep = RunReport("violation" if hits else "linearizable", None, time.perf_counter() - t0,
                    _counts(e), {"matches": hits})
    lines = [f"{r}: renaming {json.dumps(m, sort_keys=True)}" for r, m in hits.items()]
    return _emit(rep, args, "\n".join(lines) if hits else "no violation automaton accepts a renaming")


def explain_violation(e: Execution, v: Violation) -> str:
    """A short narrative for a violation found by the monitor."""
    by_op = {a.op: a.event for a in e.actions}
    vals = ", ".join(map(str, v.witnesses))
    lines = [f"Rule {v.rule} is violated; the values involved are {vals}."]
    if v.reason:
        lines.append(f"Reason: {v.reason}.")
    for a, b in v.evidence:
        ea, eb = by_op.get(a, a), by_op.get(b, b)
        lines.append(f"  {ea} [{a}] must come before {eb} [{b}]")
    if v.cycle:
        lines.append("These constraints form a cycle: " + " -> ".join(map(str, v.cycle)))
    return "\n".join(lines)


def cmd_explain(args) -> int:
    e = _load(args.trace, args.spec)
    t0 = time.perf_counter()
    verdict = check(history_of(e), builtin(args.spec))
    if verdict.linearizable:
        rep = RunReport("linearizable", None, time.perf_counter() - t0, _counts(e))
        return _emit(rep, args, "The trace is linearizable: no rule is violated.")
    rep = RunReport("violation", verdict.violation.to_dict(), time.perf_counter() - t0, _counts(e))
    return _emit(rep, args, explain_violation(e, verdict.violation))


def cmd_gen(args) -> int:
    cfg = GeneratorConfig(args.spec, args.variant, args.ops, args.threads, args.seed, args.values)
    try:
        e = generate(cfg)
    except UnknownVariant as exc:
        raise UsageError(str(exc)) from None
    if args.output:
        write_trace(e, args.output)
    else:
        sys.stdout.write(dumps(e))
    return EXIT_OK


def cmd_verify(args) -> int:
    from .modelcheck import ModelError, load_model, verify

    try:
        model = load_model(args.model)
    except (ModelError, OSError) as exc:
        raise UsageError(f"cannot load model: {exc}") from None
    spec = args.spec or model.spec
    if spec != model.spec:
        raise UsageError(f"model {model.name} is written for {model.spec}, not {spec}")
    t0 = time.perf_counter()
    v = verify(model, spec, threads=args.threads, unbounded=args.unbounded,
               max_states=args.max_states)
    rep = RunReport(v.status, v.violation.to_dict() if v.violation else None,
                    time.perf_counter() - t0, dict(v.stats), {"engine": v.engine})
    if v.reason:
        rep.detail["reason"] = v.reason
    text = [f"{v.status} ({v.engine})"]
    if v.reason:
        text.append(v.reason)
    if v.violation:
        text.append(_violation_line(v.violation))
    if v.counterexample is not None:
        if args.output:
            write_trace(v.counterexample, args.output)
            text.append(f"counterexample written to {args.output}")
        else:
            text.append(dumps(v.counterexample).rstrip("\n"))
    return _emit(rep, args, "\n".join(text))


def make_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="linreach", description="Linearizability monitoring and verification.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp, trace=True):
        sp.add_argument("--spec", required=True, choices=SPEC_NAMES)
        if trace:
            sp.add_argument("trace", help="trace file, one JSON action per line")
        sp.add_argument("--json", action="store_true", help="print a JSON report")
        sp.add_argument("--timing", action="store_true", help="also report elapsed time")

    sp = sub.add_parser("check", help="monitor a trace")
    common(sp)
    sp.set_defaults(fn=cmd_check)

    sp = sub.add_parser("oracle", help="brute-force check over all linearizations")
    common(sp)
    sp.add_argument("--bound", type=int, default=DEFAULT_BOUND, help="maximum number of operations")
    sp.set_defaults(fn=cmd_oracle)

    sp = sub.add_parser("match", help="run the violation automata on renamings of a trace")
    common(sp, trace=False)
    sp.add_argument("trace", nargs="?")
    sp.add_argument("--rule", help="restrict to one rule's automaton")
    sp.add_argument("--emit-automaton", nargs="?", const="all", metavar="RULE",
                    help="print the transition listing of one rule's automaton (or the union) instead")
    sp.set_defaults(fn=cmd_match)

    sp = sub.add_parser("explain", help="describe why a trace is not linearizable")
    common(sp)
    sp.set_defaults(fn=cmd_explain)

    sp = sub.add_parser("gen", help="generate a trace")
    sp.add_argument("--spec", required=True, choices=SPEC_NAMES)
    sp.add_argument("--variant", default="reference")
    sp.add_argument("--ops", type=int, default=8)
    sp.add_argument("--threads", type=int, default=3)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--values", type=int, default=None, help="cap on distinct values")
    sp.add_argument("-o", "--output")
    sp.set_defaults(fn=cmd_gen)

    sp = sub.add_parser("verify", help="verify a program model")
    sp.add_argument("--model", required=True)
    sp.add_argument("--spec", choices=SPEC_NAMES)
    g = sp.add_mutually_exclusive_group()
    g.add_argument("--threads", type=int)
    g.add_argument("--unbounded", action="store_true")
    sp.add_argument("--max-states", type=int, default=500_000)
    sp.add_argument("-o", "--output", help="write the counterexample trace here")
    sp.add_argument("--json", action="store_true")
    sp.add_argument("--timing", action="store_true")
    sp.set_defaults(fn=cmd_verify)
    return p


def main(argv=None) -> int:
    args = make_parser().parse_args(argv)
    try:
        return args.fn(args)
    except (UsageError, MalformedLine, IoFailure) as exc:
        print(f"linreach: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
