"""Seeded trace generators for reference objects and deliberately broken ones.

Every operation runs in three atomic steps: its call, its effect on the
shared object, and its return. Values are fixed at the effect step and
written back into the call action, so traces stay in the fused format
where return values travel with the call.

Scheduler: a ``random.Random(seed)`` instance drives everything. At each
step the enabled thread steps are listed in thread order (a call when the
thread is idle and the operation budget is not spent, the effect when it
can proceed, the return after the effect) and one is picked with
``rng.choice``. The operation kind for a new call is drawn with
``rng.random()`` right after the call step is chosen; mutants draw one more
``rng.random()`` each time they consider misbehaving.
"""
from __future__ import annotations

import random
from dataclasses import dataclass, field
from typing import Optional

from .core import CALL, RET, Action, Execution

MUTANTS = {
    "queue": ("queue-fifo-swap", "queue-false-empty"),
    "stack": ("stack-lifo-swap",),
    "register": ("register-stale-read",),
    "mutex": ("mutex-no-exclusion",),
}
REFERENCE = "reference"
MISBEHAVE = 0.5


class UnknownVariant(ValueError):
    pass


@dataclass(frozen=True)
class GeneratorConfig:
    spec: str = "queue"
    variant: str = REFERENCE
    ops: int = 8
    threads: int = 3
    seed: int = 0
    values: Optional[int] = None     # cap on distinct data values, None = ops

    def validate(self) -> None:
        if self.spec not in MUTANTS:
            raise UnknownVariant(f"unknown specification {self.spec!r}")
        if self.variant != REFERENCE and self.variant not in MUTANTS[self.spec]:
            known = ", ".join((REFERENCE,) + MUTANTS[self.spec])
            raise UnknownVariant(f"no variant {self.variant!r} for {self.spec}; known: {known}")
        if self.ops < 0 or self.threads < 1:
            raise ValueError("ops must be non-negative and threads positive")


@dataclass
class _Op:
    op: str
    kind: str                 # "insert" / "remove" / "read" / "lock" / "unlock"
    method: str = ""
    value: Optional[int] = None
    done: bool = False


@dataclass
class _Thread:
    current: Optional[_Op] = None
    holding: Optional[int] = None     # mutex: ghost value of the held lock


class _Object:
    """Shared object state plus the behaviour of one variant."""

    def __init__(self, cfg: GeneratorConfig, rng: random.Random):
        self.cfg, self.rng = cfg, rng
        self.items: list = []          # queue: front first; stack: top last
        self.writes: list = []         # register history
        self.holder: Optional[int] = None
        self.next_value = 1
        self.cap = cfg.values if cfg.values is not None else max(cfg.ops, 1)

    def fresh(self) -> Optional[int]:
        if self.next_value > self.cap:
            return None
        v = self.next_value
        self.next_value += 1
        return v

    def bad(self) -> bool:
        return self.rng.random() < MISBEHAVE

    def enabled(self, t: _Thread) -> bool:
        op = t.current
        if self.cfg.spec == "mutex" and op.kind == "lock" and self.holder is not None:
            return self.cfg.variant == "mutex-no-exclusion"
        return True

    def apply(self, t: _Thread, op: _Op) -> None:
        spec, variant = self.cfg.spec, self.cfg.variant
        if spec in ("queue", "stack"):
            ins, rem, empty = ("Enq", "Deq", "DeqEmpty") if spec == "queue" else ("Push", "Pop", "PopEmpty")
            if op.kind == "insert":
                v = self.fresh()
                if v is not None:
                    op.method, op.value = ins, v
                    self.items.append(v)
                    return
            if not self.items or (variant == "queue-false-empty" and self.bad()):
                op.method, op.value = empty, None
                return
            if spec == "queue":
                k = 1 if variant == "queue-fifo-swap" and len(self.items) > 1 and self.bad() else 0
            else:
                k = len(self.items) - 2 if variant == "stack-lifo-swap" and len(self.items) > 1 and self.bad() \
                    else len(self.items) - 1
            op.method, op.value = rem, self.items.pop(k)
        elif spec == "register":
            v = self.fresh() if op.kind == "insert" or not self.writes else None
            if v is not None:
                op.method, op.value = "Write", v
                self.writes.append(v)
                return
            stale = variant == "register-stale-read" and len(self.writes) > 1 and self.bad()
            op.method, op.value = "Read", self.writes[-2 if stale else -1]
        else:
            if op.kind == "lock":
                # ghost values pairing Lock with Unlock are always fresh
                v = self.next_value
                self.next_value += 1
                op.method, op.value = "Lock", v
                self.holder = v
                t.holding = v
            else:
                op.method, op.value = "Unlock", t.holding
                if self.holder == t.holding:
                    self.holder = None
                t.holding = None


def _choose_kind(cfg: GeneratorConfig, t: _Thread, rng: random.Random) -> str:
    r = rng.random()
    if cfg.spec == "mutex":
        return "unlock" if t.holding is not None else "lock"
    if cfg.spec == "register":
        return "insert" if r < 0.5 else "read"
    return "insert" if r < 0.55 else "remove"


def generate(cfg: GeneratorConfig) -> Execution:
    """Simulate ``cfg.threads`` threads issuing ``cfg.ops`` operations in total.

    Mutex threads that still hold the lock when the budget runs out get a
    final Unlock, so traces may contain a few more operations than asked.
    """
    cfg.validate()
    rng = random.Random(cfg.seed)
    obj = _Object(cfg, rng)
    threads = [_Thread() for _ in range(cfg.threads)]
    budget = cfg.ops
    ops: list[_Op] = []
    events: list[tuple[str, _Op]] = []
    while True:
        steps = []
        for i, t in enumerate(threads):
            if t.current is None:
                if budget > 0 or (cfg.spec == "mutex" and t.holding is not None):
                    steps.append((i, CALL))
            elif not t.current.done:
                if obj.enabled(t):
                    steps.append((i, "effect"))
            else:
                steps.append((i, RET))
        if not steps:
            break
        i, step = rng.choice(steps)
        t = threads[i]
        if step == CALL:
            op = _Op(f"o{len(ops) + 1}", _choose_kind(cfg, t, rng))
            ops.append(op)
            if budget > 0:
                budget -= 1
            t.current = op
            events.append((CALL, op))
        elif step == "effect":
            obj.apply(t, t.current)
            t.current.done = True
        else:
            events.append((RET, t.current))
            t.current = None
    return Execution(tuple(Action(kind, op.method, op.value, op.op) for kind, op in events))


def variants(spec: str) -> tuple:
    return (REFERENCE,) + MUTANTS[spec]
