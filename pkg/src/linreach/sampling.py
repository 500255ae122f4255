"""Random small histories and executions for property tests and experiments."""
from __future__ import annotations

import random
from typing import Optional

from .core import Execution, History, MethodEvent, call, history_of, ret

# per value: (input method, removal method, weights for 0/1/2 removal ops)
_SHAPES = {
    "queue": ("Enq", "Deq", "DeqEmpty"),
    "stack": ("Push", "Pop", "PopEmpty"),
    "register": ("Write", "Read", None),
    "mutex": ("Lock", "Unlock", None),
}


def random_events(spec: str, rng: random.Random, max_ops: int = 7, max_values: int = 4,
                  strong: bool = False, matched: bool = False) -> list[MethodEvent]:
    """Method events for a differentiated history.

    ``strong`` forbids repeated removal events for a value; ``matched`` forces
    exactly one input and one removal per value and no argumentless events.
    """
    ins, rem, empty = _SHAPES[spec]
    nvals = rng.randint(0, max_values)
    events: list[MethodEvent] = []
    for v in range(1, nvals + 1):
        if matched:
            events += [MethodEvent(ins, v), MethodEvent(rem, v)]
            continue
        if rng.random() < 0.9:
            events.append(MethodEvent(ins, v))
        k = rng.choices((0, 1, 2), weights=(3, 8, 0 if strong else 1))[0]
        if spec == "register" and not strong:
            k = rng.choices((0, 1, 2, 3), weights=(3, 6, 2, 1))[0]
        events += [MethodEvent(rem, v)] * k
    if empty and not matched:
        events += [MethodEvent(empty)] * rng.choices((0, 1, 2), weights=(4, 4, 1))[0]
    rng.shuffle(events)
    return events[:max_ops]


def random_execution(events: list[MethodEvent], rng: random.Random,
                     first_op: int = 1) -> Execution:
    """Interleave call/return actions of the given events at random.

    Operation lengths are drawn from a per-execution scale so that both
    nearly sequential and heavily overlapping executions are common.
    """
    scale = rng.choice((0.02, 0.1, 0.3, 0.8))
    stamps = []
    for i, ev in enumerate(events):
        op = f"o{first_op + i}"
        start = rng.random()
        end = start + rng.expovariate(1.0 / scale)
        stamps.append((start, 0, i, call(ev.method, ev.value, op)))
        stamps.append((end, 1, i, ret(ev.method, ev.value, op)))
    stamps.sort(key=lambda t: (t[0], t[1], t[2]))
    return Execution(tuple(a for *_, a in stamps))


def random_history(spec: str, rng: random.Random, max_ops: int = 7, max_values: int = 4,
                   strong: bool = False, matched: bool = False) -> History:
    evs = random_events(spec, rng, max_ops, max_values, strong, matched)
    return history_of(random_execution(evs, rng))


def random_trace(spec: str, rng: random.Random, max_ops: int = 7, max_values: int = 4,
                 strong: bool = False, matched: bool = False) -> Execution:
    evs = random_events(spec, rng, max_ops, max_values, strong, matched)
    return random_execution(evs, rng)


def sample_seed(seed: Optional[int]) -> random.Random:
    return random.Random(seed)
