"""Brute-force linearizability: enumerate linear extensions, test membership.

Exponential by design; used as ground truth for the monitor and automata.
"""
from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations
from typing import Iterator, Optional

from .core import History, SequentialExecution, is_differentiated
from .rules import (NotDifferentiated, Rule, Specification, last_of, matches_rule,
                    member)

DEFAULT_BOUND = 10


class TooLarge(ValueError):
    pass


@dataclass(frozen=True)
class Linearization:
    order: tuple[str, ...]
    seq: SequentialExecution


def _check_size(h: History, bound: int) -> None:
    if len(h) > bound:
        raise TooLarge(f"{len(h)} operations exceeds the oracle bound of {bound}")


def linearizations(h: History, bound: int = DEFAULT_BOUND) -> Iterator[Linearization]:
    _check_size(h, bound)
    ops = sorted(h.ops)
    preds = {o: {p for p in ops if h.before(p, o)} for o in ops}
    placed: list[str] = []
    used: set[str] = set()

    def rec():
        if len(placed) == len(ops):
            order = tuple(placed)
            yield Linearization(order, SequentialExecution(tuple(h.label[o] for o in order)))
            return
        for o in ops:
            if o in used or not preds[o] <= used:
                continue
            placed.append(o)
            used.add(o)
            yield from rec()
            used.discard(o)
            placed.pop()

    yield from rec()


def _require_diff(h: History, S: Specification) -> None:
    if not is_differentiated(h, S.input_methods):
        raise NotDifferentiated(str(h))


def is_linearizable(h: History, S: Specification, bound: int = DEFAULT_BOUND,
                    upto: Optional[int] = None) -> Optional[Linearization]:
    """First linearization (in enumeration order) whose sequence is in the
    specification, or None. ``upto`` restricts to the rule prefix R_0..R_upto."""
    _require_diff(h, S)
    seen = set()
    for lin in linearizations(h, bound):
        if lin.seq.events in seen:
            continue
        seen.add(lin.seq.events)
        if member(lin.seq, S, upto)[0]:
            return lin
    return None


def linearizable_wrt_matchsets(h: History, rules, bound: int = DEFAULT_BOUND) -> Optional[Linearization]:
    for lin in linearizations(h, bound):
        if any(matches_rule(lin.seq, R) for R in rules):
            return lin
    return None


def is_linearizable_wrt_matchset(h: History, R: Rule, bound: int = DEFAULT_BOUND) -> bool:
    return linearizable_wrt_matchsets(h, [R], bound) is not None


def projection_keys(h: History) -> list:
    """Data values, plus one key per argumentless operation.

    Argumentless operations (DeqEmpty, PopEmpty) stand for operations with
    pairwise distinct, otherwise unused values; each is projected separately.
    """
    keys: list = sorted(h.dom())
    keys += [("op", o) for o in h.ops if h.label[o].value is None]
    return keys


def project_keys(h: History, keys) -> History:
    keys = set(keys)
    return h.restrict(o for o in h.ops
                      if (h.label[o].value if h.label[o].value is not None else ("op", o)) in keys)


def all_projections(h: History, max_keys: Optional[int] = None) -> Iterator[History]:
    keys = projection_keys(h)
    top = len(keys) if max_keys is None else min(max_keys, len(keys))
    for size in range(top + 1):
        for ks in combinations(keys, size):
            yield project_keys(h, ks)


def check_exclu(h: History, S: Specification, bound: int = DEFAULT_BOUND) -> bool:
    """Every projection is linearizable w.r.t. the matching set of its ``last`` rule."""
    _check_size(h, bound)
    _require_diff(h, S)
    for p in all_projections(h):
        if not is_linearizable_wrt_matchset(p, last_of(p, S), bound):
            return False
    return True


def violating_projections(h: History, S: Specification, rule_name: str,
                          bound: int = DEFAULT_BOUND) -> Iterator[History]:
    """Projections whose ``last`` is ``rule_name`` and that are not linearizable
    w.r.t. its matching set."""
    R = S.rule(rule_name)
    for p in all_projections(h):
        if last_of(p, S).name == rule_name and not is_linearizable_wrt_matchset(p, R, bound):
            yield p


def has_rule_violation(h: History, S: Specification, rule_name: str,
                       bound: int = DEFAULT_BOUND) -> bool:
    return next(violating_projections(h, S, rule_name, bound), None) is not None
