"""Bounded-thread verification: breadth-first search of the product of the
threads, the shared memory and a violation automaton."""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from typing import Optional

from ..automata import ViolationAutomaton, lab
from ..core import Action, Execution, validate_execution
from .model import Hole, ProgramModel, run_edge

DEFAULT_MAX_STATES = 500_000
DEFAULT_MAX_THREADS = 3


class StateSpaceExceeded(RuntimeError):
    pass


@dataclass(frozen=True)
class Step:
    thread: int
    edge: int
    picks: tuple
    actions: tuple


@dataclass
class Counterexample:
    steps: list
    execution: Execution           # values in {1, 2, 3}
    states_explored: int = 0


def automaton_moves(A: ViolationAutomaton, q: int, actions) -> list[int]:
    cur = frozenset([q])
    for kind, method, value in actions:
        cur = A.step(cur, lab(kind, method, 3 if value is None else value))
        if not cur:
            return []
    return sorted(cur)


def product_reach(model: ProgramModel, A: ViolationAutomaton, threads: Optional[int] = None,
                  max_states: int = DEFAULT_MAX_STATES,
                  max_threads: int = DEFAULT_MAX_THREADS) -> Optional[Counterexample]:
    """Shortest execution of ``model`` accepted by ``A`` with every thread
    back at its initial location, or None when none exists."""
    n = threads if threads is not None else model.threads
    if n is None:
        raise ValueError("product_reach needs a finite thread count")
    if n > max_threads:
        raise StateSpaceExceeded(f"{n} threads exceeds the configured bound {max_threads}")
    edges = list(model.edges)
    out = {s: [k for k, e in enumerate(edges) if e.src == s] for s in model.states}
    init_local = model.init_local()
    starts = [((init_local,) * n, model.init_shared(), q) for q in sorted(A.initial)]
    parent = {s: None for s in starts}
    queue = deque(starts)
    while queue:
        st = queue.popleft()
        locals_, shared, q = st
        if q in A.accepting and all(l.control == model.initial and l.pending is None for l in locals_):
            return _rebuild(parent, st, len(parent))
        for t in range(n):
            for k in out.get(locals_[t].control, ()):
                for loc2, sh2, acts, picks in run_edge(model, edges[k], locals_[t], shared):
                    qs = automaton_moves(A, q, acts) if acts else [q]
                    for q2 in qs:
                        nxt = (locals_[:t] + (loc2,) + locals_[t + 1:], sh2, q2)
                        if nxt in parent:
                            continue
                        parent[nxt] = (st, Step(t, k, tuple(picks), tuple(acts)))
                        if len(parent) > max_states:
                            raise StateSpaceExceeded(f"more than {max_states} product states")
                        queue.append(nxt)
    return None


def _rebuild(parent, st, explored) -> Counterexample:
    steps = []
    while parent[st] is not None:
        st, step = parent[st]
        steps.append(step)
    steps.reverse()
    return Counterexample(steps, steps_to_execution(steps), explored)


def steps_to_execution(steps) -> Execution:
    actions, open_op, counter = [], {}, 0
    for s in steps:
        for kind, method, value in s.actions:
            if kind == "call":
                counter += 1
                open_op[s.thread] = f"o{counter}"
            actions.append(Action(kind, method, value, open_op[s.thread]))
    return validate_execution(actions)


def replay(model: ProgramModel, steps) -> Execution:
    """Re-run a counterexample path with pairwise distinct fresh values.

    Guessed values start as placeholders and are bound when validated;
    placeholders never validated get fresh values at the end. Data
    independence makes the path feasible again whenever the original run
    never relied on two distinct values being equal.
    """
    counter = iter(range(1, 10 ** 9))
    n = 1 + max((s.thread for s in steps), default=0)
    n = max(n, model.threads or 1)
    locals_ = [model.init_local()] * n
    shared = model.init_shared()
    raw = []
    for s in steps:
        outs = run_edge(model, model.edges[s.edge], locals_[s.thread], shared,
                        fresh=lambda: next(counter), guess=Hole)
        if len(outs) != 1:
            raise ReplayFailed(f"step {s} is not replayable with distinct values")
        loc2, shared, acts, _ = outs[0]
        locals_[s.thread] = loc2
        raw.append((s.thread, acts))
    fill = {}
    actions, open_op, k = [], {}, 0
    for thread, acts in raw:
        for kind, method, value in acts:
            if isinstance(value, Hole):
                v = value.resolve()
                if isinstance(v, Hole):
                    v = fill.setdefault(v.id, next(counter))
                value = v
            if kind == "call":
                k += 1
                open_op[thread] = f"o{k}"
            actions.append(Action(kind, method, value, open_op[thread]))
    return validate_execution(actions)


class ReplayFailed(RuntimeError):
    pass
