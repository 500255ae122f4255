"""Linearizability verdicts for program models."""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Optional

from ..automata import ViolationAutomaton, for_spec
from ..core import CALL, Execution, history_of
from ..monitor import Violation, check
from ..rules import Specification, builtin
from .model import ModelError, ProgramModel, run_edge
from .petri import BasisSizeExceeded, coverable, to_petri_net, witness_steps
from .reach import (DEFAULT_MAX_STATES, DEFAULT_MAX_THREADS, ReplayFailed, StateSpaceExceeded,
                    Step, automaton_moves, product_reach, replay, steps_to_execution)

LINEARIZABLE = "linearizable"
VIOLATION = "violation"
INCONCLUSIVE = "inconclusive"

EXIT_CODES = {LINEARIZABLE: 0, VIOLATION: 1, INCONCLUSIVE: 2}


@dataclass
class ModelVerdict:
    status: str
    engine: str
    counterexample: Optional[Execution] = None      # replayed with distinct values
    violation: Optional[Violation] = None
    reason: str = ""
    stats: dict = field(default_factory=dict)

    @property
    def exit_code(self) -> int:
        return EXIT_CODES[self.status]


def _state_after(model: ProgramModel, A: ViolationAutomaton, steps, nthreads: int):
    locals_ = [model.init_local()] * nthreads
    shared = model.init_shared()
    qs = set(A.initial)
    for s in steps:
        edge = model.edges[s.edge]
        outs = [o for o in run_edge(model, edge, locals_[s.thread], shared) if tuple(o[2]) == s.actions]
        if not outs:
            raise ModelError("witness step cannot be replayed")
        locals_[s.thread], shared = outs[0][0], outs[0][1]
        if s.actions:
            qs = {q2 for q in qs for q2 in automaton_moves(A, q, s.actions)}
    return tuple(locals_), shared, frozenset(qs)


def complete_pending(model: ProgramModel, A: ViolationAutomaton, steps: list,
                     max_states: int = DEFAULT_MAX_STATES) -> Optional[list]:
    """Extend a run so that every open call returns, using only steps of the
    threads with an open call and never issuing a new call. Returns the
    extra steps (empty when nothing is pending), or None when impossible
    while keeping the automaton in an accepting state."""
    n = 1 + max((s.thread for s in steps), default=0)
    locals_, shared, qs = _state_after(model, A, steps, n)
    start = (locals_, shared, qs)
    parent = {start: None}
    queue = deque([start])
    while queue:
        st = queue.popleft()
        locs, sh, cur = st
        if all(l.pending is None for l in locs) and cur & A.accepting:
            out = []
            while parent[st] is not None:
                st, step = parent[st]
                out.append(step)
            return out[::-1]
        for t, loc in enumerate(locs):
            if loc.pending is None:
                continue
            for k, e in enumerate(model.edges):
                if e.src != loc.control or any(i.op == CALL for i in e.instrs):
                    continue
                for loc2, sh2, acts, picks in run_edge(model, e, loc, sh):
                    nxt_q = cur
                    if acts:
                        nxt_q = frozenset(q2 for q in cur for q2 in automaton_moves(A, q, acts))
                    nxt = (locs[:t] + (loc2,) + locs[t + 1:], sh2, nxt_q)
                    if nxt in parent:
                        continue
                    parent[nxt] = (st, Step(t, k, tuple(picks), tuple(acts)))
                    if len(parent) > max_states:
                        return None
                    queue.append(nxt)
    return None


def _confirm(model: ProgramModel, S: Specification, steps, engine: str, stats: dict) -> ModelVerdict:
    try:
        e = replay(model, steps)
    except (ReplayFailed, ModelError) as exc:
        return ModelVerdict(INCONCLUSIVE, engine, steps_to_execution(steps),
                            reason=f"counterexample could not be replayed with distinct values: {exc}",
                            stats=stats)
    verdict = check(history_of(e), S)
    if verdict.linearizable:
        return ModelVerdict(INCONCLUSIVE, engine, e,
                            reason="automaton accepted an execution the monitor considers linearizable",
                            stats=stats)
    return ModelVerdict(VIOLATION, engine, e, verdict.violation, stats=stats)


def verify(model: ProgramModel, S=None, threads: Optional[int] = None, unbounded: bool = False,
           max_states: int = DEFAULT_MAX_STATES, max_threads: int = DEFAULT_MAX_THREADS,
           max_basis: Optional[int] = None) -> ModelVerdict:
    """Decide whether every completed execution of ``model`` is linearizable.

    A bounded thread count uses breadth-first product search. Otherwise the
    model is turned into a Petri net with a thread-spawning transition and
    checked by backward coverability; such a witness may end with open
    calls, which are then completed in isolation before it is trusted.
    """
    S = builtin(S or model.spec) if not isinstance(S, Specification) else S
    A = for_spec(S)
    unbounded = unbounded or (threads is None and model.threads is None)
    if not unbounded:
        n = threads if threads is not None else model.threads
        try:
            cx = product_reach(model, A, n, max_states=max_states, max_threads=max_threads)
        except StateSpaceExceeded as exc:
            return ModelVerdict(INCONCLUSIVE, "product", reason=str(exc))
        stats = {"threads": n}
        if cx is None:
            return ModelVerdict(LINEARIZABLE, "product", stats=stats)
        stats["states"] = cx.states_explored
        return _confirm(model, S, cx.steps, "product", stats)

    net, target = to_petri_net(model, A, unbounded=True)
    try:
        kw = {} if max_basis is None else {"max_basis": max_basis}
        res = coverable(net, target, **kw)
    except BasisSizeExceeded as exc:
        return ModelVerdict(INCONCLUSIVE, "coverability", reason=str(exc))
    stats = {"places": len(net.places), "transitions": len(net.transitions),
             "iterations": res.iterations, "basis": res.basis_size}
    if not res.coverable:
        return ModelVerdict(LINEARIZABLE, "coverability", stats=stats)
    steps = witness_steps(net, model, res.witness)
    tail = complete_pending(model, A, steps, max_states)
    if tail is None:
        return ModelVerdict(INCONCLUSIVE, "coverability", steps_to_execution(steps),
                            reason="the coverability witness ends with calls that cannot return "
                                   "on their own, so it may not extend to a completed violation",
                            stats=stats)
    return _confirm(model, S, steps + tail, "coverability", stats)
