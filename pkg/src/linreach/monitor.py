"""Polynomial-time linearizability monitor for the built-in specifications.

Each check looks for one class of violations:

* small projections (one or two values) that cannot be linearized with
  respect to the matching set of their rule (queue Enq/Deq, register, mutex);
* argumentless operations (DeqEmpty, PopEmpty) with no gap, found as a cycle
  through the operation in its left-right constraint graph;
* stack pops and unmatched pushes whose position is covered by other pairs.
"""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from itertools import combinations
from typing import Callable, Optional

from .core import History, is_differentiated
from .rules import NotDifferentiated, Specification, builtin


class ValueAbsent(KeyError):
    pass


class OpAbsent(KeyError):
    pass


@dataclass(frozen=True)
class Violation:
    rule: str
    witnesses: tuple
    evidence: tuple[tuple[str, str], ...] = ()
    cycle: tuple = ()
    reason: str = ""

    def to_dict(self) -> dict:
        d = {"rule": self.rule, "witnesses": list(self.witnesses),
             "evidence": [{"from_op": a, "to_op": b} for a, b in self.evidence]}
        if self.cycle:
            d["cycle"] = [str(c) for c in self.cycle]
        if self.reason:
            d["reason"] = self.reason
        return d


@dataclass(frozen=True)
class Verdict:
    linearizable: bool
    violation: Optional[Violation] = None

    def to_dict(self) -> dict:
        return {"linearizable": self.linearizable,
                "violation": None if self.violation is None else self.violation.to_dict()}


OK = Verdict(True)


def _bad(rule, witnesses, evidence=(), cycle=(), reason="") -> Verdict:
    return Verdict(False, Violation(rule, tuple(witnesses), tuple(evidence), tuple(cycle), reason))


def _require_diff(h: History, S: Specification) -> None:
    if not is_differentiated(h, S.input_methods):
        raise NotDifferentiated("history is not differentiated")


class _Index:
    """Per-value lookup of operations by method."""

    def __init__(self, h: History):
        self.h = h
        self.by = {}
        for o in h.ops:
            ev = h.label[o]
            self.by.setdefault(ev.method, {}).setdefault(ev.value, []).append(o)
        self.npred = {o: sum(1 for p in h.ops if h.before(p, o)) for o in h.ops}

    def of(self, method, value) -> list[str]:
        return self.by.get(method, {}).get(value, [])

    def values(self, method) -> list:
        return sorted(v for v in self.by.get(method, {}) if v is not None)

    def lt(self, a, b) -> bool:
        return self.h.before(a, b)


# ---------------------------------------------------------------------------
# left-right constraint graphs


PIVOT = "*"


@dataclass
class LeftRightGraph:
    """Nodes are data values plus the pivot operation (key ``PIVOT``).

    An edge ``a -> b`` reads "if b is placed left of the pivot then so is a";
    ``d -> PIVOT`` means d is forced left and ``PIVOT -> d`` means d can never
    be left. Each edge keeps the happens-before pair that justifies it, or
    None when the reason is a missing operation.
    """

    pivot: str
    nodes: tuple
    edges: dict = field(default_factory=dict)

    def add(self, a, b, why) -> None:
        if (a, b) not in self.edges:
            self.edges[(a, b)] = why

    def successors(self, a) -> list:
        return sorted((b for (x, b) in self.edges if x == a), key=_node_key)

    def cycle(self) -> Optional[list]:
        """Shortest cycle through the pivot, lexicographically least among
        those, as a node list starting and ending at the pivot."""
        dist = {PIVOT: 0}
        preds: dict = {}
        for (a, b) in self.edges:
            preds.setdefault(b, []).append(a)
        q = deque([PIVOT])
        while q:
            b = q.popleft()
            for a in preds.get(b, ()):
                if a not in dist:
                    dist[a] = dist[b] + 1
                    q.append(a)
        starts = [b for b in self.successors(PIVOT) if b in dist]
        if not starts:
            return None
        best = min(dist[b] for b in starts)
        path = [PIVOT, min((b for b in starts if dist[b] == best), key=_node_key)]
        while path[-1] != PIVOT:
            cur = path[-1]
            nxt = [b for b in self.successors(cur) if dist.get(b) == dist[cur] - 1]
            path.append(min(nxt, key=_node_key))
        return path

    def evidence(self, path) -> list[tuple[str, str]]:
        return [self.edges[(a, b)] for a, b in zip(path, path[1:]) if self.edges[(a, b)]]


def _node_key(n):
    return (1, 0) if n == PIVOT else (0, n)


def _first(ix: _Index, ops, key_ok=lambda o: True) -> Optional[str]:
    cands = [o for o in ops if key_ok(o)]
    return min(cands, key=lambda o: (ix.npred[o], o)) if cands else None


def _insert_remove_graph(ix: _Index, o: str, ins: str, rem: str, values) -> LeftRightGraph:
    """Graph for a pivot that must see every left insert matched by a removal
    placed left too (DeqEmpty, PopEmpty, an unmatched Push).

    A value is "left" when its insert is placed before the pivot, which drags
    along its earliest removal that is not after the pivot.
    """
    g = LeftRightGraph(o, tuple(values))
    ins_op, rep = {}, {}
    for d in values:
        ins_op[d] = ix.of(ins, d)[0]
        rep[d] = _first(ix, ix.of(rem, d), lambda r: not ix.lt(o, r))
    for d in values:
        if ix.lt(ins_op[d], o):
            g.add(d, PIVOT, (ins_op[d], o))
        if ix.lt(o, ins_op[d]):
            g.add(PIVOT, d, (o, ins_op[d]))
        elif rep[d] is None:
            after = ix.of(rem, d)
            g.add(PIVOT, d, (o, after[0]) if after else None)
    for d1 in values:
        for d2 in values:
            if d1 == d2:
                continue
            if ix.lt(ins_op[d1], ins_op[d2]):
                g.add(d1, d2, (ins_op[d1], ins_op[d2]))
            elif rep[d2] is not None and ix.lt(ins_op[d1], rep[d2]):
                g.add(d1, d2, (ins_op[d1], rep[d2]))
    return g


def _methods_for(h: History, o: str) -> tuple[str, str]:
    m = h.label[o].method
    if m in ("DeqEmpty", "Deq", "Enq"):
        return "Enq", "Deq"
    if m in ("PopEmpty", "Pop", "Push"):
        return "Push", "Pop"
    raise ValueError(f"no left-right graph for {m} operations")


def left_right_graph(h: History, o: str) -> LeftRightGraph:
    """Left-right constraints of an empty-removal operation ``o``.

    Edges: ``d -> o`` when the insert of d happens before o; ``o -> d`` when
    every removal of d (possibly none) happens after o; ``d1 -> d2`` when the
    insert of d1 happens before the removal of d2. Two further edges keep the
    graph exact on arbitrary histories: ``o -> d`` when o happens before the
    insert of d, and ``d1 -> d2`` when insert(d1) happens before insert(d2).
    """
    if o not in h.label:
        raise OpAbsent(o)
    ins, rem = _methods_for(h, o)
    ix = _Index(h)
    return _insert_remove_graph(ix, o, ins, rem, ix.values(ins))


def has_gap(h: History, o: str) -> bool:
    return left_right_graph(h, o).cycle() is None


def _empty_check(h: History, empty: str, ins: str, rem: str, rule: str) -> Verdict:
    for o in h.ops:
        if h.label[o].method != empty:
            continue
        sub = h.restrict(p for p in h.ops if p == o or h.label[p].method != empty)
        ix = _Index(sub)
        g = _insert_remove_graph(ix, o, ins, rem, ix.values(ins))
        path = g.cycle()
        if path is not None:
            vals = [n for n in path if n != PIVOT]
            return _bad(rule, reversed(vals), g.evidence(path),
                        cycle=[o if n == PIVOT else n for n in path[:-1]],
                        reason=f"{empty} {o} is covered")
    return OK


def queue_deqempty_check(h: History) -> Verdict:
    _require_diff(h, builtin("queue"))
    return _empty_check(h, "DeqEmpty", "Enq", "Deq", "R_DeqEmpty")


def stack_popempty_check(h: History) -> Verdict:
    _require_diff(h, builtin("stack"))
    return _empty_check(h, "PopEmpty", "Push", "Pop", "R_PopEmpty")


# ---------------------------------------------------------------------------
# pairwise checks (queue Enq/Deq, register, mutex)


Blocker = Callable[[_Index, object, list], Optional[tuple]]


def _pair_check(h: History, rule: str, values, singles, blocker) -> Verdict:
    """Singles are checked first; then every pair {x, y} where neither value
    can serve as the witness of the projection."""
    ix = _Index(h)
    for v in values:
        why = singles(ix, v)
        if why is not None:
            reason, ev = why
            return _bad(rule, [v], ev, reason=reason)
    for x, y in combinations(values, 2):
        bx = blocker(ix, x, [y])
        if bx is None:
            continue
        by = blocker(ix, y, [x])
        if by is None:
            continue
        ev = [e for e in (bx[1], by[1]) if e]
        return _bad(rule, [x, y], ev, reason=f"{x}: {bx[0]}; {y}: {by[0]}")
    return OK


def _ops_of_values(ix: _Index, values) -> list[str]:
    vs = set(values)
    return [o for o in ix.h.ops if ix.h.label[o].value in vs]


def _enqdeq_single(ix: _Index, v):
    enq, deqs = ix.of("Enq", v), ix.of("Deq", v)
    if not deqs:
        return None
    if not enq:
        return "Deq without Enq", ()
    if len(deqs) > 1:
        return "value dequeued twice", ()
    if ix.lt(deqs[0], enq[0]):
        return "Deq happens before its Enq", [(deqs[0], enq[0])]
    return None


def _enqdeq_blocker(ix: _Index, x, others):
    """Why x cannot be the witness of M(R_EnqDeq) in the projection on x and
    ``others``; None when it can."""
    enq, deqs = ix.of("Enq", x), ix.of("Deq", x)
    if not enq:
        return "no Enq", None
    if len(deqs) != 1:
        return ("no Deq", None) if not deqs else ("dequeued twice", None)
    e, d = enq[0], deqs[0]
    if ix.lt(d, e):
        return "Deq before Enq", (d, e)
    for p in _ops_of_values(ix, others):
        if ix.lt(p, e):
            return "an operation precedes its Enq", (p, e)
        if ix.h.label[p].method == "Deq" and ix.lt(p, d):
            return "another Deq precedes its Deq", (p, d)
    return None


def w_holds(h: History, d1, d2) -> bool:
    """True when d1 can witness M(R_EnqDeq) in the projection on {d1, d2}."""
    ix = _Index(h)
    for d in (d1, d2):
        if not ix.of("Enq", d) and not ix.of("Deq", d):
            raise ValueAbsent(d)
    return _enqdeq_blocker(ix, d1, [] if d1 == d2 else [d2]) is None


def queue_enqdeq_check(h: History) -> Verdict:
    _require_diff(h, builtin("queue"))
    sub = h.restrict(o for o in h.ops if h.label[o].method != "DeqEmpty")
    ix = _Index(sub)
    values = sorted(sub.dom())
    for v in values:
        why = _enqdeq_single(ix, v)
        if why is not None:
            return _bad("R_EnqDeq", [v], why[1], reason=why[0])
    # a projection falls under R_EnqDeq only if it contains a Deq
    return _pair_check_with_deq(sub, values, set(ix.values("Deq")))


def _pair_check_with_deq(h, values, has_deq):
    ix = _Index(h)
    for x, y in combinations(values, 2):
        if x not in has_deq and y not in has_deq:
            continue
        bx = _enqdeq_blocker(ix, x, [y])
        by = bx and _enqdeq_blocker(ix, y, [x])
        if bx and by:
            ev = [e for e in (bx[1], by[1]) if e]
            return _bad("R_EnqDeq", [x, y], ev, reason=f"{x}: {bx[0]}; {y}: {by[0]}")
    return OK


def _register_single(ix: _Index, v):
    w, reads = ix.of("Write", v), ix.of("Read", v)
    if not w:
        return "Read without Write", ()
    for r in reads:
        if ix.lt(r, w[0]):
            return "Read happens before its Write", [(r, w[0])]
    return None


def _register_blocker(ix: _Index, x, others):
    w = ix.of("Write", x)
    if not w:
        return "no Write", None
    reads = ix.of("Read", x)
    for r in reads:
        if ix.lt(r, w[0]):
            return "Read before Write", (r, w[0])
    for p in _ops_of_values(ix, others):
        if ix.lt(p, w[0]):
            return "an operation precedes its Write", (p, w[0])
        for r in reads:
            if ix.lt(p, r):
                return "another value separates Write and Read", (p, r)
    return None


def register_check(h: History) -> Verdict:
    _require_diff(h, builtin("register"))
    return _pair_check(h, "R_WR", sorted(h.dom()), _register_single, _register_blocker)


def _mutex_single(ix: _Index, v):
    lock, unl = ix.of("Lock", v), ix.of("Unlock", v)
    if not unl:
        return None
    if not lock:
        return "Unlock without Lock", ()
    if len(unl) > 1:
        return "unlocked twice", ()
    if ix.lt(unl[0], lock[0]):
        return "Unlock happens before its Lock", [(unl[0], lock[0])]
    return None


def _mutex_blocker(ix: _Index, x, others):
    lock, unl = ix.of("Lock", x), ix.of("Unlock", x)
    if not lock:
        return "no Lock", None
    if len(unl) != 1:
        return ("never unlocked", None) if not unl else ("unlocked twice", None)
    lk, u = lock[0], unl[0]
    if ix.lt(u, lk):
        return "Unlock before Lock", (u, lk)
    for p in _ops_of_values(ix, others):
        if ix.lt(p, lk):
            return "an operation precedes its Lock", (p, lk)
        if ix.lt(p, u):
            return "another value enters the critical section", (p, u)
    return None


def mutex_lock_check(h: History) -> Verdict:
    """Projections without Unlock must hold a single Lock."""
    _require_diff(h, builtin("mutex"))
    ix = _Index(h)
    held = [v for v in sorted(h.dom()) if not ix.of("Unlock", v)]
    if len(held) >= 2:
        return _bad("R_Lock", held[:2], reason="two locks never released")
    return OK


def mutex_lu_check(h: History) -> Verdict:
    _require_diff(h, builtin("mutex"))
    ix = _Index(h)
    values = sorted(h.dom())
    has_unlock = {v for v in values if ix.of("Unlock", v)}
    for v in values:
        why = _mutex_single(ix, v)
        if why is not None:
            return _bad("R_LU", [v], why[1], reason=why[0])
    for x, y in combinations(values, 2):
        if x not in has_unlock and y not in has_unlock:
            continue
        bx = _mutex_blocker(ix, x, [y])
        by = bx and _mutex_blocker(ix, y, [x])
        if bx and by:
            ev = [e for e in (bx[1], by[1]) if e]
            return _bad("R_LU", [x, y], ev, reason=f"{x}: {bx[0]}; {y}: {by[0]}")
    return OK


def mutex_check(h: History) -> Verdict:
    v = mutex_lock_check(h)
    return v if not v.linearizable else mutex_lu_check(h)


# ---------------------------------------------------------------------------
# stack: covered pops and covered unmatched pushes


def _pushpop_graph(ix: _Index, x, others) -> tuple[Optional[tuple], Optional[LeftRightGraph]]:
    """Can x witness M(R_PushPop) in the projection on {x} and ``others``?

    Returns (blocking edge, None) when an operation precedes Push(x), or
    (None, graph) where the graph has a cycle through Pop(x) iff no split of
    the other pairs around Pop(x) exists. Both segments must keep each value
    whole, so a value is left when either of its operations is.
    """
    push, pop = ix.of("Push", x)[0], ix.of("Pop", x)[0]
    for p in _ops_of_values(ix, others):
        if ix.lt(p, push):
            return (p, push), None
    g = LeftRightGraph(pop, tuple(others))
    ops = {d: (ix.of("Push", d)[0], ix.of("Pop", d)[0]) for d in others}
    for d in others:
        for p in ops[d]:
            if ix.lt(p, pop):
                g.add(d, PIVOT, (p, pop))
            if ix.lt(pop, p):
                g.add(PIVOT, d, (pop, p))
    for d1 in others:
        for d2 in others:
            if d1 != d2:
                for p1 in ops[d1]:
                    for p2 in ops[d2]:
                        if ix.lt(p1, p2):
                            g.add(d1, d2, (p1, p2))
    return None, g


def _gfp(candidates, infeasible):
    """Greatest set U of candidates in which every member is infeasible
    relative to U. Infeasibility must be monotone in U."""
    U = list(candidates)
    changed = True
    while changed and U:
        changed = False
        keep = [x for x in U if infeasible(x, U)]
        if len(keep) != len(U):
            U, changed = keep, True
    return U


def stack_pushpop_check(h: History) -> Verdict:
    _require_diff(h, builtin("stack"))
    sub = h.restrict(o for o in h.ops if h.label[o].method != "PopEmpty")
    ix = _Index(sub)
    clean = []
    for v in sorted(sub.dom()):
        push, pops = ix.of("Push", v), ix.of("Pop", v)
        if not pops:
            continue
        if not push:
            return _bad("R_PushPop", [v], reason="Pop without Push")
        if len(pops) > 1:
            return _bad("R_PushPop", [v], reason="value popped twice")
        if ix.lt(pops[0], push[0]):
            return _bad("R_PushPop", [v], [(pops[0], push[0])], reason="Pop happens before its Push")
        clean.append(v)

    def infeasible(x, U):
        edge, g = _pushpop_graph(ix, x, [d for d in U if d != x])
        return edge is not None or g.cycle() is not None

    U = _gfp(clean, infeasible)
    if not U:
        return OK
    # report the witness whose Push is earliest: it is blocked by a cover
    for d in sorted(U, key=lambda v: (ix.npred[ix.of("Push", v)[0]], v)):
        edge, g = _pushpop_graph(ix, d, [v for v in U if v != d])
        if edge is None:
            path = g.cycle()
            vals = [n for n in path if n != PIVOT]
            return _bad("R_PushPop", [d] + list(reversed(vals)), g.evidence(path),
                        cycle=[g.pivot if n == PIVOT else n for n in path[:-1]],
                        reason=f"Pop({d}) is covered")
    d = U[0]
    edge, _ = _pushpop_graph(ix, d, [v for v in U if v != d])
    return _bad("R_PushPop", U, [edge], reason="no value can be pushed first")


def stack_push_check(h: History) -> Verdict:
    _require_diff(h, builtin("stack"))
    sub = h.restrict(o for o in h.ops if h.label[o].method != "PopEmpty")
    ix = _Index(sub)
    pushed = ix.values("Push")
    unmatched = [v for v in pushed if not ix.of("Pop", v)]
    matched = [v for v in pushed if ix.of("Pop", v)]

    def graph(x, U):
        return _insert_remove_graph(ix, ix.of("Push", x)[0], "Push", "Pop",
                                    sorted(matched + [u for u in U if u != x]))

    U = _gfp(unmatched, lambda x, U: graph(x, U).cycle() is not None)
    if not U:
        return OK
    x = min(U, key=lambda v: (ix.npred[ix.of("Push", v)[0]], v))
    g = graph(x, U)
    path = g.cycle()
    vals = [n for n in path if n != PIVOT]
    return _bad("R_Push", [x] + list(reversed(vals)), g.evidence(path),
                cycle=[g.pivot if n == PIVOT else n for n in path[:-1]],
                reason=f"unmatched Push({x}) is covered")


# ---------------------------------------------------------------------------
# dispatch


RULE_CHECKS = {
    "queue": (("R_EnqDeq", queue_enqdeq_check), ("R_DeqEmpty", queue_deqempty_check)),
    "stack": (("R_PushPop", stack_pushpop_check), ("R_Push", stack_push_check),
              ("R_PopEmpty", stack_popempty_check)),
    "register": (("R_WR", register_check),),
    "mutex": (("R_Lock", mutex_lock_check), ("R_LU", mutex_lu_check)),
}


def rule_check(h: History, S: Specification, rule: str) -> Verdict:
    """Violations attributed to one rule only."""
    for name, fn in RULE_CHECKS[S.name]:
        if name == rule:
            return fn(h)
    return OK


def check(h: History, S: Specification) -> Verdict:
    if isinstance(S, str):
        S = builtin(S)
    _require_diff(h, S)
    for _, fn in RULE_CHECKS[S.name]:
        v = fn(h)
        if not v.linearizable:
            return v
    return OK
