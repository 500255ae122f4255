"""Petri-net image of a model and backward coverability.

Each token in a thread place is one thread sitting at that local state,
so the number of threads is unbounded unless the net is built with a fixed
initial population. Shared variables and the violation automaton are
one-token place families.
"""
from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from itertools import combinations, combinations_with_replacement, product
from typing import Optional

from ..automata import ViolationAutomaton
from .model import Local, ModelError, ProgramModel, run_edge
from .reach import Step, automaton_moves

DEFAULT_MAX_BASIS = 200_000


class BasisSizeExceeded(RuntimeError):
    pass


class InvariantBroken(AssertionError):
    pass


def _ms(d) -> tuple:
    """Multiset as a tuple of (place, count) with count > 0."""
    return tuple((p, c) for p, c in dict(d).items() if c > 0)


@dataclass(frozen=True)
class Transition:
    consume: tuple
    produce: tuple
    label: object = None      # ("spawn",) or (edge index, actions)

    def enabled(self, marking: Counter) -> bool:
        return all(marking[p] >= c for p, c in self.consume)

    def fire(self, marking: Counter) -> Counter:
        if not self.enabled(marking):
            raise ValueError("transition not enabled")
        m = Counter(marking)
        for p, c in self.consume:
            m[p] -= c
        for p, c in self.produce:
            m[p] += c
        return +m


@dataclass
class PetriNet:
    places: list
    transitions: list
    initial: Counter
    families: dict = field(default_factory=dict)   # name -> places holding exactly one token
    thread_limit: Optional[int] = None
    thread_places: frozenset = frozenset()

    def check_families(self, marking: Counter) -> None:
        for name, places in self.families.items():
            n = sum(marking[p] for p in places)
            if n != 1:
                raise InvariantBroken(f"place family {name} holds {n} tokens")


@dataclass(frozen=True)
class CoverabilityTarget:
    """Union of upward-closed sets, each given by a minimum marking."""
    minima: tuple     # tuple of canonical multisets

    @classmethod
    def single(cls, bound: dict) -> "CoverabilityTarget":
        return cls((tuple(sorted((p, c) for p, c in bound.items() if c > 0)),))

    def covered_by(self, marking: Counter) -> bool:
        return any(all(marking[p] >= c for p, c in m) for m in self.minima)


# ---------------------------------------------------------------------------
# construction


def _local_states(model: ProgramModel) -> set:
    """Thread-local states reachable when shared variables may hold any value."""
    doms = [v.domain for v in model.shared]
    seen = {model.init_local()}
    todo = [model.init_local()]
    while todo:
        loc = todo.pop()
        for e in model.out_edges(loc.control):
            for sh in product(*doms):
                for loc2, *_ in run_edge(model, e, loc, tuple(sh)):
                    if loc2 not in seen:
                        seen.add(loc2)
                        todo.append(loc2)
    return seen


def _useful_states(A: ViolationAutomaton) -> set:
    back = {}
    for (s, _), ts in A.delta.items():
        for t in ts:
            back.setdefault(t, set()).add(s)
    good, todo = set(A.accepting), list(A.accepting)
    while todo:
        t = todo.pop()
        for s in back.get(t, ()):
            if s not in good:
                good.add(s)
                todo.append(s)
    return good


def to_petri_net(model: ProgramModel, A: ViolationAutomaton, threads: Optional[int] = None,
                 unbounded: Optional[bool] = None):
    """Build the net and its target.

    With ``unbounded`` (the default when the model has no thread count) a
    spawn transition creates threads at the initial location and the target
    is any accepting automaton place. With a fixed thread count the initial
    marking holds that many idle threads and the target additionally asks
    for all of them to be back at the initial location with no open call.
    """
    if unbounded is None:
        unbounded = threads is None and model.threads is None
    n = None if unbounded else (threads if threads is not None else model.threads)
    vidx = model.var_index()
    locals_ = sorted(_local_states(model))
    useful = _useful_states(A)
    qs = sorted(useful)

    def T(l):
        return ("T", l.control, l.regs, l.pending)

    def V(name, val):
        return ("V", name, val)

    def Q(q):
        return ("A", q)

    places = [T(l) for l in locals_]
    places += [V(v.name, x) for v in model.shared for x in v.domain]
    places += [Q(q) for q in qs]
    families = {f"var:{v.name}": [V(v.name, x) for x in v.domain] for v in model.shared}
    families["automaton"] = [Q(q) for q in qs]

    transitions = []
    base = model.init_shared()
    for k, e in enumerate(model.edges):
        touched = e.vars()
        doms = [model.var(v).domain for v in touched]
        for loc in locals_:
            if loc.control != e.src:
                continue
            for vals in product(*doms):
                sh = list(base)
                for v, x in zip(touched, vals):
                    sh[vidx[v]] = x
                for loc2, sh2, acts, _ in run_edge(model, e, loc, tuple(sh)):
                    cons = Counter({T(loc): 1})
                    prod = Counter({T(loc2): 1})
                    for v, x in zip(touched, vals):
                        cons[V(v, x)] += 1
                        prod[V(v, sh2[vidx[v]])] += 1
                    if not acts:
                        transitions.append(Transition(_ms(cons), _ms(prod), (k, ())))
                        continue
                    for q in qs:
                        for q2 in automaton_moves(A, q, acts):
                            if q2 not in useful:
                                continue
                            c2, p2 = Counter(cons), Counter(prod)
                            c2[Q(q)] += 1
                            p2[Q(q2)] += 1
                            transitions.append(Transition(_ms(c2), _ms(p2), (k, tuple(acts))))
    init = Counter({V(v.name, v.init): 1 for v in model.shared})
    starts = [q for q in sorted(A.initial) if q in useful]
    if not starts:
        # nothing can be accepted; keep the family invariant with a dead place
        places.append(("A", "dead"))
        families["automaton"] = families["automaton"] + [("A", "dead")]
        init[("A", "dead")] = 1
        return _indexed(places, transitions, init, families, n, ())
    if len(starts) > 1:
        # a fresh start place that branches into the initial states on the first action
        start = ("A", "start")
        places.append(start)
        families["automaton"] = families["automaton"] + [start]
        extra = []
        for t in transitions:
            for (p, c) in t.consume:
                if p[0] == "A" and p[1] in starts:
                    cons = tuple((start if x == p else x, cc) for x, cc in t.consume)
                    extra.append(Transition(cons, t.produce, t.label))
        transitions += extra
        init[start] = 1
    else:
        init[Q(starts[0])] = 1
    idle = [T(l) for l in locals_ if l.control == model.initial and l.pending is None]
    acc = [Q(q) for q in qs if q in A.accepting]
    if len(starts) > 1:
        acc += [("A", "start")] if set(starts) & set(A.accepting) else []
    if unbounded:
        transitions.append(Transition((), _ms({T(model.init_local()): 1}), ("spawn",)))
        minima = tuple(_ms({a: 1}) for a in acc)
    else:
        init[T(model.init_local())] += n
        minima = []
        for a in acc:
            for combo in combinations_with_replacement(idle, n):
                m = Counter(combo)
                m[a] += 1
                minima.append(_ms(m))
        minima = tuple(minima)
    return _indexed(places, transitions, init, families, n, minima)


def _indexed(places, transitions, init, families, n, minima):
    """Replace descriptive place keys by integer indices."""
    index = {p: i for i, p in enumerate(places)}

    def conv(ms):
        return tuple(sorted((index[p], c) for p, c in ms))

    net = PetriNet(list(places),
                   [Transition(conv(t.consume), conv(t.produce), t.label) for t in transitions],
                   Counter({index[p]: c for p, c in init.items()}),
                   {f: [index[p] for p in ps] for f, ps in families.items()}, n,
                   frozenset(i for i, p in enumerate(places) if p[0] == "T"))
    return net, CoverabilityTarget(tuple(conv(m) for m in minima))


# ---------------------------------------------------------------------------
# backward coverability


def _leq(a: tuple, b: dict) -> bool:
    return all(b.get(p, 0) >= c for p, c in a)


def is_antichain(basis) -> bool:
    items = list(basis)
    for i, a in enumerate(items):
        for j, b in enumerate(items):
            if i != j and _leq(a, dict(b)):
                return False
    return True


class _Basis:
    """Minimal markings, bucketed by the set of one-token family places they
    mention. A marking can only lie below another if its family places are a
    subset of the other's, which keeps each comparison to a few buckets."""

    def __init__(self, family_places):
        self.family_places = set(family_places)
        self.buckets: dict = {}
        self.size = 0

    def key(self, m) -> frozenset:
        return frozenset(p for p, _ in m if p in self.family_places)

    def covers(self, md: dict, key: frozenset) -> bool:
        """Some element is below ``md``."""
        items = sorted(key)
        for r in range(len(items) + 1):
            for sub in combinations(items, r):
                for b in self.buckets.get(frozenset(sub), ()):
                    if _leq(b, md):
                        return True
        return False

    def add(self, m: tuple, key: frozenset) -> int:
        """Insert ``m`` and drop elements above it; returns how many were dropped."""
        dropped = 0
        for k, bucket in self.buckets.items():
            if key <= k:
                above = [b for b in bucket if _leq(m, dict(b))]
                bucket.difference_update(above)
                dropped += len(above)
        self.buckets.setdefault(key, set()).add(m)
        self.size += 1 - dropped
        return dropped

    def __contains__(self, m) -> bool:
        return m in self.buckets.get(self.key(m), ())

    def __iter__(self):
        for bucket in self.buckets.values():
            yield from bucket

    def check_new(self, new: list) -> None:
        """Antichain check of freshly added elements against everything."""
        for m in new:
            if m not in self:
                continue
            md, key = dict(m), self.key(m)
            for k, bucket in self.buckets.items():
                if not (k <= key or key <= k):
                    continue
                for b in bucket:
                    if b != m and (_leq(b, md) or _leq(m, dict(b))):
                        raise InvariantBroken("coverability basis is not an antichain")


def _feasible(m: dict, net: PetriNet, fam_of: dict) -> bool:
    seen = set()
    threads = 0
    for p, c in m.items():
        f = fam_of.get(p)
        if f is not None:
            if c > 1 or f in seen:
                return False
            seen.add(f)
        elif p in net.thread_places:
            threads += c
    return net.thread_limit is None or threads <= net.thread_limit


@dataclass
class CoverResult:
    coverable: bool
    witness: Optional[list] = None      # transitions fired from the initial marking
    iterations: int = 0
    basis_size: int = 0


def coverable(net: PetriNet, target: CoverabilityTarget, max_basis: int = DEFAULT_MAX_BASIS,
              check_antichain: bool = True) -> CoverResult:
    """Backward search from the target's minimal markings.

    The basis of the set of markings that can reach the target is grown
    layer by layer until no new minimal element appears or the initial
    marking covers one of them. Markings that break the one-token families
    (or the thread population of a fixed net) are unreachable and dropped.
    """
    fam_of = {p: f for f, ps in net.families.items() for p in ps}
    basis = _Basis(fam_of)
    automaton = set(net.families.get("automaton", ()))
    by_output: dict = {}      # place -> transitions producing it, automaton moves apart
    moves_into: dict = {}     # automaton place -> transitions producing it
    touches: dict = {}        # transition -> ((family, produced place), ...)
    for t in net.transitions:
        q = next((p for p, _ in t.produce if p in automaton), None)
        if q is not None:
            moves_into.setdefault(q, []).append(t)
        for p, _ in t.produce:
            if q is None or p == q:
                by_output.setdefault(p, []).append(t)
            elif p not in automaton:
                by_output.setdefault(("moving", p), []).append(t)
        touches[id(t)] = tuple((fam_of[p], p) for p, _ in t.produce if p in fam_of)
    producing_nothing = [t for t in net.transitions if not t.produce]
    init = dict(net.initial)

    succ: dict = {}           # marking -> (transition, successor marking)
    frontier = []
    for m in target.minima:
        md = dict(m)
        if not _feasible(md, net, fam_of) or basis.covers(md, basis.key(m)):
            continue
        basis.add(m, basis.key(m))
        frontier.append(m)
    iterations = 0
    while True:
        frontier = [m for m in frontier if m in basis]
        for m in frontier:
            if _leq(m, init):
                return CoverResult(True, _witness(succ, m), iterations, basis.size)
        if not frontier:
            return CoverResult(False, None, iterations, basis.size)
        iterations += 1
        new = []
        for m in frontier:
            if m not in basis:
                continue
            md = dict(m)
            fams = {fam_of[p]: p for p in md if p in fam_of}
            seen = set()
            q = fams.get("automaton")
            if q is not None:
                cands = moves_into.get(q, []) + [t for p in md for t in by_output.get(p, ())]
            else:
                cands = [t for p in md for key in (p, ("moving", p)) for t in by_output.get(key, ())]
            for t in cands + producing_nothing:
                if id(t) in seen:
                    continue
                seen.add(id(t))
                # a touched family must already sit where the transition leaves it
                if any(fams.get(f, p) != p for f, p in touches[id(t)]):
                    continue
                pre = dict(md)
                for p, c in t.produce:
                    if p in pre:
                        pre[p] = max(pre[p] - c, 0)
                for p, c in t.consume:
                    pre[p] = pre.get(p, 0) + c
                pre = {p: c for p, c in pre.items() if c}
                if not _feasible(pre, net, fam_of):
                    continue
                pm = tuple(sorted(pre.items()))
                key = basis.key(pm)
                if basis.covers(pre, key):
                    continue
                basis.add(pm, key)
                succ[pm] = (t, m)
                new.append(pm)
                if basis.size > max_basis:
                    raise BasisSizeExceeded(f"coverability basis exceeded {max_basis} markings")
        if check_antichain:
            basis.check_new(new)
        frontier = new


def _witness(succ: dict, m: tuple) -> list:
    seq = []
    cur = m
    while cur in succ:
        t, cur = succ[cur]
        seq.append(t)
    return seq


# ---------------------------------------------------------------------------
# turning a firing sequence back into an execution


def witness_steps(net: PetriNet, model: ProgramModel, witness: list) -> list[Step]:
    """Simulate the firing sequence with individually named thread tokens,
    checking the one-token families after every firing."""
    marking = Counter(net.initial)
    threads: list = []
    if net.thread_limit is not None:
        threads = [model.init_local()] * net.thread_limit
    steps = []
    for t in witness:
        marking = t.fire(marking)
        net.check_families(marking)
        if t.label == ("spawn",):
            threads.append(model.init_local())
            continue
        k, acts = t.label
        src = next(net.places[p] for p, _ in t.consume if p in net.thread_places)
        dst = next(net.places[p] for p, _ in t.produce if p in net.thread_places)
        who = next(i for i, l in enumerate(threads)
                   if ("T", l.control, l.regs, l.pending) == src)
        threads[who] = Local(dst[1], dst[2], dst[3])
        steps.append(Step(who, k, (), acts))
    return steps


__all__ = ["PetriNet", "Transition", "CoverabilityTarget", "CoverResult", "BasisSizeExceeded",
           "InvariantBroken", "ModelError", "to_petri_net", "coverable", "is_antichain",
           "witness_steps"]
