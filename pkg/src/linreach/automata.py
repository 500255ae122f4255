"""Violation automata over call/return actions with data values {1, 2, 3}.

Every automaton is a finite union of branches. A branch is the synchronous
product of small deterministic components (ordering patterns, occurrence
guards, bounded counters); ``build`` explores the product over the finite
alphabet and returns an explicit transition table.

Renaming convention used by ``match_execution``: the candidate witness (a
data value, or an argumentless operation) is renamed to 2, a set of helper
values to 1, and everything else to 3.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations
from typing import Iterable, Optional

from .core import CALL, RET, Action, Execution, is_differentiated
from .rules import NotDifferentiated, Specification, builtin

VALUES = (1, 2, 3)
DEFAULT_BOUND = 3


class ValueOutOfRange(ValueError):
    pass


Label = tuple  # (kind, method, value)


def lab(kind: str, method: str, value: int) -> Label:
    return (kind, method, value)


# ---------------------------------------------------------------------------
# components: each has ``init`` and ``step(state, label) -> state | None``
# (None kills the branch) and ``final(state)``.


class Component:
    init = 0

    def step(self, s, a):
        return s

    def final(self, s) -> bool:
        return True


@dataclass(frozen=True)
class AtMostOnce(Component):
    labels: frozenset
    init = 0

    def step(self, s, a):
        if a in self.labels:
            return None if s else 1
        return s


@dataclass(frozen=True)
class Never(Component):
    labels: frozenset

    def step(self, s, a):
        return None if a in self.labels else s


@dataclass(frozen=True)
class Occurs(Component):
    labels: frozenset
    count: int = 1
    init = 0

    def step(self, s, a):
        return min(self.count, s + 1) if a in self.labels else s

    def final(self, s) -> bool:
        return s >= self.count


@dataclass(frozen=True)
class Absent(Component):
    """Accepts only words without any of ``labels`` (checked at the end)."""
    labels: frozenset
    init = 0

    def step(self, s, a):
        return 1 if a in self.labels else s

    def final(self, s) -> bool:
        return s == 0


@dataclass(frozen=True)
class FirstBefore(Component):
    """Some action of ``first`` occurs before every action of ``then``."""
    first: frozenset
    then: frozenset
    init = 0

    def step(self, s, a):
        if s == 0 and a in self.first:
            return 1
        if s == 0 and a in self.then:
            return None
        return s

    def final(self, s) -> bool:
        return s == 1


@dataclass(frozen=True)
class Chain(Component):
    """The labels of ``steps`` occur as a subsequence, and no ``avoid`` label
    occurs before the chain is complete."""
    steps: tuple
    avoid: frozenset = frozenset()
    init = 0

    def step(self, s, a):
        if s == len(self.steps):
            return s
        if a in self.steps[s]:
            return s + 1
        if a in self.avoid:
            return None
        return s

    def final(self, s) -> bool:
        return s == len(self.steps)


@dataclass(frozen=True)
class Balance(Component):
    """Counter ``#plus - #minus`` kept within [-bound, bound]; final iff 0."""
    plus: frozenset
    minus: frozenset
    bound: int = DEFAULT_BOUND
    init = 0

    def step(self, s, a):
        if a in self.plus:
            s += 1
        elif a in self.minus:
            s -= 1
        return s if -self.bound <= s <= self.bound else None

    def final(self, s) -> bool:
        return s == 0


@dataclass(frozen=True)
class Window(Component):
    """Bounded counter ``p = #up - #down`` that must stay >= 1 for the whole
    window. The window opens once every label in ``opens`` has been seen and
    closes at ``close``; the component is final once the window closed.

    With ``up`` the insert returns and ``down`` the removal calls of the
    helper values, p >= 1 at a point means some helper value has been
    inserted and not yet removed there, so no empty state can be placed
    inside the window.
    """
    up: frozenset
    down: frozenset
    opens: tuple
    close: frozenset
    bound: int = DEFAULT_BOUND
    init = (0, 0)  # (opened-bitmask or phase, p)

    def step(self, s, a):
        mask, p = s
        full = (1 << len(self.opens)) - 1
        if mask == -1:
            return s
        if a in self.up:
            p += 1
        elif a in self.down:
            p -= 1
        if not -self.bound <= p <= self.bound:
            return None
        if mask == full:
            if a in self.close:
                return (-1, 0)
            return (mask, p) if p >= 1 else None
        if a in self.close:
            return None
        for i, opener in enumerate(self.opens):
            if a in opener:
                mask |= 1 << i
        if mask == full and p < 1:
            return None
        return (mask, p)

    def final(self, s) -> bool:
        return s[0] == -1


# ---------------------------------------------------------------------------
# explicit automata


WILD = ("*", "*", "*")


@dataclass(frozen=True)
class ViolationAutomaton:
    name: str
    alphabet: tuple
    states: tuple
    initial: frozenset
    accepting: frozenset
    delta: dict = field(hash=False, compare=False)  # (state, label) -> frozenset
    branches: tuple = field(default=(), hash=False, compare=False, repr=False)

    def step(self, current: frozenset, a: Label) -> frozenset:
        out = set()
        for s in current:
            out |= self.delta.get((s, a), frozenset())
            out |= self.delta.get((s, WILD), frozenset())
        return frozenset(out)

    def listing(self) -> list[tuple]:
        rows = []
        for (s, a), targets in self.delta.items():
            for t in sorted(targets):
                rows.append((s, a, t))
        rows.sort(key=lambda r: (r[0], str(r[1]), r[2]))
        return rows

    def __len__(self) -> int:
        return len(self.states)


def _alphabet(methods: Iterable[str]) -> tuple:
    return tuple(lab(k, m, v) for m in sorted(methods) for k in (CALL, RET) for v in VALUES)


def from_branches(name: str, methods, branches: list[tuple[Component, ...]]) -> ViolationAutomaton:
    """Explore the product of each branch and number the reachable states.

    State 0 is never used; a branch that reaches a state where every
    component is final and no component can still fail keeps its state
    (acceptance is checked at the end of the word).
    """
    alphabet = _alphabet(methods)
    ids: dict = {}
    delta: dict = {}
    initial, accepting = set(), set()
    for bi, comps in enumerate(branches):
        start = (bi, tuple(c.init for c in comps))
        todo = [start]
        ids.setdefault(start, len(ids))
        initial.add(ids[start])
        while todo:
            st = todo.pop()
            sid = ids[st]
            if all(c.final(x) for c, x in zip(comps, st[1])):
                accepting.add(sid)
            for a in alphabet:
                nxt = []
                for c, x in zip(comps, st[1]):
                    y = c.step(x, a)
                    if y is None:
                        break
                    nxt.append(y)
                else:
                    t = (bi, tuple(nxt))
                    if t not in ids:
                        ids[t] = len(ids)
                        todo.append(t)
                    delta.setdefault((sid, a), set()).add(ids[t])
    delta = {k: frozenset(v) for k, v in delta.items()}
    return ViolationAutomaton(name, alphabet, tuple(range(len(ids))), frozenset(initial),
                              frozenset(accepting), delta, tuple(branches))


def _norm_value(v) -> int:
    if v is None:
        return 3
    if v not in VALUES:
        raise ValueOutOfRange(f"value {v} outside {{1, 2, 3}}")
    return v


def accepts(A: ViolationAutomaton, e: Execution) -> bool:
    cur = A.initial
    for act in e.actions:
        cur = A.step(cur, lab(act.kind, act.method, _norm_value(act.value)))
        if not cur:
            return False
    return bool(cur & A.accepting)


def union(As: list[ViolationAutomaton], name: str = "union") -> ViolationAutomaton:
    """Disjoint union; states are renumbered with per-automaton offsets."""
    alphabet = tuple(sorted({a for A in As for a in A.alphabet}))
    delta, initial, accepting, offset, branches = {}, set(), set(), 0, []
    for A in As:
        for (s, a), ts in A.delta.items():
            delta[(s + offset, a)] = frozenset(t + offset for t in ts)
        initial |= {s + offset for s in A.initial}
        accepting |= {s + offset for s in A.accepting}
        branches += list(A.branches)
        offset += len(A.states)
    return ViolationAutomaton(name, alphabet, tuple(range(offset)), frozenset(initial),
                              frozenset(accepting), delta, tuple(branches))


# ---------------------------------------------------------------------------
# rule automata


def _L(kind, method, *values) -> frozenset:
    return frozenset(lab(kind, method, v) for v in values)


def _any(value, methods) -> frozenset:
    return frozenset(lab(k, m, value) for m in methods for k in (CALL, RET))


def _unmatched_or_early_removal(ins, rem):
    """A removal of value 1 returns before any insert of 1 is called."""
    return (FirstBefore(_L(RET, rem, 1), _L(CALL, ins, 1)),)


def _double_removal(ins, rem):
    """Two removals of 1 return while at most one insert of 1 exists."""
    return (Occurs(_L(RET, rem, 1), 2), AtMostOnce(_L(CALL, ins, 1)))


def _enqdeq_branches(bound):
    fifo = (Chain((_L(RET, "Enq", 1), _L(CALL, "Enq", 2), _L(RET, "Deq", 2)),
                  avoid=_L(CALL, "Deq", 1)),
            AtMostOnce(_L(CALL, "Enq", 1)), AtMostOnce(_L(CALL, "Enq", 2)))
    return [_unmatched_or_early_removal("Enq", "Deq"), _double_removal("Enq", "Deq"), fifo]


def _empty_branches(ins, rem, empty, bound):
    """The empty removal ``empty(2)`` is covered by the values renamed to 1."""
    return [(AtMostOnce(_L(CALL, empty, 2)),
             Window(_L(RET, ins, 1), _L(CALL, rem, 1), (_L(CALL, empty, 2),),
                    _L(RET, empty, 2), bound))]


def _pushpop_branches(bound):
    cover = (FirstBefore(_L(RET, "Push", 2), _L(CALL, "Push", 1)),
             AtMostOnce(_L(CALL, "Push", 2)), AtMostOnce(_L(CALL, "Pop", 2)),
             Window(_L(RET, "Push", 1), _L(CALL, "Pop", 1),
                    (_L(CALL, "Pop", 2), _L(CALL, "Push", 2)), _L(RET, "Pop", 2), bound),
             Balance(_L(CALL, "Push", 1), _L(CALL, "Pop", 1), bound))
    return [_unmatched_or_early_removal("Push", "Pop"), _double_removal("Push", "Pop"), cover]


def _push_branches(bound):
    cover = (Never(_L(CALL, "Pop", 2) | _L(RET, "Pop", 2)),
             AtMostOnce(_L(CALL, "Push", 2)),
             Window(_L(RET, "Push", 1), _L(CALL, "Pop", 1), (_L(CALL, "Push", 2),),
                    _L(RET, "Push", 2), bound),
             Balance(_L(CALL, "Push", 1), _L(CALL, "Pop", 1), bound))
    return [cover]


def _register_branches(bound):
    """Read of 1 without an earlier Write of 1, or two values that both have
    another value's operation ahead of their Write or of one of their Reads."""
    branches = [(FirstBefore(_L(RET, "Read", 1), _L(CALL, "Write", 1)),)]
    for ax in ("Write", "Read"):
        for ay in ("Write", "Read"):
            branches.append((
                AtMostOnce(_L(CALL, "Write", 1)), AtMostOnce(_L(CALL, "Write", 2)),
                Occurs(_L(CALL, "Write", 1)), Occurs(_L(CALL, "Write", 2)),
                Chain((_L(RET, "Write", 2) | _L(RET, "Read", 2), _L(CALL, ax, 1))),
                Chain((_L(RET, "Write", 1) | _L(RET, "Read", 1), _L(CALL, ay, 2)))))
    return branches


def _lock_branches(bound):
    return [(Occurs(_L(CALL, "Lock", 1)), Occurs(_L(CALL, "Lock", 2)),
             Absent(_L(CALL, "Unlock", 1, 2)))]


def _lu_branches(bound):
    branches = [_unmatched_or_early_removal("Lock", "Unlock"), _double_removal("Lock", "Unlock")]
    # value 1 is blocked either by never being unlocked or by an operation
    # of value 2 ahead of its Lock or Unlock; value 2 must then be blocked by 1
    any1 = _L(RET, "Lock", 1) | _L(RET, "Unlock", 1)
    any2 = _L(RET, "Lock", 2) | _L(RET, "Unlock", 2)
    guards = (AtMostOnce(_L(CALL, "Lock", 1)), AtMostOnce(_L(CALL, "Lock", 2)),
              AtMostOnce(_L(CALL, "Unlock", 1)), AtMostOnce(_L(CALL, "Unlock", 2)),
              Occurs(_L(CALL, "Lock", 1)), Occurs(_L(CALL, "Lock", 2)))
    for m2 in ("Lock", "Unlock"):
        # 1 never unlocked, 2 is unlocked and blocked by 1
        branches.append(guards + (Absent(_L(CALL, "Unlock", 1)), Occurs(_L(CALL, "Unlock", 2)),
                                  Chain((any1, _L(CALL, m2, 2)))))
        for m1 in ("Lock", "Unlock"):
            branches.append(guards + (Occurs(_L(CALL, "Unlock", 1)), Occurs(_L(CALL, "Unlock", 2)),
                                      Chain((any2, _L(CALL, m1, 1))),
                                      Chain((any1, _L(CALL, m2, 2)))))
    return branches


_BUILDERS = {
    "R_EnqDeq": ("queue", _enqdeq_branches),
    "R_DeqEmpty": ("queue", lambda b: _empty_branches("Enq", "Deq", "DeqEmpty", b)),
    "R_PushPop": ("stack", _pushpop_branches),
    "R_Push": ("stack", _push_branches),
    "R_PopEmpty": ("stack", lambda b: _empty_branches("Push", "Pop", "PopEmpty", b)),
    "R_WR": ("register", _register_branches),
    "R_Lock": ("mutex", _lock_branches),
    "R_LU": ("mutex", _lu_branches),
}

AUTOMATON_RULES = tuple(_BUILDERS)
_CACHE: dict = {}


def build(rule: str, bound: int = DEFAULT_BOUND) -> ViolationAutomaton:
    """Violation automaton for one rule. ``bound`` caps the counters."""
    key = (rule, bound)
    if key not in _CACHE:
        if rule not in _BUILDERS:
            raise KeyError(f"no automaton for rule {rule!r}; expected one of {AUTOMATON_RULES}")
        spec, fn = _BUILDERS[rule]
        _CACHE[key] = from_branches(rule, builtin(spec).methods, fn(bound))
    return _CACHE[key]


def rules_with_automata(S: Specification) -> list[str]:
    return [r.name for r in S.rules if r.name in _BUILDERS]


def for_spec(S: Specification, bound: int = DEFAULT_BOUND) -> ViolationAutomaton:
    if isinstance(S, str):
        S = builtin(S)
    return union([build(r, bound) for r in rules_with_automata(S)], name=S.name)


# ---------------------------------------------------------------------------
# matching concrete executions up to renaming


def rename_execution(e: Execution, r: dict) -> Execution:
    """Apply a renaming into {1, 2, 3}. Keys are data values, or ``("op", id)``
    for argumentless operations; anything unmapped goes to 3."""
    out = []
    for a in e.actions:
        key = ("op", a.op) if a.value is None else a.value
        out.append(Action(a.kind, a.method, r.get(key, 3), a.op))
    return Execution(tuple(out))


def canonical_renamings(e: Execution, max_helpers: Optional[int] = None):
    """Candidates for 2 in first-occurrence order (then no candidate), and
    for each, helper sets for 1 in increasing size."""
    keys = []
    for a in e.actions:
        key = ("op", a.op) if a.value is None else a.value
        if key not in keys:
            keys.append(key)
    values = [k for k in keys if not isinstance(k, tuple)]
    for cand in keys + [None]:
        pool = [v for v in values if v != cand]
        top = len(pool) if max_helpers is None else min(max_helpers, len(pool))
        for size in range(top + 1):
            for helpers in combinations(pool, size):
                r = {h: 1 for h in helpers}
                if cand is not None:
                    r[cand] = 2
                yield r


def match_execution(A: ViolationAutomaton, e: Execution, S: Optional[Specification] = None,
                    max_helpers: Optional[int] = None) -> Optional[dict]:
    if S is not None and not is_differentiated(e, S.input_methods):
        raise NotDifferentiated("execution is not differentiated")
    for r in canonical_renamings(e, max_helpers):
        if accepts(A, rename_execution(e, r)):
            return r
    return None


def emit(A: ViolationAutomaton) -> str:
    lines = [f"# automaton {A.name}: {len(A.states)} states",
             "initial " + " ".join(map(str, sorted(A.initial))),
             "accepting " + " ".join(map(str, sorted(A.accepting)))]
    for s, a, t in A.listing():
        label = "*" if a == WILD else f"{a[0]} {a[1]}({a[2]})"
        lines.append(f"{s}\t{label}\t{t}")
    return "\n".join(lines) + "\n"
