"""Executions, histories, projections and renamings.

Argumentless methods (DeqEmpty, PopEmpty) carry ``None`` as their value.
``None`` is never part of ``dom(h)`` and is left untouched by renamings.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations
from typing import Callable, Iterable, Iterator, Mapping, Optional, Union

CALL = "call"
RET = "ret"

Value = Optional[int]


class TraceError(ValueError):
    pass


class ReturnWithoutCall(TraceError):
    pass


class DuplicateOp(TraceError):
    pass


class IncompleteExecution(TraceError):
    pass


@dataclass(frozen=True, order=True)
class MethodEvent:
    method: str
    value: Value = None

    def __str__(self) -> str:
        return self.method if self.value is None else f"{self.method}({self.value})"


@dataclass(frozen=True)
class SequentialExecution:
    events: tuple[MethodEvent, ...] = ()

    def __len__(self) -> int:
        return len(self.events)

    def __iter__(self):
        return iter(self.events)

    def __add__(self, other: "SequentialExecution") -> "SequentialExecution":
        return SequentialExecution(self.events + tuple(other.events))

    def __str__(self) -> str:
        return "·".join(map(str, self.events)) or "ε"


def seq(*items) -> SequentialExecution:
    """Build a sequential execution from ``("Enq", 1)`` pairs or bare method names."""
    out = []
    for it in items:
        if isinstance(it, MethodEvent):
            out.append(it)
        elif isinstance(it, str):
            out.append(MethodEvent(it))
        else:
            out.append(MethodEvent(*it))
    return SequentialExecution(tuple(out))


@dataclass(frozen=True)
class Action:
    kind: str
    method: str
    value: Value
    op: str

    @property
    def event(self) -> MethodEvent:
        return MethodEvent(self.method, self.value)

    def __str__(self) -> str:
        v = "" if self.value is None else f" {self.value}"
        return f"{self.kind} {self.method}{v} {self.op}"


def call(method: str, value: Value, op: str) -> Action:
    return Action(CALL, method, value, op)


def ret(method: str, value: Value, op: str) -> Action:
    return Action(RET, method, value, op)


@dataclass(frozen=True)
class Execution:
    actions: tuple[Action, ...] = ()

    def __len__(self) -> int:
        return len(self.actions)

    def __iter__(self):
        return iter(self.actions)

    def ops(self) -> list[str]:
        return [a.op for a in self.actions if a.kind == CALL]

    def pending(self) -> list[str]:
        done = {a.op for a in self.actions if a.kind == RET}
        return [o for o in self.ops() if o not in done]

    def is_complete(self) -> bool:
        return not self.pending()


def validate_execution(raw: Iterable[Action]) -> Execution:
    calls: dict[str, Action] = {}
    returned: set[str] = set()
    actions = tuple(raw)
    for i, a in enumerate(actions):
        if a.kind == CALL:
            if a.op in calls:
                raise DuplicateOp(f"action {i}: op {a.op!r} called twice")
            calls[a.op] = a
        elif a.kind == RET:
            if a.op in returned:
                raise DuplicateOp(f"action {i}: op {a.op!r} returned twice")
            c = calls.get(a.op)
            if c is None or (c.method, c.value) != (a.method, a.value):
                raise ReturnWithoutCall(f"action {i}: {a} has no matching earlier call")
            returned.add(a.op)
        else:
            raise TraceError(f"action {i}: unknown kind {a.kind!r}")
    return Execution(actions)


def complete(e: Execution) -> Execution:
    pending = e.pending()
    if not pending:
        return e
    by_op = {a.op: a for a in e.actions if a.kind == CALL}
    tail = tuple(ret(by_op[o].method, by_op[o].value, o) for o in pending)
    return Execution(e.actions + tail)


@dataclass(frozen=True)
class History:
    """Labeled strict partial order over operation identifiers.

    ``ops`` keeps the order of first appearance (call order for histories
    built from executions).
    """

    ops: tuple[str, ...]
    label: Mapping[str, MethodEvent]
    order: frozenset = field(default_factory=frozenset)

    def before(self, o1: str, o2: str) -> bool:
        return (o1, o2) in self.order

    def dom(self) -> set[int]:
        return {ev.value for ev in self.label.values() if ev.value is not None}

    def ops_of(self, method: str, value: Value = None, any_value: bool = False) -> list[str]:
        return [o for o in self.ops
                if self.label[o].method == method and (any_value or self.label[o].value == value)]

    def methods(self) -> set[str]:
        return {ev.method for ev in self.label.values()}

    def __len__(self) -> int:
        return len(self.ops)

    def restrict(self, keep: Iterable[str]) -> "History":
        keep = set(keep)
        ops = tuple(o for o in self.ops if o in keep)
        return History(ops, {o: self.label[o] for o in ops},
                       frozenset(p for p in self.order if p[0] in keep and p[1] in keep))

    def __str__(self) -> str:
        lab = ", ".join(f"{o}:{self.label[o]}" for o in self.ops)
        rel = ", ".join(f"{a}<{b}" for a, b in sorted(self.order))
        return f"History[{lab} | {rel}]"

    @classmethod
    def from_intervals(cls, spans: Mapping[str, tuple[MethodEvent, float, float]]) -> "History":
        """``spans`` maps op -> (event, call_time, return_time)."""
        ops = tuple(sorted(spans, key=lambda o: (spans[o][1], o)))
        order = frozenset((a, b) for a in ops for b in ops
                          if a != b and spans[a][2] < spans[b][1])
        return cls(ops, {o: spans[o][0] for o in ops}, order)


def history_of(e: Execution) -> History:
    if not e.is_complete():
        raise IncompleteExecution(f"pending operations: {e.pending()}")
    call_at: dict[str, int] = {}
    ret_at: dict[str, int] = {}
    label: dict[str, MethodEvent] = {}
    for i, a in enumerate(e.actions):
        if a.kind == CALL:
            call_at[a.op] = i
            label[a.op] = a.event
        else:
            ret_at[a.op] = i
    ops = tuple(sorted(call_at, key=call_at.__getitem__))
    order = frozenset((a, b) for a in ops for b in ops if ret_at[a] < call_at[b])
    return History(ops, label, order)


Projectable = Union[SequentialExecution, Execution, History]


def project(x: Projectable, D: Iterable[Value]) -> Projectable:
    D = set(D)
    if isinstance(x, SequentialExecution):
        return SequentialExecution(tuple(ev for ev in x.events if ev.value in D))
    if isinstance(x, Execution):
        return Execution(tuple(a for a in x.actions if a.value in D))
    return x.restrict(o for o in x.ops if x.label[o].value in D)


def remove_value(x: Projectable, v: Value) -> Projectable:
    if isinstance(x, SequentialExecution):
        return SequentialExecution(tuple(ev for ev in x.events if ev.value != v))
    if isinstance(x, Execution):
        return Execution(tuple(a for a in x.actions if a.value != v))
    return x.restrict(o for o in x.ops if x.label[o].value != v)


def dom(x: Projectable) -> set[int]:
    if isinstance(x, History):
        return x.dom()
    items = x.events if isinstance(x, SequentialExecution) else x.actions
    return {it.value for it in items if it.value is not None}


Renaming = Union[Mapping[int, int], Callable[[int], int]]


def _rename_fn(r: Renaming) -> Callable[[Value], Value]:
    if callable(r):
        f = r
    else:
        m = dict(r)
        f = lambda v: m.get(v, v)  # noqa: E731
    return lambda v: None if v is None else f(v)


def rename(x, r: Renaming):
    f = _rename_fn(r)
    if isinstance(x, SequentialExecution):
        return SequentialExecution(tuple(MethodEvent(ev.method, f(ev.value)) for ev in x.events))
    if isinstance(x, Execution):
        return Execution(tuple(Action(a.kind, a.method, f(a.value), a.op) for a in x.actions))
    if isinstance(x, History):
        lab = {o: MethodEvent(ev.method, f(ev.value)) for o, ev in x.label.items()}
        return History(x.ops, lab, x.order)
    raise TypeError(type(x))


def is_differentiated(x, input_methods: Iterable[str]) -> bool:
    inputs = set(input_methods)
    if isinstance(x, History):
        events = [x.label[o] for o in x.ops]
    elif isinstance(x, Execution):
        events = [a.event for a in x.actions if a.kind == CALL]
    else:
        events = list(x.events)
    seen = set()
    for ev in events:
        if ev.method in inputs:
            if ev in seen:
                return False
            seen.add(ev)
    return True


def is_interval_order(h: History) -> bool:
    ops = h.ops
    for o in ops:
        if h.before(o, o):
            return False
    for a in ops:
        for b in ops:
            if not h.before(a, b):
                continue
            for c in ops:
                if h.before(b, c) and not h.before(a, c):
                    return False
    pairs = list(h.order)
    for (o1, o2) in pairs:
        for (o3, o4) in pairs:
            if len({o1, o2, o3, o4}) < 4:
                continue
            if not (h.before(o1, o4) or h.before(o3, o2)):
                return False
    return True


def value_projections(h: History, k: int) -> Iterator[History]:
    values = sorted(h.dom())
    for size in range(0, min(k, len(values)) + 1):
        for D in combinations(values, size):
            yield project(h, D)
