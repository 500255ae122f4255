"""Inductive rule specifications and the four built-in data structures."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Iterable, Optional, Sequence, Union

from .core import History, MethodEvent, SequentialExecution, is_differentiated


class SpecError(ValueError):
    pass


class ArityMismatch(SpecError):
    pass


class NotDifferentiated(SpecError):
    pass


class UnknownSpecification(SpecError):
    pass


@dataclass(frozen=True)
class Seg:
    index: int

    def __str__(self) -> str:
        return f"u{self.index + 1}"


@dataclass(frozen=True)
class Meth:
    method: str
    star: bool = False

    def __str__(self) -> str:
        return self.method + ("*" if self.star else "")


Atom = Union[Seg, Meth]


@dataclass(frozen=True)
class Guard:
    # alphabet[i] is the allowed method set for segment i (None = unconstrained);
    # matched[i] lists the methods m with "m ⊑0 u_i".
    alphabet: tuple[Optional[frozenset], ...] = ()
    matched: tuple[frozenset, ...] = ()


@dataclass(frozen=True)
class Rule:
    name: str
    arity: int
    guard: Guard
    expr: tuple[Atom, ...]

    def __post_init__(self):
        segs = [a.index for a in self.expr if isinstance(a, Seg)]
        if segs != list(range(self.arity)):
            raise SpecError(f"{self.name}: segments must appear once, in order")
        meths = [a.method for a in self.expr if isinstance(a, Meth)]
        if len(meths) != len(set(meths)):
            raise SpecError(f"{self.name}: a method appears twice in the expression")
        if len(self.guard.alphabet) not in (0, self.arity) or len(self.guard.matched) not in (0, self.arity):
            raise ArityMismatch(f"{self.name}: guard arity differs from rule arity")

    def methods(self) -> set[str]:
        return {a.method for a in self.expr if isinstance(a, Meth)}

    def __str__(self) -> str:
        return self.name


@dataclass(frozen=True)
class Witness:
    """A matching decomposition: value ``x`` (None for argumentless methods),
    the positions consumed by method atoms, and one (start, end) span per atom."""

    value: Optional[int]
    positions: tuple[int, ...]
    spans: tuple[tuple[int, int], ...]

    def segments(self, u: SequentialExecution) -> list[SequentialExecution]:
        return [SequentialExecution(u.events[s:e])
                for (s, e) in self.seg_spans()]

    def seg_spans(self):
        return [sp for sp, is_seg in zip(self.spans, self._seg_mask) if is_seg]

    _seg_mask: tuple[bool, ...] = field(default=(), compare=False, repr=False)


@dataclass(frozen=True)
class Specification:
    name: str
    methods: frozenset
    input_methods: frozenset
    rules: tuple[Rule, ...]
    last_classifier: Callable[[Sequence[MethodEvent]], str]
    _cache: dict = field(default_factory=dict, compare=False, hash=False, repr=False)

    def rule(self, name: str) -> Rule:
        for r in self.rules:
            if r.name == name:
                return r
        raise KeyError(name)

    def index(self, name: str) -> int:
        return [r.name for r in self.rules].index(name)

    def __hash__(self) -> int:
        return hash(self.name)


# ---------------------------------------------------------------------------
# guards and matching


def eval_guard(g: Guard, segments: Sequence[SequentialExecution]) -> bool:
    n = max(len(g.alphabet), len(g.matched))
    if n and len(segments) != n:
        raise ArityMismatch(f"guard over {n} segments applied to {len(segments)}")
    for i, s in enumerate(segments):
        if g.alphabet and g.alphabet[i] is not None and not _in_alphabet(s.events, g.alphabet[i]):
            return False
        if g.matched and not _matched(s.events, g.matched[i]):
            return False
    return True


def _in_alphabet(events, allowed) -> bool:
    return all(ev.method in allowed for ev in events)


def _matched(events, methods) -> bool:
    for i, ev in enumerate(events):
        if ev.method in methods and ev.value is not None:
            if not any(j != i and other.value == ev.value for j, other in enumerate(events)):
                return False
    return True


def _segment_ok(rule: Rule, j: int, events) -> bool:
    g = rule.guard
    if g.alphabet and g.alphabet[j] is not None and not _in_alphabet(events, g.alphabet[j]):
        return False
    if g.matched and not _matched(events, g.matched[j]):
        return False
    return True


def matches_rule(u: SequentialExecution, R: Rule) -> list[Witness]:
    """All decompositions of ``u`` into ``R``'s expression.

    Every event carrying the witness value is consumed by a method atom:
    segments never mention the witness.
    """
    events = u.events
    n = len(events)
    if not R.expr:
        return [Witness(None, (), (), ())] if n == 0 else []
    rule_methods = R.methods()
    candidates: list = []
    for i, ev in enumerate(events):
        if ev.method not in rule_methods:
            continue
        key = ("pos", i) if ev.value is None else ev.value
        if key not in candidates:
            candidates.append(key)

    mask = tuple(isinstance(a, Seg) for a in R.expr)
    out: list[Witness] = []
    for key in candidates:
        if isinstance(key, tuple):
            is_x = [i == key[1] for i in range(n)]
            value = None
        else:
            is_x = [ev.value == key for ev in events]
            value = key
        for spans in _decompose(R, events, is_x, 0, 0):
            positions = tuple(p for (s, e), seg in zip(spans, mask) if not seg for p in range(s, e))
            out.append(Witness(value, positions, tuple(spans), mask))
    return out


def _decompose(R: Rule, events, is_x, ai: int, pos: int):
    n = len(events)
    if ai == len(R.expr):
        if pos == n:
            yield []
        return
    atom = R.expr[ai]
    if isinstance(atom, Seg):
        end = pos
        while True:
            if _segment_ok(R, atom.index, events[pos:end]):
                for rest in _decompose(R, events, is_x, ai + 1, end):
                    yield [(pos, end)] + rest
            if end == n or is_x[end]:
                break
            end += 1
        return
    if atom.star:
        end = pos
        while True:
            for rest in _decompose(R, events, is_x, ai + 1, end):
                yield [(pos, end)] + rest
            if end < n and is_x[end] and events[end].method == atom.method:
                end += 1
            else:
                break
        return
    if pos < n and is_x[pos] and events[pos].method == atom.method:
        for rest in _decompose(R, events, is_x, ai + 1, pos + 1):
            yield [(pos, pos + 1)] + rest


# ---------------------------------------------------------------------------
# membership


def member(u: SequentialExecution, S: Specification, upto: Optional[int] = None):
    """Return ``(ok, derivation)``; derivation lists ``(rule name, witness)``
    in application order. ``upto`` restricts to the rule prefix R_0..R_upto."""
    if not is_differentiated(u, S.input_methods):
        raise NotDifferentiated(str(u))
    limit = len(S.rules) - 1 if upto is None else upto
    d = _derive(S, tuple(u.events), limit)
    return (d is not None), (d or [])


def _derive(S: Specification, events: tuple, limit: int):
    if not events:
        return []
    key = (events, limit)
    cache = S._cache
    if key in cache:
        return cache[key]
    result = None
    u = SequentialExecution(events)
    for j in range(limit + 1):
        rule = S.rules[j]
        if not rule.expr:
            continue
        for w in matches_rule(u, rule):
            taken = set(w.positions)
            rest = tuple(ev for i, ev in enumerate(events) if i not in taken)
            sub = [] if rule.arity == 0 and not rest else (
                None if rule.arity == 0 else _derive(S, rest, j))
            if sub is not None:
                result = sub + [(rule.name, w)]
                break
        if result is not None:
            break
    cache[key] = result
    return result


def in_matchset(u: SequentialExecution, R: Rule) -> bool:
    return bool(matches_rule(u, R))


# ---------------------------------------------------------------------------
# last


def _events(x) -> list[MethodEvent]:
    if isinstance(x, History):
        return [x.label[o] for o in x.ops]
    if isinstance(x, SequentialExecution):
        return list(x.events)
    return list(x)


def last_of(x, S: Specification) -> Rule:
    return S.rule(S.last_classifier(_events(x)))


def _queue_last(events) -> str:
    ms = {ev.method for ev in events}
    if "DeqEmpty" in ms:
        return "R_DeqEmpty"
    if "Deq" in ms:
        return "R_EnqDeq"
    if events:
        return "R_Enq"
    return "R_0"


def _unmatched_push(events) -> bool:
    popped = {ev.value for ev in events if ev.method == "Pop"}
    return any(ev.method == "Push" and ev.value not in popped for ev in events)


def _stack_last(events) -> str:
    ms = {ev.method for ev in events}
    if "PopEmpty" in ms:
        return "R_PopEmpty"
    if _unmatched_push(events):
        return "R_Push"
    if "Pop" in ms:
        return "R_PushPop"
    return "R_0"


def _register_last(events) -> str:
    return "R_WR" if events else "R_0"


def _mutex_last(events) -> str:
    if any(ev.method == "Unlock" for ev in events):
        return "R_LU"
    return "R_Lock" if events else "R_0"


# ---------------------------------------------------------------------------
# built-ins

R0 = Rule("R_0", 0, Guard(), ())


def _fs(*xs) -> frozenset:
    return frozenset(xs)


def _queue() -> Specification:
    rules = (
        R0,
        Rule("R_Enq", 1, Guard((_fs("Enq"),), (_fs(),)), (Seg(0), Meth("Enq"))),
        Rule("R_EnqDeq", 2, Guard((_fs("Enq"), _fs("Enq", "Deq")), (_fs(), _fs())),
             (Meth("Enq"), Seg(0), Meth("Deq"), Seg(1))),
        Rule("R_DeqEmpty", 2, Guard((None, None), (_fs("Enq"), _fs())),
             (Seg(0), Meth("DeqEmpty"), Seg(1))),
    )
    return Specification("queue", _fs("Enq", "Deq", "DeqEmpty"), _fs("Enq"), rules, _queue_last)


def _stack() -> Specification:
    pp = _fs("Push", "Pop")
    rules = (
        R0,
        Rule("R_PushPop", 2, Guard((pp, pp), (_fs("Push"), _fs("Push"))),
             (Meth("Push"), Seg(0), Meth("Pop"), Seg(1))),
        Rule("R_Push", 2, Guard((pp, pp), (_fs("Push"), _fs())),
             (Seg(0), Meth("Push"), Seg(1))),
        Rule("R_PopEmpty", 2, Guard((None, None), (_fs("Push"), _fs())),
             (Seg(0), Meth("PopEmpty"), Seg(1))),
    )
    return Specification("stack", _fs("Push", "Pop", "PopEmpty"), _fs("Push"), rules, _stack_last)


def _register() -> Specification:
    rules = (
        R0,
        Rule("R_WR", 1, Guard((None,), (_fs(),)), (Meth("Write"), Meth("Read", star=True), Seg(0))),
    )
    return Specification("register", _fs("Write", "Read"), _fs("Write"), rules, _register_last)


def _mutex() -> Specification:
    rules = (
        R0,
        Rule("R_Lock", 0, Guard(), (Meth("Lock"),)),
        Rule("R_LU", 1, Guard((None,), (_fs(),)), (Meth("Lock"), Meth("Unlock"), Seg(0))),
    )
    return Specification("mutex", _fs("Lock", "Unlock"), _fs("Lock"), rules, _mutex_last)


_BUILTINS = {"queue": _queue, "stack": _stack, "register": _register, "mutex": _mutex}
_INSTANCES: dict[str, Specification] = {}

SPEC_NAMES = tuple(_BUILTINS)


def builtin(name: str) -> Specification:
    if name not in _BUILTINS:
        raise UnknownSpecification(f"unknown specification {name!r}; expected one of {SPEC_NAMES}")
    if name not in _INSTANCES:
        _INSTANCES[name] = _BUILTINS[name]()
    return _INSTANCES[name]


def argless_methods(S: Specification) -> set[str]:
    return {m for m in S.methods if m in ("DeqEmpty", "PopEmpty")}


