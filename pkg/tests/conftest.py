import random

from hypothesis import HealthCheck, settings, strategies as st

from linreach.core import Action, Execution, History, MethodEvent, history_of
from linreach.sampling import _SHAPES

settings.register_profile(
    "repo", deadline=None, max_examples=200, derandomize=True,
    suppress_health_check=[HealthCheck.too_slow, HealthCheck.data_too_large])
settings.load_profile("repo")

SPECS = ("queue", "stack", "register", "mutex")


def H(*items):
    """History from (method, value, call_time, return_time); ops are o1, o2, ..."""
    spans = {f"o{i}": (MethodEvent(m, v), s, e) for i, (m, v, s, e) in enumerate(items, 1)}
    return History.from_intervals(spans)


def E(*items):
    """Execution from (kind, method, value, op) tuples."""
    return Execution(tuple(Action(*it) for it in items))


def seq_exec(*events):
    """Sequential execution: each (method, value) returns before the next is called."""
    out = []
    for i, (m, v) in enumerate(events, 1):
        out += [Action("call", m, v, f"o{i}"), Action("ret", m, v, f"o{i}")]
    return Execution(tuple(out))


@st.composite
def event_lists(draw, spec, max_ops=7, max_values=4):
    ins, rem, empty = _SHAPES[spec]
    n = draw(st.integers(0, max_values))
    events = []
    for v in range(1, n + 1):
        if draw(st.booleans()) or draw(st.booleans()):
            events.append(MethodEvent(ins, v))
        events += [MethodEvent(rem, v)] * draw(st.sampled_from((0, 1, 1, 1, 2)))
    if empty:
        events += [MethodEvent(empty)] * draw(st.integers(0, 2))
    events = draw(st.permutations(events))
    return events[:max_ops]


@st.composite
def histories(draw, spec, max_ops=7, max_values=4):
    events = draw(event_lists(spec, max_ops, max_values))
    spans = {}
    for i, ev in enumerate(events, 1):
        start = draw(st.integers(0, 12))
        length = draw(st.integers(0, 6))
        spans[f"o{i}"] = (ev, 2 * start, 2 * (start + length) + 1)
    return History.from_intervals(spans)


@st.composite
def executions(draw, spec, max_ops=7, max_values=4):
    events = draw(event_lists(spec, max_ops, max_values))
    stamps = []
    for i, ev in enumerate(events, 1):
        start = draw(st.integers(0, 12))
        length = draw(st.integers(0, 6))
        op = f"o{i}"
        stamps.append((2 * start, 0, i, Action("call", ev.method, ev.value, op)))
        stamps.append((2 * (start + length) + 1, 1, i, Action("ret", ev.method, ev.value, op)))
    stamps.sort(key=lambda t: t[:3])
    return Execution(tuple(a for *_, a in stamps))


def seeded(seed):
    return random.Random(seed)


def fig_intervals(n):
    """Queue history where one DeqEmpty is covered by a chain of n Enq/Deq pairs.

    Value i is enqueued in [10(i-1), 10(i-1)+5] (value 1 in [0, 1]) and
    dequeued in [10i+6, 10i+7]; the DeqEmpty spans [2, 10n].
    """
    items = []
    for i in range(1, n + 1):
        s = 0 if i == 1 else 10 * (i - 1)
        items.append(("Enq", i, s, 1 if i == 1 else s + 5))
        items.append(("Deq", i, 10 * i + 6, 10 * i + 7))
    items.append(("DeqEmpty", None, 2, 10 * n))
    return H(*items)
