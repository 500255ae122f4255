from itertools import combinations

import pytest
from hypothesis import assume, given, settings, strategies as st

from conftest import H, SPECS, fig_intervals, histories
from linreach.core import History, MethodEvent
from linreach.monitor import (PIVOT, OpAbsent, ValueAbsent, check, has_gap, left_right_graph,
                              mutex_check, queue_deqempty_check, queue_enqdeq_check, register_check,
                              rule_check, stack_popempty_check, stack_push_check, stack_pushpop_check,
                              w_holds)
from linreach.oracle import has_rule_violation, is_linearizable, is_linearizable_wrt_matchset, project_keys
from linreach.rules import NotDifferentiated, builtin

Q, ST = builtin("queue"), builtin("stack")


def _seqh(*events):
    return H(*[(m, v, 2 * i, 2 * i + 1) for i, (m, v) in enumerate(events)])


# --- queue: Enq/Deq pairs ------------------------------------------------------------

def test_w_holds_sequential():
    h = _seqh(("Enq", 1), ("Enq", 2), ("Deq", 1), ("Deq", 2))
    assert w_holds(h, 1, 2) and not w_holds(h, 2, 1)


def test_w_holds_concurrent_and_single():
    h = H(("Enq", 1, 0, 9), ("Enq", 2, 0, 9), ("Deq", 1, 0, 9), ("Deq", 2, 0, 9))
    assert w_holds(h, 1, 2) and w_holds(h, 2, 1)
    assert w_holds(h, 1, 1)
    assert not w_holds(H(("Enq", 1, 2, 3), ("Deq", 1, 0, 1)), 1, 1)


def test_w_holds_missing_value():
    with pytest.raises(ValueAbsent):
        w_holds(_seqh(("Enq", 1), ("Deq", 1)), 1, 5)


def test_fifo_violation():
    v = queue_enqdeq_check(_seqh(("Enq", 1), ("Enq", 2), ("Deq", 2), ("Deq", 1)))
    assert not v.linearizable and v.violation.rule == "R_EnqDeq"
    assert set(v.violation.witnesses) == {1, 2}


def test_deq_without_enq():
    v = queue_enqdeq_check(_seqh(("Deq", 1),))
    assert not v.linearizable and v.violation.witnesses == (1,)


def test_sequential_queue_trace_is_fine():
    assert queue_enqdeq_check(_seqh(("Enq", 1), ("Enq", 2), ("Deq", 1), ("Enq", 3), ("Deq", 2))).linearizable


# --- left-right constraints and gaps --------------------------------------------------------

def test_single_pair_cover_graph():
    h = H(("Enq", 1, 0, 1), ("DeqEmpty", None, 2, 5), ("Deq", 1, 6, 7))
    g = left_right_graph(h, "o2")
    assert set(g.edges) == {(1, PIVOT), (PIVOT, 1)}
    assert not has_gap(h, "o2")


def test_graph_of_lonely_operation():
    h = H(("DeqEmpty", None, 0, 1))
    assert left_right_graph(h, "o1").edges == {}
    assert has_gap(h, "o1")


def test_graph_of_absent_operation():
    with pytest.raises(OpAbsent):
        left_right_graph(H(("DeqEmpty", None, 0, 1)), "o9")


def test_no_incoming_edge_means_gap():
    h = H(("DeqEmpty", None, 0, 1), ("Enq", 1, 2, 3), ("Deq", 1, 4, 5))
    assert has_gap(h, "o1")


@pytest.mark.parametrize("n", range(1, 9))
def test_interval_chain_is_a_cover(n):
    h = fig_intervals(n)
    empty = f"o{2 * n + 1}"
    assert not has_gap(h, empty)
    v = queue_deqempty_check(h)
    assert not v.linearizable
    assert v.violation.rule == "R_DeqEmpty"
    assert len(v.violation.cycle) == n + 1
    assert sorted(v.violation.witnesses) == list(range(1, n + 1))


def test_four_pair_cycle_order():
    # [PAPER] o -> d4 -> d3 -> d2 -> d1 -> o
    v = queue_deqempty_check(fig_intervals(4))
    assert v.violation.cycle == ("o9", 4, 3, 2, 1)


def test_deqempty_alone_and_overlapped():
    assert queue_deqempty_check(H(("DeqEmpty", None, 0, 1))).linearizable
    assert queue_deqempty_check(H(("Enq", 1, 0, 3), ("DeqEmpty", None, 1, 2))).linearizable


def _well_formed_queue(h):
    """Every value has an Enq that happens before its (at most one) Deq."""
    for v in h.dom():
        enq = [o for o in h.ops_of("Enq") if h.label[o].value == v]
        deq = [o for o in h.ops_of("Deq") if h.label[o].value == v]
        if len(enq) != 1 or len(deq) > 1 or (deq and not h.before(enq[0], deq[0])):
            return False
    return True


def _brute_gap(h, o):
    rest = [p for p in h.ops if p != o]
    for k in range(len(rest) + 1):
        for L in combinations(rest, k):
            L = set(L)
            R = set(rest) - L
            deqd = {h.label[p].value for p in L if h.label[p].method == "Deq"}
            if any(h.label[p].method == "Enq" and h.label[p].value not in deqd for p in L):
                continue
            if any(h.before(r, x) for r in R for x in L | {o}):
                continue
            if any(h.before(o, x) for x in L):
                continue
            return True
    return False


@given(histories("queue", 7, 4))
def test_gap_iff_no_cycle(h):
    assume(_well_formed_queue(h))
    for o in h.ops_of("DeqEmpty"):
        sub = h.restrict(p for p in h.ops if p == o or h.label[p].method != "DeqEmpty")
        assert has_gap(sub, o) == _brute_gap(sub, o)


# --- stack -----------------------------------------------------------------------------------------

def test_stack_pushpop_cover():
    # Push(2) first, Pop(2) covered by Push(1)/Pop(1) chained across it
    h = H(("Push", 2, 0, 1), ("Push", 1, 2, 3), ("Pop", 2, 4, 5), ("Pop", 1, 6, 7))
    v = stack_pushpop_check(h)
    assert not v.linearizable and v.violation.rule == "R_PushPop"


def test_stack_sequential_and_unmatched_pop():
    assert stack_pushpop_check(_seqh(("Push", 1), ("Push", 2), ("Pop", 2), ("Pop", 1))).linearizable
    v = stack_pushpop_check(_seqh(("Pop", 3),))
    assert not v.linearizable and v.violation.witnesses == (3,)


def test_stack_push_examples():
    assert stack_push_check(_seqh(("Push", 1),)).linearizable
    assert stack_push_check(H(("Push", 1, 0, 9), ("Push", 2, 0, 9), ("Push", 3, 0, 9))).linearizable
    h = H(("Push", 2, 0, 1), ("Push", 1, 2, 3), ("Pop", 2, 4, 5))
    v = stack_push_check(h)
    assert not v.linearizable and v.violation.rule == "R_Push"
    assert has_rule_violation(h, ST, "R_Push")


def test_stack_popempty_examples():
    v = stack_popempty_check(H(("Push", 1, 0, 1), ("PopEmpty", None, 2, 5), ("Pop", 1, 6, 7)))
    assert not v.linearizable and v.violation.rule == "R_PopEmpty"
    assert stack_popempty_check(H(("PopEmpty", None, 0, 1))).linearizable
    assert stack_popempty_check(H(("Push", 1, 0, 3), ("PopEmpty", None, 1, 2))).linearizable


# --- register and mutex ----------------------------------------------------------------------------

def test_register_examples():
    assert register_check(_seqh(("Write", 1), ("Read", 1))).linearizable
    assert not register_check(_seqh(("Read", 1), ("Write", 1))).linearizable
    stale = register_check(_seqh(("Write", 1), ("Write", 2), ("Read", 1)))
    assert not stale.linearizable and stale.violation.rule == "R_WR"


def test_mutex_examples():
    assert mutex_check(_seqh(("Lock", 1), ("Unlock", 1), ("Lock", 2))).linearizable
    v = mutex_check(_seqh(("Lock", 1), ("Lock", 2), ("Unlock", 1), ("Unlock", 2)))
    assert not v.linearizable
    assert not mutex_check(_seqh(("Unlock", 1),)).linearizable


# --- dispatch ----------------------------------------------------------------------------------------

@pytest.mark.parametrize("spec", SPECS)
def test_empty_history_is_fine(spec):
    assert check(History((), {}, frozenset()), builtin(spec)).linearizable


def test_derivation_example_sequentialized():
    h = _seqh(("Enq", 3), ("Deq", 3), ("DeqEmpty", None), ("Enq", 2), ("Enq", 1), ("Deq", 2), ("Deq", 1))
    assert check(h, Q).linearizable
    assert check(h, "queue").linearizable


def test_check_refuses_non_differentiated():
    with pytest.raises(NotDifferentiated):
        check(_seqh(("Enq", 1), ("Enq", 1)), Q)


# --- properties -----------------------------------------------------------------------------------------

def spec_histories(max_ops=7):
    return st.sampled_from(SPECS).flatmap(lambda s: st.tuples(st.just(s), histories(s, max_ops)))


@settings(max_examples=400)
@given(spec_histories())
def test_monitor_agrees_with_oracle(arg):
    spec, h = arg
    S = builtin(spec)
    assert check(h, S).linearizable == (is_linearizable(h, S) is not None)


@given(spec_histories())
def test_rule_checks_agree_with_projections(arg):
    spec, h = arg
    S = builtin(spec)
    for R in S.rules[1:]:
        assert (not rule_check(h, S, R.name).linearizable) == has_rule_violation(h, S, R.name)


@given(spec_histories())
def test_evidence_is_real(arg):
    spec, h = arg
    v = check(h, builtin(spec))
    if v.violation:
        assert all(h.before(a, b) for a, b in v.violation.evidence)


@given(histories("queue", 7, 4))
def test_small_model_for_enqdeq(h):
    h = h.restrict(o for o in h.ops if h.label[o].method != "DeqEmpty")
    R = Q.rule("R_EnqDeq")
    small = []
    for k in (1, 2):
        for ks in combinations(sorted(h.dom()), k):
            p = project_keys(h, ks)
            if any(p.label[o].method == "Deq" for o in p.ops):
                small.append(p)
    bad = any(not is_linearizable_wrt_matchset(p, R) for p in small)
    assert (not queue_enqdeq_check(h).linearizable) == bad


@given(spec_histories(6), st.data())
def test_violations_persist_under_extension(arg, data):
    spec, h = arg
    S = builtin(spec)
    assume(not check(h, S).linearizable)
    # extend h by one fresh operation that starts after every other one returns
    m = data.draw(st.sampled_from(sorted(S.input_methods)))
    v = max(h.dom(), default=0) + 1
    ops = h.ops + ("new",)
    label = dict(h.label)
    label["new"] = MethodEvent(m, v)
    order = set(h.order) | {(o, "new") for o in h.ops}
    assert not check(History(ops, label, frozenset(order)), S).linearizable
