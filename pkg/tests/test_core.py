import pytest
from hypothesis import given, strategies as st

from conftest import E, H, SPECS, executions, histories, seq_exec
from linreach.core import (DuplicateOp, Execution, History, IncompleteExecution, MethodEvent,
                           ReturnWithoutCall, complete, dom, history_of, is_differentiated,
                           is_interval_order, project, remove_value, rename, seq,
                           validate_execution, value_projections)


# --- validate_execution -----------------------------------------------------

def test_overlapping_enqueues_form_an_execution():
    # [PAPER] two overlapping Enq calls are a well-formed execution
    e = validate_execution(E(("call", "Enq", 7, "o1"), ("call", "Enq", 4, "o2"),
                             ("ret", "Enq", 7, "o1"), ("ret", "Enq", 4, "o2")).actions)
    assert len(e) == 4


def test_return_without_call_is_rejected():
    # [PAPER] the return of o2 has no call
    with pytest.raises(ReturnWithoutCall):
        validate_execution(E(("call", "Enq", 7, "o1"), ("ret", "Enq", 7, "o1"),
                             ("ret", "Enq", 4, "o2")).actions)


def test_empty_execution_is_valid():
    assert validate_execution([]) == Execution(())


def test_duplicate_call_is_rejected():
    with pytest.raises(DuplicateOp):
        validate_execution(E(("call", "Enq", 1, "o1"), ("call", "Enq", 2, "o1")).actions)


def test_return_with_other_value_is_rejected():
    with pytest.raises(ReturnWithoutCall):
        validate_execution(E(("call", "Enq", 1, "o1"), ("ret", "Enq", 2, "o1")).actions)


# --- complete -----------------------------------------------------------------

def test_complete_single_pending():
    e = E(("call", "Enq", 1, "o1"))
    assert complete(e) == E(("call", "Enq", 1, "o1"), ("ret", "Enq", 1, "o1"))


def test_complete_only_pending_ops():
    e = E(("call", "Enq", 1, "o1"), ("call", "Deq", 1, "o2"), ("ret", "Deq", 1, "o2"))
    c = complete(e)
    assert c.actions[:3] == e.actions
    assert c.actions[3:] == E(("ret", "Enq", 1, "o1")).actions
    validate_execution(c.actions)


@given(executions("queue"))
def test_complete_is_idempotent(e):
    trimmed = Execution(tuple(a for a in e.actions if not (a.kind == "ret" and a.op == "o1")))
    assert complete(complete(trimmed)) == complete(trimmed)
    assert complete(trimmed).is_complete()


# --- history_of -----------------------------------------------------------------

def test_overlapping_history_has_empty_order():
    # [PAPER] overlapping Enq(7), Enq(4): two operations, empty order
    h = history_of(E(("call", "Enq", 7, "o1"), ("call", "Enq", 4, "o2"),
                     ("ret", "Enq", 7, "o1"), ("ret", "Enq", 4, "o2")))
    assert set(h.ops) == {"o1", "o2"} and not h.order


def test_sequential_history_is_total():
    h = history_of(seq_exec(("Enq", 1), ("Enq", 2), ("Deq", 1), ("Deq", 2)))
    assert len(h.order) == 6
    assert h.before("o1", "o4") and not h.before("o4", "o1")


def test_history_from_intervals():
    # [DERIVED] [0,1] < [2,3]; [0,3] overlaps both
    h = H(("Enq", 1, 0, 1), ("Enq", 2, 2, 3), ("Enq", 3, 0, 3))
    assert h.before("o1", "o2")
    assert not any(h.before(a, b) for a, b in [("o1", "o3"), ("o3", "o1"), ("o2", "o3"), ("o3", "o2")])


def test_history_of_pending_execution_fails():
    with pytest.raises(IncompleteExecution):
        history_of(E(("call", "Enq", 1, "o1")))


@given(st.sampled_from(SPECS).flatmap(executions))
def test_histories_of_executions_are_interval_orders(e):
    assert is_interval_order(history_of(complete(e)))


@given(executions("queue"), st.sets(st.integers(1, 4)))
def test_projection_commutes_with_history(e, D):
    assert history_of(project(e, D)) == project(history_of(e), D)


# --- projection, removal, renaming ---------------------------------------------

def test_remove_value_example():
    # [PAPER] removing value 1
    u = seq(("Enq", 1), ("Enq", 2), ("Deq", 1), ("Enq", 3), ("Deq", 2), ("Deq", 3))
    assert remove_value(u, 1) == seq(("Enq", 2), ("Enq", 3), ("Deq", 2), ("Deq", 3))


def test_projection_identity_and_empty():
    u = seq(("Enq", 1), ("Deq", 1), ("Enq", 2))
    assert project(u, dom(u)) == u
    assert project(u, set()) == seq()


def test_rename_examples():
    u = seq(("Enq", 1), ("Deq", 1))
    assert rename(u, {}) == u
    assert rename(u, {1: 5}) == seq(("Enq", 5), ("Deq", 5))
    assert rename(seq("DeqEmpty"), {1: 5}) == seq("DeqEmpty")


@given(executions("queue"), st.dictionaries(st.integers(1, 4), st.integers(1, 9)),
       st.sets(st.integers(1, 9)))
def test_rename_commutes_with_projection(e, r, D):
    # project onto D after renaming = project onto the preimage, then rename
    pre = {v for v in dom(e) if r.get(v, v) in D}
    assert project(rename(e, r), D) == rename(project(e, pre), r)


@given(executions("stack"), st.dictionaries(st.integers(1, 4), st.integers(1, 9)))
def test_rename_keeps_operations(e, r):
    e2 = rename(e, r)
    assert [a.op for a in e2.actions] == [a.op for a in e.actions]
    validate_execution(e2.actions)


# --- differentiated ------------------------------------------------------------------

def test_differentiated_examples():
    two_enq7 = E(("call", "Enq", 7, "o1"), ("call", "Enq", 7, "o2"),
                 ("ret", "Enq", 7, "o1"), ("ret", "Enq", 7, "o2"))
    assert not is_differentiated(two_enq7, {"Enq"})
    assert is_differentiated(seq(("Enq", 1), ("Enq", 2), ("Deq", 1), ("Deq", 2)), {"Enq"})
    # only Enq is an input method for the queue
    assert is_differentiated(seq(("Enq", 1), ("Deq", 1), ("Deq", 1)), {"Enq"})


# --- interval orders ---------------------------------------------------------------

def test_two_plus_two_is_not_an_interval_order():
    ev = MethodEvent("Enq", 1)
    h = History(("a", "b", "c", "d"), {o: ev for o in "abcd"},
                frozenset({("a", "b"), ("c", "d")}))
    assert not is_interval_order(h)


def test_empty_history_is_an_interval_order():
    assert is_interval_order(History((), {}, frozenset()))


# --- value projections ---------------------------------------------------------------

def test_value_projection_counts():
    h2 = H(("Enq", 1, 0, 1), ("Enq", 2, 2, 3))
    assert len(list(value_projections(h2, 2))) == 4
    assert [len(p) for p in value_projections(h2, 0)] == [0]
    h3 = H(("Enq", 1, 0, 1), ("Enq", 2, 2, 3), ("Enq", 3, 4, 5))
    # [DERIVED] C(3,0) + C(3,1) + C(3,2)
    assert len(list(value_projections(h3, 2))) == 7


@given(histories("register"))
def test_value_projections_are_distinct(h):
    ps = list(value_projections(h, 3))
    assert len({frozenset(p.ops) for p in ps}) == len(ps)
