import pytest
from hypothesis import assume, given, settings, strategies as st

from conftest import H, SPECS, histories
from linreach.core import History, is_differentiated, remove_value, rename
from linreach.oracle import (TooLarge, all_projections, check_exclu, has_rule_violation,
                             is_linearizable, is_linearizable_wrt_matchset, linearizable_wrt_matchsets,
                             linearizations, projection_keys)
from linreach.rules import NotDifferentiated, builtin, matches_rule

Q = builtin("queue")


def spec_histories(max_ops=7):
    return st.sampled_from(SPECS).flatmap(lambda s: st.tuples(st.just(s), histories(s, max_ops)))


# --- linearizations -------------------------------------------------------------------

def test_linearization_counts():
    assert len(list(linearizations(H(("Enq", 1, 0, 5), ("Enq", 2, 0, 5))))) == 2
    chain = H(*[("Enq", i, 2 * i, 2 * i + 1) for i in range(1, 6)])
    assert len(list(linearizations(chain))) == 1
    # [DERIVED] a < b with c unordered: c can go in 3 places
    assert len(list(linearizations(H(("Enq", 1, 0, 1), ("Enq", 2, 2, 3), ("Enq", 3, 0, 9))))) == 3


def test_linearizations_are_lexicographic_and_distinct():
    lins = [l.order for l in linearizations(H(("Enq", 1, 0, 9), ("Enq", 2, 0, 9), ("Enq", 3, 0, 9)))]
    assert lins == sorted(lins) and len(set(lins)) == 6


def test_bound_is_enforced():
    h = H(*[("Enq", i, 0, 1) for i in range(1, 12)])
    with pytest.raises(TooLarge):
        next(linearizations(h))
    assert next(linearizations(h, bound=11)) is not None


@given(spec_histories())
def test_linearizations_respect_order(arg):
    _, h = arg
    for lin in linearizations(h):
        pos = {o: i for i, o in enumerate(lin.order)}
        assert sorted(lin.order) == sorted(h.ops)
        assert all(pos[a] < pos[b] for a, b in h.order)


# --- is_linearizable -------------------------------------------------------------------------

def test_overlapping_enqueues_are_linearizable():
    assert is_linearizable(H(("Enq", 7, 0, 3), ("Enq", 4, 1, 2)), Q) is not None


def test_deq_before_enq_is_not_linearizable():
    assert is_linearizable(H(("Deq", 1, 0, 1), ("Enq", 1, 2, 3)), Q) is None


def test_empty_history_is_linearizable():
    lin = is_linearizable(History((), {}, frozenset()), Q)
    assert lin is not None and lin.order == ()


def test_non_differentiated_history_is_refused():
    with pytest.raises(NotDifferentiated):
        is_linearizable(H(("Enq", 1, 0, 1), ("Enq", 1, 2, 3)), Q)


# --- matching sets ------------------------------------------------------------------------------

def _seqh(*events):
    return H(*[(m, v, 2 * i, 2 * i + 1) for i, (m, v) in enumerate(events)])


def test_matchset_examples():
    R = Q.rule("R_EnqDeq")
    assert is_linearizable_wrt_matchset(_seqh(("Enq", 1), ("Enq", 2), ("Deq", 1), ("Deq", 2)), R)
    assert not is_linearizable_wrt_matchset(_seqh(("Enq", 1), ("Enq", 2), ("Deq", 2), ("Deq", 1)), R)
    assert is_linearizable_wrt_matchset(_seqh(("DeqEmpty", None)), Q.rule("R_DeqEmpty"))


def test_fifo_violation_fails_exclusion_check():
    h = _seqh(("Enq", 1), ("Enq", 2), ("Deq", 2), ("Deq", 1))
    assert not check_exclu(h, Q)
    assert has_rule_violation(h, Q, "R_EnqDeq")
    assert not has_rule_violation(h, Q, "R_DeqEmpty")


def test_empty_history_passes_exclusion_check():
    assert check_exclu(History((), {}, frozenset()), Q)


def test_projection_keys_separate_argless_ops():
    h = H(("Enq", 1, 0, 1), ("DeqEmpty", None, 2, 3), ("DeqEmpty", None, 4, 5))
    assert projection_keys(h) == [1, ("op", "o2"), ("op", "o3")]
    assert len(list(all_projections(h))) == 8


# --- properties -------------------------------------------------------------------------------------

@given(spec_histories())
def test_exclusion_check_agrees_with_oracle(arg):
    spec, h = arg
    S = builtin(spec)
    assert check_exclu(h, S) == (is_linearizable(h, S) is not None)


@given(spec_histories(6), st.data())
def test_step_by_step_linearizability(arg, data):
    spec, h = arg
    S = builtin(spec)
    i = data.draw(st.integers(1, len(S.rules) - 1))
    lin = linearizable_wrt_matchsets(h, [S.rules[i]])
    assume(lin is not None)
    for w in matches_rule(lin.seq, S.rules[i]):
        if w.value is None:
            # argumentless witness: remove that one operation
            o = lin.order[w.positions[0]]
            rest = h.restrict(p for p in h.ops if p != o)
        else:
            rest = remove_value(h, w.value)
        if is_linearizable(rest, S, upto=i) is not None:
            assert is_linearizable(h, S, upto=i) is not None


@given(spec_histories(6), st.dictionaries(st.integers(1, 4), st.integers(1, 6)))
def test_linearizability_survives_renaming(arg, r):
    spec, h = arg
    S = builtin(spec)
    h2 = rename(h, r)
    assume(is_differentiated(h2, S.input_methods))
    if is_linearizable(h, S) is not None:
        assert is_linearizable(h2, S) is not None


@settings(max_examples=100)
@given(spec_histories(6), st.data())
def test_prefix_characterization(arg, data):
    spec, h = arg
    S = builtin(spec)
    j = data.draw(st.integers(0, len(S.rules) - 1))
    prefix = S.rules[:j + 1]
    every = all(linearizable_wrt_matchsets(p, prefix) is not None for p in all_projections(h))
    assert (is_linearizable(h, S, upto=j) is not None) == every
