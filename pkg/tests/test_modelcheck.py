import json
from collections import Counter
from pathlib import Path

import pytest

from linreach.automata import accepts, for_spec
from linreach.core import history_of
from linreach.modelcheck import (INCONCLUSIVE, LINEARIZABLE, VIOLATION, CoverabilityTarget, ModelError,
                                 PetriNet, StateSpaceExceeded, Transition, coverable, is_antichain,
                                 load_model, product_reach, replay, steps_to_execution, to_petri_net,
                                 verify, witness_steps)
from linreach.monitor import check
from linreach.rules import builtin

MODELS = Path(__file__).resolve().parent.parent / "models"
REFERENCE = ["queue-atomic", "stack-atomic", "register-atomic", "mutex-tas"]
BUGGY = ["queue-swap", "stack-bottom-pop", "register-stale-read", "mutex-check-then-set"]


def model(name):
    return load_model(MODELS / f"{name}.json")


def tiny(edges, shared=None, registers=("r",), spec="queue", threads=2):
    return {"name": "tiny", "spec": spec, "threads": threads, "initial": "idle",
            "shared": shared or {}, "registers": list(registers), "edges": edges}


# --- loading -----------------------------------------------------------------------------

@pytest.mark.parametrize("name", REFERENCE + BUGGY)
def test_samples_load(name):
    m = model(name)
    assert m.name == name and m.threads == 2


@pytest.mark.parametrize("bad,msg", [
    ("{not json", "not valid JSON"),
    (tiny([["idle", [{"op": "jump"}], "idle"]]), "unknown instruction"),
    (tiny([["idle", [{"op": "call", "method": "Push", "reg": "r"}], "idle"]]), "not in queue"),
    (tiny([["idle", [{"op": "load", "reg": "q", "var": "c"}], "idle"]], {"c": {"data": True}}), "unknown register"),
    (tiny([["idle", [{"op": "set", "var": "n", "value": 5}], "idle"]], {"n": {"domain": [0, 1], "init": 0}}),
     "outside domain"),
    (tiny([["idle", [{"op": "assume", "var": "c", "value": 1}], "idle"]], {"c": {"data": True}}),
     "may not be tested"),
    (tiny([], {"n": {"domain": [0, 1], "init": 3}}), "initial value"),
    (tiny([], threads=0), "thread count"),
])
def test_invalid_models(bad, msg):
    with pytest.raises(ModelError, match=msg):
        load_model(bad if isinstance(bad, (str, dict)) else json.dumps(bad))


def test_call_while_pending_is_rejected():
    m = load_model(tiny([["idle", [{"op": "fresh", "reg": "r"}, {"op": "call", "method": "Enq", "reg": "r"},
                                   {"op": "call", "method": "Enq", "reg": "r"}], "idle"]]))
    with pytest.raises(ModelError, match="while"):
        product_reach(m, for_spec(builtin("queue")), 1)


# --- bounded engine ---------------------------------------------------------------------------

def test_model_without_actions_is_linearizable():
    m = load_model(tiny([["idle", [{"op": "skip"}], "idle"]]))
    A = for_spec(builtin("queue"))
    assert product_reach(m, A, 2) is None
    assert verify(m, threads=2).status == LINEARIZABLE


@pytest.mark.parametrize("name", REFERENCE)
def test_reference_models_are_linearizable(name):
    v = verify(model(name), threads=2)
    assert v.status == LINEARIZABLE and v.exit_code == 0


@pytest.mark.parametrize("name", BUGGY)
def test_buggy_models_have_counterexamples(name):
    m = model(name)
    S = builtin(m.spec)
    cx = product_reach(m, for_spec(S), 2)
    assert cx is not None
    assert accepts(for_spec(S), cx.execution)
    e = replay(m, cx.steps)
    assert e.is_complete()
    assert not check(history_of(e), S).linearizable
    v = verify(m, threads=2)
    assert v.status == VIOLATION and v.exit_code == 1
    assert v.violation is not None


def test_expected_violation_classes():
    rules = {name: verify(model(name), threads=2).violation.rule for name in BUGGY}
    assert rules == {"queue-swap": "R_EnqDeq", "stack-bottom-pop": "R_Push",
                     "register-stale-read": "R_WR", "mutex-check-then-set": "R_LU"}


def test_counterexample_is_shortest_and_stable():
    m = model("queue-swap")
    A = for_spec(builtin("queue"))
    a, b = product_reach(m, A, 2), product_reach(m, A, 2)
    assert a.steps == b.steps


def test_state_bound_is_inconclusive():
    v = verify(model("queue-atomic"), threads=2, max_states=50)
    assert v.status == INCONCLUSIVE and v.exit_code == 2
    with pytest.raises(StateSpaceExceeded):
        product_reach(model("queue-atomic"), for_spec(builtin("queue")), 9)


# --- Petri nets -----------------------------------------------------------------------------------

def test_single_place_not_coverable():
    net = PetriNet(places=[0], transitions=[], initial=Counter({0: 1}))
    res = coverable(net, CoverabilityTarget.single({0: 2}))
    assert not res.coverable


def test_generator_transition_makes_it_coverable():
    net = PetriNet(places=[0], transitions=[Transition((), ((0, 1),), "gen")], initial=Counter({0: 1}))
    res = coverable(net, CoverabilityTarget.single({0: 2}))
    assert res.coverable and len(res.witness) == 1


def test_transition_firing():
    t = Transition(((0, 1),), ((1, 2),))
    assert t.fire(Counter({0: 1})) == Counter({1: 2})
    with pytest.raises(ValueError):
        t.fire(Counter({1: 1}))


def test_antichain_helper():
    assert is_antichain([((0, 1),), ((1, 1),)])
    assert not is_antichain([((0, 1),), ((0, 2),)])


def test_idle_model_net():
    m = load_model(tiny([], {"n": {"domain": [0, 1], "init": 0}}))
    net, target = to_petri_net(m, for_spec(builtin("queue")), unbounded=True)
    assert not coverable(net, target).coverable


def _conserves(net):
    for t in net.transitions:
        for fam, places in net.families.items():
            ps = set(places)
            assert sum(c for p, c in t.consume if p in ps) == sum(c for p, c in t.produce if p in ps), fam


@pytest.mark.parametrize("name", ["queue-swap", "mutex-tas"])
def test_families_are_conserved(name):
    m = model(name)
    net, _ = to_petri_net(m, for_spec(builtin(m.spec)), threads=2)
    _conserves(net)
    net.check_families(net.initial)


@pytest.mark.parametrize("name", ["queue-swap", "queue-atomic", "mutex-tas"])
def test_engines_agree_at_two_threads(name):
    m = model(name)
    S = builtin(m.spec)
    A = for_spec(S)
    bfs = product_reach(m, A, 2)
    net, target = to_petri_net(m, A, threads=2)
    res = coverable(net, target)
    assert res.coverable == (bfs is not None)
    if res.coverable:
        steps = witness_steps(net, m, res.witness)
        e = steps_to_execution(steps)
        assert accepts(A, e)
        assert not check(history_of(replay(m, steps)), S).linearizable


def test_unbounded_queue_verdicts():
    assert verify(model("queue-atomic"), unbounded=True).status == LINEARIZABLE
    v = verify(model("queue-swap"), unbounded=True)
    assert v.status == VIOLATION and v.engine == "coverability"
