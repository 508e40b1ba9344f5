import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dualstore.core import Scalar
from dualstore.effects import (
    COUNTER,
    INT64_MAX,
    LWW,
    Base,
    CounterAssign,
    CounterIncr,
    EffectState,
    LwwAssign,
    apply_value,
    compact,
    compose,
    effect_from_json,
    effect_notation,
    effect_to_json,
    is_assign,
    merge,
    state_from_json,
    state_notation,
    state_to_json,
)
from dualstore.errors import CounterOverflow, ImproperSequence, TypeMismatch

import effect_laws

T0 = Scalar(0)
assign27 = CounterAssign(27, T0, "t")
incr10 = CounterIncr({"t": 10})


def test_apply_examples():
    assert apply_value(LwwAssign(27, T0), None) == 27
    assert apply_value(LwwAssign(27, T0), 3) == 27
    assert apply_value(incr10, 27) == 37
    with pytest.raises(ImproperSequence):
        apply_value(CounterIncr({"t": 1}), None)


def test_compose_examples():
    assert compose(None, incr10) == EffectState(COUNTER, None, (("t", 10),))
    assert apply_value(compose(assign27, incr10)) == 37
    assert is_assign(compose(assign27, incr10))
    masked = compose(CounterIncr({"t": 5}), CounterAssign(0, T0))
    assert apply_value(masked) == 0 and masked.deltas == ()


def test_compact_examples():
    a0 = CounterAssign(0, T0, "t0")
    s = compact([a0, CounterIncr({"t1": 1}), CounterIncr({"t3": 4})])
    assert s.base.value == 0 and s.deltas == (("t1", 1), ("t3", 4))
    assert apply_value(s) == 5
    assert compact([]) is None
    s11 = compact([a0, CounterIncr({"t1": 1}), CounterIncr({"t2": 2}), CounterIncr({"t4": 8})])
    assert apply_value(s11) == 11


def test_merge_examples():
    a0 = CounterAssign(0, T0, "t0")
    s5 = compact([a0, CounterIncr({"t1": 1}), CounterIncr({"t3": 4})])
    s11 = compact([a0, CounterIncr({"t1": 1}), CounterIncr({"t2": 2}), CounterIncr({"t4": 8})])
    m = merge([s5, s11])
    assert apply_value(m) == 15
    assert m.deltas == (("t1", 1), ("t2", 2), ("t3", 4), ("t4", 8))
    assert merge([s5]) == s5
    assert merge([]) is None


def test_is_assign_examples():
    assert is_assign(assign27)
    assert not is_assign(CounterIncr({"t": 1}))
    assert is_assign(compact([CounterAssign(0, T0), CounterIncr({"t": 1})]))
    assert not is_assign(None)


def test_later_assignment_beats_masked_one_whatever_its_tag():
    early = compact([CounterAssign(5, Scalar(9), "t0")])
    late = compose(early, CounterAssign(1, Scalar(0), "t1"))
    assert late.base.depth == 2
    assert apply_value(merge([early, late])) == 1


def test_lww_tie_breaks_on_tag_then_origin():
    a = LwwAssign(b"x", Scalar(3), "t1")
    b = LwwAssign(b"y", Scalar(3), "t2")
    c = LwwAssign(b"z", Scalar(10), "t0")
    assert apply_value(merge([a, b])) == b"y"
    assert apply_value(merge([a, b, c])) == b"z"


def test_deltas_on_losing_base_are_dropped():
    shared = CounterAssign(0, T0, "t0")
    left = compact([shared, CounterIncr({"t1": 100})])
    right = compact([shared, CounterAssign(7, Scalar(1), "t2")])
    assert apply_value(merge([left, right])) == 7


def test_delta_on_lww_is_type_mismatch():
    with pytest.raises(TypeMismatch):
        compose(LwwAssign(1, T0), CounterIncr({"t": 1}))


def test_mixed_kinds_do_not_merge():
    with pytest.raises(TypeMismatch):
        merge([LwwAssign(1, T0), CounterAssign(1, T0)])


def test_assignment_and_delta_only_do_not_merge():
    with pytest.raises(ImproperSequence):
        merge([CounterAssign(1, T0), CounterIncr({"t": 1})])


def test_delta_only_states_merge_by_origin():
    m = merge([CounterIncr({"a": 1}), CounterIncr({"a": 1, "b": 2})])
    assert m.deltas == (("a", 1), ("b", 2))


def test_counter_overflow():
    with pytest.raises(CounterOverflow):
        compose(CounterAssign(INT64_MAX, T0), CounterIncr({"t": 1}))
    with pytest.raises(CounterOverflow):
        CounterAssign(INT64_MAX + 1, T0)


def test_duplicate_origin_in_incr():
    with pytest.raises(ValueError):
        CounterIncr([("t", 1), ("t", 2)])


@pytest.mark.parametrize("effect", [
    LwwAssign(None, T0), LwwAssign(b"\x01", Scalar(4), "t2"), assign27, incr10,
    CounterIncr({"a": -1, "b": 3}),
])
def test_effect_json_round_trip(effect):
    assert effect_from_json(effect_to_json(effect)) == effect


def test_state_json_round_trip():
    s = EffectState(COUNTER, Base(3, Scalar(2), "t1", 2), (("t4", 8),))
    assert state_from_json(state_to_json(s)) == s
    assert state_to_json(s)["value"] == 11
    assert state_from_json(state_to_json(None)) is None
    lww = EffectState(LWW, Base(b"ab", Scalar(0)))
    assert state_from_json(state_to_json(lww)) == lww


def test_notation():
    assert effect_notation(CounterAssign(0, T0, "t0"), "t0") == "assign_0"
    assert effect_notation(CounterIncr({"t1": 1}), "t1") == "incr_1"
    assert effect_notation(LwwAssign(5, T0), "t0") == "lww_5"
    assert state_notation(compact([CounterAssign(0, T0), CounterIncr({"t": 5})])) == "assign_5"


@pytest.mark.parametrize("name", list(effect_laws.LAWS))
@settings(max_examples=300)
@given(rng=st.randoms(use_true_random=False))
def test_law(name, rng):
    effect_laws.LAWS[name](rng)
