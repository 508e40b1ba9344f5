import json

import pytest

from dualstore.core import Scalar, Vector
from dualstore.effects import CounterAssign, CounterIncr, LwwAssign
from dualstore.errors import ParseError, ValidationError
from dualstore.generator import gen_history
from dualstore.history import (
    UNSET,
    Abort,
    Begin,
    Commit,
    History,
    Read,
    Update,
    is_valid,
    load_history,
    parse_history,
    save_history,
    serialize_history,
    validate_history,
)

from conftest import DATA


def test_worked_parses(worked):
    assert len(worked) == 15
    assert worked.steps[0] == Begin("t0", Scalar(0))
    assert worked.steps[1] == Update("t0", "a", CounterAssign(0, Scalar(0), "t0"))
    assert worked.steps[-1] == Commit("t4", Scalar(9))
    assert worked.keys() == ["a"]
    assert [t.n for t in worked.commit_timestamps()] == [1, 4, 6, 8, 9]


def test_worked_round_trip(worked):
    assert parse_history(serialize_history(worked)) == worked
    assert serialize_history(worked) == (DATA / "worked.jsonl").read_text()


def test_every_step_kind_round_trips():
    h = History((
        Begin("x", Vector({"r1": 1})),
        Update("x", "k", LwwAssign(b"\x00", Vector({"r1": 1}), "x")),
        Update("x", "c", CounterIncr({"x": -2})),
        Read("x", "k", b"\x00"),
        Read("x", "k", None),
        Read("x", "k"),
        Commit("x", Vector({"r1": 2})),
        Begin("y", Scalar(0)),
        Abort("y"),
    ))
    assert parse_history(serialize_history(h)) == h
    assert parse_history(serialize_history(h)).steps[5].expect is UNSET


def test_generated_histories_round_trip():
    for seed in range(1000):
        h = gen_history(seed)
        assert parse_history(serialize_history(h)) == h, seed


def test_blank_lines_are_skipped():
    text = '\n{"op": "begin", "txn": "t0", "st": {"s": 0}}\n\n'
    assert len(parse_history(text)) == 1


@pytest.mark.parametrize("line", [
    "{not json",
    '{"op": "launch", "txn": "t0"}',
    '{"op": "begin", "txn": "t0"}',
    '{"op": "begin", "txn": "t0", "st": {"s": 0}, "extra": 1}',
    '{"op": "begin", "txn": "", "st": {"s": 0}}',
    '{"op": "begin", "txn": "t0", "st": {"s": -1}}',
    '{"op": "update", "txn": "t0", "key": "a", "eff": {"boom": 1}}',
    '[1, 2]',
])
def test_malformed_line_reports_line_number(line):
    text = '{"op": "begin", "txn": "t0", "st": {"s": 0}}\n' + line + "\n"
    with pytest.raises(ParseError) as info:
        parse_history(text)
    assert info.value.line == 2


@pytest.mark.parametrize("steps, index", [
    ([Begin("t0", Scalar(0)), Begin("t0", Scalar(1))], 1),
    ([Commit("t0", Scalar(1))], 0),
    ([Begin("t0", Scalar(0)), Abort("t0"), Read("t0", "a")], 2),
    ([Begin("t0", Scalar(0)), Commit("t0", Scalar(1)), Commit("t0", Scalar(2))], 2),
])
def test_structural_validation(steps, index):
    h = History(tuple(steps))
    assert not is_valid(h)
    with pytest.raises(ValidationError) as info:
        validate_history(h)
    assert info.value.index == index


def test_parse_can_skip_validation():
    text = json.dumps({"op": "commit", "txn": "t0", "ct": {"s": 1}})
    assert len(parse_history(text, validate=False)) == 1
    with pytest.raises(ValidationError):
        parse_history(text)


def test_save_and_load(tmp_path, worked):
    save_history(worked, tmp_path / "h.jsonl")
    assert load_history(tmp_path / "h.jsonl") == worked


def test_without_drops_one_step(worked):
    assert len(worked.without(3)) == 14
    assert worked.without(0).steps == worked.steps[1:]
