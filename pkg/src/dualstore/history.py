"""History steps and their JSON Lines file format.

One step per line::

    {"op":"begin","txn":"t0","st":{"s":0}}
    {"op":"update","txn":"t0","key":"a","eff":{"cassign":{"val":0,"tag":{"s":0}}}}
    {"op":"read","txn":"t0","key":"a","expect":0}
    {"op":"commit","txn":"t0","ct":{"s":1}}
    {"op":"abort","txn":"t1"}
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Union

from .core import Key, Timestamp, TxnId, Value, ts_from_json, value_from_json, value_to_json
from .effects import Effect, effect_from_json, effect_to_json
from .errors import ParseError, StoreError, ValidationError


class _Unset:
    def __repr__(self):
        return "UNSET"


UNSET = _Unset()


@dataclass(frozen=True)
class Begin:
    txn: TxnId
    st: Timestamp


@dataclass(frozen=True)
class Update:
    txn: TxnId
    key: Key
    effect: Effect


@dataclass(frozen=True)
class Read:
    txn: TxnId
    key: Key
    expect: Union[Value, _Unset] = UNSET


@dataclass(frozen=True)
class Commit:
    txn: TxnId
    ct: Timestamp


@dataclass(frozen=True)
class Abort:
    txn: TxnId


HistoryStep = Union[Begin, Update, Read, Commit, Abort]


@dataclass(frozen=True)
class History:
    steps: tuple = ()

    def __len__(self):
        return len(self.steps)

    def __iter__(self):
        return iter(self.steps)

    def keys(self) -> list[Key]:
        return sorted({s.key for s in self.steps if isinstance(s, (Update, Read))})

    def commit_timestamps(self) -> list[Timestamp]:
        return [s.ct for s in self.steps if isinstance(s, Commit)]

    def without(self, index: int) -> History:
        return History(self.steps[:index] + self.steps[index + 1:])


def step_to_json(step: HistoryStep) -> dict:
    match step:
        case Begin(txn, st):
            return {"op": "begin", "txn": txn, "st": st.to_json()}
        case Update(txn, key, effect):
            return {"op": "update", "txn": txn, "key": key, "eff": effect_to_json(effect)}
        case Read(txn, key, expect):
            out = {"op": "read", "txn": txn, "key": key}
            if expect is not UNSET:
                out["expect"] = value_to_json(expect)
            return out
        case Commit(txn, ct):
            return {"op": "commit", "txn": txn, "ct": ct.to_json()}
        case Abort(txn):
            return {"op": "abort", "txn": txn}
    raise TypeError(f"not a history step: {step!r}")


_FIELDS = {
    "begin": {"op", "txn", "st"},
    "update": {"op", "txn", "key", "eff"},
    "read": {"op", "txn", "key"},
    "commit": {"op", "txn", "ct"},
    "abort": {"op", "txn"},
}


def step_from_json(obj) -> HistoryStep:
    if not isinstance(obj, dict):
        raise ValueError("step must be a JSON object")
    op = obj.get("op")
    if op not in _FIELDS:
        raise ValueError(f"unknown op {op!r}")
    allowed = _FIELDS[op] | ({"expect"} if op == "read" else set())
    if not _FIELDS[op] <= set(obj) <= allowed:
        raise ValueError(f"{op} step has fields {sorted(obj)}")
    txn = obj["txn"]
    if not isinstance(txn, str) or not txn:
        raise ValueError("txn must be a non-empty string")
    if "key" in obj and not isinstance(obj["key"], str):
        raise ValueError("key must be a string")
    match op:
        case "begin":
            return Begin(txn, ts_from_json(obj["st"]))
        case "update":
            return Update(txn, obj["key"], effect_from_json(obj["eff"]))
        case "read":
            expect = value_from_json(obj["expect"]) if "expect" in obj else UNSET
            return Read(txn, obj["key"], expect)
        case "commit":
            return Commit(txn, ts_from_json(obj["ct"]))
        case "abort":
            return Abort(txn)


def parse_history(text: str, validate: bool = True) -> History:
    steps = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            steps.append(step_from_json(json.loads(line)))
        except (ValueError, KeyError, TypeError, StoreError) as exc:
            raise ParseError(lineno, str(exc)) from exc
    history = History(tuple(steps))
    if validate:
        validate_history(history)
    return history


def serialize_history(history: History) -> str:
    return "".join(json.dumps(step_to_json(s)) + "\n" for s in history.steps)


def load_history(path) -> History:
    with open(path, encoding="utf-8") as fh:
        return parse_history(fh.read())


def save_history(history: History, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(serialize_history(history))


def validate_history(history: History) -> None:
    """Structural checks only: begin before use, one begin and one end per txn.

    Timestamp constraints are left to the engine, which reports them as rule
    failures.
    """
    begun, finished = set(), set()
    for i, step in enumerate(history.steps):
        txn = step.txn
        if isinstance(step, Begin):
            if txn in begun:
                raise ValidationError(i, f"transaction {txn} begun twice")
            begun.add(txn)
            continue
        if txn not in begun:
            raise ValidationError(i, f"transaction {txn} used before begin")
        if txn in finished:
            raise ValidationError(i, f"transaction {txn} used after commit/abort")
        if isinstance(step, (Commit, Abort)):
            finished.add(txn)


def is_valid(history: History) -> bool:
    try:
        validate_history(history)
    except ValidationError:
        return False
    return True
