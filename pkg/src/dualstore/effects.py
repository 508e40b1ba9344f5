"""Effect algebra: assignments, counter deltas, composition and merge.

An effect is a value transformer. Raw effects come in three shapes
(``LwwAssign``, ``CounterAssign``, ``CounterIncr``); any proper sequence of
them compacts into an ``EffectState``, which keeps the base assignment and the
origin-tagged deltas folded on top of it so that concurrent states can later
be merged without counting an increment twice.

``None`` stands for the absent effect throughout.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Mapping, Optional, Union

from .core import (
    Timestamp,
    TxnId,
    Value,
    format_value,
    ts_from_json,
    value_from_json,
    value_sort_key,
    value_to_json,
)
from .errors import CounterOverflow, ImproperSequence, TypeMismatch

INT64_MIN = -(2**63)
INT64_MAX = 2**63 - 1

LWW = "lww"
COUNTER = "counter"


def _checked(n: int) -> int:
    if not INT64_MIN <= n <= INT64_MAX:
        raise CounterOverflow(f"counter value {n} outside signed 64-bit range")
    return n


@dataclass(frozen=True)
class LwwAssign:
    value: Value
    tag: Timestamp
    origin: str = ""


@dataclass(frozen=True)
class CounterAssign:
    value: int
    tag: Timestamp
    origin: str = ""

    def __post_init__(self):
        if isinstance(self.value, bool) or not isinstance(self.value, int):
            raise TypeError("counter assignment needs an integer value")
        _checked(self.value)


def _norm_deltas(deltas) -> tuple:
    items = deltas.items() if isinstance(deltas, Mapping) else deltas
    out = {}
    for origin, delta in items:
        if isinstance(delta, bool) or not isinstance(delta, int):
            raise TypeError(f"delta for {origin!r} must be an integer")
        if origin in out:
            raise ValueError(f"duplicate origin {origin!r} in delta set")
        out[str(origin)] = _checked(delta)
    return tuple(sorted(out.items()))


@dataclass(frozen=True)
class CounterIncr:
    """Increment (or decrement) carrying one delta per origin transaction."""

    deltas: tuple

    def __init__(self, deltas: Mapping[TxnId, int] | Iterable = ()):
        object.__setattr__(self, "deltas", _norm_deltas(deltas))


Effect = Union[LwwAssign, CounterAssign, CounterIncr]


@dataclass(frozen=True)
class Base:
    """The assignment at the bottom of a compacted sequence.

    ``depth`` counts assignments along the causal chain that produced this
    base; a later assignment always has a larger depth than the one it masks,
    which keeps merge monotone along visibility.
    """

    value: Value
    tag: Timestamp
    origin: str = ""
    depth: int = 1

    def order_key(self) -> tuple:
        return (self.depth, self.tag.sort_key(), self.origin, value_sort_key(self.value))


@dataclass(frozen=True)
class EffectState:
    kind: str
    base: Optional[Base]
    deltas: tuple = ()

    @property
    def is_assign(self) -> bool:
        return self.base is not None

    def __str__(self):
        return state_notation(self)


AnyEffect = Union[Effect, EffectState]


def lift(e: Optional[AnyEffect]) -> Optional[EffectState]:
    match e:
        case None | EffectState():
            return e
        case LwwAssign(value, tag, origin):
            return EffectState(LWW, Base(value, tag, origin, 1))
        case CounterAssign(value, tag, origin):
            return EffectState(COUNTER, Base(value, tag, origin, 1))
        case CounterIncr(deltas):
            return EffectState(COUNTER, None, deltas)
    raise TypeError(f"not an effect: {e!r}")


def _sum_deltas(a: tuple, b: tuple) -> tuple:
    out = dict(a)
    for origin, delta in b:
        out[origin] = _checked(out.get(origin, 0) + delta)
    return tuple(sorted(out.items()))


def compose(e1: Optional[AnyEffect], e2: Optional[AnyEffect]) -> Optional[EffectState]:
    """Sequential composition: ``e1`` then ``e2``."""
    a, b = lift(e1), lift(e2)
    if a is None:
        return b
    if b is None:
        return a
    if b.base is not None:
        # an assignment masks everything before it
        depth = (a.base.depth if a.base else 0) + b.base.depth
        base = Base(b.base.value, b.base.tag, b.base.origin, depth)
        return EffectState(b.kind, base, b.deltas)
    if a.kind != COUNTER:
        raise TypeMismatch("counter delta applied to an LWW register")
    state = EffectState(COUNTER, a.base, _sum_deltas(a.deltas, b.deltas))
    if state.base is not None:
        _counter_value(state)
    return state


def compact(seq: Iterable[AnyEffect]) -> Optional[EffectState]:
    state = None
    for i, e in enumerate(seq):
        if i == 0 and not is_assign(e):
            raise ImproperSequence("sequence does not start with an assignment")
        state = compose(state, e)
    return state


def is_assign(e: Optional[AnyEffect]) -> bool:
    s = lift(e)
    return s is not None and s.base is not None


def _counter_value(state: EffectState) -> int:
    if not isinstance(state.base.value, int):
        raise TypeMismatch("counter base is not an integer")
    return _checked(state.base.value + sum(d for _, d in state.deltas))


def apply_value(e: Optional[AnyEffect], v: Value = None) -> Value:
    s = lift(e)
    if s is None:
        return v
    if s.base is not None:
        if s.kind == LWW:
            return s.base.value
        return _counter_value(s)
    if v is None:
        raise ImproperSequence("delta applied to the absent value")
    if not isinstance(v, int):
        raise TypeMismatch("delta applied to a non-integer value")
    return _checked(v + sum(d for _, d in s.deltas))


def _check_mergeable(states: list) -> None:
    kinds = {s.kind for s in states}
    if len(kinds) > 1:
        raise TypeMismatch(f"cannot merge {sorted(kinds)} states")
    if len({s.base is None for s in states}) > 1:
        raise ImproperSequence("merge of an assignment with a delta-only branch")


def merge(states: Iterable[Optional[AnyEffect]]) -> Optional[EffectState]:
    """Commutative, associative, idempotent join of concurrent states.

    The base with the greatest (depth, tag, origin, value) wins. Deltas are
    kept from every state built on the winning base, one entry per origin;
    deltas built on a losing base were masked by the winner and are dropped.
    """
    present = [s for s in map(lift, states) if s is not None]
    if not present:
        return None
    _check_mergeable(present)
    if present[0].base is None:
        return EffectState(COUNTER, None, _keyed_union(s.deltas for s in present))
    winner = max((s.base for s in present), key=Base.order_key)
    deltas = _keyed_union(s.deltas for s in present if s.base == winner)
    return EffectState(present[0].kind, winner, deltas)


def _keyed_union(delta_sets) -> tuple:
    out = {}
    for deltas in delta_sets:
        for origin, delta in deltas:
            # entries for one origin agree in well-formed histories; max keeps
            # the join deterministic otherwise
            out[origin] = max(delta, out.get(origin, delta))
    return tuple(sorted(out.items()))


# -- serialization ---------------------------------------------------------


def effect_to_json(e: Effect) -> dict:
    match e:
        case LwwAssign(value, tag, origin):
            body = {"val": value_to_json(value), "tag": tag.to_json()}
            if origin:
                body["origin"] = origin
            return {"lww": body}
        case CounterAssign(value, tag, origin):
            body = {"val": value, "tag": tag.to_json()}
            if origin:
                body["origin"] = origin
            return {"cassign": body}
        case CounterIncr(deltas):
            return {"cincr": [[o, d] for o, d in deltas]}
    raise TypeError(f"not an effect: {e!r}")


def effect_from_json(obj) -> Effect:
    if not isinstance(obj, dict) or len(obj) != 1:
        raise ValueError(f"bad effect encoding: {obj!r}")
    (tag_name, body), = obj.items()
    if tag_name == "cincr":
        if not isinstance(body, list) or not all(
            isinstance(p, list) and len(p) == 2 and isinstance(p[0], str) for p in body
        ):
            raise ValueError(f"bad delta list: {body!r}")
        return CounterIncr(tuple(tuple(p) for p in body))
    if tag_name not in ("lww", "cassign") or not isinstance(body, dict):
        raise ValueError(f"bad effect encoding: {obj!r}")
    if not {"val", "tag"} <= set(body) <= {"val", "tag", "origin"}:
        raise ValueError(f"bad assignment fields: {sorted(body)}")
    tag = ts_from_json(body["tag"])
    origin = body.get("origin", "")
    if not isinstance(origin, str):
        raise ValueError("origin must be a string")
    if tag_name == "lww":
        return LwwAssign(value_from_json(body["val"]), tag, origin)
    return CounterAssign(body["val"], tag, origin)


def state_to_json(s: Optional[EffectState]):
    if s is None:
        return None
    out = {"kind": s.kind, "deltas": [[o, d] for o, d in s.deltas]}
    if s.base is None:
        out["base"] = None
    else:
        b = s.base
        out["base"] = {
            "val": value_to_json(b.value),
            "tag": b.tag.to_json(),
            "origin": b.origin,
            "depth": b.depth,
        }
        out["value"] = value_to_json(apply_value(s))
    return out


def state_from_json(obj) -> Optional[EffectState]:
    if obj is None:
        return None
    base = None
    if obj["base"] is not None:
        b = obj["base"]
        base = Base(value_from_json(b["val"]), ts_from_json(b["tag"]), b["origin"], b["depth"])
    state = EffectState(obj["kind"], base, _norm_deltas(tuple(tuple(p) for p in obj["deltas"])))
    if "value" in obj and value_from_json(obj["value"]) != apply_value(state):
        raise ValueError("state value does not match its base and deltas")
    return state


def effect_notation(e: Effect, txn: TxnId = "") -> str:
    match e:
        case CounterAssign(value):
            return f"assign_{value}"
        case LwwAssign(value):
            return f"lww_{format_value(value)}"
        case CounterIncr(deltas):
            if len(deltas) == 1 and deltas[0][0] == txn:
                return f"incr_{deltas[0][1]}"
            return "incr[" + ",".join(f"{o}:{d}" for o, d in deltas) + "]"
    raise TypeError(f"not an effect: {e!r}")


def state_notation(s: Optional[EffectState]) -> str:
    if s is None:
        return "⊥"
    if s.base is None:
        return "incr[" + ",".join(f"{o}:{d}" for o, d in s.deltas) + "]"
    prefix = "assign" if s.kind == COUNTER else "lww"
    return f"{prefix}_{format_value(apply_value(s))}"
