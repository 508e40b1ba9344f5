"""Keys, values, transaction ids and partially ordered timestamps."""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Mapping, Optional, Union

from .errors import InvalidOtsp, VariantMismatch

Key = str
TxnId = str
# int | bytes | None, where None is the absent value
Value = Optional[Union[int, bytes]]


@dataclass(frozen=True)
class Scalar:
    n: int

    def __post_init__(self):
        if isinstance(self.n, bool) or not isinstance(self.n, int) or self.n < 0:
            raise ValueError(f"scalar timestamp must be a natural number, got {self.n!r}")

    def leq(self, other: Timestamp) -> bool:
        if not isinstance(other, Scalar):
            raise VariantMismatch(f"cannot compare {self} with {other}")
        return self.n <= other.n

    def sort_key(self) -> tuple:
        return (self.n,)

    def to_json(self) -> dict:
        return {"s": self.n}

    def notation(self) -> str:
        return str(self.n)

    def __str__(self):
        return str(self.n)


@dataclass(frozen=True)
class Vector:
    """Vector timestamp; entries missing from the mapping count as zero."""

    entries: tuple

    def __init__(self, entries: Mapping[str, int] | tuple = ()):
        items = entries.items() if isinstance(entries, Mapping) else entries
        norm = []
        for replica, n in items:
            if isinstance(n, bool) or not isinstance(n, int) or n < 0:
                raise ValueError(f"vector entry {replica!r} must be a natural number")
            if n:
                norm.append((str(replica), n))
        object.__setattr__(self, "entries", tuple(sorted(norm)))

    def get(self, replica: str) -> int:
        return dict(self.entries).get(replica, 0)

    def leq(self, other: Timestamp) -> bool:
        if not isinstance(other, Vector):
            raise VariantMismatch(f"cannot compare {self} with {other}")
        theirs = dict(other.entries)
        return all(n <= theirs.get(r, 0) for r, n in self.entries)

    def sort_key(self) -> tuple:
        # the sum is a linear extension of the pointwise order
        return (sum(n for _, n in self.entries), self.entries)

    def to_json(self) -> dict:
        return {"v": dict(self.entries)}

    def notation(self) -> str:
        return "{" + ",".join(f"{r}:{n}" for r, n in self.entries) + "}"

    def __str__(self):
        return self.notation()


Timestamp = Union[Scalar, Vector]


def ts_leq(a: Timestamp, b: Timestamp) -> bool:
    return a.leq(b)


def ts_lt(a: Timestamp, b: Timestamp) -> bool:
    return a.leq(b) and a != b


def ts_concurrent(a: Timestamp, b: Timestamp) -> bool:
    return not a.leq(b) and not b.leq(a)


def ts_from_json(obj) -> Timestamp:
    if not isinstance(obj, dict) or len(obj) != 1:
        raise ValueError(f"bad timestamp encoding: {obj!r}")
    if "s" in obj:
        return Scalar(obj["s"])
    if "v" in obj and isinstance(obj["v"], dict):
        return Vector(obj["v"])
    raise ValueError(f"bad timestamp encoding: {obj!r}")


@dataclass(frozen=True)
class Otsp:
    """Ordered timestamp pair: a dependence timestamp and a version timestamp."""

    dep: Timestamp
    ver: Timestamp

    def __post_init__(self):
        if not self.dep.leq(self.ver):
            raise InvalidOtsp(f"dependence {self.dep} is not <= version {self.ver}")


def otsp_precedes(x: Otsp, y: Otsp) -> bool:
    return ts_lt(x.ver, y.dep)


def otsp_concurrent(x: Otsp, y: Otsp) -> bool:
    return not otsp_precedes(x, y) and not otsp_precedes(y, x)


class TxnIdAllocator:
    """Monotone counter handing out ids that skip anything already in use."""

    def __init__(self, prefix: str = "t"):
        self.prefix = prefix
        self._counter = itertools.count()

    def fresh(self, used) -> TxnId:
        while True:
            candidate = f"{self.prefix}{next(self._counter)}"
            if candidate not in used:
                return candidate


def value_to_json(v: Value):
    if isinstance(v, bytes):
        return {"hex": v.hex()}
    return v


def value_from_json(obj) -> Value:
    if obj is None or (isinstance(obj, int) and not isinstance(obj, bool)):
        return obj
    if isinstance(obj, dict) and set(obj) == {"hex"}:
        return bytes.fromhex(obj["hex"])
    raise ValueError(f"bad value encoding: {obj!r}")


def value_sort_key(v: Value) -> tuple:
    if v is None:
        return (0,)
    if isinstance(v, int):
        return (1, v)
    return (2, v)


def format_value(v: Value) -> str:
    if v is None:
        return "null"
    if isinstance(v, bytes):
        return "0x" + v.hex()
    return str(v)
