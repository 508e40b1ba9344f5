"""Eager versioned map: (key, version ts) -> (dependence ts, compacted state)."""

from __future__ import annotations

import json
from typing import Callable, NamedTuple, Optional

from .core import Key, Otsp, Timestamp, TxnId, ts_lt
from .effects import EffectState, merge, state_to_json
from .errors import InvariantViolation, NonAssignCommit, OverwriteAttempt
from .store_api import Store


class Version(NamedTuple):
    ts: Timestamp
    dep: Timestamp
    state: EffectState


def version_precedes(a: Version, b: Version) -> bool:
    return ts_lt(a.ts, b.dep)


class MapStore(Store):
    """Map-based backend; begin and update are no-ops, commit copies the buffer.

    ``merge_fn`` and ``visible`` exist so the property suite can plant bugs;
    production code uses the defaults.
    """

    name = "map"

    def __init__(
        self,
        merge_fn: Callable = merge,
        visible: Callable[[Timestamp, Timestamp], bool] = ts_lt,
    ):
        self._index: dict[Key, list[Version]] = {}
        self.merge_fn = merge_fn
        self.visible = visible

    @property
    def versions(self) -> dict:
        return {(k, v.ts): (v.dep, v.state) for k, vs in self._index.items() for v in vs}

    def __len__(self):
        return sum(len(vs) for vs in self._index.values())

    def __eq__(self, other):
        return isinstance(other, MapStore) and self.versions == other.versions

    def copy(self) -> MapStore:
        new = MapStore(self.merge_fn, self.visible)
        new._index = {k: list(vs) for k, vs in self._index.items()}
        return new

    def do_begin(self, txn: TxnId, st: Timestamp) -> None:
        pass

    def do_update(self, txn: TxnId, key: Key, effect) -> None:
        pass

    def do_commit(self, txn, st, read_set, write_set, buf, ct) -> None:
        Otsp(st, ct)
        existing = self.versions
        for k in write_set:
            if (k, ct) in existing:
                raise OverwriteAttempt(f"version ({k}, {ct}) already exists")
            state = buf.get(k)
            if state is None or not state.is_assign:
                raise NonAssignCommit(f"{txn}: buffer for {k!r} is not an assignment")
        for k in sorted(write_set):
            self._index.setdefault(k, []).append(Version(ct, st, buf[k]))

    def maximal_versions(self, key: Key, ts: Timestamp) -> list[Version]:
        candidates = [v for v in self._index.get(key, ()) if self.visible(v.ts, ts)]
        maximal = [
            v for v in candidates
            if not any(version_precedes(v, w) for w in candidates if w is not v)
        ]
        for v in maximal:
            for w in maximal:
                if version_precedes(v, w):
                    raise InvariantViolation("maximal versions are not an antichain")
        return sorted(maximal, key=lambda v: v.ts.sort_key())

    def lookup(self, key: Key, ts: Timestamp) -> Optional[EffectState]:
        return self.merge_fn(v.state for v in self.maximal_versions(key, ts))

    def dump(self) -> str:
        lines = []
        for k in sorted(self._index):
            for v in sorted(self._index[k], key=lambda v: v.ts.sort_key()):
                lines.append("\t".join([
                    k,
                    json.dumps(v.ts.to_json()),
                    json.dumps(v.dep.to_json()),
                    json.dumps(state_to_json(v.state), sort_keys=True),
                ]))
        return "".join(line + "\n" for line in lines)
