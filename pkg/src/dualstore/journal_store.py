"""Append-only journal backend and its on-disk format.

Records are never rewritten. State is recomputed on demand by ``poststate``,
which walks visibility predecessors back towards the start of the journal.
Poststates of records belonging to committed transactions are final and are
cached; everything else is evaluated afresh.
"""

from __future__ import annotations

import json
import os
import struct
from dataclasses import dataclass
from typing import Iterable, Optional, Union

from .core import Key, Otsp, Timestamp, TxnId, otsp_precedes, ts_from_json, ts_lt
from .effects import (
    Effect,
    EffectState,
    compose,
    effect_from_json,
    effect_notation,
    effect_to_json,
    merge,
)
from .errors import (
    AlreadyCommitted,
    CorruptRecord,
    DuplicateCommit,
    DuplicateCommitTs,
    DuplicateTxn,
    InvariantViolation,
    StoreError,
    UnknownTxn,
)
from .store_api import Store

MAGIC = b"DSJL1\n"
_LEN = struct.Struct("<I")


@dataclass(frozen=True)
class BeginTxnRec:
    txn: TxnId
    st: Timestamp


@dataclass(frozen=True)
class UpdateRec:
    txn: TxnId
    key: Key
    effect: Effect


@dataclass(frozen=True)
class CommitTxnRec:
    txn: TxnId
    st: Timestamp
    ct: Timestamp


JournalRecord = Union[BeginTxnRec, UpdateRec, CommitTxnRec]


def record_to_json(r: JournalRecord) -> dict:
    match r:
        case BeginTxnRec(txn, st):
            return {"rec": "begin", "txn": txn, "st": st.to_json()}
        case UpdateRec(txn, key, effect):
            return {"rec": "update", "txn": txn, "key": key, "eff": effect_to_json(effect)}
        case CommitTxnRec(txn, st, ct):
            return {"rec": "commit", "txn": txn, "st": st.to_json(), "ct": ct.to_json()}
    raise TypeError(f"not a journal record: {r!r}")


def record_from_json(obj) -> JournalRecord:
    kind = obj["rec"]
    if not isinstance(obj.get("txn"), str):
        raise ValueError("record txn must be a string")
    if kind == "begin":
        return BeginTxnRec(obj["txn"], ts_from_json(obj["st"]))
    if kind == "update":
        if not isinstance(obj.get("key"), str):
            raise ValueError("record key must be a string")
        return UpdateRec(obj["txn"], obj["key"], effect_from_json(obj["eff"]))
    if kind == "commit":
        return CommitTxnRec(obj["txn"], ts_from_json(obj["st"]), ts_from_json(obj["ct"]))
    raise ValueError(f"unknown record type {kind!r}")


def record_notation(r: JournalRecord) -> str:
    match r:
        case BeginTxnRec(txn, st):
            return f"BeginTxnRec({txn}, {st.notation()})"
        case UpdateRec(txn, key, effect):
            return f"UpdateRec_{txn}({key}, {effect_notation(effect, txn)})"
        case CommitTxnRec(txn, st, ct):
            return f"CommitTxnRec({txn}, {st.notation()}, {ct.notation()})"
    raise TypeError(f"not a journal record: {r!r}")


class Journal(Store):
    name = "journal"

    def __init__(self):
        self.records: list[JournalRecord] = []
        self._begin: dict[TxnId, int] = {}
        self._commit: dict[TxnId, int] = {}
        self._last: dict[TxnId, int] = {}
        self._prev: dict[int, int] = {}
        self._commit_ts: set = set()
        self._cache: dict[tuple[int, Key], Optional[EffectState]] = {}

    @classmethod
    def from_records(cls, records: Iterable[JournalRecord]) -> Journal:
        j = cls()
        for pos, r in enumerate(records):
            try:
                j.append(r)
            except StoreError as exc:
                raise InvariantViolation(f"record {pos}: {type(exc).__name__}: {exc}") from exc
        return j

    def __len__(self):
        return len(self.records)

    def __eq__(self, other):
        return isinstance(other, Journal) and self.records == other.records

    def copy(self) -> Journal:
        return Journal.from_records(self.records)

    # -- appends -----------------------------------------------------------

    def _check(self, r: JournalRecord) -> None:
        match r:
            case BeginTxnRec(txn):
                if txn in self._begin:
                    raise DuplicateTxn(f"{txn} already has a begin record")
            case UpdateRec(txn):
                if txn not in self._begin:
                    raise UnknownTxn(f"{txn} has no begin record")
                if txn in self._commit:
                    raise AlreadyCommitted(f"{txn} already committed")
            case CommitTxnRec(txn, st, ct):
                if txn not in self._begin:
                    raise UnknownTxn(f"{txn} has no begin record")
                if txn in self._commit:
                    raise DuplicateCommit(f"{txn} already committed")
                if ct in self._commit_ts:
                    raise DuplicateCommitTs(f"commit timestamp {ct} already used")
                begin = self._begin[txn]
                if self.records[begin].st != st:
                    raise InvariantViolation(f"{txn}: commit snapshot {st} differs from begin")
                Otsp(st, ct)
                # a commit this transaction depends on must precede its begin
                for pos in self._commit.values():
                    other = self.records[pos]
                    if pos > begin and ts_lt(other.ct, st):
                        raise InvariantViolation(
                            f"{txn} depends on {other.txn}, committed after its begin")
                    if ts_lt(ct, other.st):
                        raise InvariantViolation(
                            f"committed {other.txn} depends on {txn}, committed later")

    def append(self, r: JournalRecord) -> None:
        self._check(r)
        pos = len(self.records)
        self.records.append(r)
        match r:
            case BeginTxnRec(txn):
                self._begin[txn] = pos
            case UpdateRec(txn):
                self._prev[pos] = self._last[txn]
            case CommitTxnRec(txn, _, ct):
                self._prev[pos] = self._last[txn]
                self._commit[txn] = pos
                self._commit_ts.add(ct)
        self._last[r.txn] = pos

    def do_begin(self, txn: TxnId, st: Timestamp) -> None:
        self.append(BeginTxnRec(txn, st))

    def do_update(self, txn: TxnId, key: Key, effect: Effect) -> None:
        self.append(UpdateRec(txn, key, effect))

    def do_commit(self, txn, st, read_set, write_set, buf, ct) -> None:
        if txn not in self._begin:
            raise UnknownTxn(f"{txn} has no begin record")
        self.append(CommitTxnRec(txn, self.records[self._begin[txn]].st, ct))

    # -- evaluation --------------------------------------------------------

    def maximal_commits(self, ts: Timestamp) -> list[int]:
        """Positions of the latest commits (in visibility order) with ct < ts."""
        visible = [p for p in self._commit.values() if ts_lt(self.records[p].ct, ts)]
        pairs = {p: Otsp(self.records[p].st, self.records[p].ct) for p in visible}
        return sorted(
            p for p in visible
            if not any(otsp_precedes(pairs[p], pairs[q]) for q in visible if q != p)
        )

    def max_vis(self, pos: int) -> list[int]:
        r = self.records[pos]
        if isinstance(r, BeginTxnRec):
            return self.maximal_commits(r.st)
        return [self._prev[pos]]

    def _step(self, pos: int, key: Key, preds: list) -> Optional[EffectState]:
        r = self.records[pos]
        if isinstance(r, BeginTxnRec):
            return merge(preds)
        if isinstance(r, UpdateRec) and r.key == key:
            return compose(preds[0], r.effect)
        return preds[0]

    def _final(self, pos: int) -> bool:
        return self.records[pos].txn in self._commit

    def poststate(self, pos: int, key: Key, memo: bool = True) -> Optional[EffectState]:
        """State of ``key`` once record ``pos`` has taken effect."""
        if not memo:
            return self._poststate_unmemoized(pos, key)
        scratch: dict[int, Optional[EffectState]] = {}

        def known(p):
            return p in scratch or (p, key) in self._cache

        def get(p):
            return scratch[p] if p in scratch else self._cache[(p, key)]

        stack = [pos]
        while stack:
            p = stack[-1]
            if known(p):
                stack.pop()
                continue
            preds = self.max_vis(p)
            if any(q >= p for q in preds):
                raise InvariantViolation(f"record {p} depends on a later record")
            missing = [q for q in preds if not known(q)]
            if missing:
                stack.extend(missing)
                continue
            stack.pop()
            state = self._step(p, key, [get(q) for q in preds])
            if self._final(p):
                self._cache[(p, key)] = state
            else:
                scratch[p] = state
        return get(pos)

    def _poststate_unmemoized(self, pos: int, key: Key) -> Optional[EffectState]:
        preds = self.max_vis(pos)
        if any(q >= pos for q in preds):
            raise InvariantViolation(f"record {pos} depends on a later record")
        return self._step(pos, key, [self._poststate_unmemoized(q, key) for q in preds])

    def lookup(self, key: Key, ts: Timestamp) -> Optional[EffectState]:
        # poststate of a virtual begin record with snapshot ts
        return merge(self.poststate(p, key) for p in self.maximal_commits(ts))

    # -- output ------------------------------------------------------------

    def dump(self) -> str:
        return "".join(record_notation(r) + "\n" for r in self.records)

    def save(self, path) -> None:
        with open(path, "wb") as fh:
            fh.write(MAGIC)
            for r in self.records:
                payload = json.dumps(record_to_json(r), sort_keys=True).encode()
                fh.write(_LEN.pack(len(payload)))
                fh.write(payload)
            fh.flush()
            os.fsync(fh.fileno())

    @classmethod
    def load(cls, path) -> Journal:
        with open(path, "rb") as fh:
            data = fh.read()
        return cls.from_records(decode_records(data))


def decode_records(data: bytes) -> list[JournalRecord]:
    if not data.startswith(MAGIC):
        raise CorruptRecord(0, "missing journal header")
    records = []
    offset = len(MAGIC)
    while offset < len(data):
        pos = len(records)
        if offset + _LEN.size > len(data):
            raise CorruptRecord(pos, "truncated length prefix")
        (size,) = _LEN.unpack_from(data, offset)
        offset += _LEN.size
        if offset + size > len(data):
            raise CorruptRecord(pos, f"truncated payload ({len(data) - offset} of {size} bytes)")
        try:
            records.append(record_from_json(json.loads(data[offset:offset + size])))
        except (ValueError, KeyError, TypeError, StoreError) as exc:
            raise CorruptRecord(pos, f"undecodable record: {exc}") from exc
        offset += size
    return records


def is_journal_file(path) -> bool:
    with open(path, "rb") as fh:
        return fh.read(len(MAGIC)) == MAGIC
