"""Transaction rules over any ``Store``.

Each public method applies one rule atomically: every premise is checked
against the current state before anything is mutated, so an error leaves the
system exactly as it was.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field, replace
from types import MappingProxyType
from typing import Mapping, Optional

from .core import Key, Timestamp, TxnId, TxnIdAllocator, Value, ts_lt
from .effects import CounterIncr, Effect, EffectState, apply_value, compose
from .errors import (
    CtBeforeSnapshot,
    DuplicateCommitTs,
    DuplicateTxn,
    NIctViolation,
    NonAssignCommit,
    OriginMismatch,
    UninitializedRead,
    UnknownTxn,
)
from .history import Abort, Begin, Commit, Read, Update
from .store_api import Store


class NIct(str, enum.Enum):
    """How strictly a commit timestamp is kept above existing snapshots.

    STRONG forbids ``ct < t.st`` for every running or committed ``t``.
    WEAKER1 forbids it only when ``t`` read a key this transaction wrote.
    WEAKER2 applies the read-set test to running transactions and the plain
    test to committed ones, so committed read sets need not be consulted.
    """

    STRONG = "strong"
    WEAKER1 = "weaker1"
    WEAKER2 = "weaker2"


@dataclass(frozen=True)
class TxnDescriptor:
    id: TxnId
    st: Timestamp
    read_set: frozenset = frozenset()
    write_set: frozenset = frozenset()
    effect_buf: Mapping[Key, Optional[EffectState]] = field(
        default_factory=lambda: MappingProxyType({}))
    ct: Optional[Timestamp] = None

    def __eq__(self, other):
        return isinstance(other, TxnDescriptor) and (
            self.id, self.st, self.read_set, self.write_set, dict(self.effect_buf), self.ct
        ) == (other.id, other.st, other.read_set, other.write_set, dict(other.effect_buf), other.ct)

    def with_buffer(self, key: Key, state: Optional[EffectState], **changes) -> TxnDescriptor:
        buf = dict(self.effect_buf)
        buf[key] = state
        return replace(self, effect_buf=MappingProxyType(buf), **changes)


@dataclass
class SystemState:
    store: Store
    aborted: dict = field(default_factory=dict)
    committed: dict = field(default_factory=dict)
    running: dict = field(default_factory=dict)

    def copy(self) -> SystemState:
        return SystemState(self.store.copy(), dict(self.aborted), dict(self.committed),
                           dict(self.running))

    def ids(self) -> set:
        return set(self.aborted) | set(self.committed) | set(self.running)


class TransactionSystem:
    """A store together with the aborted, committed and running descriptors."""

    def __init__(self, store: Store, nict: NIct | str = NIct.STRONG):
        self.state = SystemState(store)
        self.nict = NIct(nict)
        self._ids = TxnIdAllocator()

    @property
    def store(self) -> Store:
        return self.state.store

    def _running(self, txn: TxnId) -> TxnDescriptor:
        try:
            return self.state.running[txn]
        except KeyError:
            raise UnknownTxn(f"{txn} is not a running transaction") from None

    def begin_txn(self, st: Timestamp, txn: Optional[TxnId] = None) -> TxnId:
        used = self.state.ids()
        if txn is None:
            txn = self._ids.fresh(used)
        elif txn in used:
            raise DuplicateTxn(f"transaction id {txn} already used")
        self.store.do_begin(txn, st)
        self.state.running[txn] = TxnDescriptor(txn, st)
        return txn

    def _init_key(self, desc: TxnDescriptor, key: Key) -> TxnDescriptor:
        if key in desc.read_set:
            return desc
        state = self.store.lookup(key, desc.st)
        return desc.with_buffer(key, state, read_set=desc.read_set | {key})

    def init_key(self, txn: TxnId, key: Key) -> None:
        desc = self._running(txn)
        if key in desc.read_set:
            raise ValueError(f"{key!r} already in the read set of {txn}")
        self.state.running[txn] = self._init_key(desc, key)

    def read(self, txn: TxnId, key: Key) -> Value:
        desc = self._init_key(self._running(txn), key)
        state = desc.effect_buf[key]
        if state is None or not state.is_assign:
            raise UninitializedRead(f"{txn}: {key!r} does not resolve to an assignment")
        value = apply_value(state)
        self.state.running[txn] = desc
        return value

    def update(self, txn: TxnId, key: Key, effect: Effect) -> None:
        desc = self._init_key(self._running(txn), key)
        if isinstance(effect, CounterIncr) and any(o != txn for o, _ in effect.deltas):
            raise OriginMismatch(f"{txn}: increment origins must name the issuing transaction")
        new_state = compose(desc.effect_buf[key], effect)
        self.store.do_update(txn, key, effect)
        self.state.running[txn] = desc.with_buffer(
            key, new_state, write_set=desc.write_set | {key})

    def abort_txn(self, txn: TxnId) -> None:
        desc = self._running(txn)
        del self.state.running[txn]
        self.state.aborted[txn] = desc

    def _nict_blocks(self, desc: TxnDescriptor, ct: Timestamp, other: TxnDescriptor,
                     is_running: bool) -> bool:
        if not ts_lt(ct, other.st):
            return False
        reads_ours = bool(desc.write_set & other.read_set)
        match self.nict:
            case NIct.STRONG:
                return True
            case NIct.WEAKER1:
                return reads_ours
            case NIct.WEAKER2:
                return reads_ours if is_running else True

    def commit_txn(self, txn: TxnId, ct: Timestamp) -> None:
        desc = self._running(txn)
        for other in self.state.committed.values():
            if other.ct == ct:
                raise DuplicateCommitTs(f"commit timestamp {ct} already used by {other.id}")
        if not desc.st.leq(ct):
            raise CtBeforeSnapshot(f"{txn}: commit timestamp {ct} below snapshot {desc.st}")
        for group, is_running in ((self.state.running, True), (self.state.committed, False)):
            for other in group.values():
                if other.id != txn and self._nict_blocks(desc, ct, other, is_running):
                    raise NIctViolation(
                        f"{txn}: commit timestamp {ct} below snapshot {other.st} of {other.id}")
        for k in desc.write_set:
            if not (desc.effect_buf[k] is not None and desc.effect_buf[k].is_assign):
                raise NonAssignCommit(f"{txn}: {k!r} does not resolve to an assignment")
        buf = {k: desc.effect_buf[k] for k in desc.write_set}
        self.store.do_commit(txn, desc.st, desc.read_set, desc.write_set, buf, ct)
        del self.state.running[txn]
        self.state.committed[txn] = replace(desc, ct=ct)

    def apply(self, step) -> Optional[Value]:
        """Dispatch one parsed history step; returns the value for reads."""
        match step:
            case Begin(txn, st):
                self.begin_txn(st, txn)
            case Update(txn, key, effect):
                self.update(txn, key, effect)
            case Read(txn, key):
                return self.read(txn, key)
            case Commit(txn, ct):
                self.commit_txn(txn, ct)
            case Abort(txn):
                self.abort_txn(txn)
            case _:
                raise TypeError(f"not a history step: {step!r}")
        return None


def run_step(system: TransactionSystem, step) -> Optional[Value]:
    return system.apply(step)
