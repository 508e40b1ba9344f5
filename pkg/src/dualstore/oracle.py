"""Reference semantics computed straight from a history, with no store.

Deliberately naive: every lookup re-derives each transaction's outcome by
recursing over the commit dependency graph, without caching anything.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from .core import Key, Timestamp, TxnId, Value, ts_lt
from .effects import EffectState, apply_value, compose, merge
from .history import Abort, Begin, Commit, History, Update


@dataclass
class CommittedTxn:
    id: TxnId
    st: Timestamp
    ct: Timestamp
    effects: dict = field(default_factory=dict)


def committed_transactions(history: History) -> list[CommittedTxn]:
    begun: dict[TxnId, CommittedTxn] = {}
    out = []
    for step in history.steps:
        match step:
            case Begin(txn, st):
                begun[txn] = CommittedTxn(txn, st, None)
            case Update(txn, key, effect):
                begun[txn].effects.setdefault(key, []).append(effect)
            case Commit(txn, ct):
                begun[txn].ct = ct
                out.append(begun[txn])
            case Abort(txn):
                begun.pop(txn)
    return out


def _precedes(a: CommittedTxn, b: CommittedTxn) -> bool:
    return ts_lt(a.ct, b.st)


def _maximal(txns: list[CommittedTxn]) -> list[CommittedTxn]:
    return [t for t in txns if not any(_precedes(t, u) for u in txns if u is not t)]


def _visible(committed: list[CommittedTxn], ts: Timestamp) -> list[CommittedTxn]:
    return [t for t in committed if ts_lt(t.ct, ts)]


def outcome(committed: list[CommittedTxn], txn: CommittedTxn, key: Key) -> Optional[EffectState]:
    before = merge(outcome(committed, u, key) for u in _maximal(_visible(committed, txn.st)))
    state = before
    for effect in txn.effects.get(key, ()):
        state = compose(state, effect)
    return state


def oracle_state(history: History, key: Key, ts: Timestamp) -> Optional[EffectState]:
    committed = committed_transactions(history)
    return merge(outcome(committed, t, key) for t in _maximal(_visible(committed, ts)))


def oracle_lookup(history: History, key: Key, ts: Timestamp) -> Value:
    return apply_value(oracle_state(history, key, ts))
