"""The storage interface every backend implements."""

from __future__ import annotations

import abc
from typing import AbstractSet, Mapping, Optional

from .core import Key, Timestamp, TxnId
from .effects import Effect, EffectState


class Store(abc.ABC):
    """Versioned memory driven by the transaction engine.

    Stores are mutated in place. Every mutating method validates all of its
    preconditions before touching any state, so a raised error leaves the
    store exactly as it was.
    """

    name = "abstract"

    @classmethod
    def empty(cls) -> Store:
        """A store in which every key maps to the absent value."""
        return cls()

    @abc.abstractmethod
    def do_begin(self, txn: TxnId, st: Timestamp) -> None: ...

    @abc.abstractmethod
    def lookup(self, key: Key, ts: Timestamp) -> Optional[EffectState]:
        """Merged state of every effect on ``key`` committed strictly before ``ts``."""

    @abc.abstractmethod
    def do_update(self, txn: TxnId, key: Key, effect: Effect) -> None: ...

    @abc.abstractmethod
    def do_commit(
        self,
        txn: TxnId,
        st: Timestamp,
        read_set: AbstractSet[Key],
        write_set: AbstractSet[Key],
        buf: Mapping[Key, Optional[EffectState]],
        ct: Timestamp,
    ) -> None: ...

    @abc.abstractmethod
    def copy(self) -> Store: ...

    @abc.abstractmethod
    def dump(self) -> str:
        """Deterministic text rendering of the whole store."""


def empty(backend: type[Store]) -> Store:
    return backend.empty()
