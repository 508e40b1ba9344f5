"""Transactional versioned key-value store with map and journal backends."""

from .core import Otsp, Scalar, Vector, otsp_precedes, ts_concurrent, ts_leq, ts_lt
from .effects import (
    CounterAssign,
    CounterIncr,
    EffectState,
    LwwAssign,
    apply_value,
    compact,
    compose,
    is_assign,
    merge,
)
from .engine import NIct, SystemState, TransactionSystem, TxnDescriptor
from .harness import differential_check, run_history
from .history import History, load_history, parse_history, serialize_history
from .journal_store import Journal
from .map_store import MapStore
from .oracle import oracle_lookup

__all__ = [
    "CounterAssign",
    "CounterIncr",
    "EffectState",
    "History",
    "Journal",
    "LwwAssign",
    "MapStore",
    "NIct",
    "Otsp",
    "Scalar",
    "SystemState",
    "TransactionSystem",
    "TxnDescriptor",
    "Vector",
    "apply_value",
    "compact",
    "compose",
    "differential_check",
    "is_assign",
    "load_history",
    "merge",
    "oracle_lookup",
    "otsp_precedes",
    "parse_history",
    "run_history",
    "serialize_history",
    "ts_concurrent",
    "ts_leq",
    "ts_lt",
]
