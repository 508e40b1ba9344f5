"""Replay histories on both backends and cross-check them against the oracle."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Callable, Iterable, Optional

from .core import Key, Scalar, Timestamp, Value, Vector, format_value
from .effects import apply_value
from .engine import NIct, TransactionSystem
from .errors import StoreError
from .history import UNSET, History, Read, is_valid, serialize_history
from .journal_store import Journal
from .map_store import MapStore
from .oracle import oracle_lookup
from .store_api import Store

BACKENDS: dict[str, Callable[[], Store]] = {"map": MapStore, "journal": Journal}
MAX_PROBES = 10_000


@dataclass
class RunResult:
    system: TransactionSystem
    reads: list = field(default_factory=list)       # (step index, txn, key, value)
    errors: list = field(default_factory=list)      # (step index, error name, message)
    mismatches: list = field(default_factory=list)  # (step index, txn, key, expected, actual)

    @property
    def store(self) -> Store:
        return self.system.store


def run_history(history: History, backend: str | Callable[[], Store] = "map",
                nict: NIct | str = NIct.STRONG) -> RunResult:
    """Apply every step; engine errors are logged and the replay carries on."""
    factory = BACKENDS[backend] if isinstance(backend, str) else backend
    result = RunResult(TransactionSystem(factory(), nict))
    for i, step in enumerate(history.steps):
        try:
            value = result.system.apply(step)
        except StoreError as exc:
            result.errors.append((i, type(exc).__name__, str(exc)))
            continue
        if isinstance(step, Read):
            result.reads.append((i, step.txn, step.key, value))
            if step.expect is not UNSET and step.expect != value:
                result.mismatches.append((i, step.txn, step.key, step.expect, value))
    return result


def default_probes(history: History, cap: int = MAX_PROBES) -> list[tuple[Key, Timestamp]]:
    """Every key at every integer timestamp up to max ct + 2 (Scalar histories).

    Vector histories are probed at each timestamp they mention and at each of
    those bumped by one on every replica.
    """
    keys = history.keys()
    stamps = [s.ct for s in history.steps if hasattr(s, "ct")]
    stamps += [s.st for s in history.steps if hasattr(s, "st")]
    if all(isinstance(t, Scalar) for t in stamps):
        top = max((t.n for t in stamps), default=0) + 2
        grid = [Scalar(n) for n in range(top + 1)]
    else:
        replicas = sorted({r for t in stamps for r, _ in t.entries})
        grid = set(stamps)
        for t in stamps:
            for r in replicas:
                bumped = dict(t.entries)
                bumped[r] = bumped.get(r, 0) + 1
                grid.add(Vector(bumped))
        grid = sorted(grid, key=lambda t: t.sort_key())
    probes = [(k, ts) for ts in grid for k in keys]
    return probes[:cap]


def _observe(fn) -> Value | str:
    try:
        return fn()
    except StoreError as exc:
        return f"error:{type(exc).__name__}"


@dataclass
class Disagreement:
    key: Key
    ts: Timestamp
    map: object
    journal: object
    oracle: object

    def to_json(self) -> dict:
        def enc(v):
            return v.hex() if isinstance(v, bytes) else v
        return {"key": self.key, "ts": self.ts.to_json(), "map": enc(self.map),
                "journal": enc(self.journal), "oracle": enc(self.oracle)}

    def __str__(self):
        def fmt(v):
            return v if isinstance(v, str) else format_value(v)
        return (f"{self.key}@{self.ts.notation()}: map={fmt(self.map)} "
                f"journal={fmt(self.journal)} oracle={fmt(self.oracle)}")


@dataclass
class Report:
    history: History
    probes: int = 0
    disagreements: list = field(default_factory=list)
    engine_divergence: list = field(default_factory=list)
    errors: list = field(default_factory=list)
    shrunk: Optional[History] = None

    @property
    def ok(self) -> bool:
        return not self.disagreements and not self.engine_divergence

    def to_json(self) -> dict:
        return {
            "ok": self.ok,
            "steps": len(self.history),
            "probes": self.probes,
            "disagreements": [d.to_json() for d in self.disagreements],
            "engine_divergence": self.engine_divergence,
            "errors": [list(e) for e in self.errors],
            "shrunk": serialize_history(self.shrunk) if self.shrunk is not None else None,
        }

    def to_text(self) -> str:
        lines = [f"{'OK' if self.ok else 'DIVERGENCE'}: {len(self.history)} steps, "
                 f"{self.probes} probes, {len(self.disagreements)} disagreements"]
        lines += [f"  {d}" for d in self.disagreements]
        lines += [f"  engine: {e}" for e in self.engine_divergence]
        lines += [f"  {backend} error at step {i}: {name}: {msg}"
                  for backend, i, name, msg in self.errors]
        if self.shrunk is not None:
            lines.append(f"  shrunk to {len(self.shrunk)} steps")
        return "\n".join(lines)


def differential_check(history: History, probes: Iterable | None = None, *,
                       map_factory: Callable[[], Store] = MapStore,
                       nict: NIct | str = NIct.STRONG, shrink: bool = True) -> Report:
    probe_list = list(probes) if probes is not None else default_probes(history)
    on_map = run_history(history, map_factory, nict)
    on_journal = run_history(history, Journal, nict)
    errors = [("map",) + e for e in on_map.errors] + [("journal",) + e for e in on_journal.errors]
    report = Report(history, probes=len(probe_list), errors=errors)
    if on_map.reads != on_journal.reads:
        report.engine_divergence.append("read logs differ between map and journal")
    if on_map.errors != on_journal.errors:
        report.engine_divergence.append("error logs differ between map and journal")
    for key, ts in probe_list:
        m = _observe(lambda: apply_value(on_map.store.lookup(key, ts)))
        j = _observe(lambda: apply_value(on_journal.store.lookup(key, ts)))
        o = _observe(lambda: oracle_lookup(history, key, ts))
        if not (m == j == o and type(m) is type(j) is type(o)):
            report.disagreements.append(Disagreement(key, ts, m, j, o))
    if shrink and not report.ok:
        report.shrunk = shrink_history(history, map_factory=map_factory, nict=nict)
    return report


def shrink_history(history: History, *, map_factory: Callable[[], Store] = MapStore,
                   nict: NIct | str = NIct.STRONG) -> History:
    """Greedily drop steps while the history stays valid and still diverges.

    Candidates on which the engine rejects any step are skipped: the oracle
    assumes every step is accepted, so such a divergence would be spurious.
    """

    def diverges(h):
        report = differential_check(h, map_factory=map_factory, nict=nict, shrink=False)
        return not report.ok and not report.errors

    current = history
    progress = True
    while progress:
        progress = False
        for i in range(len(current)):
            candidate = current.without(i)
            if is_valid(candidate) and diverges(candidate):
                current = candidate
                progress = True
                break
    return current


def report_json(report: Report) -> str:
    return json.dumps(report.to_json(), indent=2, sort_keys=True)
