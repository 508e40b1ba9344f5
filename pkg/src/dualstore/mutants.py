"""Deliberately broken map backends used to check that the fuzzer bites."""

from __future__ import annotations

from .core import ts_leq
from .effects import Base, EffectState, _check_mergeable, lift
from .map_store import MapStore


def merge_without_dedup(states):
    """Like ``effects.merge`` but adds up every delta, shared ancestors included."""
    present = [s for s in map(lift, states) if s is not None]
    if not present:
        return None
    _check_mergeable(present)
    winner = None
    if present[0].base is not None:
        winner = max((s.base for s in present), key=Base.order_key)
    totals: dict = {}
    for s in present:
        if s.base == winner:
            for origin, delta in s.deltas:
                totals[origin] = totals.get(origin, 0) + delta
    return EffectState(present[0].kind, winner, tuple(sorted(totals.items())))


MUTANTS = {
    "no-dedup": lambda: MapStore(merge_fn=merge_without_dedup),
    "leq-visibility": lambda: MapStore(visible=ts_leq),
}
