"""Seeded random histories that the engine accepts step by step."""

from __future__ import annotations

import random
import string
from dataclasses import dataclass, field

from .core import Scalar, ts_lt
from .effects import CounterAssign, CounterIncr, LwwAssign
from .history import Abort, Begin, Commit, History, Read, Update
from .oracle import committed_transactions


@dataclass(frozen=True)
class GenParams:
    txns: int = 8
    keys: int = 2
    max_effects: int = 3
    counter_bias: float = 0.8
    abort_rate: float = 0.1
    read_rate: float = 0.2
    max_running: int = 3

    def __post_init__(self):
        if self.txns < 1 or self.keys < 1 or self.max_effects < 1:
            raise ValueError("txns, keys and max_effects must be positive")
        if not 0.0 <= self.counter_bias <= 1.0:
            raise ValueError("counter_bias must lie in [0, 1]")


def key_name(i: int) -> str:
    return string.ascii_lowercase[i] if i < 26 else f"k{i}"


@dataclass
class _Txn:
    id: str
    st: int
    budget: int
    known: set = field(default_factory=set)
    ops: int = 0


def gen_history(seed: int, params: GenParams | None = None, **overrides) -> History:
    p = params or GenParams(**overrides)
    rng = random.Random(seed)
    keys = [key_name(i) for i in range(p.keys)]
    kinds = {k: "counter" if rng.random() < p.counter_bias else "lww" for k in keys}
    steps = []
    running: list[_Txn] = []
    committed = []  # (st, ct, written keys)
    used_ct: set[int] = set()
    begun = 0

    def frontier():
        return max((ct for _, ct, _ in committed), default=-1) + 1

    def begin():
        nonlocal begun
        roll = rng.random()
        peers = [t.st for t in running]
        if peers and roll < 0.3:
            st = rng.choice(peers)
        elif roll < 0.35:
            st = rng.randint(0, frontier())
        else:
            st = frontier() + rng.randint(0, 1)
        txn = _Txn(f"t{begun}", st, rng.randint(1, p.max_effects))
        for cst, ct, written in committed:
            if ct < st:
                txn.known |= written
        begun += 1
        running.append(txn)
        steps.append(Begin(txn.id, Scalar(st)))

    def act(txn: _Txn):
        txn.ops += 1
        key = rng.choice(keys)
        if key in txn.known and rng.random() < p.read_rate:
            steps.append(Read(txn.id, key))
            return
        tag = Scalar(txn.st)
        if kinds[key] == "lww":
            value = rng.randint(0, 99) if rng.random() < 0.7 else rng.randbytes(2)
            effect = LwwAssign(value, tag, txn.id)
        elif key not in txn.known or rng.random() < 0.15:
            effect = CounterAssign(rng.randint(-5, 20), tag, txn.id)
        else:
            effect = CounterIncr({txn.id: rng.choice([-3, -1, 1, 2, 4, 8, 16])})
        txn.known.add(key)
        steps.append(Update(txn.id, key, effect))
        txn.budget -= 1

    def finish(txn: _Txn):
        running.remove(txn)
        if rng.random() < p.abort_rate:
            steps.append(Abort(txn.id))
            return
        # stay above every existing snapshot so no reader misses this commit
        low = max([txn.st] + [t.st for t in running] + [st for st, _, _ in committed])
        ct = low + rng.randint(0, 2)
        while ct in used_ct:
            ct += 1
        used_ct.add(ct)
        written = {s.key for s in steps if isinstance(s, Update) and s.txn == txn.id}
        committed.append((txn.st, ct, written))
        steps.append(Commit(txn.id, Scalar(ct)))

    while begun < p.txns or running:
        can_begin = begun < p.txns and len(running) < p.max_running
        if can_begin and (not running or rng.random() < 0.35):
            begin()
            continue
        txn = rng.choice(running)
        if txn.budget > 0 and (txn.ops == 0 or rng.random() < 0.75):
            act(txn)
        else:
            finish(txn)
    return History(tuple(steps))


def has_diamond(history: History) -> bool:
    """Two concurrent commits with a common visible ancestor and a common successor."""
    txns = committed_transactions(history)

    def before(a, b):
        return ts_lt(a.ct, b.st)

    for i, x in enumerate(txns):
        for y in txns[i + 1:]:
            if before(x, y) or before(y, x):
                continue
            if not any(before(z, x) and before(z, y) for z in txns):
                continue
            if any(before(x, z) and before(y, z) for z in txns):
                return True
    return False
