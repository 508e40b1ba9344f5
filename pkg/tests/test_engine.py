import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dualstore.core import Scalar
from dualstore.effects import CounterAssign, CounterIncr, LwwAssign, apply_value, lift
from dualstore.engine import NIct, TransactionSystem, TxnDescriptor
from dualstore.errors import (
    CtBeforeSnapshot,
    DuplicateCommitTs,
    DuplicateTxn,
    NIctViolation,
    NonAssignCommit,
    OriginMismatch,
    StoreError,
    UninitializedRead,
    UnknownTxn,
)
from dualstore.generator import gen_history
from dualstore.history import Abort, Begin, Commit, Read, Update
from dualstore.journal_store import Journal
from dualstore.map_store import MapStore

S = Scalar
BACKENDS = [MapStore, Journal]


@pytest.fixture(params=BACKENDS, ids=["map", "journal"])
def system(request):
    return TransactionSystem(request.param())


def assign(v, txn="t0", tag=0):
    return CounterAssign(v, S(tag), txn)


def rejected(system, exc, fn, *args):
    """Run a step that must fail and check it left no trace."""
    before = system.state.copy()
    with pytest.raises(exc):
        fn(*args)
    assert system.state == before


def worked_prefix(system, upto):
    steps = [
        Begin("t0", S(0)), Update("t0", "a", assign(0)), Commit("t0", S(1)),
        Begin("t1", S(2)), Update("t1", "a", CounterIncr({"t1": 1})),
        Begin("t2", S(2)), Update("t2", "a", CounterIncr({"t2": 2})),
        Commit("t1", S(4)), Begin("t3", S(5)),
    ]
    for step in steps[:upto]:
        system.apply(step)


def test_begin_on_empty_system(system):
    txn = system.begin_txn(S(0))
    assert txn == "t0"
    assert system.state.running == {"t0": TxnDescriptor("t0", S(0))}


def test_two_begins_get_distinct_ids(system):
    a, b = system.begin_txn(S(3)), system.begin_txn(S(3))
    assert a != b and set(system.state.running) == {a, b}


def test_explicit_id_reuse_is_rejected(system):
    system.begin_txn(S(0), "t0")
    rejected(system, DuplicateTxn, system.begin_txn, S(1), "t0")


def test_init_key_over_worked_prefix(system):
    worked_prefix(system, 4)
    system.init_key("t1", "a")
    desc = system.state.running["t1"]
    assert apply_value(desc.effect_buf["a"]) == 0 and desc.read_set == {"a"}
    with pytest.raises(ValueError):
        system.init_key("t1", "a")
    system.init_key("t1", "zz")
    assert system.state.running["t1"].effect_buf["zz"] is None


def test_read_your_own_writes(system):
    worked_prefix(system, 5)
    assert system.read("t1", "a") == 1


def test_uninitialized_read(system):
    system.begin_txn(S(0), "t0")
    rejected(system, UninitializedRead, system.read, "t0", "a")
    system.update("t0", "b", CounterIncr({"t0": 1}))
    rejected(system, UninitializedRead, system.read, "t0", "b")


def test_update_composes_in_buffer(system):
    worked_prefix(system, 9)
    system.update("t3", "a", CounterIncr({"t3": 4}))
    desc = system.state.running["t3"]
    assert apply_value(desc.effect_buf["a"]) == 5 and desc.write_set == {"a"}
    system.begin_txn(S(2), "t9")
    for e in (assign(0, "t9"), CounterIncr({"t9": 1}), CounterIncr({"t9": 1})):
        system.update("t9", "k", e)
    assert apply_value(system.state.running["t9"].effect_buf["k"]) == 2


def test_increment_origin_must_be_issuer(system):
    system.begin_txn(S(0), "t0")
    rejected(system, OriginMismatch, system.update, "t0", "a", CounterIncr({"t1": 1}))


def test_isolation_between_running_transactions(system):
    system.begin_txn(S(0), "t0")
    system.begin_txn(S(0), "t1")
    system.update("t0", "a", assign(5))
    with pytest.raises(UninitializedRead):
        system.read("t1", "a")
    assert system.store.lookup("a", S(100)) is None


def test_abort_discards_effects(system):
    system.begin_txn(S(0), "t0")
    system.update("t0", "a", assign(5))
    system.abort_txn("t0")
    assert "t0" in system.state.aborted
    for ts in range(5):
        assert system.store.lookup("a", S(ts)) is None
    rejected(system, UnknownTxn, system.abort_txn, "t0")


def test_abort_of_committed_txn(system):
    system.begin_txn(S(0), "t0")
    system.commit_txn("t0", S(1))
    rejected(system, UnknownTxn, system.abort_txn, "t0")


def test_commit_worked_t1(system):
    worked_prefix(system, 7)
    system.commit_txn("t1", S(4))
    assert system.state.committed["t1"].ct == S(4)


def test_commit_below_snapshot(system):
    system.begin_txn(S(5), "t0")
    rejected(system, CtBeforeSnapshot, system.commit_txn, "t0", S(4))


def test_commit_below_other_snapshot_violates_nict(system):
    system.begin_txn(S(0), "t0")
    system.begin_txn(S(5), "t1")
    system.update("t0", "a", assign(1))
    rejected(system, NIctViolation, system.commit_txn, "t0", S(1))


def test_commit_below_committed_snapshot_violates_nict(system):
    system.begin_txn(S(0), "t0")
    system.begin_txn(S(5), "t1")
    system.commit_txn("t1", S(6))
    rejected(system, NIctViolation, system.commit_txn, "t0", S(2))


def test_duplicate_commit_timestamp(system):
    system.begin_txn(S(0), "t0")
    system.begin_txn(S(0), "t1")
    system.commit_txn("t0", S(1))
    rejected(system, DuplicateCommitTs, system.commit_txn, "t1", S(1))


def test_delta_only_commit_rejected(system):
    system.begin_txn(S(0), "t0")
    system.update("t0", "a", CounterIncr({"t0": 1}))
    rejected(system, NonAssignCommit, system.commit_txn, "t0", S(1))


def test_unknown_txn_steps(system):
    for step in (Update("t7", "a", assign(1)), Read("t7", "a"), Commit("t7", S(1)), Abort("t7")):
        rejected(system, UnknownTxn, system.apply, step)


def test_commit_is_atomic_across_keys(system):
    system.begin_txn(S(0), "t0")
    system.update("t0", "a", assign(1))
    system.update("t0", "b", LwwAssign(b"x", S(0), "t0"))
    system.commit_txn("t0", S(3))
    assert system.store.lookup("a", S(3)) is None and system.store.lookup("b", S(3)) is None
    assert apply_value(system.store.lookup("a", S(4))) == 1
    assert apply_value(system.store.lookup("b", S(4))) == b"x"


def test_snapshot_is_stable_after_later_commits(system):
    system.begin_txn(S(0), "t0")
    system.update("t0", "a", assign(1))
    system.commit_txn("t0", S(1))
    system.begin_txn(S(2), "t1")
    assert system.read("t1", "a") == 1
    system.begin_txn(S(2), "t2")
    system.update("t2", "a", assign(9, "t2", 2))
    system.commit_txn("t2", S(3))
    assert system.read("t1", "a") == 1


def test_weaker_nict_allows_unrelated_commit():
    system = TransactionSystem(MapStore(), NIct.WEAKER1)
    system.begin_txn(S(0), "t0")
    system.begin_txn(S(5), "t1")
    system.update("t0", "a", assign(1))
    system.commit_txn("t0", S(1))
    assert "t0" in system.state.committed


def _random_bad_step(rng, system):
    txns = list(system.state.running) + list(system.state.committed) + ["t99"]
    txn = rng.choice(txns)
    ts = S(rng.randint(0, 12))
    return rng.choice([
        Begin(rng.choice(txns), ts),
        Commit(txn, ts),
        Read(txn, rng.choice("abz")),
        Update(txn, "a", CounterIncr({rng.choice(txns): 1})),
        Update(txn, "a", LwwAssign(1, ts, txn)),
        Abort(txn),
    ])


@pytest.mark.parametrize("backend", BACKENDS, ids=["map", "journal"])
@settings(max_examples=60, deadline=None)
@given(seed=st.integers(0, 10**6), probe_seed=st.integers(0, 10**6))
def test_rejected_steps_leave_state_unchanged(backend, seed, probe_seed):
    rng = random.Random(probe_seed)
    system = TransactionSystem(backend())
    for step in gen_history(seed).steps:
        trial = system.state.copy()
        bad = _random_bad_step(rng, system)
        try:
            system.apply(bad)
        except StoreError:
            assert system.state == trial
        # put the real state back no matter what the probe did
        system.state = trial
        system.apply(step)
