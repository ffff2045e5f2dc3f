import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fcrbt.ops import OpKind
from fcrbt.oracle import BisectOracle, OracleMap, replay_sequential, replay_writes


def random_ops(rng, n, key_max=32):
    ops = []
    for _ in range(n):
        kind = rng.choice((OpKind.GET, OpKind.INSERT, OpKind.DELETE))
        ops.append((kind, rng.randint(0, key_max), rng.randint(0, 999)))
    return ops


def test_basic_semantics():
    m = OracleMap()
    assert m.get(1) is None
    assert m.insert(1, 10) is True
    assert m.insert(1, 20) is False  # update, not a logical change
    assert m.get(1) == 20
    assert m.delete(1) is True
    assert m.delete(1) is False
    assert len(m) == 0


def test_budget_rejects_new_keys_only():
    m = OracleMap(max_live=2)
    assert m.insert(1, 1) and m.insert(2, 2)
    assert m.insert(3, 3) is False
    assert m.keys() == {1, 2}
    # updating a present key is not growth
    assert m.insert(2, 99) is False
    assert m.get(2) == 99
    assert m.delete(1) is True
    assert m.insert(3, 3) is True


def test_empty_op_list():
    results, keys = replay_sequential([])
    assert results == [] and keys == set()


def test_insert_get_delete_get_sequence():
    ops = [
        (OpKind.INSERT, 1, 7),
        (OpKind.GET, 1, 0),
        (OpKind.DELETE, 1, 0),
        (OpKind.GET, 1, 0),
    ]
    results, keys = replay_sequential(ops)
    assert results == [True, 7, True, None]
    assert keys == set()


def test_cross_check_large_random_stream():
    # Two structurally unrelated models must agree everywhere on a long
    # random stream, budgeted and not.
    rng = random.Random(0xC0FFEE)
    ops = random_ops(rng, 100_000, key_max=200)
    for budget in (None, 50):
        a = OracleMap(max_live=budget)
        b = BisectOracle(max_live=budget)
        for op in ops:
            assert a.apply(op) == b.apply(op)
        assert a.keys() == b.keys()
        assert a.items() == b.items()


@given(
    st.lists(
        st.tuples(
            st.sampled_from(list(OpKind)),
            st.integers(0, 15),
            st.integers(0, 99),
        ),
        max_size=200,
    ),
    st.one_of(st.none(), st.integers(1, 8)),
)
@settings(max_examples=200)
def test_models_agree(ops, budget):
    a = OracleMap(max_live=budget)
    b = BisectOracle(max_live=budget)
    for op in ops:
        assert a.apply(op) == b.apply(op)
    assert a.items() == b.items()
    if budget is not None:
        assert len(a) <= budget


def test_replay_writes_matches_apply():
    rng = random.Random(7)
    writes = [
        (kind, k, v if kind == OpKind.INSERT else None)
        for kind, k, v in random_ops(rng, 2000, key_max=40)
        if kind != OpKind.GET
    ]
    outcomes, keys = replay_writes(writes, max_live=16)
    m = OracleMap(max_live=16)
    expected = [
        m.insert(k, v or 0) if kind == OpKind.INSERT else m.delete(k)
        for kind, k, v in writes
    ]
    assert outcomes == expected
    assert keys == m.keys()


def test_replay_writes_rejects_gets():
    with pytest.raises(ValueError):
        replay_writes([(OpKind.GET, 1, None)])
