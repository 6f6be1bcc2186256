import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mixsel.selection import (ASC, DESC, epoch_update, init_state, select_classes, trace_records,
                              update_class)
from oracles import SelectionOracle


def test_init_paper_defaults():
    s = init_state(10, 5, DESC)
    assert s.order == (DESC,) * 10 and s.size == (5,) * 10
    assert s.prev_acc == (None,) * 10


def test_init_clamps_to_m_minus_one():
    assert init_state(3, 5, DESC).size == (2, 2, 2)


def test_init_smallest_case():
    s = init_state(2, 1, ASC)
    assert s.size == (1, 1)


def test_init_rejects_single_class():
    with pytest.raises(ValueError):
        init_state(1, 1, ASC)


def test_update_improvement_grows():
    assert update_class(DESC, 5, 0.85, 0.80, 5, 5, 100) == (DESC, 10)


def test_update_decline_flips_and_clamps():
    assert update_class(DESC, 5, 0.80, 0.85, 5, 5, 100) == (ASC, 5)


def test_update_equal_counts_as_improvement_and_caps():
    assert update_class(ASC, 7, 0.5, 0.5, 5, 5, 10) == (ASC, 9)


def test_select_asc_desc():
    d = [0, 3, 1, 2]
    assert select_classes(0, d, ASC, 2) == [2, 3]
    assert select_classes(0, d, DESC, 2) == [1, 3]


def test_select_full_set():
    d = [5, 3, 1, 2]
    assert sorted(select_classes(0, d, ASC, 3)) == [1, 2, 3]
    assert select_classes(0, d, ASC, 3) == [2, 3, 1]
    assert select_classes(0, d, DESC, 3) == [1, 3, 2]


def test_select_ties_by_class_id():
    d = [0, 1, 1, 1]
    assert select_classes(0, d, ASC, 2) == [1, 2]
    assert select_classes(0, d, DESC, 2) == [1, 2]


def test_first_update_only_records():
    s0 = init_state(4, 2, DESC)
    d = np.arange(16, dtype=float).reshape(4, 4)
    s1 = epoch_update(s0, [0.1, 0.2, 0.3, 0.4], d, delta=1)
    assert s1.size == s0.size and s1.order == s0.order
    assert s1.prev_acc == (0.1, 0.2, 0.3, 0.4)
    assert s1.selected[0] == (3, 2)


def test_uniform_improvement_grows_everyone():
    m = 10
    d = np.random.default_rng(0).random((m, m))
    s = epoch_update(init_state(m, 1, DESC), [0.5] * m, d, delta=3)
    s = epoch_update(s, [0.6] * m, d, delta=3)
    assert s.size == (4,) * m
    s = epoch_update(s, [0.7] * m, d, delta=3)
    s = epoch_update(s, [0.8] * m, d, delta=3)
    assert s.size == (9,) * m


def replay(m, T, delta, n_min, r_init, rng):
    oracle = SelectionOracle(m, r_init, n_min, delta)
    state = init_state(m, n_min, r_init)
    for t in range(1, T + 1):
        # coarse accuracies make ties (equal accuracy) common
        acc = rng.integers(0, 11, size=m) / 10
        d = rng.random((m, m))
        np.fill_diagonal(d, 0)
        state = epoch_update(state, acc, d, delta)
        if t == 1:
            oracle.after_epoch_1(acc, d)
        else:
            oracle.after_epoch(t, acc, d)
        for c in range(m):
            assert state.size[c] == oracle.n[c][t + 1]
            assert state.order[c] == oracle.r[c][t + 1]
            assert list(state.selected[c]) == oracle.sel[c][t + 1]


@pytest.mark.parametrize("seed", range(20))
def test_matches_algorithm_oracle(seed):
    rng = np.random.default_rng(seed)
    replay(10, 30, int(rng.choice([1, 3, 5])), int(rng.choice([1, 5])), str(rng.choice([ASC, DESC])), rng)


def test_matches_oracle_small_m():
    rng = np.random.default_rng(99)
    for m in (2, 3, 4):
        replay(m, 25, 2, 5, DESC, rng)


@settings(max_examples=60, deadline=None)
@given(seed=st.integers(0, 10**6), m=st.integers(2, 9), n_min=st.integers(1, 6), delta=st.integers(1, 6))
def test_state_invariants(seed, m, n_min, delta):
    rng = np.random.default_rng(seed)
    s = init_state(m, n_min, DESC)
    prev = None
    for _ in range(12):
        acc = rng.integers(0, 5, size=m) / 4
        d = rng.random((m, m))
        np.fill_diagonal(d, 0)
        new = epoch_update(s, acc, d, delta)
        for c in range(m):
            assert s.n_min_eff <= new.size[c] <= m - 1
            sel = new.selected[c]
            assert c not in sel and len(set(sel)) == len(sel) == new.size[c]
            if prev is not None:
                declined = acc[c] < prev[c]
                assert (new.order[c] != s.order[c]) == declined
                step = -delta if declined else delta
                assert new.size[c] == min(max(s.size[c] + step, s.n_min_eff), m - 1)
            dr = d[c]
            ranked = sorted((k for k in range(m) if k != c),
                            key=(lambda k: (dr[k], k)) if new.order[c] == ASC else (lambda k: (-dr[k], k)))
            assert list(sel) == ranked[:new.size[c]]
        prev, s = acc, new


def test_deterministic_and_pure():
    rng = np.random.default_rng(1)
    d = rng.random((5, 5))
    s = epoch_update(init_state(5, 2, ASC), [0.3] * 5, d, 1)
    a = epoch_update(s, [0.1, 0.5, 0.3, 0.2, 0.9], d, 1)
    b = epoch_update(s, [0.1, 0.5, 0.3, 0.2, 0.9], d, 1)
    assert a == b
    assert s.prev_acc == (0.3,) * 5


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 10**6))
def test_permutation_equivariance(seed):
    rng = np.random.default_rng(seed)
    m = 6
    perm = rng.permutation(m)  # class c -> perm[c]
    s, sp = init_state(m, 2, DESC), init_state(m, 2, DESC)
    for _ in range(6):
        acc = rng.random(m)
        d = rng.random((m, m))
        np.fill_diagonal(d, 0)
        acc_p = np.empty(m)
        acc_p[perm] = acc
        d_p = np.empty_like(d)
        d_p[np.ix_(perm, perm)] = d
        s = epoch_update(s, acc, d, 2)
        sp = epoch_update(sp, acc_p, d_p, 2)
        for c in range(m):
            assert sp.size[perm[c]] == s.size[c]
            assert sp.order[perm[c]] == s.order[c]
            assert list(sp.selected[perm[c]]) == [int(perm[k]) for k in s.selected[c]]


def test_trace_records():
    s = epoch_update(init_state(3, 1, ASC), [0.5, 0.6, 0.7], np.array([[0, 1, 2], [1, 0, 2], [2, 1, 0.0]]), 1)
    recs = trace_records(s, epoch=1)
    assert recs[0] == {"epoch": 1, "class": 0, "acc": 0.5, "r": ASC, "n": 1, "selected": [1]}
    assert len(recs) == 3
