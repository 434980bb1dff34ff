from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ballistic import Seed, sample_system, three_speed
from ballistic.explore import (NoBracket, build_block_table, critical_root, drift_block,
                               drift_single, explore, prefix_balances, survivor_balance,
                               walk_survival_bound)

from conftest import system


def test_zero_then_plus_then_minus():
    sys = system([0, 1, 1.2, 5], [0, 1, -1, -1])
    trace = explore(sys)
    assert trace.locations == (0, 1, 3, 4)
    assert trace.eps == (1, 0, -1)
    assert trace.eps_tilde == (1, 0, -1)
    assert survivor_balance(sys, 4) == 0 == sum(trace.eps)


def test_minus_frees_a_plus():
    # the -1 at index 2 kills the zero, which frees the +1 to meet index 3
    trace = explore(system([0, 10, 12, 20], [1, 0, -1, -1]))
    assert trace.locations == (0, 2, 4)
    assert trace.eps == (0, 0)
    assert trace.eps_tilde == (0, -1)
    assert not trace.incomplete


def test_all_zero():
    trace = explore(system(np.arange(1.0, 8.0), np.zeros(7)))
    assert trace.locations == tuple(range(8))
    assert trace.eps == trace.eps_tilde == (1,) * 7


def test_unmatched_plus_marks_trace_incomplete():
    trace = explore(system([1, 2, 3], [0, 1, 1]))
    assert trace.incomplete
    assert trace.locations == (0, 1)


def test_max_steps():
    trace = explore(system(np.arange(1.0, 8.0), np.zeros(7)), max_steps=3)
    assert len(trace) == 3


def test_explore_rejects_other_systems():
    with pytest.raises(ValueError):
        explore(sample_system(three_speed(0.5), "full", 5, Seed(0)))
    with pytest.raises(ValueError):
        explore(system([1, 2], [0.5, 0]))


def test_survivor_balance_trivial():
    n = 9
    assert survivor_balance(system(np.arange(1.0, n + 1), np.zeros(n)), n) == n
    assert survivor_balance(system(np.arange(1.0, n + 1), -np.ones(n)), n) == -n


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**32 - 1), st.sampled_from([0.2, 0.35, 0.5, 0.8]), st.integers(5, 300))
def test_partial_sums_track_survivor_balance(seed, p, n):
    sys = sample_system(three_speed(p), "half", n, Seed(seed))
    trace = explore(sys)
    k = trace.locations[1:len(trace) + 1]
    assert list(trace.partial_sums) == [survivor_balance(sys, j) for j in k]
    assert all(e >= et for e, et in zip(trace.eps, trace.eps_tilde))


def test_barrier_balances_match_scratch():
    for seed in range(5):
        sys = sample_system(three_speed(0.4), "half", 3000, Seed(seed))
        uptos = np.arange(0, 3001, 37)
        fast = prefix_balances(sys, uptos)
        slow = prefix_balances(sys, uptos, use_barriers=False)
        assert fast.tolist() == slow.tolist()


def test_drift_single():
    assert drift_single(1 / 3) == pytest.approx(0.0, abs=1e-15)
    assert drift_single(1.0) == 1.0
    assert drift_single(0.0) == -0.5


def test_block_table_entries():
    table = build_block_table().as_dict()
    assert table[(0, 0, 0)] == 3
    assert table[(1, 0, -1)] == Fraction(-1, 2)
    assert table[(1, -1, 0)] == 1
    assert table[(-1, -1, -1)] == -3
    assert table[(1, 1, 1)] == 0
    assert build_block_table().ambiguous() == [(1, 0, -1)]


def test_drift_block_polynomial():
    # exact evaluation of the table against p, q = (1 - p)/2
    for p in np.linspace(0, 1, 11):
        assert drift_block(p) == pytest.approx(p**3 / 8 + 5 * p**2 / 4 + 21 * p / 8 - 1, abs=1e-12)
    assert drift_block(0.0) == -1.0
    assert drift_block(1.0) == 3.0


def test_critical_roots():
    assert critical_root(drift_single) == pytest.approx(1 / 3, abs=1e-9)
    assert critical_root(drift_block) == pytest.approx(0.3280312898568809, abs=1e-8)
    assert critical_root(lambda p: p - 0.5) == pytest.approx(0.5, abs=1e-9)
    with pytest.raises(NoBracket):
        critical_root(lambda p: p + 1)


def test_walk_survival_bound():
    assert walk_survival_bound(0.6) == pytest.approx(0.2)
    assert walk_survival_bound(0.5) == 0.0
    assert walk_survival_bound(1.0) == 1.0
    assert walk_survival_bound(0.1) == 0.0
