import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ballistic import (Domain, ExactTie, Seed, SpeedLaw, StartCoincidence, alive_at, check_outcome,
                       crossings_of_zero, pairs_over, resolve_fast, resolve_oracle, sample_system,
                       three_speed, uniform_interval)
from ballistic.engine import Alive, Annihilated

from conftest import system

BOTH = [resolve_oracle, resolve_fast]


@pytest.mark.parametrize("resolve", BOTH)
def test_head_on_pair(resolve):
    out = resolve(system([0, 1], [1, -1]))
    assert out.fates == [Annihilated(1, 0.5, 0.5), Annihilated(0, 0.5, 0.5)]


@pytest.mark.parametrize("resolve", BOTH)
def test_earlier_collision_wins(resolve):
    out = resolve(system([0, 1, 3], [1, 0, -1]))
    assert out.fates == [Annihilated(1, 1.0, 1.0), Annihilated(0, 1.0, 1.0), Alive()]


@pytest.mark.parametrize("resolve", BOTH)
def test_preemption_frees_the_left_particle(resolve):
    out = resolve(system([0, 2, 3], [1, 0, -1]))
    assert out.fates[0] == Alive()
    assert out.fates[1] == Annihilated(2, 1.0, 2.0)
    assert out.order.tolist() == [1]


@pytest.mark.parametrize("resolve", BOTH)
def test_new_neighbours_collide(resolve):
    # 1 and 2 meet first, after which 0 and 3 become adjacent
    out = resolve(system([0, 4, 5, 9], [1, 1, -1, -1]))
    assert out.partner.tolist() == [3, 2, 1, 0]
    assert out.death_time.tolist() == [4.5, 0.5, 0.5, 4.5]
    assert out.order.tolist() == [1, 0]


@pytest.mark.parametrize("resolve", BOTH)
def test_triple_collision_is_refused(resolve):
    with pytest.raises(ExactTie):
        resolve(system([-1, 0, 1], [1, 0, -1]))


@pytest.mark.parametrize("resolve", BOTH)
def test_disjoint_simultaneous_collisions_are_fine(resolve):
    out = resolve(system([0, 1, 5, 6], [1, -1, 1, -1]))
    assert out.partner.tolist() == [1, 0, 3, 2]


@pytest.mark.parametrize("resolve", BOTH)
def test_empty_and_single(resolve):
    assert len(resolve(system([], []))) == 0
    assert resolve(system([3.0], [1.0])).alive.tolist() == [True]


def _agree(sys):
    fast, slow = resolve_fast(sys), resolve_oracle(sys)
    assert fast.same_matching(slow)
    np.testing.assert_allclose(fast.death_time, slow.death_time, rtol=1e-12)
    assert fast.order.tolist() == slow.order.tolist()


@settings(max_examples=300, deadline=None)
@given(st.integers(1, 6), st.integers(0, 2**32 - 1),
       st.sampled_from([0.0, 0.2, 0.25, 0.5, 0.9]), st.sampled_from(["full", "half"]))
def test_fast_matches_oracle(n, seed, p, domain):
    _agree(sample_system(three_speed(p), domain, n, Seed(seed)))


@settings(max_examples=100, deadline=None)
@given(st.integers(2, 40), st.integers(0, 2**32 - 1))
def test_fast_matches_oracle_continuous(n, seed):
    _agree(sample_system(uniform_interval(-1, 1), "half", n, Seed(seed)))


def test_large_instance_invariants():
    sys = sample_system(three_speed(0.25), "full", 5 * 10**5, Seed(99))
    out = resolve_fast(sys)
    assert check_outcome(sys, out) == []
    assert 2 * len(out.order) + out.alive.sum() == len(sys)


def test_check_outcome_detects_damage():
    sys = system([0, 1, 2, 3], [1, 1, -1, -1])
    good = resolve_fast(sys)
    assert check_outcome(sys, good) == []
    partner = np.array([2, 3, 0, 1])
    bad = type(good)(partner, good.death_time, good.death_position, good.order)
    assert any("interleaves" in p for p in check_outcome(sys, bad))


def test_pairs_over():
    out = resolve_fast(system([-1, 1], [1, -1]))
    assert pairs_over(out, system([-1, 1], [1, -1]), 0.0) == 1
    sys = system([0, 1, 3], [1, 0, -1])
    out = resolve_fast(sys)
    assert pairs_over(out, sys, 0.5) == 1
    assert pairs_over(out, sys, 2.0) == 0
    with pytest.raises(StartCoincidence):
        pairs_over(out, sys, 1.0)


def test_pairs_over_without_collisions():
    sys = system(np.arange(10.0), np.full(10, 0.3))
    out = resolve_fast(sys)
    assert all(pairs_over(out, sys, x + 0.5) == 0 for x in range(-1, 10))


def test_crossings_of_zero():
    assert crossings_of_zero(system([1.0], [-1.0]), resolve_fast(system([1.0], [-1.0])), 2.0) == 1
    sys = system([1, 2], [0, -1])
    assert crossings_of_zero(sys, resolve_fast(sys), 10.0) == 0
    sys = sample_system(SpeedLaw.discrete([(0, 0.5), (1, 0.5)]), "half", 100, Seed(1))
    assert crossings_of_zero(sys, resolve_fast(sys), 1e6) == 0
    with pytest.raises(ValueError):
        full = sample_system(three_speed(0.4), "full", 3, Seed(1))
        crossings_of_zero(full, resolve_fast(full), 1.0)


def test_alive_at():
    sys = system([0, 1], [1, -1])
    out = resolve_fast(sys)
    assert alive_at(sys, out, 0.0) == [(0.0, 1.0), (1.0, -1.0)]
    assert alive_at(sys, out, 1.0) == []


def test_half_line_three_speed_collisions_stay_positive():
    for seed in range(20):
        sys = sample_system(three_speed(0.3), "half", 2000, Seed(seed))
        out = resolve_fast(sys)
        dead = ~out.alive
        assert np.all(out.death_position[dead] > 0)


def test_affine_scales_times():
    sys = sample_system(uniform_interval(-1, 1), "half", 500, Seed(3))
    out = resolve_fast(sys)
    from ballistic import apply_affine
    moved = resolve_fast(apply_affine(sys, 2.0, -0.7))
    assert moved.same_matching(out)
    dead = ~out.alive
    np.testing.assert_allclose(moved.death_time[dead], out.death_time[dead] / 2.0, rtol=1e-9)
