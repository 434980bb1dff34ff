import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ballistic import (Domain, ParticleSystem, Seed, SpeedLaw, apply_affine, bullet_to_ballistic,
                       reflect, resolve_fast, sample_system, three_speed, uniform_interval)

from conftest import system


def test_three_speed_weights():
    law = three_speed(0.25)
    assert law.speeds.tolist() == [-1.0, 0.0, 1.0]
    assert law.weights.tolist() == [0.375, 0.25, 0.375]
    assert law.is_symmetric()


def test_three_speed_degenerate_atoms_are_elided():
    assert three_speed(0.0).atoms == ((-1.0, 0.5), (1.0, 0.5))
    assert three_speed(1.0).atoms == ((0.0, 1.0),)
    # the declared bound keeps windows comparable across the family
    assert three_speed(1.0).v_max == 1.0


@pytest.mark.parametrize("p", [-0.1, 1.5, float("nan")])
def test_three_speed_rejects_bad_p(p):
    with pytest.raises(ValueError):
        three_speed(p)


def test_law_validation():
    with pytest.raises(ValueError):
        SpeedLaw(atoms=((0.0, 0.5), (1.0, 0.4)))
    with pytest.raises(ValueError):
        SpeedLaw(atoms=((1.0, 0.5), (0.0, 0.5)))
    with pytest.raises(ValueError):
        uniform_interval(1, -1)


def test_law_dict_round_trip():
    for law in (three_speed(0.3), uniform_interval(-1, 1), SpeedLaw.discrete([(2, 0.5), (-1, 0.5)])):
        assert SpeedLaw.from_dict(law.to_dict()) == law
    assert SpeedLaw.from_dict({"three_speed": 0.3}) == three_speed(0.3)
    with pytest.raises(ValueError):
        SpeedLaw.from_dict({"atoms": [[0, 1]], "extra": 1})


def test_palm_sample_has_particle_at_origin():
    sys = sample_system(three_speed(0.4), "full", 1, Seed(5))
    assert len(sys) == 3
    assert sys.origin == 1 and sys.positions[1] == 0.0
    assert sys.domain is Domain.FULL


def test_mean_gap_is_one():
    sys = sample_system(three_speed(0.4), Domain.HALF, 10**6, Seed(11))
    gaps = np.diff(np.concatenate([[0.0], sys.positions]))
    assert abs(gaps.mean() - 1.0) < 0.01


def test_speed_frequencies():
    sys = sample_system(three_speed(0.2), Domain.HALF, 10**5, Seed(2))
    freq = [np.mean(sys.speeds == s) for s in (-1, 0, 1)]
    assert np.allclose(freq, [0.4, 0.2, 0.4], atol=0.01)


def test_sampling_is_deterministic():
    a = sample_system(uniform_interval(-1, 1), "full", 500, Seed(7, 3))
    b = sample_system(uniform_interval(-1, 1), "full", 500, Seed(7, 3))
    c = sample_system(uniform_interval(-1, 1), "full", 500, Seed(7, 4))
    assert a == b
    assert a != c


def test_seed_range():
    with pytest.raises(ValueError):
        Seed(-1)
    with pytest.raises(ValueError):
        Seed(2**64)


def test_system_validation():
    with pytest.raises(ValueError):
        system([0, 0], [1, -1])
    with pytest.raises(ValueError):
        system([-1, 0.5, 1], [0, 0, 0], domain=Domain.FULL, origin=1)
    with pytest.raises(ValueError):
        ParticleSystem([0.0, 1.0], [2.0, 0.0], law=three_speed(0.5))


def test_system_is_immutable():
    sys = system([0, 1], [1, -1])
    with pytest.raises(ValueError):
        sys.positions[0] = 5.0


def test_affine_identity_and_arithmetic():
    sys = system([0, 1], [1, -1])
    assert apply_affine(sys, 1, 0) == sys
    assert apply_affine(sys, 2, 3).speeds.tolist() == [5.0, 1.0]
    with pytest.raises(ValueError):
        apply_affine(sys, 0, 1)


def test_affine_shift_keeps_three_speed_matching():
    sys = sample_system(three_speed(0.3), "full", 300, Seed(1))
    moved = apply_affine(sys, 1, 1)
    assert set(np.unique(moved.speeds)) <= {0.0, 1.0, 2.0}
    assert resolve_fast(moved).same_matching(resolve_fast(sys))


def test_reflect():
    sys = system([0, 1], [1, -1])
    r = reflect(sys)
    assert r.positions.tolist() == [-1.0, 0.0]
    assert r.speeds.tolist() == [1.0, -1.0]
    assert reflect(r) == sys


def test_reflect_palm_keeps_origin():
    sys = sample_system(three_speed(0.3), "full", 20, Seed(4))
    r = reflect(sys)
    assert r.positions[r.origin] == 0.0
    assert reflect(r) == sys


def test_bullets_map_to_particles():
    sys = bullet_to_ballistic([0, 1], [1, 2], shift=1.0)
    assert sys.positions.tolist() == [1.0, 2.0]
    assert sys.speeds.tolist() == [1.0, 0.5]
    out = resolve_fast(sys)
    # the ballistic collision time is the bullet collision distance
    assert out.death_time[0] == pytest.approx(2.0)
    assert out.partner.tolist() == [1, 0]


def test_bullets_edge_cases():
    assert resolve_fast(bullet_to_ballistic([0.5], [3.0])).alive.all()
    out = resolve_fast(bullet_to_ballistic([0, 1, 2, 3], [2, 2, 2, 2]))
    assert out.alive.all()
    with pytest.raises(ValueError):
        bullet_to_ballistic([0, 1], [1, -1])


@settings(max_examples=50, deadline=None)
@given(st.integers(1, 200), st.integers(0, 2**32), st.sampled_from(["full", "half"]))
def test_sample_shape(n, seed, domain):
    sys = sample_system(three_speed(0.5), domain, n, Seed(seed))
    assert len(sys) == (2 * n + 1 if domain == "full" else n)
    assert np.all(np.diff(sys.positions) > 0)
    if domain == "half":
        assert sys.positions[0] > 0
