import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from robust_vlc.scenario import RoomConfig, Scenario, make_scenario, place_leds, sample_users

ROOM = RoomConfig()


def test_single_led_is_centered():
    np.testing.assert_allclose(place_leds(ROOM, 1), [[2.5, 2.5, 2.4]])


def test_six_leds_form_two_by_three_grid():
    leds = place_leds(ROOM, 6)
    # hand-evaluated grid: cols at (i + 1/2) * 5/3, rows at (j + 1/2) * 5/2
    xs = [5 / 6, 2.5, 25 / 6]
    ys = [1.25, 3.75]
    expected = [[x, y, 2.4] for y in ys for x in xs]
    np.testing.assert_allclose(leds, expected)
    assert sorted(set(np.round(leds[:, 0], 3))) == [0.833, 2.5, 4.167]


def test_four_leds_form_square_grid():
    leds = place_leds(ROOM, 4)
    assert {tuple(p) for p in np.round(leds, 9)} == {
        (x, y, 2.4) for x in (1.25, 3.75) for y in (1.25, 3.75)}


@given(st.integers(1, 40))
def test_led_count_and_distinct(count):
    leds = place_leds(ROOM, count)
    assert leds.shape == (count, 3)
    assert len({tuple(p) for p in leds}) == count
    assert np.all(leds[:, 2] == ROOM.led_height_m)
    assert np.all((leds[:, :2] > 0) & (leds[:, :2] < 5))


def test_zero_users_rejected(rng):
    with pytest.raises(ValueError):
        sample_users(ROOM, 0, rng)


def test_same_seed_same_users():
    a = sample_users(ROOM, 3, np.random.default_rng(9))
    b = sample_users(ROOM, 3, np.random.default_rng(9))
    assert np.array_equal(a, b)


def test_mean_height_of_many_users():
    z = sample_users(ROOM, 10**4, np.random.default_rng(1))[:, 2]
    # U[0.5, 1]: mean 0.75, sd of the mean 0.1443 / 100
    assert 0.74 <= z.mean() <= 0.76
    assert abs(z.mean() - 0.75) <= 3 * (0.5 / np.sqrt(12)) / 100


@given(st.integers(1, 50), st.integers(0, 2**32 - 1))
def test_users_inside_bounds(k, seed):
    u = sample_users(ROOM, k, np.random.default_rng(seed))
    assert np.all(u[:, 2] >= 0.5) and np.all(u[:, 2] <= 1.0)
    assert np.all((u[:, :2] >= 0) & (u[:, :2] <= 5))


@given(st.integers(1, 10), st.integers(1, 10), st.integers(0, 10**6))
def test_user_streams_are_prefix_consistent(k1, k2, seed):
    a = sample_users(ROOM, k1, np.random.default_rng(seed))
    b = sample_users(ROOM, k2, np.random.default_rng(seed))
    n = min(k1, k2)
    assert np.array_equal(a[:n], b[:n])


def test_scenario_reproducible_and_immutable():
    leds = place_leds(ROOM, 6)
    s1 = make_scenario(ROOM, leds, 4, 77)
    s2 = make_scenario(ROOM, leds, 4, 77)
    assert np.array_equal(s1.user_positions, s2.user_positions)
    with pytest.raises(ValueError):
        s1.user_positions[0, 0] = 1.0


def test_scenario_dict_round_trip():
    s = make_scenario(ROOM, place_leds(ROOM, 6), 3, 5)
    t = Scenario.from_dict(s.to_dict())
    assert np.array_equal(s.led_positions, t.led_positions)
    assert np.array_equal(s.user_positions, t.user_positions)
    assert t.seed == 5


@pytest.mark.parametrize("kw", [
    {"width_m": 0}, {"pd_height_min_m": 1.2, "pd_height_max_m": 1.0},
    {"pd_height_max_m": 2.5},
])
def test_bad_rooms_rejected(kw):
    with pytest.raises(ValueError):
        RoomConfig(**kw)


def test_user_outside_room_rejected():
    with pytest.raises(ValueError):
        Scenario(place_leds(ROOM, 1), [[6.0, 1.0, 0.7]])
