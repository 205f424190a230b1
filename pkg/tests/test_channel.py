import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from robust_vlc.channel import (OpticalParams, channel_matrix, gain, gain_matrix,
                                load_channel_csv, save_channel_csv, validate_channel)
from robust_vlc.scenario import RoomConfig, make_scenario, place_leds

# concentrator index 1 with a 90 degree field of view gives g = 1
UNIT = OpticalParams(fov_semi_angle_rad=math.pi / 2, concentrator_index=1.0)


def scalar_gain(led, pd, p: OpticalParams) -> float:
    """Closed form evaluated one pair at a time with the math module."""
    dx, dy, dz = (led[i] - pd[i] for i in range(3))
    d = math.sqrt(dx * dx + dy * dy + dz * dz)
    cos_phi = dz / d        # LED faces down, PD faces up: both angles share cos
    psi = math.acos(cos_phi)
    if psi > p.fov_semi_angle_rad:
        return 0.0
    g = p.concentrator_index**2 / math.sin(p.fov_semi_angle_rad) ** 2
    m = p.lambertian_order_m
    return (m + 1) * p.pd_area_m2 / (2 * math.pi * d * d) * cos_phi**m * p.filter_gain * g * cos_phi


def test_gain_directly_below_led():
    h = gain([1.0, 1.0, 2.4], [1.0, 1.0, 0.4], UNIT)
    assert h == pytest.approx(7.9577e-6, rel=1e-4)
    assert h == pytest.approx(2 * 1e-4 / (2 * math.pi * 4), rel=1e-12)


def test_outside_fov_is_zero():
    p = OpticalParams()   # 70 degrees
    # horizontal offset 10 m at 1 m drop: psi ~ 84 degrees
    assert gain([0, 0, 2.0], [10.0, 0, 1.0], p) == 0.0


def test_inverse_square_on_axis():
    h1 = gain([0, 0, 3.0], [0, 0, 2.0], UNIT)
    h2 = gain([0, 0, 3.0], [0, 0, 1.0], UNIT)
    assert h2 == pytest.approx(h1 / 4, rel=1e-12)


def test_single_pair_matrix_matches_gain():
    room = RoomConfig()
    s = make_scenario(room, place_leds(room, 1), 1, 3)
    H = channel_matrix(s, OpticalParams())
    assert H.shape == (1, 1)
    assert H[0, 0] == gain(s.led_positions[0], s.user_positions[0], OpticalParams())


def test_permuting_users_permutes_rows():
    room = RoomConfig()
    leds = place_leds(room, 6)
    s = make_scenario(room, leds, 5, 8)
    perm = np.array([3, 0, 4, 1, 2])
    H = gain_matrix(leds, s.user_positions, OpticalParams())
    Hp = gain_matrix(leds, s.user_positions[perm], OpticalParams())
    assert np.array_equal(Hp, H[perm])


@pytest.mark.parametrize("seed", range(5))
def test_strongest_led_is_horizontally_nearest(seed):
    room = RoomConfig()
    leds = place_leds(room, 6)
    users = make_scenario(room, leds, 2, seed).user_positions
    H = gain_matrix(leds, users, OpticalParams())
    horiz = np.linalg.norm(users[:, None, :2] - leds[None, :, :2], axis=-1)
    assert np.array_equal(H.argmax(axis=1), horiz.argmin(axis=1))


coord = st.floats(0.0, 5.0, allow_nan=False)


@given(coord, coord, st.floats(0.5, 1.0), st.floats(0.0, 5.0), st.floats(0.0, 5.0))
def test_matches_scalar_oracle(x, y, z, lx, ly):
    p = OpticalParams()
    led = (lx, ly, 2.4)
    pd = (x, y, z)
    assert gain(led, pd, p) == pytest.approx(scalar_gain(led, pd, p), rel=1e-12, abs=0)


@given(st.lists(st.tuples(coord, coord, st.floats(0.5, 1.0)), min_size=1, max_size=20))
def test_gains_nonnegative_and_zero_past_fov(pds):
    p = OpticalParams()
    leds = place_leds(RoomConfig(), 6)
    pds = np.array(pds)
    H = gain_matrix(leds, pds, p)
    assert np.all(H >= 0)
    diff = leds[None] - pds[:, None]
    psi = np.arccos(diff[..., 2] / np.linalg.norm(diff, axis=-1))
    assert np.all(H[psi > p.fov_semi_angle_rad] == 0)


@given(st.floats(0.3, 3.0), st.floats(1.01, 3.0), st.floats(0, 2 * math.pi))
def test_gain_decreases_with_distance_at_fixed_angles(d, stretch, az):
    # move along the same ray from the LED so both angles stay fixed
    led = np.array([0.0, 0.0, 10.0])
    ray = np.array([0.4 * math.cos(az), 0.4 * math.sin(az), -1.0])
    ray /= np.linalg.norm(ray)
    near = gain(led, led + d * ray, UNIT)
    far = gain(led, led + d * stretch * ray, UNIT)
    assert far <= near
    assert far == pytest.approx(near / stretch**2, rel=1e-10)


def test_channel_validation():
    with pytest.raises(ValueError):
        validate_channel([[1e-5, -1e-7]])
    with pytest.raises(ValueError):
        validate_channel([[np.nan, 1.0]])


def test_channel_csv_round_trip(tmp_path):
    H = np.abs(np.random.default_rng(0).normal(size=(3, 6))) * 1e-5
    save_channel_csv(H, tmp_path / "h.csv")
    assert np.array_equal(load_channel_csv(tmp_path / "h.csv"), H)


@pytest.mark.parametrize("kw", [{"pd_area_m2": 0}, {"fov_semi_angle_rad": 2.0},
                                {"concentrator_index": 0.9}])
def test_bad_params_rejected(kw):
    with pytest.raises(ValueError):
        OpticalParams(**kw)
